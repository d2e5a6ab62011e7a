#include "dd/parser.hpp"

#include <cassert>

#include "dd/lexer.hpp"

namespace dd {

namespace {

struct ParseBail {};

struct Parser {
  const SourceFile& src;
  Diagnostics& diags;
  std::vector<Token> toks;
  std::size_t pos = 0;

  Parser(const SourceFile& s, Diagnostics& d) : src(s), diags(d) { toks = lex(s, d); }

  const Token& cur() const { return toks[pos]; }
  const Token& peek(std::size_t k = 1) const {
    return toks[std::min(pos + k, toks.size() - 1)];
  }
  bool at(Tok k) const { return cur().kind == k; }
  Token eat() { return toks[pos < toks.size() - 1 ? pos++ : pos]; }
  bool accept(Tok k) {
    if (!at(k)) return false;
    eat();
    return true;
  }
  void error_here(const std::string& msg) {
    diags.push_back({codes::parse_error, Severity::Error, msg, cur().span, src.path});
  }
  Token expect(Tok k, const char* what) {
    if (at(k)) return eat();
    error_here(std::string("expected ") + what);
    throw ParseBail{};
  }

  // Index just past the parenthesis group opening at `open` (which must point
  // at a LParen); used to disambiguate `T(rho).d` from `d(Xi): t` heads.
  std::size_t after_matching_paren(std::size_t open) const {
    int depth = 0;
    for (std::size_t i = open; i < toks.size(); ++i) {
      if (toks[i].kind == Tok::LParen) depth++;
      else if (toks[i].kind == Tok::RParen && --depth == 0) return i + 1;
      else if (toks[i].kind == Tok::End) break;
    }
    return toks.size() - 1;
  }

  // --- expressions ---------------------------------------------------------

  ExprPtr parse_expr() {
    if (at(Tok::Backslash)) return parse_lambda();
    ExprPtr lhs = parse_postfix();
    if (accept(Tok::ThinArrow)) {
      ExprPtr rhs = parse_expr();
      auto e = std::make_shared<Expr>();
      e->kind = ExprKind::Arrow;
      e->span = {lhs->span.begin, rhs->span.end};
      e->args = {lhs, rhs};
      return e;
    }
    return lhs;
  }

  ExprPtr parse_lambda() {
    Token bs = expect(Tok::Backslash, "'\\'");
    Binder b = parse_binder_name();
    expect(Tok::Dot, "'.'");
    ExprPtr body = parse_expr();
    auto e = std::make_shared<Expr>();
    e->kind = ExprKind::Lambda;
    e->span = {bs.span.begin, body->span.end};
    e->lambda_binder = std::move(b);
    e->args = {body};
    return e;
  }

  Binder parse_binder_name() {
    if (at(Tok::Wild)) { eat(); return Binder{"_", 0}; }
    Token t = expect(Tok::Ident, "identifier");
    return Binder{t.text, 0};
  }

  ExprPtr parse_postfix() {
    ExprPtr e = parse_atom();
    for (;;) {
      if (!at(Tok::Dot)) break;
      eat();
      if (at(Tok::KwMatch)) {
        e = parse_match_tail(e);
        continue;
      }
      Token name = expect(Tok::Ident, "consumer name after '.'");
      Subst args = parse_args_opt();
      Span sp{e->span.begin, toks[pos - 1].span.end};
      e = mk_consumer(e, name.text, std::move(args), sp);
    }
    return e;
  }

  ExprPtr parse_match_tail(ExprPtr scrut) {
    Token kw = expect(Tok::KwMatch, "'match'");
    auto e = std::make_shared<Expr>();
    e->kind = ExprKind::Match;
    e->scrutinee = std::move(scrut);
    if (accept(Tok::KwAs)) {
      Binder b = parse_binder_name();
      expect(Tok::FatArrow, "'=>' in motive");
      ExprPtr ty = parse_expr();
      e->motive = Motive{std::move(b), std::move(ty)};
    }
    expect(Tok::LBrace, "'{'");
    e->cases = parse_cases();
    Token rb = expect(Tok::RBrace, "'}'");
    e->span = {e->scrutinee->span.begin, rb.span.end};
    return e;
  }

  ExprPtr parse_atom() {
    if (at(Tok::KwType)) {
      Token t = eat();
      return mk_universe(t.span);
    }
    if (at(Tok::LParen)) {
      eat();
      ExprPtr e = parse_expr();
      expect(Tok::RParen, "')'");
      return e;
    }
    if (at(Tok::KwComatch)) {
      Token kw = eat();
      auto e = std::make_shared<Expr>();
      e->kind = ExprKind::Comatch;
      if (at(Tok::Ident)) e->label = eat().text;
      expect(Tok::LBrace, "'{'");
      e->cocases = parse_cocases();
      Token rb = expect(Tok::RBrace, "'}'");
      e->span = {kw.span.begin, rb.span.end};
      return e;
    }
    if (at(Tok::Backslash)) return parse_lambda();
    if (at(Tok::Ident)) {
      Token name = eat();
      Subst args = parse_args_opt();
      auto e = std::make_shared<Expr>();
      e->kind = ExprKind::Name;
      e->name = name.text;
      e->args = std::move(args);
      e->span = {name.span.begin, toks[pos - 1].span.end};
      return e;
    }
    error_here("expected an expression");
    throw ParseBail{};
  }

  Subst parse_args_opt() {
    Subst args;
    if (!at(Tok::LParen)) return args;
    eat();
    while (!at(Tok::RParen) && !at(Tok::End)) {
      args.push_back(parse_expr());
      if (!accept(Tok::Comma)) break;
    }
    expect(Tok::RParen, "')'");
    return args;
  }

  // --- clause lists --------------------------------------------------------

  void parse_clause_binders(std::vector<Binder>& binders, std::vector<ExprPtr>& types) {
    if (!at(Tok::LParen)) return;
    eat();
    while (!at(Tok::RParen) && !at(Tok::End)) {
      binders.push_back(parse_binder_name());
      if (accept(Tok::Colon)) types.push_back(parse_expr());
      else types.push_back(nullptr);
      if (!accept(Tok::Comma)) break;
    }
    expect(Tok::RParen, "')'");
  }

  std::vector<CaseClause> parse_cases() {
    std::vector<CaseClause> out;
    while (at(Tok::Ident)) {
      CaseClause c;
      Token name = eat();
      c.ctor = name.text;
      parse_clause_binders(c.binders, c.binder_types);
      if (accept(Tok::KwAbsurd)) {
        // no body
      } else {
        expect(Tok::FatArrow, "'=>' or 'absurd'");
        c.body = parse_expr();
      }
      c.span = {name.span.begin, toks[pos - 1].span.end};
      out.push_back(std::move(c));
      if (!accept(Tok::Comma)) break;
    }
    return out;
  }

  std::vector<CocaseClause> parse_cocases() {
    std::vector<CocaseClause> out;
    while (at(Tok::Ident)) {
      CocaseClause c;
      Token name = eat();
      c.dtor = name.text;
      parse_clause_binders(c.binders, c.binder_types);
      if (accept(Tok::KwAbsurd)) {
      } else {
        expect(Tok::FatArrow, "'=>' or 'absurd'");
        c.body = parse_expr();
      }
      c.span = {name.span.begin, toks[pos - 1].span.end};
      out.push_back(std::move(c));
      if (!accept(Tok::Comma)) break;
    }
    return out;
  }

  // --- telescopes ----------------------------------------------------------

  Telescope parse_telescope_opt() {
    Telescope tele;
    if (!at(Tok::LParen)) return tele;
    eat();
    while (!at(Tok::RParen) && !at(Tok::End)) {
      std::vector<Binder> group;
      group.push_back(parse_binder_name());
      while (at(Tok::Ident) || at(Tok::Wild)) group.push_back(parse_binder_name());
      expect(Tok::Colon, "':' in telescope");
      ExprPtr ty = parse_expr();
      for (auto& b : group) tele.entries.push_back({std::move(b), ty});
      if (!accept(Tok::Comma)) break;
    }
    expect(Tok::RParen, "')'");
    return tele;
  }

  // --- declarations --------------------------------------------------------

  Program parse_program() {
    Program p;
    while (!at(Tok::End)) {
      std::size_t before = pos;
      try {
        p.decls.push_back(parse_decl());
      } catch (ParseBail&) {
        if (pos == before) eat();
        synchronize();
      }
    }
    return p;
  }

  void synchronize() {
    int depth = 0;
    while (!at(Tok::End)) {
      Tok k = cur().kind;
      if (k == Tok::LBrace) depth++;
      else if (k == Tok::RBrace) depth = std::max(0, depth - 1);
      else if (depth == 0 &&
               (k == Tok::KwData || k == Tok::KwCodata || k == Tok::KwDef ||
                k == Tok::KwCodef || k == Tok::KwLet))
        return;
      eat();
    }
  }

  Decl parse_decl() {
    Decl d;
    d.file = src.path;
    Span begin = cur().span;
    switch (cur().kind) {
      case Tok::KwData: d.node = parse_data(); break;
      case Tok::KwCodata: d.node = parse_codata(); break;
      case Tok::KwDef: d.node = parse_def(); break;
      case Tok::KwCodef: d.node = parse_codef(); break;
      case Tok::KwLet: d.node = parse_let(); break;
      default:
        error_here("expected a declaration (data, codata, def, codef, let)");
        throw ParseBail{};
    }
    d.span = {begin.begin, toks[pos - 1].span.end};
    return d;
  }

  DataDecl parse_data() {
    expect(Tok::KwData, "'data'");
    DataDecl d;
    d.name = expect(Tok::Ident, "type name").text;
    d.typarams = parse_telescope_opt();
    expect(Tok::LBrace, "'{'");
    while (at(Tok::Ident)) {
      CtorDecl c;
      Token name = eat();
      c.name = name.text;
      c.params = parse_telescope_opt();
      if (accept(Tok::Colon)) {
        Token ty = expect(Tok::Ident, "result type name");
        if (ty.text != d.name)
          diags.push_back({codes::bad_declaration, Severity::Error,
                           "constructor result must name its own data type '" + d.name + "'",
                           ty.span, src.path});
        c.result_args = parse_args_opt();
      } else if (!d.typarams.empty()) {
        diags.push_back({codes::bad_declaration, Severity::Error,
                         "constructor of a parameterized data type needs a result type",
                         name.span, src.path});
      }
      c.span = {name.span.begin, toks[pos - 1].span.end};
      d.ctors.push_back(std::move(c));
      if (!accept(Tok::Comma)) break;
    }
    expect(Tok::RBrace, "'}'");
    return d;
  }

  CodataDecl parse_codata() {
    expect(Tok::KwCodata, "'codata'");
    CodataDecl d;
    d.name = expect(Tok::Ident, "type name").text;
    d.typarams = parse_telescope_opt();
    expect(Tok::LBrace, "'{'");
    while (at(Tok::Ident) || at(Tok::LParen)) {
      d.dtors.push_back(parse_dtor(d.name, d.typarams.empty()));
      if (!accept(Tok::Comma)) break;
    }
    expect(Tok::RBrace, "'}'");
    return d;
  }

  DtorDecl parse_dtor(const std::string& enclosing, bool typarams_empty) {
    DtorDecl dt;
    Span begin = cur().span;
    if (at(Tok::LParen)) {
      // (z: T(rho)).d Xi : t
      eat();
      dt.self = parse_binder_name();
      dt.self_named = true;
      expect(Tok::Colon, "':'");
      Token ty = expect(Tok::Ident, "self type name");
      if (ty.text != enclosing)
        diags.push_back({codes::bad_declaration, Severity::Error,
                         "destructor self type must name the enclosing codata type '" +
                             enclosing + "'",
                         ty.span, src.path});
      dt.self_args = parse_args_opt();
      expect(Tok::RParen, "')'");
      expect(Tok::Dot, "'.'");
      dt.name = expect(Tok::Ident, "destructor name").text;
      dt.params = parse_telescope_opt();
    } else {
      Token id1 = expect(Tok::Ident, "destructor or self type name");
      bool is_self_prefix = false;
      if (at(Tok::Dot)) {
        is_self_prefix = true;
      } else if (at(Tok::LParen)) {
        std::size_t after = after_matching_paren(pos);
        is_self_prefix = toks[after].kind == Tok::Dot;
      }
      if (is_self_prefix) {
        if (id1.text != enclosing)
          diags.push_back({codes::bad_declaration, Severity::Error,
                           "destructor self type must name the enclosing codata type '" +
                               enclosing + "'",
                           id1.span, src.path});
        dt.self = Binder{"z", 0};
        dt.self_args = parse_args_opt();
        expect(Tok::Dot, "'.'");
        dt.name = expect(Tok::Ident, "destructor name").text;
        dt.params = parse_telescope_opt();
      } else {
        // bare destructor: self type is the enclosing codata with no arguments
        if (!typarams_empty)
          diags.push_back({codes::bad_declaration, Severity::Error,
                           "destructor of a parameterized codata type must spell out its self type",
                           id1.span, src.path});
        dt.self = Binder{"z", 0};
        dt.name = id1.text;
        dt.params = parse_telescope_opt();
      }
    }
    expect(Tok::Colon, "':'");
    dt.ret = parse_expr();
    dt.span = {begin.begin, toks[pos - 1].span.end};
    return dt;
  }

  DefDecl parse_def() {
    expect(Tok::KwDef, "'def'");
    DefDecl d;
    if (at(Tok::LParen)) {
      eat();
      d.self = parse_binder_name();
      d.self_named = true;
      expect(Tok::Colon, "':'");
      d.data_type = expect(Tok::Ident, "self type name").text;
      d.self_args = parse_args_opt();
      expect(Tok::RParen, "')'");
    } else {
      d.self = Binder{"z", 0};
      d.data_type = expect(Tok::Ident, "self type name").text;
      d.self_args = parse_args_opt();
    }
    expect(Tok::Dot, "'.'");
    d.name = expect(Tok::Ident, "definition name").text;
    d.params = parse_telescope_opt();
    expect(Tok::Colon, "':'");
    d.ret = parse_expr();
    expect(Tok::LBrace, "'{'");
    d.cases = parse_cases();
    expect(Tok::RBrace, "'}'");
    return d;
  }

  CodefDecl parse_codef() {
    expect(Tok::KwCodef, "'codef'");
    CodefDecl d;
    d.name = expect(Tok::Ident, "codefinition name").text;
    d.params = parse_telescope_opt();
    expect(Tok::Colon, "':'");
    d.codata_type = expect(Tok::Ident, "result type name").text;
    d.result_args = parse_args_opt();
    expect(Tok::LBrace, "'{'");
    d.cocases = parse_cocases();
    expect(Tok::RBrace, "'}'");
    return d;
  }

  LetDecl parse_let() {
    expect(Tok::KwLet, "'let'");
    LetDecl d;
    d.name = expect(Tok::Ident, "name").text;
    d.params = parse_telescope_opt();
    expect(Tok::Colon, "':'");
    d.type = parse_expr();
    expect(Tok::ColonEq, "':='");
    d.body = parse_expr();
    expect(Tok::Semi, "';'");
    return d;
  }
};

}  // namespace

Program parse_surface(const SourceFile& src, Diagnostics& diags) {
  Parser p(src, diags);
  return p.parse_program();
}

ExprPtr parse_expression_surface(const SourceFile& src, Diagnostics& diags) {
  Parser p(src, diags);
  try {
    ExprPtr e = p.parse_expr();
    if (!p.at(Tok::End)) {
      p.error_here("unexpected input after expression");
      return nullptr;
    }
    return e;
  } catch (ParseBail&) {
    return nullptr;
  }
}

ParseResult parse(const SourceFile& src) {
  ParseResult r;
  r.program = parse_surface(src, r.diags);
  if (!has_errors(r.diags)) resolve_program(r.program, r.diags);
  return r;
}

}  // namespace dd
