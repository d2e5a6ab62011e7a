#include <unordered_map>

#include "dd/lexer.hpp"
#include "dd/parser.hpp"

namespace dd {

namespace {

enum class TypeKind { Data, Codata };
enum class ProdKind { Ctor, Codef, Let };
enum class ConsKind { Dtor, Def };

struct NameTables {
  std::unordered_map<std::string, TypeKind> types;
  std::unordered_map<std::string, ProdKind> producers;
  std::unordered_map<std::string, ConsKind> consumers;
  std::size_t fun_ap_arity = 0;
  bool has_fun_ap = false;
};

NameTables build_tables(const Program& p, Diagnostics* diags) {
  NameTables t;
  auto dup = [&](const char* what, const std::string& name, const std::string& file, Span sp) {
    if (diags)
      diags->push_back({codes::duplicate_name, Severity::Error,
                        std::string(what) + " name '" + name + "' is declared twice", sp, file});
  };
  for (const auto& d : p.decls) {
    if (auto* dd_ = std::get_if<DataDecl>(&d.node)) {
      if (!t.types.emplace(dd_->name, TypeKind::Data).second) dup("type", dd_->name, d.file, d.span);
      for (const auto& c : dd_->ctors)
        if (!t.producers.emplace(c.name, ProdKind::Ctor).second) dup("producer", c.name, d.file, c.span);
    } else if (auto* cd = std::get_if<CodataDecl>(&d.node)) {
      if (!t.types.emplace(cd->name, TypeKind::Codata).second) dup("type", cd->name, d.file, d.span);
      for (const auto& dt : cd->dtors)
        if (!t.consumers.emplace(dt.name, ConsKind::Dtor).second) dup("consumer", dt.name, d.file, dt.span);
      if (cd->name == "Fun") {
        for (const auto& dt : cd->dtors)
          if (dt.name == "ap") {
            t.has_fun_ap = true;
            t.fun_ap_arity = dt.params.size();
          }
      }
    } else if (auto* df = std::get_if<DefDecl>(&d.node)) {
      if (!t.consumers.emplace(df->name, ConsKind::Def).second) dup("consumer", df->name, d.file, d.span);
    } else if (auto* cf = std::get_if<CodefDecl>(&d.node)) {
      if (!t.producers.emplace(cf->name, ProdKind::Codef).second) dup("producer", cf->name, d.file, d.span);
    } else if (auto* lt = std::get_if<LetDecl>(&d.node)) {
      if (!t.producers.emplace(lt->name, ProdKind::Let).second) dup("producer", lt->name, d.file, d.span);
    }
  }
  return t;
}

struct Scope {
  std::vector<std::unordered_map<std::string, Binder>> frames;
  void push() { frames.emplace_back(); }
  void pop() { frames.pop_back(); }
  void add(const Binder& b) {
    if (!b.wildcard()) frames.back()[b.name] = b;
  }
  const Binder* lookup(const std::string& name) const {
    for (auto it = frames.rbegin(); it != frames.rend(); ++it) {
      auto f = it->find(name);
      if (f != it->end()) return &f->second;
    }
    return nullptr;
  }
};

struct Resolver {
  const NameTables& tables;
  Diagnostics& diags;
  std::string file;

  void error(const std::string& code, const std::string& msg, Span sp) {
    diags.push_back({code, Severity::Error, msg, sp, file});
  }

  Binder fresh(const Binder& b) { return Binder{b.name, fresh_var_id()}; }

  ExprPtr expr(const ExprPtr& e, Scope& sc) {
    if (!e) return e;
    switch (e->kind) {
      case ExprKind::Universe:
        return e;
      case ExprKind::Var:
        return e;  // already resolved (re-resolution is a no-op)
      case ExprKind::Name: {
        Subst args;
        args.reserve(e->args.size());
        for (const auto& a : e->args) args.push_back(expr(a, sc));
        if (const Binder* b = sc.lookup(e->name)) {
          if (!args.empty()) {
            error(codes::arity_mismatch, "variable '" + e->name + "' cannot take arguments", e->span);
            throw ParseBailResolve{};
          }
          return mk_var(*b, e->span);
        }
        auto pit = tables.producers.find(e->name);
        if (pit != tables.producers.end()) return mk_producer(e->name, std::move(args), e->span);
        auto tit = tables.types.find(e->name);
        if (tit != tables.types.end()) return mk_typctor(e->name, std::move(args), e->span);
        error(codes::unbound_name, "unbound name '" + e->name + "'", e->span);
        throw ParseBailResolve{};
      }
      case ExprKind::TypCtor:
      case ExprKind::Producer: {
        Subst args;
        args.reserve(e->args.size());
        for (const auto& a : e->args) args.push_back(expr(a, sc));
        auto n = std::make_shared<Expr>(*e);
        n->args = std::move(args);
        return n;
      }
      case ExprKind::Consumer: {
        ExprPtr scrut = expr(e->scrutinee, sc);
        Subst args;
        args.reserve(e->args.size());
        for (const auto& a : e->args) args.push_back(expr(a, sc));
        if (!tables.consumers.count(e->name)) {
          error(codes::unbound_name, "unknown destructor or definition '" + e->name + "'", e->span);
          throw ParseBailResolve{};
        }
        return mk_consumer(std::move(scrut), e->name, std::move(args), e->span);
      }
      case ExprKind::Arrow: {
        ExprPtr lhs = expr(e->args[0], sc);
        ExprPtr rhs = expr(e->args[1], sc);
        if (!tables.types.count("Fun")) {
          error(codes::function_sugar, "'->' requires a codata type 'Fun' in scope", e->span);
          throw ParseBailResolve{};
        }
        return mk_typctor("Fun", {lhs, rhs}, e->span);
      }
      case ExprKind::Lambda: {
        if (!tables.has_fun_ap || tables.fun_ap_arity == 0) {
          error(codes::function_sugar,
                "'\\' requires a codata type 'Fun' with a destructor 'ap' in scope", e->span);
          throw ParseBailResolve{};
        }
        CocaseClause cc;
        cc.dtor = "ap";
        cc.span = e->span;
        for (std::size_t i = 0; i + 1 < tables.fun_ap_arity; ++i) {
          cc.binders.push_back(Binder{"_", fresh_var_id()});
          cc.binder_types.push_back(nullptr);
        }
        Binder x = fresh(e->lambda_binder);
        cc.binders.push_back(x);
        cc.binder_types.push_back(nullptr);
        Scope inner = sc;
        inner.push();
        inner.add(x);
        cc.body = expr(e->args[0], inner);
        auto n = std::make_shared<Expr>();
        n->kind = ExprKind::Comatch;
        n->span = e->span;
        n->cocases = {std::move(cc)};
        return n;
      }
      case ExprKind::Comatch: {
        auto n = std::make_shared<Expr>(*e);
        n->cocases.clear();
        for (const auto& cc : e->cocases) n->cocases.push_back(cocase(cc, sc));
        return n;
      }
      case ExprKind::Match: {
        auto n = std::make_shared<Expr>(*e);
        n->scrutinee = expr(e->scrutinee, sc);
        if (e->motive) {
          Motive m;
          m.binder = fresh(e->motive->binder);
          Scope inner = sc;
          inner.push();
          inner.add(m.binder);
          m.type = expr(e->motive->type, inner);
          n->motive = std::move(m);
        }
        n->cases.clear();
        for (const auto& cc : e->cases) n->cases.push_back(case_clause(cc, sc));
        return n;
      }
    }
    return e;
  }

  struct ParseBailResolve {};

  void check_distinct(const std::vector<Binder>& bs, Span sp) {
    for (std::size_t i = 0; i < bs.size(); ++i)
      for (std::size_t j = i + 1; j < bs.size(); ++j)
        if (!bs[i].wildcard() && bs[i].name == bs[j].name)
          error(codes::duplicate_binder, "binder '" + bs[i].name + "' repeated in one pattern", sp);
  }

  CaseClause case_clause(const CaseClause& c, Scope& sc) {
    CaseClause out = c;
    Scope inner = sc;
    inner.push();
    for (auto& b : out.binders) b = fresh(b);
    check_distinct(out.binders, c.span);
    for (std::size_t i = 0; i < out.binders.size(); ++i) {
      if (out.binder_types[i]) out.binder_types[i] = expr(out.binder_types[i], inner);
      inner.add(out.binders[i]);
    }
    if (out.body) out.body = expr(*out.body, inner);
    return out;
  }

  CocaseClause cocase(const CocaseClause& c, Scope& sc) {
    CocaseClause out = c;
    Scope inner = sc;
    inner.push();
    for (auto& b : out.binders) b = fresh(b);
    check_distinct(out.binders, c.span);
    for (std::size_t i = 0; i < out.binders.size(); ++i) {
      if (out.binder_types[i]) out.binder_types[i] = expr(out.binder_types[i], inner);
      inner.add(out.binders[i]);
    }
    if (out.body) out.body = expr(*out.body, inner);
    return out;
  }

  Telescope telescope(const Telescope& t, Scope& sc) {
    Telescope out;
    std::unordered_map<std::string, bool> seen;
    for (const auto& en : t.entries) {
      ExprPtr ty = expr(en.type, sc);
      Binder b = fresh(en.binder);
      if (!b.wildcard() && !seen.emplace(b.name, true).second)
        error(codes::duplicate_binder, "binder '" + b.name + "' repeated in telescope", en.type->span);
      sc.add(b);
      out.entries.push_back({b, ty});
    }
    return out;
  }

  void decl(Decl& d) {
    file = d.file;
    if (auto* dd_ = std::get_if<DataDecl>(&d.node)) {
      Scope sc;
      sc.push();
      dd_->typarams = telescope(dd_->typarams, sc);
      for (auto& c : dd_->ctors) {
        Scope cs;  // constructor telescopes are closed
        cs.push();
        c.params = telescope(c.params, cs);
        Subst ra;
        for (const auto& a : c.result_args) ra.push_back(expr(a, cs));
        c.result_args = std::move(ra);
      }
    } else if (auto* cd = std::get_if<CodataDecl>(&d.node)) {
      Scope sc;
      sc.push();
      cd->typarams = telescope(cd->typarams, sc);
      for (auto& dt : cd->dtors) {
        Scope ds;
        ds.push();
        dt.params = telescope(dt.params, ds);
        Subst sa;
        for (const auto& a : dt.self_args) sa.push_back(expr(a, ds));
        dt.self_args = std::move(sa);
        dt.self = fresh(dt.self);
        Scope rs = ds;
        rs.push();
        rs.add(dt.self);
        dt.ret = expr(dt.ret, rs);
      }
    } else if (auto* df = std::get_if<DefDecl>(&d.node)) {
      auto it = tables.types.find(df->data_type);
      if (it == tables.types.end() || it->second != TypeKind::Data)
        error(codes::bad_declaration,
              "definition self type '" + df->data_type + "' is not a declared data type", d.span);
      Scope sc;
      sc.push();
      df->params = telescope(df->params, sc);
      Subst sa;
      for (const auto& a : df->self_args) sa.push_back(expr(a, sc));
      df->self_args = std::move(sa);
      df->self = fresh(df->self);
      Scope rs = sc;
      rs.push();
      rs.add(df->self);
      df->ret = expr(df->ret, rs);
      std::vector<CaseClause> cases;
      for (const auto& c : df->cases) cases.push_back(case_clause(c, sc));
      df->cases = std::move(cases);
    } else if (auto* cf = std::get_if<CodefDecl>(&d.node)) {
      auto it = tables.types.find(cf->codata_type);
      if (it == tables.types.end() || it->second != TypeKind::Codata)
        error(codes::bad_declaration,
              "codefinition result type '" + cf->codata_type + "' is not a declared codata type",
              d.span);
      Scope sc;
      sc.push();
      cf->params = telescope(cf->params, sc);
      Subst ra;
      for (const auto& a : cf->result_args) ra.push_back(expr(a, sc));
      cf->result_args = std::move(ra);
      std::vector<CocaseClause> cocases;
      for (const auto& c : cf->cocases) cocases.push_back(cocase(c, sc));
      cf->cocases = std::move(cocases);
    } else if (auto* lt = std::get_if<LetDecl>(&d.node)) {
      Scope sc;
      sc.push();
      lt->params = telescope(lt->params, sc);
      lt->type = expr(lt->type, sc);
      lt->body = expr(lt->body, sc);
    }
  }
};

}  // namespace

void resolve_program(Program& p, Diagnostics& diags) {
  NameTables tables = build_tables(p, &diags);
  Resolver r{tables, diags, ""};
  for (auto& d : p.decls) {
    try {
      r.decl(d);
    } catch (Resolver::ParseBailResolve&) {
      // diagnostics already recorded; continue with the next declaration
    }
  }
}

ExprPtr parse_expr_in_scope(const std::string& text, const std::string& file,
                            const Program& scope, Diagnostics& diags) {
  SourceFile sf{file, text};
  ExprPtr surface = parse_expression_surface(sf, diags);
  if (!surface) return nullptr;
  NameTables tables = build_tables(scope, nullptr);
  Resolver r{tables, diags, file};
  Scope sc;
  sc.push();
  try {
    return r.expr(surface, sc);
  } catch (Resolver::ParseBailResolve&) {
    return nullptr;
  }
}

}  // namespace dd
