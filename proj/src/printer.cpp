#include "dd/printer.hpp"

#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace dd {

namespace {

struct Printer {
  std::ostringstream out;
  std::unordered_map<VarId, std::string> names;
  std::unordered_set<std::string> visible;

  std::string bind(const Binder& b) {
    if (b.wildcard()) return "_";
    std::string n = b.name;
    while (visible.count(n)) n += "'";
    visible.insert(n);
    names[b.id] = n;
    return n;
  }

  void unbind(const std::vector<std::string>& ns) {
    for (const auto& n : ns)
      if (n != "_") visible.erase(n);
  }

  std::string var_name(const Binder& b) {
    auto it = names.find(b.id);
    if (it != names.end()) return it->second;
    return b.name.empty() ? "x" + std::to_string(b.id) : b.name;
  }

  void expr(const ExprPtr& e) {
    switch (e->kind) {
      case ExprKind::Var:
        out << var_name(e->var);
        return;
      case ExprKind::Universe:
        out << "Type";
        return;
      case ExprKind::TypCtor:
      case ExprKind::Producer:
      case ExprKind::Name:
        out << e->name;
        args(e->args);
        return;
      case ExprKind::Consumer:
        scrutinee(e->scrutinee);
        out << "." << e->name;
        args(e->args);
        return;
      case ExprKind::Arrow:
        arrow_side(e->args[0]);
        out << " -> ";
        expr(e->args[1]);
        return;
      case ExprKind::Lambda: {
        std::string n = bind(e->lambda_binder);
        out << "\\" << n << ". ";
        expr(e->args[0]);
        unbind({n});
        return;
      }
      case ExprKind::Comatch: {
        out << "comatch ";
        if (e->label && !e->label_generated) out << *e->label << " ";
        out << "{ ";
        for (std::size_t i = 0; i < e->cocases.size(); ++i) {
          if (i) out << ", ";
          cocase(e->cocases[i]);
        }
        out << " }";
        return;
      }
      case ExprKind::Match: {
        scrutinee(e->scrutinee);
        out << ".match ";
        if (e->motive) {
          std::string n = bind(e->motive->binder);
          out << "as " << n << " => ";
          expr(e->motive->type);
          out << " ";
          unbind({n});
        }
        out << "{ ";
        for (std::size_t i = 0; i < e->cases.size(); ++i) {
          if (i) out << ", ";
          case_clause(e->cases[i]);
        }
        out << " }";
        return;
      }
    }
  }

  void scrutinee(const ExprPtr& e) {
    bool parens = e->kind == ExprKind::Arrow || e->kind == ExprKind::Lambda;
    if (parens) out << "(";
    expr(e);
    if (parens) out << ")";
  }

  void arrow_side(const ExprPtr& e) {
    bool parens = e->kind == ExprKind::Arrow || e->kind == ExprKind::Lambda;
    if (parens) out << "(";
    expr(e);
    if (parens) out << ")";
  }

  void args(const Subst& a) {
    if (a.empty()) return;
    out << "(";
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (i) out << ", ";
      expr(a[i]);
    }
    out << ")";
  }

  void case_clause(const CaseClause& c) {
    out << c.ctor;
    std::vector<std::string> bound;
    if (!c.binders.empty()) {
      out << "(";
      for (std::size_t i = 0; i < c.binders.size(); ++i) {
        if (i) out << ", ";
        out << (bound.emplace_back(bind(c.binders[i])), bound.back());
      }
      out << ")";
    }
    if (c.absurd()) out << " absurd";
    else {
      out << " => ";
      expr(*c.body);
    }
    unbind(bound);
  }

  void cocase(const CocaseClause& c) {
    out << c.dtor;
    std::vector<std::string> bound;
    if (!c.binders.empty()) {
      out << "(";
      for (std::size_t i = 0; i < c.binders.size(); ++i) {
        if (i) out << ", ";
        out << (bound.emplace_back(bind(c.binders[i])), bound.back());
      }
      out << ")";
    }
    if (c.absurd()) out << " absurd";
    else {
      out << " => ";
      expr(*c.body);
    }
    unbind(bound);
  }
};

}  // namespace

// The telescope helper above cannot print "name: type" in order because the
// binder must be renamed before use but shown before the type; do it here
// with an explicit two-step.
namespace {

struct DeclPrinter : Printer {
  std::vector<std::string> tele(const Telescope& t) {
    std::vector<std::string> bound;
    if (t.empty()) return bound;
    out << "(";
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (i) out << ", ";
      // The type may only mention earlier binders, so print it first into a
      // side buffer, then bind the name.
      std::ostringstream main;
      std::swap(main, out);
      expr(t.entries[i].type);
      std::ostringstream tybuf;
      std::swap(tybuf, out);
      std::swap(main, out);
      std::string n = bind(t.entries[i].binder);
      out << n << ": " << tybuf.str();
      bound.push_back(n);
    }
    out << ")";
    return bound;
  }

  void self_prefix(const Binder& self, bool self_named, const std::string& type_name,
                   const Subst& self_args, const ExprPtr& ret, std::string& self_printed) {
    bool named = self_named || occurs(self.id, ret);
    if (named) {
      self_printed = bind(self);
      out << "(" << self_printed << ": " << type_name;
      args(self_args);
      out << ")";
    } else {
      out << type_name;
      args(self_args);
    }
  }

  void decl(const Decl& d) {
    if (auto* x = std::get_if<DataDecl>(&d.node)) {
      out << "data " << x->name;
      auto bound = tele(x->typarams);
      unbind(bound);
      out << " {";
      for (std::size_t i = 0; i < x->ctors.size(); ++i) {
        const auto& c = x->ctors[i];
        out << (i ? ",\n  " : "\n  ") << c.name;
        auto cb = tele(c.params);
        if (!c.result_args.empty()) {
          out << ": " << x->name;
          args(c.result_args);
        }
        unbind(cb);
      }
      out << (x->ctors.empty() ? " }" : "\n}");
      return;
    }
    if (auto* x = std::get_if<CodataDecl>(&d.node)) {
      out << "codata " << x->name;
      auto bound = tele(x->typarams);
      unbind(bound);
      out << " {";
      for (std::size_t i = 0; i < x->dtors.size(); ++i) {
        const auto& dt = x->dtors[i];
        out << (i ? ",\n  " : "\n  ");
        std::string selfp;
        // The self arguments mention the parameter binders, so render the
        // telescope first (binding names) and splice it in after the prefix.
        auto pb = capture_tele(dt.params);
        self_prefix(dt.self, dt.self_named, x->name, dt.self_args, dt.ret, selfp);
        out << "." << dt.name << pb.text;
        out << ": ";
        expr(dt.ret);
        if (!selfp.empty()) unbind({selfp});
        unbind(pb.bound);
      }
      out << (x->dtors.empty() ? " }" : "\n}");
      return;
    }
    if (auto* x = std::get_if<DefDecl>(&d.node)) {
      out << "def ";
      auto pb = capture_tele(x->params);
      std::string selfp;
      self_prefix(x->self, x->self_named, x->data_type, x->self_args, x->ret, selfp);
      out << "." << x->name << pb.text << ": ";
      expr(x->ret);
      if (!selfp.empty()) unbind({selfp});
      out << " {";
      for (std::size_t i = 0; i < x->cases.size(); ++i) {
        out << (i ? ",\n  " : "\n  ");
        case_clause(x->cases[i]);
      }
      out << (x->cases.empty() ? " }" : "\n}");
      unbind(pb.bound);
      return;
    }
    if (auto* x = std::get_if<CodefDecl>(&d.node)) {
      out << "codef " << x->name;
      auto bound = tele(x->params);
      out << ": " << x->codata_type;
      args(x->result_args);
      out << " {";
      for (std::size_t i = 0; i < x->cocases.size(); ++i) {
        out << (i ? ",\n  " : "\n  ");
        cocase(x->cocases[i]);
      }
      out << (x->cocases.empty() ? " }" : "\n}");
      unbind(bound);
      return;
    }
    if (auto* x = std::get_if<LetDecl>(&d.node)) {
      out << "let " << x->name;
      auto bound = tele(x->params);
      out << ": ";
      expr(x->type);
      out << " := ";
      expr(x->body);
      out << ";";
      unbind(bound);
      return;
    }
  }

  struct TeleCapture {
    std::string text;
    std::vector<std::string> bound;
  };

  // Renders a telescope into a string while binding its names, so the caller
  // can emit it after the self prefix (whose arguments mention the binders).
  TeleCapture capture_tele(const Telescope& t) {
    TeleCapture tc;
    if (t.empty()) return tc;
    std::ostringstream main;
    std::swap(main, out);
    tc.bound = tele(t);
    std::ostringstream buf;
    std::swap(buf, out);
    std::swap(main, out);
    tc.text = buf.str();
    return tc;
  }
};

}  // namespace

std::string print(const Decl& d) {
  DeclPrinter p;
  p.decl(d);
  return p.out.str();
}

std::string print(const Program& p, bool include_prelude) {
  std::string out;
  bool first = true;
  for (const auto& d : p.decls) {
    if (d.from_prelude && !include_prelude) continue;
    if (!first) out += "\n\n";
    out += print(d);
    first = false;
  }
  if (!out.empty()) out += "\n";
  return out;
}

std::string print(const ExprPtr& e) {
  DeclPrinter p;
  p.expr(e);
  return p.out.str();
}

}  // namespace dd
