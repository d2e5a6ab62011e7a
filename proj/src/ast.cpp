#include "dd/ast.hpp"

#include <algorithm>
#include <atomic>
#include <stdexcept>

namespace dd {

VarId fresh_var_id() {
  static std::atomic<VarId> counter{1};
  return counter.fetch_add(1, std::memory_order_relaxed);
}

const std::string& Decl::head_name() const {
  return std::visit([](const auto& d) -> const std::string& { return d.name; }, node);
}

ExprPtr mk_var(Binder b, Span sp) {
  auto e = std::make_shared<Expr>();
  e->kind = ExprKind::Var;
  e->span = sp;
  e->var = std::move(b);
  return e;
}

ExprPtr mk_universe(Span sp) {
  auto e = std::make_shared<Expr>();
  e->kind = ExprKind::Universe;
  e->span = sp;
  return e;
}

static ExprPtr mk_named(ExprKind k, std::string name, Subst args, Span sp) {
  auto e = std::make_shared<Expr>();
  e->kind = k;
  e->span = sp;
  e->name = std::move(name);
  e->args = std::move(args);
  return e;
}

ExprPtr mk_typctor(std::string name, Subst args, Span sp) {
  return mk_named(ExprKind::TypCtor, std::move(name), std::move(args), sp);
}

ExprPtr mk_producer(std::string name, Subst args, Span sp) {
  return mk_named(ExprKind::Producer, std::move(name), std::move(args), sp);
}

ExprPtr mk_consumer(ExprPtr scrutinee, std::string name, Subst args, Span sp) {
  auto e = std::make_shared<Expr>();
  e->kind = ExprKind::Consumer;
  e->span = sp;
  e->scrutinee = std::move(scrutinee);
  e->name = std::move(name);
  e->args = std::move(args);
  return e;
}

// ---------------------------------------------------------------------------
// Substitution

static bool subst_args(const Subst& in, Subst& out, const VarMap& map);

static ExprPtr subst_expr(const ExprPtr& e, const VarMap& map, bool& changed) {
  switch (e->kind) {
    case ExprKind::Var: {
      auto it = map.find(e->var.id);
      if (it == map.end()) return e;
      changed = true;
      return it->second;
    }
    case ExprKind::Universe:
      return e;
    case ExprKind::TypCtor:
    case ExprKind::Producer:
    case ExprKind::Name:
    case ExprKind::Arrow: {
      Subst args;
      if (!subst_args(e->args, args, map)) return e;
      changed = true;
      auto n = std::make_shared<Expr>(*e);
      n->args = std::move(args);
      return n;
    }
    case ExprKind::Consumer: {
      bool c1 = false;
      ExprPtr scrut = subst_expr(e->scrutinee, map, c1);
      Subst args;
      bool c2 = subst_args(e->args, args, map);
      if (!c1 && !c2) return e;
      changed = true;
      auto n = std::make_shared<Expr>(*e);
      n->scrutinee = std::move(scrut);
      if (c2) n->args = std::move(args);
      return n;
    }
    case ExprKind::Lambda: {
      bool c = false;
      ExprPtr body = subst_expr(e->args.at(0), map, c);
      if (!c) return e;
      changed = true;
      auto n = std::make_shared<Expr>(*e);
      n->args = {body};
      return n;
    }
    case ExprKind::Comatch: {
      bool any = false;
      std::vector<CocaseClause> cocases = e->cocases;
      for (auto& cc : cocases) {
        if (cc.body) {
          bool c = false;
          ExprPtr b = subst_expr(*cc.body, map, c);
          if (c) { cc.body = b; any = true; }
        }
        for (auto& bt : cc.binder_types) {
          if (!bt) continue;
          bool c = false;
          ExprPtr t = subst_expr(bt, map, c);
          if (c) { bt = t; any = true; }
        }
      }
      if (!any) return e;
      changed = true;
      auto n = std::make_shared<Expr>(*e);
      n->cocases = std::move(cocases);
      return n;
    }
    case ExprKind::Match: {
      bool any = false;
      bool cs = false;
      ExprPtr scrut = subst_expr(e->scrutinee, map, cs);
      any |= cs;
      std::optional<Motive> motive = e->motive;
      if (motive) {
        bool c = false;
        ExprPtr t = subst_expr(motive->type, map, c);
        if (c) { motive->type = t; any = true; }
      }
      std::vector<CaseClause> cases = e->cases;
      for (auto& cc : cases) {
        if (cc.body) {
          bool c = false;
          ExprPtr b = subst_expr(*cc.body, map, c);
          if (c) { cc.body = b; any = true; }
        }
        for (auto& bt : cc.binder_types) {
          if (!bt) continue;
          bool c = false;
          ExprPtr t = subst_expr(bt, map, c);
          if (c) { bt = t; any = true; }
        }
      }
      if (!any) return e;
      changed = true;
      auto n = std::make_shared<Expr>(*e);
      n->scrutinee = std::move(scrut);
      n->motive = std::move(motive);
      n->cases = std::move(cases);
      return n;
    }
  }
  return e;
}

static bool subst_args(const Subst& in, Subst& out, const VarMap& map) {
  bool changed = false;
  out.reserve(in.size());
  for (const auto& a : in) {
    bool c = false;
    out.push_back(subst_expr(a, map, c));
    changed |= c;
  }
  return changed;
}

ExprPtr substitute(const ExprPtr& e, const VarMap& map) {
  if (map.empty()) return e;
  bool changed = false;
  return subst_expr(e, map, changed);
}

ExprPtr substitute(const ExprPtr& e, const Subst& sigma, const Telescope& tele) {
  if (sigma.size() != tele.size())
    throw std::invalid_argument("substitute: argument list and telescope lengths differ");
  VarMap map;
  for (std::size_t i = 0; i < sigma.size(); ++i) map[tele.entries[i].binder.id] = sigma[i];
  return substitute(e, map);
}

Subst identity_substitution(const Telescope& tele) {
  Subst s;
  s.reserve(tele.size());
  for (const auto& en : tele.entries) s.push_back(mk_var(en.binder));
  return s;
}

// ---------------------------------------------------------------------------
// Alpha equality

namespace {

struct AlphaCtx {
  std::unordered_map<VarId, VarId> l2r;
};

bool alpha_expr(const ExprPtr& a, const ExprPtr& b, AlphaCtx& cx);

bool alpha_args(const Subst& a, const Subst& b, AlphaCtx& cx) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!alpha_expr(a[i], b[i], cx)) return false;
  return true;
}

void bind(AlphaCtx& cx, const Binder& a, const Binder& b) { cx.l2r[a.id] = b.id; }

bool alpha_binders(const std::vector<Binder>& a, const std::vector<Binder>& b, AlphaCtx& cx) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) bind(cx, a[i], b[i]);
  return true;
}

bool alpha_tele(const Telescope& a, const Telescope& b, AlphaCtx& cx) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!alpha_expr(a.entries[i].type, b.entries[i].type, cx)) return false;
    bind(cx, a.entries[i].binder, b.entries[i].binder);
  }
  return true;
}

bool alpha_case(const CaseClause& a, const CaseClause& b, AlphaCtx& cx) {
  if (a.ctor != b.ctor || a.absurd() != b.absurd()) return false;
  AlphaCtx inner = cx;
  if (!alpha_binders(a.binders, b.binders, inner)) return false;
  if (a.absurd()) return true;
  return alpha_expr(*a.body, *b.body, inner);
}

bool alpha_cocase(const CocaseClause& a, const CocaseClause& b, AlphaCtx& cx) {
  if (a.dtor != b.dtor || a.absurd() != b.absurd()) return false;
  AlphaCtx inner = cx;
  if (!alpha_binders(a.binders, b.binders, inner)) return false;
  if (a.absurd()) return true;
  return alpha_expr(*a.body, *b.body, inner);
}

bool alpha_expr(const ExprPtr& a, const ExprPtr& b, AlphaCtx& cx) {
  if (a.get() == b.get()) return true;
  if (a->kind != b->kind) return false;
  switch (a->kind) {
    case ExprKind::Var: {
      auto it = cx.l2r.find(a->var.id);
      if (it != cx.l2r.end()) return it->second == b->var.id;
      return a->var.id == b->var.id;
    }
    case ExprKind::Universe:
      return true;
    case ExprKind::TypCtor:
    case ExprKind::Producer:
    case ExprKind::Name:
      return a->name == b->name && alpha_args(a->args, b->args, cx);
    case ExprKind::Arrow:
      return alpha_args(a->args, b->args, cx);
    case ExprKind::Consumer:
      return a->name == b->name && alpha_expr(a->scrutinee, b->scrutinee, cx) &&
             alpha_args(a->args, b->args, cx);
    case ExprKind::Lambda: {
      AlphaCtx inner = cx;
      bind(inner, a->lambda_binder, b->lambda_binder);
      return alpha_expr(a->args.at(0), b->args.at(0), inner);
    }
    case ExprKind::Comatch: {
      if (a->label != b->label) return false;
      if (a->cocases.size() != b->cocases.size()) return false;
      for (std::size_t i = 0; i < a->cocases.size(); ++i)
        if (!alpha_cocase(a->cocases[i], b->cocases[i], cx)) return false;
      return true;
    }
    case ExprKind::Match: {
      if (a->label != b->label) return false;
      if (!alpha_expr(a->scrutinee, b->scrutinee, cx)) return false;
      if (a->motive.has_value() != b->motive.has_value()) return false;
      if (a->motive) {
        AlphaCtx inner = cx;
        bind(inner, a->motive->binder, b->motive->binder);
        if (!alpha_expr(a->motive->type, b->motive->type, inner)) return false;
      }
      if (a->cases.size() != b->cases.size()) return false;
      for (std::size_t i = 0; i < a->cases.size(); ++i)
        if (!alpha_case(a->cases[i], b->cases[i], cx)) return false;
      return true;
    }
  }
  return false;
}

bool alpha_decl(const Decl& da, const Decl& db, bool clauses_by_name) {
  if (da.node.index() != db.node.index()) return false;
  AlphaCtx cx;
  if (auto* a = std::get_if<DataDecl>(&da.node)) {
    auto* b = std::get_if<DataDecl>(&db.node);
    if (a->name != b->name) return false;
    if (!alpha_tele(a->typarams, b->typarams, cx)) return false;
    if (a->ctors.size() != b->ctors.size()) return false;
    auto cmp_ctor = [&](const CtorDecl& ca, const CtorDecl& cb) {
      if (ca.name != cb.name) return false;
      AlphaCtx inner = cx;
      return alpha_tele(ca.params, cb.params, inner) &&
             alpha_args(ca.result_args, cb.result_args, inner);
    };
    for (std::size_t i = 0; i < a->ctors.size(); ++i) {
      const CtorDecl* cb = &b->ctors[i];
      if (clauses_by_name) {
        cb = nullptr;
        for (const auto& c : b->ctors)
          if (c.name == a->ctors[i].name) { cb = &c; break; }
        if (!cb) return false;
      }
      if (!cmp_ctor(a->ctors[i], *cb)) return false;
    }
    return true;
  }
  if (auto* a = std::get_if<CodataDecl>(&da.node)) {
    auto* b = std::get_if<CodataDecl>(&db.node);
    if (a->name != b->name) return false;
    if (!alpha_tele(a->typarams, b->typarams, cx)) return false;
    if (a->dtors.size() != b->dtors.size()) return false;
    auto cmp_dtor = [&](const DtorDecl& xa, const DtorDecl& xb) {
      if (xa.name != xb.name) return false;
      AlphaCtx inner = cx;
      if (!alpha_tele(xa.params, xb.params, inner)) return false;
      if (!alpha_args(xa.self_args, xb.self_args, inner)) return false;
      bind(inner, xa.self, xb.self);
      return alpha_expr(xa.ret, xb.ret, inner);
    };
    for (std::size_t i = 0; i < a->dtors.size(); ++i) {
      const DtorDecl* xb = &b->dtors[i];
      if (clauses_by_name) {
        xb = nullptr;
        for (const auto& dt : b->dtors)
          if (dt.name == a->dtors[i].name) { xb = &dt; break; }
        if (!xb) return false;
      }
      if (!cmp_dtor(a->dtors[i], *xb)) return false;
    }
    return true;
  }
  if (auto* a = std::get_if<DefDecl>(&da.node)) {
    auto* b = std::get_if<DefDecl>(&db.node);
    if (a->name != b->name || a->data_type != b->data_type) return false;
    if (!alpha_tele(a->params, b->params, cx)) return false;
    if (!alpha_args(a->self_args, b->self_args, cx)) return false;
    AlphaCtx retcx = cx;
    bind(retcx, a->self, b->self);
    if (!alpha_expr(a->ret, b->ret, retcx)) return false;
    if (a->cases.size() != b->cases.size()) return false;
    for (std::size_t i = 0; i < a->cases.size(); ++i) {
      const CaseClause* cb = &b->cases[i];
      if (clauses_by_name) {
        cb = nullptr;
        for (const auto& c : b->cases)
          if (c.ctor == a->cases[i].ctor) { cb = &c; break; }
        if (!cb) return false;
      }
      if (!alpha_case(a->cases[i], *cb, cx)) return false;
    }
    return true;
  }
  if (auto* a = std::get_if<CodefDecl>(&da.node)) {
    auto* b = std::get_if<CodefDecl>(&db.node);
    if (a->name != b->name || a->codata_type != b->codata_type) return false;
    if (!alpha_tele(a->params, b->params, cx)) return false;
    if (!alpha_args(a->result_args, b->result_args, cx)) return false;
    if (a->cocases.size() != b->cocases.size()) return false;
    for (std::size_t i = 0; i < a->cocases.size(); ++i) {
      const CocaseClause* cb = &b->cocases[i];
      if (clauses_by_name) {
        cb = nullptr;
        for (const auto& c : b->cocases)
          if (c.dtor == a->cocases[i].dtor) { cb = &c; break; }
        if (!cb) return false;
      }
      if (!alpha_cocase(a->cocases[i], *cb, cx)) return false;
    }
    return true;
  }
  auto* a = std::get_if<LetDecl>(&da.node);
  auto* b = std::get_if<LetDecl>(&db.node);
  if (a->name != b->name) return false;
  if (!alpha_tele(a->params, b->params, cx)) return false;
  return alpha_expr(a->type, b->type, cx) && alpha_expr(a->body, b->body, cx);
}

}  // namespace

bool alpha_equal(const ExprPtr& a, const ExprPtr& b) {
  AlphaCtx cx;
  return alpha_expr(a, b, cx);
}

bool alpha_equal(const Decl& a, const Decl& b) { return alpha_decl(a, b, false); }

bool alpha_equal(const Program& a, const Program& b) {
  if (a.decls.size() != b.decls.size()) return false;
  for (std::size_t i = 0; i < a.decls.size(); ++i)
    if (!alpha_decl(a.decls[i], b.decls[i], false)) return false;
  return true;
}

bool alpha_equal_modulo_order(const Program& a, const Program& b) {
  if (a.decls.size() != b.decls.size()) return false;
  std::vector<bool> used(b.decls.size(), false);
  for (const auto& da : a.decls) {
    bool found = false;
    for (std::size_t j = 0; j < b.decls.size(); ++j) {
      if (used[j]) continue;
      if (da.node.index() != b.decls[j].node.index()) continue;
      if (da.head_name() != b.decls[j].head_name()) continue;
      if (alpha_decl(da, b.decls[j], true)) {
        used[j] = true;
        found = true;
        break;
      }
    }
    if (!found) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Free variables

void collect_free_vars(const ExprPtr& e, std::vector<VarId>& order,
                       std::unordered_set<VarId>& seen) {
  struct Walk {
    std::vector<VarId>& order;
    std::unordered_set<VarId>& seen;
    std::unordered_set<VarId> bound;

    void expr(const ExprPtr& e) {
      if (!e) return;
      switch (e->kind) {
        case ExprKind::Var:
          if (!bound.count(e->var.id) && seen.insert(e->var.id).second)
            order.push_back(e->var.id);
          return;
        case ExprKind::Universe:
          return;
        case ExprKind::TypCtor:
        case ExprKind::Producer:
        case ExprKind::Name:
        case ExprKind::Arrow:
          for (const auto& a : e->args) expr(a);
          return;
        case ExprKind::Consumer:
          expr(e->scrutinee);
          for (const auto& a : e->args) expr(a);
          return;
        case ExprKind::Lambda: {
          auto saved = bound;
          bound.insert(e->lambda_binder.id);
          expr(e->args.at(0));
          bound = std::move(saved);
          return;
        }
        case ExprKind::Comatch:
          for (const auto& cc : e->cocases) {
            auto saved = bound;
            for (const auto& b : cc.binders) bound.insert(b.id);
            for (const auto& bt : cc.binder_types) expr(bt);
            if (cc.body) expr(*cc.body);
            bound = std::move(saved);
          }
          return;
        case ExprKind::Match: {
          expr(e->scrutinee);
          if (e->motive) {
            auto saved = bound;
            bound.insert(e->motive->binder.id);
            expr(e->motive->type);
            bound = std::move(saved);
          }
          for (const auto& cc : e->cases) {
            auto saved = bound;
            for (const auto& b : cc.binders) bound.insert(b.id);
            for (const auto& bt : cc.binder_types) expr(bt);
            if (cc.body) expr(*cc.body);
            bound = std::move(saved);
          }
          return;
        }
      }
    }
  };
  Walk w{order, seen, {}};
  w.expr(e);
}

std::vector<VarId> free_vars(const ExprPtr& e) {
  std::vector<VarId> order;
  std::unordered_set<VarId> seen;
  collect_free_vars(e, order, seen);
  return order;
}

bool occurs(VarId v, const ExprPtr& e) {
  for (VarId x : free_vars(e))
    if (x == v) return true;
  return false;
}

Telescope freshen_telescope(const Telescope& tele, VarMap& ren) {
  Telescope out;
  out.entries.reserve(tele.size());
  for (const auto& en : tele.entries) {
    Binder nb{en.binder.name, fresh_var_id()};
    ExprPtr ty = en.type ? substitute(en.type, ren) : en.type;
    ren[en.binder.id] = mk_var(nb);
    out.entries.push_back({nb, ty});
  }
  return out;
}

}  // namespace dd
