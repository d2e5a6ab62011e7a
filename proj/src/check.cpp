#include "dd/check.hpp"

#include <algorithm>
#include <deque>

#include "dd/lift.hpp"
#include "dd/printer.hpp"

namespace dd {

// ---------------------------------------------------------------------------
// Normalization

namespace {

ExprPtr norm(const ProgramIndex& ix, const ExprPtr& e, Fuel& fuel);

Subst norm_args(const ProgramIndex& ix, const Subst& args, Fuel& fuel, bool& changed) {
  Subst out;
  out.reserve(args.size());
  for (const auto& a : args) {
    ExprPtr n = norm(ix, a, fuel);
    changed |= n.get() != a.get();
    out.push_back(std::move(n));
  }
  return out;
}

// Builds the simultaneous substitution for a clause body: clause binders get
// one argument list, declaration parameters the other.
VarMap clause_map(const std::vector<Binder>& binders, const Subst& binder_args,
                  const Telescope& params, const Subst& param_args) {
  VarMap m;
  for (std::size_t i = 0; i < binders.size(); ++i) m[binders[i].id] = binder_args[i];
  for (std::size_t i = 0; i < params.size(); ++i) m[params.entries[i].binder.id] = param_args[i];
  return m;
}

ExprPtr norm(const ProgramIndex& ix, const ExprPtr& e, Fuel& fuel) {
  if (fuel.exhausted) return e;
  switch (e->kind) {
    case ExprKind::Var:
    case ExprKind::Universe:
      return e;
    case ExprKind::TypCtor: {
      bool changed = false;
      Subst args = norm_args(ix, e->args, fuel, changed);
      if (!changed) return e;
      auto n = std::make_shared<Expr>(*e);
      n->args = std::move(args);
      return n;
    }
    case ExprKind::Producer: {
      auto lt = ix.lets.find(e->name);
      if (lt != ix.lets.end() && lt->second->params.size() == e->args.size()) {
        if (!fuel.spend()) return e;
        VarMap m;
        for (std::size_t i = 0; i < e->args.size(); ++i)
          m[lt->second->params.entries[i].binder.id] = e->args[i];
        return norm(ix, substitute(lt->second->body, m), fuel);
      }
      bool changed = false;
      Subst args = norm_args(ix, e->args, fuel, changed);
      if (!changed) return e;
      auto n = std::make_shared<Expr>(*e);
      n->args = std::move(args);
      return n;
    }
    case ExprKind::Consumer: {
      ExprPtr scrut = norm(ix, e->scrutinee, fuel);
      if (scrut->kind == ExprKind::Producer) {
        // constructor . definition
        auto ct = ix.ctors.find(scrut->name);
        auto df = ix.defs.find(e->name);
        if (ct != ix.ctors.end() && df != ix.defs.end()) {
          const CaseClause* c = ix.find_case(*df->second, scrut->name);
          if (c && c->body && c->binders.size() == scrut->args.size() &&
              df->second->params.size() == e->args.size()) {
            if (!fuel.spend()) return e;
            VarMap m = clause_map(c->binders, scrut->args, df->second->params, e->args);
            return norm(ix, substitute(*c->body, m), fuel);
          }
        }
        // codefinition . destructor
        auto cf = ix.codefs.find(scrut->name);
        auto dt = ix.dtors.find(e->name);
        if (cf != ix.codefs.end() && dt != ix.dtors.end()) {
          const CocaseClause* c = ix.find_cocase(*cf->second, e->name);
          if (c && c->body && c->binders.size() == e->args.size() &&
              cf->second->params.size() == scrut->args.size()) {
            if (!fuel.spend()) return e;
            VarMap m = clause_map(c->binders, e->args, cf->second->params, scrut->args);
            return norm(ix, substitute(*c->body, m), fuel);
          }
        }
      }
      if (scrut->kind == ExprKind::Comatch) {
        // Local comatches reduce like their (not yet generated) codefinition:
        // only the cocase binders are substituted; closed-over variables stay.
        for (const auto& c : scrut->cocases) {
          if (c.dtor != e->name) continue;
          if (c.body && c.binders.size() == e->args.size()) {
            if (!fuel.spend()) return e;
            VarMap m;
            for (std::size_t i = 0; i < c.binders.size(); ++i) m[c.binders[i].id] = e->args[i];
            return norm(ix, substitute(*c.body, m), fuel);
          }
          break;
        }
      }
      bool changed = scrut.get() != e->scrutinee.get();
      Subst args = norm_args(ix, e->args, fuel, changed);
      if (!changed) return e;
      auto n = std::make_shared<Expr>(*e);
      n->scrutinee = std::move(scrut);
      n->args = std::move(args);
      return n;
    }
    case ExprKind::Match: {
      ExprPtr scrut = norm(ix, e->scrutinee, fuel);
      if (scrut->kind == ExprKind::Producer) {
        for (const auto& c : e->cases) {
          if (c.ctor != scrut->name) continue;
          if (c.body && c.binders.size() == scrut->args.size()) {
            if (!fuel.spend()) return e;
            VarMap m;
            for (std::size_t i = 0; i < c.binders.size(); ++i) m[c.binders[i].id] = scrut->args[i];
            return norm(ix, substitute(*c.body, m), fuel);
          }
          break;
        }
      }
      bool changed = scrut.get() != e->scrutinee.get();
      std::vector<CaseClause> cases = e->cases;
      for (auto& c : cases) {
        if (!c.body) continue;
        ExprPtr b = norm(ix, *c.body, fuel);
        if (b.get() != c.body->get()) {
          c.body = b;
          changed = true;
        }
      }
      if (!changed) return e;
      auto n = std::make_shared<Expr>(*e);
      n->scrutinee = std::move(scrut);
      n->cases = std::move(cases);
      return n;
    }
    case ExprKind::Comatch: {
      bool changed = false;
      std::vector<CocaseClause> cocases = e->cocases;
      for (auto& c : cocases) {
        if (!c.body) continue;
        ExprPtr b = norm(ix, *c.body, fuel);
        if (b.get() != c.body->get()) {
          c.body = b;
          changed = true;
        }
      }
      if (!changed) return e;
      auto n = std::make_shared<Expr>(*e);
      n->cocases = std::move(cocases);
      return n;
    }
    default:
      return e;  // Name/Arrow/Lambda never survive resolution
  }
}

}  // namespace

ExprPtr normalize(const ProgramIndex& ix, const ExprPtr& e, Fuel& fuel) {
  return norm(ix, e, fuel);
}

Convertible convertible(const ProgramIndex& ix, const ExprPtr& a, const ExprPtr& b, Fuel& fuel) {
  ExprPtr na = normalize(ix, a, fuel);
  ExprPtr nb = normalize(ix, b, fuel);
  if (fuel.exhausted) return Convertible::Undecided;
  return alpha_equal(na, nb) ? Convertible::Yes : Convertible::No;
}

// ---------------------------------------------------------------------------
// Unification

namespace {

bool is_rigid(const ExprPtr& e) {
  return e->kind == ExprKind::Universe || e->kind == ExprKind::TypCtor ||
         e->kind == ExprKind::Producer;
}

ExprPtr apply_solved(const ExprPtr& e, const VarMap& solved) {
  ExprPtr cur = e;
  for (int guard = 0; guard < 64; ++guard) {
    ExprPtr next = substitute(cur, solved);
    if (next.get() == cur.get()) return cur;
    cur = next;
  }
  return cur;
}

}  // namespace

UnifyResult unify(const ProgramIndex& ix, std::vector<std::pair<ExprPtr, ExprPtr>> goals,
                  const std::unordered_set<VarId>& flexible, Fuel& fuel) {
  VarMap solved;
  std::deque<std::pair<ExprPtr, ExprPtr>> work(goals.begin(), goals.end());
  bool progressed = true;
  while (progressed) {
    progressed = false;
    std::deque<std::pair<ExprPtr, ExprPtr>> blocked;
    while (!work.empty()) {
      auto [l0, r0] = work.front();
      work.pop_front();
      ExprPtr l = normalize(ix, apply_solved(l0, solved), fuel);
      ExprPtr r = normalize(ix, apply_solved(r0, solved), fuel);
      if (fuel.exhausted) return {UnifyResult::Kind::Undecided, {}, l};
      if (alpha_equal(l, r)) continue;
      bool l_var = l->kind == ExprKind::Var && flexible.count(l->var.id);
      bool r_var = r->kind == ExprKind::Var && flexible.count(r->var.id);
      if (l_var && r_var) {
        // Prefer eliminating wildcards so printed programs never need to
        // reference an `_` binder; otherwise bind scrutinee-side to
        // pattern-side.
        if (!l->var.wildcard() && r->var.wildcard()) std::swap(l, r);
        solved[l->var.id] = r;
        progressed = true;
        continue;
      }
      if (l_var || r_var) {
        if (r_var) std::swap(l, r);
        if (occurs(l->var.id, r)) return {UnifyResult::Kind::Absurd, {}, {}};
        solved[l->var.id] = r;
        progressed = true;
        continue;
      }
      if (is_rigid(l) && is_rigid(r)) {
        if (l->kind != r->kind) return {UnifyResult::Kind::Absurd, {}, {}};
        if (l->kind == ExprKind::Universe) continue;
        if (l->name != r->name || l->args.size() != r->args.size())
          return {UnifyResult::Kind::Absurd, {}, {}};
        for (std::size_t i = 0; i < l->args.size(); ++i) work.emplace_back(l->args[i], r->args[i]);
        progressed = true;
        continue;
      }
      blocked.emplace_back(l, r);
    }
    work = std::move(blocked);
  }
  if (!work.empty()) return {UnifyResult::Kind::Undecided, {}, work.front().first};

  // Compose to an idempotent solution.
  bool changed = true;
  int guard = 0;
  while (changed && guard++ < 1000) {
    changed = false;
    for (auto& [v, t] : solved) {
      ExprPtr nt = substitute(t, solved);
      if (nt.get() != t.get()) {
        t = nt;
        changed = true;
      }
    }
  }
  return {UnifyResult::Kind::Unifies, std::move(solved), {}};
}

// ---------------------------------------------------------------------------
// Bidirectional engine

namespace {

struct Bail {};

struct Engine {
  const ProgramIndex& ix;
  Diagnostics& diags;
  CheckOptions opts;
  std::string file;

  Engine(const ProgramIndex& i, Diagnostics& d, const CheckOptions& o) : ix(i), diags(d), opts(o) {}
  virtual ~Engine() = default;

  Fuel fresh_fuel() const { return Fuel{opts.fuel, false}; }

  [[noreturn]] void fail(const char* code, const std::string& msg, Span sp) {
    diags.push_back({code, Severity::Error, msg, sp, file});
    throw Bail{};
  }

  ExprPtr whnf(const ExprPtr& e, Span sp) {
    Fuel f = fresh_fuel();
    ExprPtr n = normalize(ix, e, f);
    if (f.exhausted)
      fail(codes::conversion_undecided, "normalization budget exhausted", sp);
    return n;
  }

  void require_convertible(const ExprPtr& got, const ExprPtr& want, Span sp, const char* what) {
    Fuel f = fresh_fuel();
    switch (convertible(ix, got, want, f)) {
      case Convertible::Yes:
        return;
      case Convertible::Undecided:
        fail(codes::conversion_undecided,
             std::string("cannot decide conversion for ") + what + ": '" + print(got) +
                 "' vs '" + print(want) + "'",
             sp);
      case Convertible::No:
        fail(codes::conversion_failure,
             std::string(what) + " mismatch: '" + print(got) + "' is not convertible with '" +
                 print(want) + "'",
             sp);
    }
  }

  struct Inferred {
    ExprPtr elab;
    ExprPtr type;
  };

  // Hooks for the surface forms; the base engine only handles core terms.
  virtual Inferred surface_infer(Ctx&, const ExprPtr& e) {
    fail(codes::cannot_infer, "cannot infer a type for a local (co)match here", e->span);
  }
  virtual ExprPtr surface_check(Ctx&, const ExprPtr& e, const ExprPtr&) {
    fail(codes::cannot_infer, "local (co)match in a position with no expected type", e->span);
  }

  Inferred infer_expr(Ctx& ctx, const ExprPtr& e) {
    switch (e->kind) {
      case ExprKind::Var: {
        const TeleEntry* en = ctx.find(e->var.id);
        if (!en) fail(codes::unbound_name, "variable '" + e->var.name + "' is not in scope", e->span);
        return {e, en->type};
      }
      case ExprKind::Universe:
        return {e, mk_universe(e->span)};  // Type-in-Type
      case ExprKind::TypCtor: {
        const Telescope* psi = ix.typarams(e->name);
        if (!psi) fail(codes::unbound_name, "unknown type '" + e->name + "'", e->span);
        Subst args = check_subst(ctx, e->args, *psi, e->span);
        return {mk_typctor(e->name, std::move(args), e->span), mk_universe(e->span)};
      }
      case ExprKind::Producer: {
        auto ct = ix.ctors.find(e->name);
        if (ct != ix.ctors.end()) {
          Subst args = check_subst(ctx, e->args, ct->second.ctor->params, e->span);
          VarMap m = positional_map(ct->second.ctor->params, args);
          Subst rho;
          for (const auto& a : ct->second.ctor->result_args) rho.push_back(substitute(a, m));
          return {mk_producer(e->name, std::move(args), e->span),
                  mk_typctor(ct->second.data->name, std::move(rho), e->span)};
        }
        auto cf = ix.codefs.find(e->name);
        if (cf != ix.codefs.end()) {
          Subst args = check_subst(ctx, e->args, cf->second->params, e->span);
          VarMap m = positional_map(cf->second->params, args);
          Subst rho;
          for (const auto& a : cf->second->result_args) rho.push_back(substitute(a, m));
          return {mk_producer(e->name, std::move(args), e->span),
                  mk_typctor(cf->second->codata_type, std::move(rho), e->span)};
        }
        auto lt = ix.lets.find(e->name);
        if (lt != ix.lets.end()) {
          Subst args = check_subst(ctx, e->args, lt->second->params, e->span);
          VarMap m = positional_map(lt->second->params, args);
          return {mk_producer(e->name, std::move(args), e->span), substitute(lt->second->type, m)};
        }
        fail(codes::unbound_name, "unknown producer '" + e->name + "'", e->span);
      }
      case ExprKind::Consumer: {
        Inferred scrut = infer_expr(ctx, e->scrutinee);
        ExprPtr sty = whnf(scrut.type, e->span);
        if (sty->kind != ExprKind::TypCtor)
          fail(codes::scrutinee_type,
               "scrutinee of '." + e->name + "' has type '" + print(sty) +
                   "', which is not a declared type",
               e->span);
        auto dt = ix.dtors.find(e->name);
        if (dt != ix.dtors.end()) {
          const DtorDecl& d = *dt->second.dtor;
          if (dt->second.codata->name != sty->name)
            fail(codes::scrutinee_type,
                 "destructor '" + e->name + "' belongs to '" + dt->second.codata->name +
                     "' but the scrutinee has type '" + print(sty) + "'",
                 e->span);
          Subst args = check_subst(ctx, e->args, d.params, e->span);
          VarMap m = positional_map(d.params, args);
          require_self_args(sty, d.self_args, m, e->span);
          m[d.self.id] = scrut.elab;
          return {mk_consumer(scrut.elab, e->name, std::move(args), e->span),
                  substitute(d.ret, m)};
        }
        auto df = ix.defs.find(e->name);
        if (df != ix.defs.end()) {
          const DefDecl& d = *df->second;
          if (d.data_type != sty->name)
            fail(codes::scrutinee_type,
                 "definition '" + e->name + "' eliminates '" + d.data_type +
                     "' but the scrutinee has type '" + print(sty) + "'",
                 e->span);
          Subst args = check_subst(ctx, e->args, d.params, e->span);
          VarMap m = positional_map(d.params, args);
          require_self_args(sty, d.self_args, m, e->span);
          m[d.self.id] = scrut.elab;
          return {mk_consumer(scrut.elab, e->name, std::move(args), e->span),
                  substitute(d.ret, m)};
        }
        fail(codes::unbound_name, "unknown destructor or definition '" + e->name + "'", e->span);
      }
      case ExprKind::Match:
      case ExprKind::Comatch:
        return surface_infer(ctx, e);
      default:
        fail(codes::cannot_infer, "unresolved surface form", e->span);
    }
  }

  // Scrutinee type arguments must be convertible with the consumer's declared
  // self instantiation (the rho of E-DATA / E-CODATA).
  void require_self_args(const ExprPtr& scrut_ty, const Subst& self_args, const VarMap& m,
                         Span sp) {
    if (scrut_ty->args.size() != self_args.size())
      fail(codes::arity_mismatch, "scrutinee type has the wrong number of arguments", sp);
    for (std::size_t i = 0; i < self_args.size(); ++i)
      require_convertible(scrut_ty->args[i], substitute(self_args[i], m), sp,
                          "scrutinee type argument");
  }

  static VarMap positional_map(const Telescope& tele, const Subst& args) {
    VarMap m;
    for (std::size_t i = 0; i < tele.size(); ++i) m[tele.entries[i].binder.id] = args[i];
    return m;
  }

  Subst check_subst(Ctx& ctx, const Subst& sigma, const Telescope& tele, Span sp) {
    if (sigma.size() != tele.size())
      fail(codes::arity_mismatch,
           "expected " + std::to_string(tele.size()) + " argument(s), got " +
               std::to_string(sigma.size()),
           sp);
    Subst out;
    VarMap m;
    for (std::size_t i = 0; i < sigma.size(); ++i) {
      ExprPtr expected = substitute(tele.entries[i].type, m);
      ExprPtr a = check_expr(ctx, sigma[i], expected);
      m[tele.entries[i].binder.id] = a;
      out.push_back(std::move(a));
    }
    return out;
  }

  ExprPtr check_expr(Ctx& ctx, const ExprPtr& e, const ExprPtr& expected) {
    if (e->kind == ExprKind::Comatch || (e->kind == ExprKind::Match && !e->motive))
      return surface_check(ctx, e, expected);
    Inferred inf = infer_expr(ctx, e);
    require_convertible(inf.type, expected, e->span, "type");
    return inf.elab;
  }
};

// ---------------------------------------------------------------------------
// Elaborator: declaration checking plus lifting of local (co)matches.

struct Elaborator : Engine {
  Program& work;
  std::deque<Decl>& generated;
  ProgramIndex& mix;  // mutable view, extended as lifts are generated
  std::vector<std::size_t>* current_gen_list = nullptr;
  std::string current_decl_file;

  Elaborator(Program& w, std::deque<Decl>& gen, ProgramIndex& i, Diagnostics& d,
             const CheckOptions& o)
      : Engine(i, d, o), work(w), generated(gen), mix(i) {}

  // --- lifting -------------------------------------------------------------

  // Dependency-closed, context-ordered closure over `need`.
  std::vector<TeleEntry> closure_of(const Ctx& ctx, std::vector<VarId> need, Span sp) {
    std::unordered_set<VarId> in_need(need.begin(), need.end());
    // Expand with the free variables of the types of needed entries.
    bool grew = true;
    while (grew) {
      grew = false;
      std::vector<VarId> more;
      for (VarId v : need) {
        const TeleEntry* en = ctx.find(v);
        if (!en) continue;  // not a context variable (e.g. bound deeper); skip
        for (VarId w : free_vars(en->type))
          if (ctx.find(w) && in_need.insert(w).second) more.push_back(w);
      }
      if (!more.empty()) {
        grew = true;
        for (VarId v : more) need.push_back(v);
      }
    }
    // Order by context position.
    std::vector<VarId> members;
    for (VarId v : need)
      if (ctx.find(v)) members.push_back(v);
    std::sort(members.begin(), members.end(),
              [&](VarId a, VarId b) { return ctx.position(a) < ctx.position(b); });
    // Stable topological correction for contexts whose entry types were
    // refined by a unifier (a type may mention a later variable).
    std::vector<TeleEntry> out;
    std::unordered_set<VarId> placed;
    std::size_t guard = members.size() * members.size() + 1;
    std::deque<VarId> queue(members.begin(), members.end());
    while (!queue.empty() && guard-- > 0) {
      VarId v = queue.front();
      queue.pop_front();
      const TeleEntry* en = ctx.find(v);
      bool ready = true;
      for (VarId w : free_vars(en->type))
        if (in_need.count(w) && ctx.find(w) && !placed.count(w) && w != v) {
          ready = false;
          break;
        }
      if (ready) {
        out.push_back(*en);
        placed.insert(v);
      } else {
        queue.push_back(v);
      }
    }
    if (!queue.empty())
      fail(codes::closure_cycle, "cannot close over free variables: cyclic type dependencies",
           sp);
    return out;
  }

  std::string lift_label(const ExprPtr& e) {
    if (!e->label) {
      diags.push_back({codes::duplicate_label, Severity::Error,
                       "internal: local (co)match without a label", e->span, file});
      throw Bail{};
    }
    return *e->label;
  }

  void register_generated(Decl d) {
    generated.push_back(std::move(d));
    mix.add_decl(generated.back(), &diags);
    if (current_gen_list) current_gen_list->push_back(generated.size() - 1);
  }

  // comatch L { cocases } at expected codata type T rho  ==>
  //   codef L(closure): T rho { cocases }   +   call L(closure vars)
  ExprPtr lift_comatch(Ctx& ctx, const ExprPtr& e, const ExprPtr& expected) {
    ExprPtr en = whnf(expected, e->span);
    if (en->kind != ExprKind::TypCtor || !ix.is_codata(en->name)) {
      if (en->kind == ExprKind::TypCtor && ix.is_data(en->name))
        fail(codes::comatch_on_data,
             "comatch checked against data type '" + print(en) + "'", e->span);
      fail(codes::cannot_infer,
           "comatch needs a codata expected type, got '" + print(en) + "'", e->span);
    }
    std::string label = lift_label(e);

    std::vector<VarId> need = free_vars(e);
    for (const auto& a : en->args) {
      std::unordered_set<VarId> seen(need.begin(), need.end());
      collect_free_vars(a, need, seen);
    }
    std::vector<TeleEntry> closure = closure_of(ctx, std::move(need), e->span);

    VarMap ren;
    Telescope params;
    Subst call_args;
    for (const auto& ce : closure) {
      Binder nb{ce.binder.name, fresh_var_id()};
      params.entries.push_back({nb, substitute(ce.type, ren)});
      ren[ce.binder.id] = mk_var(nb);
      call_args.push_back(mk_var(ce.binder, e->span));
    }

    CodefDecl codef;
    codef.name = label;
    codef.params = std::move(params);
    codef.codata_type = en->name;
    for (const auto& a : en->args) codef.result_args.push_back(substitute(a, ren));
    for (const auto& cc : e->cocases) {
      CocaseClause c = cc;
      if (c.body) c.body = substitute(*c.body, ren);
      for (auto& bt : c.binder_types)
        if (bt) bt = substitute(bt, ren);
      codef.cocases.push_back(std::move(c));
    }

    Decl d;
    d.node = std::move(codef);
    d.file = current_decl_file;
    d.span = e->span;
    d.generated = true;
    register_generated(std::move(d));
    check_codef(std::get<CodefDecl>(generated.back().node));

    return mk_producer(label, std::move(call_args), e->span);
  }

  struct LiftedMatch {
    ExprPtr call;
    ExprPtr type;
  };

  // e.match (as y => T)? { cases } over data type D rho ==>
  //   def (y: D rho).L(closure): T { cases }   +   call e.L(closure vars)
  LiftedMatch lift_match(Ctx& ctx, const ExprPtr& e, ExprPtr expected) {
    Inferred scrut = infer_expr(ctx, e->scrutinee);
    ExprPtr sty = whnf(scrut.type, e->span);
    if (sty->kind != ExprKind::TypCtor || !ix.is_data(sty->name)) {
      if (sty->kind == ExprKind::TypCtor && ix.is_codata(sty->name))
        fail(codes::match_on_codata,
             "match on a scrutinee of codata type '" + print(sty) + "'", e->span);
      fail(codes::scrutinee_type,
           "cannot determine a data type for the match scrutinee (type '" + print(sty) + "')",
           e->span);
    }
    std::string label = lift_label(e);

    Binder self = e->motive ? e->motive->binder : Binder{"z", fresh_var_id()};
    ExprPtr ret;
    if (e->motive) {
      Ctx mctx = ctx;
      mctx.push(self, sty);
      ret = check_expr(mctx, e->motive->type, mk_universe(e->span));
    } else {
      if (!expected)
        fail(codes::cannot_infer, "match without a motive in a position with no expected type",
             e->span);
      ret = expected;
    }

    std::vector<VarId> need;
    std::unordered_set<VarId> seen;
    seen.insert(self.id);  // the motive binder becomes the new self parameter
    for (const auto& c : e->cases) {
      auto node = std::make_shared<Expr>(*e);
      (void)node;
      if (c.body) collect_free_vars(*c.body, need, seen);
      for (const auto& bt : c.binder_types)
        if (bt) collect_free_vars(bt, need, seen);
    }
    collect_free_vars(ret, need, seen);
    for (const auto& a : sty->args) collect_free_vars(a, need, seen);
    std::vector<TeleEntry> closure = closure_of(ctx, std::move(need), e->span);

    VarMap ren;
    Telescope params;
    Subst call_args;
    for (const auto& ce : closure) {
      Binder nb{ce.binder.name, fresh_var_id()};
      params.entries.push_back({nb, substitute(ce.type, ren)});
      ren[ce.binder.id] = mk_var(nb);
      call_args.push_back(mk_var(ce.binder, e->span));
    }

    DefDecl def;
    def.self = self;
    def.self_named = e->motive.has_value();
    def.data_type = sty->name;
    for (const auto& a : sty->args) def.self_args.push_back(substitute(a, ren));
    def.name = label;
    def.params = std::move(params);
    def.ret = substitute(ret, ren);
    for (const auto& cc : e->cases) {
      CaseClause c = cc;
      if (c.body) c.body = substitute(*c.body, ren);
      for (auto& bt : c.binder_types)
        if (bt) bt = substitute(bt, ren);
      def.cases.push_back(std::move(c));
    }

    Decl d;
    d.node = std::move(def);
    d.file = current_decl_file;
    d.span = e->span;
    d.generated = true;
    register_generated(std::move(d));
    check_def(std::get<DefDecl>(generated.back().node));

    ExprPtr call = mk_consumer(scrut.elab, label, std::move(call_args), e->span);
    VarMap selfmap;
    selfmap[self.id] = scrut.elab;
    return {call, substitute(ret, selfmap)};
  }

  Inferred surface_infer(Ctx& ctx, const ExprPtr& e) override {
    if (e->kind == ExprKind::Match && e->motive) {
      LiftedMatch lm = lift_match(ctx, e, nullptr);
      return {lm.call, lm.type};
    }
    return Engine::surface_infer(ctx, e);
  }

  ExprPtr surface_check(Ctx& ctx, const ExprPtr& e, const ExprPtr& expected) override {
    if (e->kind == ExprKind::Comatch) return lift_comatch(ctx, e, expected);
    LiftedMatch lm = lift_match(ctx, e, expected);
    if (e->motive) require_convertible(lm.type, expected, e->span, "motive result");
    return lm.call;
  }

  // --- declaration rules -----------------------------------------------------

  void check_telescope(Ctx& ctx, Telescope& tele) {
    for (auto& en : tele.entries) {
      en.type = check_expr(ctx, en.type, mk_universe(en.type ? en.type->span : Span{}));
      ctx.push(en.binder, en.type);
    }
  }

  void check_data(DataDecl& d) {
    Ctx pctx;
    check_telescope(pctx, d.typarams);
    for (auto& c : d.ctors) {
      Ctx ctx;
      check_telescope(ctx, c.params);
      c.result_args = check_subst(ctx, c.result_args, d.typarams, c.span);
    }
  }

  void check_codata(CodataDecl& d) {
    Ctx pctx;
    check_telescope(pctx, d.typarams);
    for (auto& dt : d.dtors) {
      Ctx ctx;
      check_telescope(ctx, dt.params);
      dt.self_args = check_subst(ctx, dt.self_args, d.typarams, dt.span);
      Ctx rctx = ctx;
      rctx.push(dt.self, mk_typctor(d.name, dt.self_args, dt.span));
      dt.ret = check_expr(rctx, dt.ret, mk_universe(dt.span));
    }
  }

  // Instantiates a declared (closed) telescope at clause binders; returns the
  // renaming from declared ids to the clause's binder variables.
  VarMap clause_telescope(Ctx& ctx, const Telescope& declared, const std::vector<Binder>& binders,
                          std::vector<ExprPtr>& binder_types, Span sp) {
    if (binders.size() != declared.size())
      fail(codes::arity_mismatch,
           "pattern restates " + std::to_string(binders.size()) + " binder(s), declaration has " +
               std::to_string(declared.size()),
           sp);
    VarMap ren;
    for (std::size_t i = 0; i < binders.size(); ++i) {
      ExprPtr ty = substitute(declared.entries[i].type, ren);
      if (binder_types[i]) {
        ExprPtr ann = check_expr(ctx, binder_types[i], mk_universe(sp));
        require_convertible(ann, ty, binder_types[i]->span, "binder annotation");
        binder_types[i] = ann;
      }
      ctx.push(binders[i], ty);
      ren[declared.entries[i].binder.id] = mk_var(binders[i]);
    }
    return ren;
  }

  void unify_soundness_assert(const std::vector<std::pair<ExprPtr, ExprPtr>>& goals,
                              const VarMap& theta, Span sp) {
    for (const auto& [l, r] : goals) {
      Fuel f = fresh_fuel();
      if (convertible(ix, substitute(l, theta), substitute(r, theta), f) == Convertible::No)
        fail(codes::coverage_undecided,
             "internal: unifier failed its soundness check on '" + print(l) + "' vs '" +
                 print(r) + "'",
             sp);
    }
  }

  void check_def(DefDecl& d) {
    auto dit = ix.data.find(d.data_type);
    if (dit == ix.data.end())
      fail(codes::bad_declaration, "'" + d.data_type + "' is not a data type", Span{});
    const DataDecl& data = *dit->second;

    Ctx ctx;
    check_telescope(ctx, d.params);
    d.self_args = check_subst(ctx, d.self_args, data.typarams, Span{});
    Ctx rctx = ctx;
    rctx.push(d.self, mk_typctor(d.data_type, d.self_args, d.ret->span));
    d.ret = check_expr(rctx, d.ret, mk_universe(d.ret->span));

    coverage_check(data, d.cases);
    for (auto& c : d.cases) check_case(ctx, d, data, c);
  }

  void coverage_check(const DataDecl& data, const std::vector<CaseClause>& cases) {
    for (const auto& ctor : data.ctors) {
      int n = 0;
      for (const auto& c : cases)
        if (c.ctor == ctor.name) n++;
      if (n == 0)
        fail(codes::case_missing, "missing case for constructor '" + ctor.name + "'", Span{});
      if (n > 1)
        fail(codes::case_duplicate, "more than one case for constructor '" + ctor.name + "'",
             Span{});
    }
    for (const auto& c : cases) {
      bool known = false;
      for (const auto& ctor : data.ctors) known |= ctor.name == c.ctor;
      if (!known)
        fail(codes::case_unknown,
             "'" + c.ctor + "' is not a constructor of '" + data.name + "'", c.span);
    }
  }

  void cocoverage_check(const CodataDecl& codata, const std::vector<CocaseClause>& cocases) {
    for (const auto& dt : codata.dtors) {
      int n = 0;
      for (const auto& c : cocases)
        if (c.dtor == dt.name) n++;
      if (n == 0)
        fail(codes::case_missing, "missing cocase for destructor '" + dt.name + "'", Span{});
      if (n > 1)
        fail(codes::case_duplicate, "more than one cocase for destructor '" + dt.name + "'",
             Span{});
    }
    for (const auto& c : cocases) {
      bool known = false;
      for (const auto& dt : codata.dtors) known |= dt.name == c.dtor;
      if (!known)
        fail(codes::case_unknown,
             "'" + c.dtor + "' is not a destructor of '" + codata.name + "'", c.span);
    }
  }

  void check_case(const Ctx& defctx, DefDecl& d, const DataDecl& data, CaseClause& c) {
    const CtorDecl* ctor = nullptr;
    for (const auto& cd : data.ctors)
      if (cd.name == c.ctor) ctor = &cd;
    if (!ctor) return;  // reported by coverage_check

    Ctx joint = defctx;
    VarMap ren = clause_telescope(joint, ctor->params, c.binders, c.binder_types, c.span);
    Subst rho2;
    for (const auto& a : ctor->result_args) rho2.push_back(substitute(a, ren));

    std::unordered_set<VarId> flex;
    for (const auto& en : joint.entries) flex.insert(en.binder.id);
    std::vector<std::pair<ExprPtr, ExprPtr>> goals;
    for (std::size_t i = 0; i < d.self_args.size(); ++i)
      goals.emplace_back(d.self_args[i], rho2[i]);

    Fuel f = fresh_fuel();
    UnifyResult u = unify(ix, goals, flex, f);
    switch (u.kind) {
      case UnifyResult::Kind::Absurd:
        if (!c.absurd())
          fail(codes::case_unreachable,
               "unreachable case '" + c.ctor + "' must be marked absurd", c.span);
        return;
      case UnifyResult::Kind::Undecided:
        fail(codes::coverage_undecided,
             "cannot decide coverage for case '" + c.ctor + "'" +
                 (u.blocker ? " (blocked on '" + print(u.blocker) + "')" : ""),
             c.span);
      case UnifyResult::Kind::Unifies:
        break;
    }
    if (c.absurd())
      fail(codes::case_reachable, "case '" + c.ctor + "' is reachable and needs a body", c.span);
    unify_soundness_assert(goals, u.theta, c.span);

    Ctx refined;
    for (const auto& en : joint.entries) {
      if (u.theta.count(en.binder.id)) continue;
      refined.push(en.binder, substitute(en.type, u.theta));
    }
    Subst idxi;
    for (const auto& b : c.binders) idxi.push_back(mk_var(b));
    VarMap selfmap;
    selfmap[d.self.id] = mk_producer(c.ctor, std::move(idxi), c.span);
    ExprPtr expected = substitute(substitute(d.ret, selfmap), u.theta);
    ExprPtr body = substitute(*c.body, u.theta);
    c.body = check_expr(refined, body, expected);
  }

  void check_codef(CodefDecl& d) {
    auto cit = ix.codata.find(d.codata_type);
    if (cit == ix.codata.end())
      fail(codes::bad_declaration, "'" + d.codata_type + "' is not a codata type", Span{});
    const CodataDecl& codata = *cit->second;

    Ctx ctx;
    check_telescope(ctx, d.params);
    d.result_args = check_subst(ctx, d.result_args, codata.typarams, Span{});

    cocoverage_check(codata, d.cocases);
    for (auto& c : d.cocases) check_cocase(ctx, d, codata, c);
  }

  void check_cocase(const Ctx& codefctx, CodefDecl& d, const CodataDecl& codata, CocaseClause& c) {
    const DtorDecl* dtor = nullptr;
    for (const auto& dt : codata.dtors)
      if (dt.name == c.dtor) dtor = &dt;
    if (!dtor) return;

    Ctx joint = codefctx;
    VarMap ren = clause_telescope(joint, dtor->params, c.binders, c.binder_types, c.span);
    Subst rho2;
    for (const auto& a : dtor->self_args) rho2.push_back(substitute(a, ren));

    std::unordered_set<VarId> flex;
    for (const auto& en : joint.entries) flex.insert(en.binder.id);
    std::vector<std::pair<ExprPtr, ExprPtr>> goals;
    for (std::size_t i = 0; i < d.result_args.size(); ++i)
      goals.emplace_back(d.result_args[i], rho2[i]);

    Fuel f = fresh_fuel();
    UnifyResult u = unify(ix, goals, flex, f);
    switch (u.kind) {
      case UnifyResult::Kind::Absurd:
        if (!c.absurd())
          fail(codes::case_unreachable,
               "unreachable cocase '" + c.dtor + "' must be marked absurd", c.span);
        return;
      case UnifyResult::Kind::Undecided:
        fail(codes::coverage_undecided,
             "cannot decide coverage for cocase '" + c.dtor + "'" +
                 (u.blocker ? " (blocked on '" + print(u.blocker) + "')" : ""),
             c.span);
      case UnifyResult::Kind::Unifies:
        break;
    }
    if (c.absurd())
      fail(codes::case_reachable, "cocase '" + c.dtor + "' is reachable and needs a body", c.span);
    unify_soundness_assert(goals, u.theta, c.span);

    Ctx refined;
    for (const auto& en : joint.entries) {
      if (u.theta.count(en.binder.id)) continue;
      refined.push(en.binder, substitute(en.type, u.theta));
    }
    // Substitute the codefinition under construction for the destructor's
    // self parameter, then the dtor->cocase renaming, then the unifier.
    VarMap selfmap;
    selfmap[dtor->self.id] = mk_producer(d.name, identity_substitution(d.params), c.span);
    ExprPtr ret = substitute(substitute(substitute(dtor->ret, ren), selfmap), u.theta);
    ExprPtr body = substitute(*c.body, u.theta);
    c.body = check_expr(refined, body, ret);
  }

  void check_let(LetDecl& d) {
    Ctx ctx;
    check_telescope(ctx, d.params);
    d.type = check_expr(ctx, d.type, mk_universe(d.type->span));
    d.body = check_expr(ctx, d.body, d.type);
  }

  void check_decl(Decl& d) {
    file = d.file;
    current_decl_file = d.file;
    if (auto* x = std::get_if<DataDecl>(&d.node)) check_data(*x);
    else if (auto* x = std::get_if<CodataDecl>(&d.node)) check_codata(*x);
    else if (auto* x = std::get_if<DefDecl>(&d.node)) check_def(*x);
    else if (auto* x = std::get_if<CodefDecl>(&d.node)) check_codef(*x);
    else if (auto* x = std::get_if<LetDecl>(&d.node)) check_let(*x);
  }
};

}  // namespace

// ---------------------------------------------------------------------------
// Public entry points

CheckResult check_program(const Program& resolved, const CheckOptions& opts) {
  CheckResult result;
  Program work = resolved;

  assign_labels(work, result.diags);
  ProgramIndex ix = ProgramIndex::build(work, &result.diags);
  if (has_errors(result.diags)) return result;

  std::deque<Decl> generated;
  Elaborator elab(work, generated, ix, result.diags, opts);

  std::vector<std::vector<std::size_t>> gen_lists(work.decls.size());
  for (std::size_t i = 0; i < work.decls.size(); ++i) {
    elab.current_gen_list = &gen_lists[i];
    try {
      elab.check_decl(work.decls[i]);
    } catch (Bail&) {
      // diagnostics recorded; continue with the remaining declarations
    }
  }

  if (has_errors(result.diags)) return result;

  Program lifted;
  for (std::size_t i = 0; i < work.decls.size(); ++i) {
    for (std::size_t g : gen_lists[i]) {
      Decl gd = generated[g];
      gd.from_prelude = work.decls[i].from_prelude;
      lifted.decls.push_back(std::move(gd));
    }
    lifted.decls.push_back(work.decls[i]);
  }
  result.typed = TypedProgram{std::move(lifted)};
  return result;
}

ExprPtr infer(const ProgramIndex& ix, const Ctx& ctx, const ExprPtr& e, Diagnostics& diags,
              const CheckOptions& opts) {
  Engine eng(ix, diags, opts);
  try {
    Ctx c = ctx;
    return eng.infer_expr(c, e).type;
  } catch (Bail&) {
    return nullptr;
  }
}

bool check_substitution(const ProgramIndex& ix, const Ctx& ctx, const Subst& sigma,
                        const Telescope& tele, Diagnostics& diags, const CheckOptions& opts) {
  Engine eng(ix, diags, opts);
  try {
    Ctx c = ctx;
    eng.check_subst(c, sigma, tele, Span{});
    return true;
  } catch (Bail&) {
    return false;
  }
}

bool check_expr_at(const ProgramIndex& ix, const Ctx& ctx, const ExprPtr& e,
                   const ExprPtr& expected, Diagnostics& diags, const CheckOptions& opts) {
  Engine eng(ix, diags, opts);
  try {
    Ctx c = ctx;
    eng.check_expr(c, e, expected);
    return true;
  } catch (Bail&) {
    return false;
  }
}

}  // namespace dd
