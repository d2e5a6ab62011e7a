#pragma once

#include <optional>
#include <unordered_set>
#include <utility>

#include "dd/ast.hpp"
#include "dd/diag.hpp"
#include "dd/index.hpp"

namespace dd {

// Step budget shared by conversion, unification and the evaluator. Each
// beta/delta unfolding costs one unit.
struct Fuel {
  long long remaining = 1'000'000;
  bool exhausted = false;
  bool spend() {
    if (remaining <= 0) {
      exhausted = true;
      return false;
    }
    --remaining;
    return true;
  }
};

struct CheckOptions {
  long long fuel = 1'000'000;  // budget per conversion / unification query
};

// Typing context. Entry order is the binding order; lookups go by id.
class Ctx {
 public:
  std::vector<TeleEntry> entries;

  void push(const Binder& b, ExprPtr ty) {
    index_[b.id] = entries.size();
    entries.push_back({b, std::move(ty)});
  }
  const TeleEntry* find(VarId id) const {
    auto it = index_.find(id);
    return it == index_.end() ? nullptr : &entries[it->second];
  }
  std::size_t position(VarId id) const { return index_.at(id); }

 private:
  std::unordered_map<VarId, std::size_t> index_;
};

// Full beta normalization of open terms: producer-headed consumer calls and
// let calls unfold anywhere (including inside arguments and clause bodies);
// variable-headed consumer calls stay neutral. No eta.
ExprPtr normalize(const ProgramIndex& ix, const ExprPtr& e, Fuel& fuel);

enum class Convertible { Yes, No, Undecided };
Convertible convertible(const ProgramIndex& ix, const ExprPtr& a, const ExprPtr& b, Fuel& fuel);

struct UnifyResult {
  enum class Kind { Unifies, Absurd, Undecided };
  Kind kind = Kind::Undecided;
  VarMap theta;     // idempotent solution, only for Unifies
  ExprPtr blocker;  // a blocking subterm, only for Undecided
};

// First-order unification over beta-normal forms. Rigid heads are producers,
// type constructors and Type; consumer-headed terms block unless alpha-equal;
// occurs-check failures are Absurd.
UnifyResult unify(const ProgramIndex& ix, std::vector<std::pair<ExprPtr, ExprPtr>> goals,
                  const std::unordered_set<VarId>& flexible, Fuel& fuel);

struct TypedProgram {
  Program program;  // lifted core program, declaration heads and bodies elaborated
};

struct CheckResult {
  std::optional<TypedProgram> typed;
  Diagnostics diags;
  bool ok() const { return typed.has_value() && !has_errors(diags); }
};

// Whole-program checking: label pre-pass, well-formedness scan, declaration
// rules with dependent (co)pattern coverage via unification, and lifting of
// local (co)matches to fresh top-level declarations. The input must be
// name-resolved (see parser.hpp).
CheckResult check_program(const Program& resolved, const CheckOptions& opts = {});

// Type inference for a core expression under a context. Returns nullptr and
// appends diagnostics on failure.
ExprPtr infer(const ProgramIndex& ix, const Ctx& ctx, const ExprPtr& e, Diagnostics& diags,
              const CheckOptions& opts = {});

// sigma is a valid instantiation of tele under ctx.
bool check_substitution(const ProgramIndex& ix, const Ctx& ctx, const Subst& sigma,
                        const Telescope& tele, Diagnostics& diags, const CheckOptions& opts = {});

// Checks e against an expected type (conversion included).
bool check_expr_at(const ProgramIndex& ix, const Ctx& ctx, const ExprPtr& e,
                   const ExprPtr& expected, Diagnostics& diags, const CheckOptions& opts = {});

}  // namespace dd
