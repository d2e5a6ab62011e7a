#pragma once

// Abstract syntax for programs, declarations, expressions, telescopes and
// substitutions.
//
// Naming conventions used throughout (mirroring the usual metavariables for
// this kind of calculus):
//   T        a type name (data or codata)
//   C        a producer name (constructor, codefinition, or let constant)
//   d        a consumer name (destructor or definition)
//   x, z     variables; z is a self parameter
//   sigmarho argument lists instantiating telescopes
//
// Core expressions carry no binders: binding happens exclusively in
// declarations (telescopes, clause binder lists, self parameters, motives).
// Binders own a globally unique id; occurrences reference that id, so
// substitution is a first-order map and cannot capture.

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <variant>
#include <vector>

namespace dd {

using VarId = std::uint64_t;

// Fresh ids are drawn from a process-wide counter; 0 means "unresolved".
VarId fresh_var_id();

struct Span {
  std::uint32_t begin = 0;
  std::uint32_t end = 0;
};

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;
using Subst = std::vector<ExprPtr>;

struct Binder {
  std::string name;  // user-facing name; "_" for wildcards
  VarId id = 0;
  bool wildcard() const { return name == "_"; }
};

struct TeleEntry {
  Binder binder;
  ExprPtr type;
};

struct Telescope {
  std::vector<TeleEntry> entries;
  std::size_t size() const { return entries.size(); }
  bool empty() const { return entries.empty(); }
};

enum class ExprKind : std::uint8_t {
  Var,       // x
  Universe,  // Type
  TypCtor,   // T rho
  Producer,  // C sigma
  Consumer,  // e.d sigma
  Comatch,   // surface only: comatch L? { cocases }
  Match,     // surface only: e.match (as y => T)? { cases }
  // parse-time only, eliminated by name resolution:
  Name,    // unresolved identifier (possibly applied)
  Arrow,   // A -> B
  Lambda,  // \x. e
};

struct CaseClause {
  std::string ctor;
  std::vector<Binder> binders;
  std::vector<ExprPtr> binder_types;  // optional per-binder annotations (may be null)
  std::optional<ExprPtr> body;        // nullopt = absurd
  Span span;
  bool absurd() const { return !body.has_value(); }
};

struct CocaseClause {
  std::string dtor;
  std::vector<Binder> binders;
  std::vector<ExprPtr> binder_types;
  std::optional<ExprPtr> body;
  Span span;
  bool absurd() const { return !body.has_value(); }
};

struct Motive {
  Binder binder;
  ExprPtr type;
};

struct Expr {
  ExprKind kind;
  Span span;

  Binder var;        // Var
  std::string name;  // TypCtor / Producer / Consumer / Name
  ExprPtr scrutinee; // Consumer / Match
  Subst args;        // TypCtor / Producer / Consumer / Name / Arrow

  // Surface-only payloads.
  std::optional<std::string> label;  // user label on comatch
  bool label_generated = false;      // label was synthesized by the label pre-pass
  std::vector<CocaseClause> cocases;
  std::optional<Motive> motive;
  std::vector<CaseClause> cases;
  Binder lambda_binder;  // Lambda

  bool is_core() const {
    switch (kind) {
      case ExprKind::Var:
      case ExprKind::Universe:
      case ExprKind::TypCtor:
      case ExprKind::Producer:
      case ExprKind::Consumer:
        return true;
      default:
        return false;
    }
  }
};

// Node constructors.
ExprPtr mk_var(Binder b, Span sp = {});
ExprPtr mk_universe(Span sp = {});
ExprPtr mk_typctor(std::string name, Subst args, Span sp = {});
ExprPtr mk_producer(std::string name, Subst args, Span sp = {});
ExprPtr mk_consumer(ExprPtr scrutinee, std::string name, Subst args, Span sp = {});

// ---------------------------------------------------------------------------
// Declarations

struct CtorDecl {
  std::string name;       // C
  Telescope params;       // Xi (closed)
  Subst result_args;      // rho, against the data type's typarams, under Xi
  Span span;
};

struct DtorDecl {
  Binder self;            // z
  bool self_named = false;
  Subst self_args;        // rho, under params
  std::string name;       // d
  Telescope params;       // Xi (closed)
  ExprPtr ret;            // t, under params + self
  Span span;
};

struct DataDecl {
  std::string name;
  Telescope typarams;  // Psi
  std::vector<CtorDecl> ctors;
};

struct CodataDecl {
  std::string name;
  Telescope typarams;
  std::vector<DtorDecl> dtors;
};

struct DefDecl {
  Binder self;  // z
  bool self_named = false;
  std::string data_type;  // T of the self type
  Subst self_args;        // rho, under params
  std::string name;       // d
  Telescope params;       // Xi
  ExprPtr ret;            // t, under params + self
  std::vector<CaseClause> cases;
};

struct CodefDecl {
  std::string name;         // C
  Telescope params;         // Xi
  std::string codata_type;  // T of the result type
  Subst result_args;        // rho, under params
  std::vector<CocaseClause> cocases;
};

struct LetDecl {
  std::string name;
  Telescope params;
  ExprPtr type;  // annotation, under params
  ExprPtr body;  // under params
};

struct Decl {
  std::variant<DataDecl, CodataDecl, DefDecl, CodefDecl, LetDecl> node;
  std::string file;
  Span span;
  bool from_prelude = false;
  bool generated = false;  // introduced by lifting

  const std::string& head_name() const;
};

struct Program {
  std::vector<Decl> decls;
};

// ---------------------------------------------------------------------------
// Operations

using VarMap = std::unordered_map<VarId, ExprPtr>;

// Free-variable substitution; descends into surface clauses and motives.
// Binder ids are globally unique, so no capture is possible.
ExprPtr substitute(const ExprPtr& e, const VarMap& map);

// Positional substitution e[sigma/Xi]. Throws std::invalid_argument on an
// arity mismatch.
ExprPtr substitute(const ExprPtr& e, const Subst& sigma, const Telescope& tele);

// (x1,...,xn) for Xi = x1:t1,...,xn:tn.
Subst identity_substitution(const Telescope& tele);

// Equality up to consistent renaming of binders. Type/producer/consumer
// names and comatch labels compare literally; free variables compare by id.
bool alpha_equal(const ExprPtr& a, const ExprPtr& b);
bool alpha_equal(const Decl& a, const Decl& b);
// Declaration-by-declaration, in order.
bool alpha_equal(const Program& a, const Program& b);
// Order-insensitive: declarations matched by (kind, name), clauses by
// ctor/dtor name.
bool alpha_equal_modulo_order(const Program& a, const Program& b);

// Free variables of an expression, in first-occurrence order.
std::vector<VarId> free_vars(const ExprPtr& e);
void collect_free_vars(const ExprPtr& e, std::vector<VarId>& order,
                       std::unordered_set<VarId>& seen);
bool occurs(VarId v, const ExprPtr& e);

// Deep-copies a telescope with fresh binder ids; `ren` receives old -> Var(new).
Telescope freshen_telescope(const Telescope& tele, VarMap& ren);

}  // namespace dd
