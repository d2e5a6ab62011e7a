#pragma once

#include <string>
#include <vector>

#include "dd/ast.hpp"

namespace dd {

enum class Severity { Error, Warning };

// Stable machine-readable codes; the acceptance corpus keys on them.
namespace codes {
inline constexpr const char* lex_error = "lex-error";
inline constexpr const char* parse_error = "parse-error";
inline constexpr const char* unbound_name = "unbound-name";
inline constexpr const char* duplicate_name = "duplicate-name";
inline constexpr const char* duplicate_binder = "duplicate-binder";
inline constexpr const char* duplicate_label = "duplicate-label";
inline constexpr const char* bad_declaration = "bad-declaration";
inline constexpr const char* function_sugar = "function-sugar";
inline constexpr const char* motive_unsupported = "motive-unsupported";
inline constexpr const char* arity_mismatch = "arity-mismatch";
inline constexpr const char* conversion_failure = "conversion-failure";
inline constexpr const char* conversion_undecided = "conversion-undecided";
inline constexpr const char* scrutinee_type = "scrutinee-type";
inline constexpr const char* match_on_codata = "match-on-codata";
inline constexpr const char* comatch_on_data = "comatch-on-data";
inline constexpr const char* cannot_infer = "cannot-infer";
inline constexpr const char* case_missing = "case-missing";
inline constexpr const char* case_unknown = "case-unknown";
inline constexpr const char* case_duplicate = "case-duplicate";
inline constexpr const char* case_reachable = "case-reachable";
inline constexpr const char* case_unreachable = "case-unreachable";
inline constexpr const char* coverage_undecided = "coverage-undecided";
inline constexpr const char* closure_cycle = "closure-cycle";
inline constexpr const char* xfunc_precondition = "xfunc-precondition";
inline constexpr const char* xfunc_recheck = "xfunc-recheck";
}  // namespace codes

struct Diagnostic {
  std::string code;
  Severity severity = Severity::Error;
  std::string message;
  Span span;
  std::string file;
};

using Diagnostics = std::vector<Diagnostic>;

inline bool has_errors(const Diagnostics& ds) {
  for (const auto& d : ds)
    if (d.severity == Severity::Error) return true;
  return false;
}

// One line-delimited JSON record: {code, severity, message, start, end, file}.
std::string diagnostic_json(const Diagnostic& d);
// Human-readable one-liner: file:start-end: severity[code]: message.
std::string diagnostic_text(const Diagnostic& d);

struct SourceFile {
  std::string path;
  std::string text;
};

}  // namespace dd
