#pragma once

#include "dd/ast.hpp"
#include "dd/diag.hpp"

namespace dd {

struct ParseResult {
  Program program;
  Diagnostics diags;
};

// Lex + parse one file into an unresolved surface program. Recovers at
// declaration boundaries so multiple diagnostics can be reported.
Program parse_surface(const SourceFile& src, Diagnostics& diags);

// Assigns binder ids, classifies names into variables / producers / type
// constructors, validates declaration heads, and desugars `->` and `\x. e`.
// Works across the whole (possibly multi-file) program so that forward and
// mutual references resolve.
void resolve_program(Program& p, Diagnostics& diags);

// parse_surface + resolve_program for a single self-contained file.
ParseResult parse(const SourceFile& src);

// Parses one expression; nullptr (plus diagnostics) on failure.
ExprPtr parse_expression_surface(const SourceFile& src, Diagnostics& diags);

// Parses and resolves a closed expression in the scope of an already
// resolved program (used by `run --expr` and the corpus manifest).
ExprPtr parse_expr_in_scope(const std::string& text, const std::string& file,
                            const Program& scope, Diagnostics& diags);

}  // namespace dd
