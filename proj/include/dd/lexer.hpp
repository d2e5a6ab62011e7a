#pragma once

#include <string>
#include <vector>

#include "dd/diag.hpp"

namespace dd {

enum class Tok {
  Ident, Wild,
  KwData, KwCodata, KwDef, KwCodef, KwLet, KwMatch, KwComatch, KwAbsurd, KwAs, KwType,
  LParen, RParen, LBrace, RBrace,
  Comma, Colon, Semi, Dot, FatArrow, ThinArrow, Backslash, ColonEq,
  End,
};

struct Token {
  Tok kind;
  std::string text;
  Span span;
};

// Comments run from `--` to end of line. Identifiers may contain any
// non-ASCII codepoint, digits, `_` and `'`; a lone `_` is a wildcard.
std::vector<Token> lex(const SourceFile& src, Diagnostics& diags);

}  // namespace dd
