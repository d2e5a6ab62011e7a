#include "dd/lexer.hpp"

namespace dd {

namespace {

bool is_ascii_letter(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}
bool is_digit(char c) { return c >= '0' && c <= '9'; }
// Any non-ASCII byte belongs to a multi-byte codepoint; the corpus uses
// letters and symbols from many blocks, so all of them count as letters.
bool is_ident_start(unsigned char c) { return is_ascii_letter((char)c) || c >= 0x80; }
bool is_ident_cont(unsigned char c) {
  return is_ident_start(c) || is_digit((char)c) || c == '_' || c == '\'';
}

}  // namespace

std::vector<Token> lex(const SourceFile& src, Diagnostics& diags) {
  std::vector<Token> out;
  const std::string& s = src.text;
  std::size_t i = 0, n = s.size();
  auto push = [&](Tok k, std::size_t b, std::size_t e) {
    out.push_back(Token{k, s.substr(b, e - b), Span{(std::uint32_t)b, (std::uint32_t)e}});
  };
  while (i < n) {
    char c = s[i];
    if (c == ' ' || c == '\t' || c == '\r' || c == '\n') { ++i; continue; }
    if (c == '-' && i + 1 < n && s[i + 1] == '-') {
      while (i < n && s[i] != '\n') ++i;
      continue;
    }
    std::size_t b = i;
    switch (c) {
      case '(': push(Tok::LParen, b, ++i); continue;
      case ')': push(Tok::RParen, b, ++i); continue;
      case '{': push(Tok::LBrace, b, ++i); continue;
      case '}': push(Tok::RBrace, b, ++i); continue;
      case ',': push(Tok::Comma, b, ++i); continue;
      case ';': push(Tok::Semi, b, ++i); continue;
      case '.': push(Tok::Dot, b, ++i); continue;
      case '\\': push(Tok::Backslash, b, ++i); continue;
      default: break;
    }
    if (c == '=') {
      if (i + 1 < n && s[i + 1] == '>') { i += 2; push(Tok::FatArrow, b, i); continue; }
      diags.push_back({codes::lex_error, Severity::Error, "stray '='", Span{(std::uint32_t)b, (std::uint32_t)(b + 1)}, src.path});
      ++i;
      continue;
    }
    if (c == '-') {
      if (i + 1 < n && s[i + 1] == '>') { i += 2; push(Tok::ThinArrow, b, i); continue; }
      diags.push_back({codes::lex_error, Severity::Error, "stray '-'", Span{(std::uint32_t)b, (std::uint32_t)(b + 1)}, src.path});
      ++i;
      continue;
    }
    if (c == ':') {
      if (i + 1 < n && s[i + 1] == '=') { i += 2; push(Tok::ColonEq, b, i); continue; }
      push(Tok::Colon, b, ++i);
      continue;
    }
    if (c == '_' && (i + 1 >= n || !is_ident_cont((unsigned char)s[i + 1]))) {
      push(Tok::Wild, b, ++i);
      continue;
    }
    if (is_ident_start((unsigned char)c) || c == '_') {
      ++i;
      while (i < n && is_ident_cont((unsigned char)s[i])) ++i;
      std::string text = s.substr(b, i - b);
      Tok k = Tok::Ident;
      if (text == "data") k = Tok::KwData;
      else if (text == "codata") k = Tok::KwCodata;
      else if (text == "def") k = Tok::KwDef;
      else if (text == "codef") k = Tok::KwCodef;
      else if (text == "let") k = Tok::KwLet;
      else if (text == "match") k = Tok::KwMatch;
      else if (text == "comatch") k = Tok::KwComatch;
      else if (text == "absurd") k = Tok::KwAbsurd;
      else if (text == "as") k = Tok::KwAs;
      else if (text == "Type") k = Tok::KwType;
      out.push_back(Token{k, std::move(text), Span{(std::uint32_t)b, (std::uint32_t)i}});
      continue;
    }
    diags.push_back({codes::lex_error, Severity::Error,
                     "unexpected character",
                     Span{(std::uint32_t)b, (std::uint32_t)(b + 1)}, src.path});
    ++i;
  }
  out.push_back(Token{Tok::End, "", Span{(std::uint32_t)n, (std::uint32_t)n}});
  return out;
}

}  // namespace dd
