#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace defectlab {

enum class TokenKind {
  line_comment,
  block_comment,
  string,
  character,
  identifier,
  number,
  keyword,
  punct,
  brace_open,
  brace_close,
  semicolon,
  newline,
};

struct Token {
  TokenKind kind;
  std::string text;
  int line = 1;            // 1-based line of the first byte
  std::size_t offset = 0;  // byte offset in the input
};

/// Lexes Java-like source. Whitespace other than '\n' is skipped; every other
/// byte lands in exactly one token, so tokens plus the skipped gaps rebuild
/// the input. An unterminated block comment runs to end of input and adds a
/// message to `warnings` when non-null.
std::vector<Token> tokenize(std::string_view text, std::vector<std::string>* warnings = nullptr);

/// Replaces invalid UTF-8 sequences with U+FFFD.
std::string sanitize_utf8(std::string_view text);

bool is_java_keyword(std::string_view word);

struct LineClass {
  bool code = false;
  bool comment = false;
  bool blank() const { return !code && !comment; }
};

/// Number of lines the token stream covers (a trailing newline does not open a line).
int count_lines(const std::vector<Token>& tokens);

/// Per-line code/comment attribution, index 0 = line 1. A comment spanning k
/// lines marks all k lines.
std::vector<LineClass> classify_lines(const std::vector<Token>& tokens);

}  // namespace defectlab
