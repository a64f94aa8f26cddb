#include "defectlab/tokenizer.hpp"

#include <algorithm>
#include <array>

namespace defectlab {

namespace {

constexpr std::array<std::string_view, 53> kKeywords = {
    "abstract", "assert", "boolean", "break", "byte", "case", "catch", "char", "class",
    "const", "continue", "default", "do", "double", "else", "enum", "extends", "final",
    "finally", "float", "for", "goto", "if", "implements", "import", "instanceof", "int",
    "interface", "long", "native", "new", "package", "private", "protected", "public",
    "return", "short", "static", "strictfp", "super", "switch", "synchronized", "this",
    "throw", "throws", "transient", "try", "void", "volatile", "while", "true", "false",
    "null"};

constexpr std::array<std::string_view, 24> kOperators = {
    ">>>=", "<<=", ">>=", ">>>", "...", "&&", "||", "==", "!=", "<=", ">=", "++",
    "--",   "->",  "::",  "+=",  "-=",  "*=", "/=", "%=", "&=", "|=", "^=", "<<"};

bool ident_start(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_' || c == '$' || c >= 0x80;
}
bool ident_char(unsigned char c) { return ident_start(c) || (c >= '0' && c <= '9'); }
bool digit(unsigned char c) { return c >= '0' && c <= '9'; }

}  // namespace

bool is_java_keyword(std::string_view word) {
  return std::find(kKeywords.begin(), kKeywords.end(), word) != kKeywords.end();
}

std::vector<Token> tokenize(std::string_view text, std::vector<std::string>* warnings) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  int line = 1;
  const std::size_t n = text.size();
  auto emit = [&](TokenKind kind, std::size_t start, std::size_t end) {
    tokens.push_back({kind, std::string(text.substr(start, end - start)), line, start});
    for (std::size_t k = start; k < end; ++k)
      if (text[k] == '\n') ++line;
  };
  while (i < n) {
    const auto c = static_cast<unsigned char>(text[i]);
    if (c == '\n') {
      emit(TokenKind::newline, i, i + 1);
      ++i;
    } else if (c == ' ' || c == '\t' || c == '\r' || c == '\f' || c == '\v') {
      ++i;
    } else if (c == '/' && i + 1 < n && text[i + 1] == '/') {
      std::size_t j = i + 2;
      while (j < n && text[j] != '\n') ++j;
      emit(TokenKind::line_comment, i, j);
      i = j;
    } else if (c == '/' && i + 1 < n && text[i + 1] == '*') {
      const auto close = text.find("*/", i + 2);
      std::size_t j;
      if (close == std::string_view::npos) {
        j = n;
        if (warnings)
          warnings->push_back("unterminated block comment at line " + std::to_string(line));
      } else {
        j = close + 2;
      }
      emit(TokenKind::block_comment, i, j);
      i = j;
    } else if (c == '"' && text.substr(i, 3) == "\"\"\"") {
      // text block
      std::size_t j = i + 3;
      while (j < n && text.substr(j, 3) != "\"\"\"") j += text[j] == '\\' ? 2 : 1;
      j = std::min(n, j + 3);
      emit(TokenKind::string, i, j);
      i = j;
    } else if (c == '"' || c == '\'') {
      std::size_t j = i + 1;
      while (j < n && text[j] != static_cast<char>(c) && text[j] != '\n') {
        if (text[j] == '\\' && j + 1 < n && text[j + 1] != '\n') ++j;
        ++j;
      }
      if (j < n && text[j] == static_cast<char>(c)) ++j;
      emit(c == '"' ? TokenKind::string : TokenKind::character, i, j);
      i = j;
    } else if (digit(c) || (c == '.' && i + 1 < n && digit(static_cast<unsigned char>(text[i + 1])))) {
      const bool hex = c == '0' && i + 1 < n && (text[i + 1] == 'x' || text[i + 1] == 'X');
      std::size_t j = i + 1;
      while (j < n) {
        const auto d = static_cast<unsigned char>(text[j]);
        const char prev = text[j - 1];
        const bool exponent = hex ? (prev == 'p' || prev == 'P') : (prev == 'e' || prev == 'E');
        if (ident_char(d) || d == '.' || ((d == '+' || d == '-') && exponent)) {
          ++j;
        } else {
          break;
        }
      }
      emit(TokenKind::number, i, j);
      i = j;
    } else if (ident_start(c)) {
      std::size_t j = i + 1;
      while (j < n && ident_char(static_cast<unsigned char>(text[j]))) ++j;
      emit(is_java_keyword(text.substr(i, j - i)) ? TokenKind::keyword : TokenKind::identifier, i, j);
      i = j;
    } else if (c == '{') {
      emit(TokenKind::brace_open, i, i + 1);
      ++i;
    } else if (c == '}') {
      emit(TokenKind::brace_close, i, i + 1);
      ++i;
    } else if (c == ';') {
      emit(TokenKind::semicolon, i, i + 1);
      ++i;
    } else {
      std::size_t len = 1;
      for (auto op : kOperators)
        if (text.substr(i, op.size()) == op) {
          len = op.size();
          break;
        }
      emit(TokenKind::punct, i, i + len);
      i += len;
    }
  }
  return tokens;
}

std::string sanitize_utf8(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    const auto c = static_cast<unsigned char>(text[i]);
    std::size_t len = 0;
    if (c < 0x80) len = 1;
    else if ((c & 0xE0) == 0xC0 && c >= 0xC2) len = 2;
    else if ((c & 0xF0) == 0xE0) len = 3;
    else if ((c & 0xF8) == 0xF0 && c <= 0xF4) len = 4;
    bool ok = len > 0 && i + len <= text.size();
    for (std::size_t k = 1; ok && k < len; ++k)
      ok = (static_cast<unsigned char>(text[i + k]) & 0xC0) == 0x80;
    if (ok && len == 3) {
      const auto c1 = static_cast<unsigned char>(text[i + 1]);
      ok = !(c == 0xE0 && c1 < 0xA0) && !(c == 0xED && c1 >= 0xA0);
    } else if (ok && len == 4) {
      const auto c1 = static_cast<unsigned char>(text[i + 1]);
      ok = !(c == 0xF0 && c1 < 0x90) && !(c == 0xF4 && c1 >= 0x90);
    }
    if (ok) {
      out.append(text.substr(i, len));
      i += len;
    } else {
      out.append("\xEF\xBF\xBD");
      ++i;
    }
  }
  return out;
}

int count_lines(const std::vector<Token>& tokens) {
  if (tokens.empty()) return 0;
  int newlines = 0;
  for (const auto& t : tokens) {
    if (t.kind == TokenKind::newline) ++newlines;
    else newlines += static_cast<int>(std::count(t.text.begin(), t.text.end(), '\n'));
  }
  const auto& last = tokens.back();
  const bool open_last_line = !(last.kind == TokenKind::newline ||
                                (!last.text.empty() && last.text.back() == '\n'));
  return newlines + (open_last_line ? 1 : 0);
}

std::vector<LineClass> classify_lines(const std::vector<Token>& tokens) {
  std::vector<LineClass> lines(static_cast<std::size_t>(count_lines(tokens)));
  for (const auto& t : tokens) {
    if (t.kind == TokenKind::newline) continue;
    const int span = static_cast<int>(std::count(t.text.begin(), t.text.end(), '\n'));
    const bool comment = t.kind == TokenKind::line_comment || t.kind == TokenKind::block_comment;
    for (int k = 0; k <= span; ++k) {
      const auto idx = static_cast<std::size_t>(t.line - 1 + k);
      if (idx >= lines.size()) break;
      // A block comment ending exactly at a newline does not touch the next line.
      if (k == span && k > 0 && t.text.back() == '\n') break;
      (comment ? lines[idx].comment : lines[idx].code) = true;
    }
  }
  return lines;
}

}  // namespace defectlab
