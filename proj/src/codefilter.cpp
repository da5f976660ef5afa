#include "promptbench/codefilter.hpp"

#include "promptbench/error.hpp"

#include <algorithm>
#include <array>
#include <set>

namespace promptbench {

namespace {

constexpr std::string_view kFence = "```";
constexpr std::string_view kSpace = " \t\r\n\f\v";

// Drops whitespace-only leading lines and all trailing whitespace; the
// indentation of the first real line is kept.
std::string trim_code(std::string_view text) {
  std::size_t start = 0;
  while (start < text.size()) {
    const auto nl = text.find('\n', start);
    const auto line = text.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
    if (line.find_first_not_of(kSpace) != std::string_view::npos) break;
    if (nl == std::string_view::npos) return {};
    start = nl + 1;
  }
  text.remove_prefix(start);
  const auto last = text.find_last_not_of(kSpace);
  if (last == std::string_view::npos) return {};
  return std::string(text.substr(0, last + 1));
}

std::string_view trim_spaces(std::string_view s) {
  const auto first = s.find_first_not_of(kSpace);
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(kSpace);
  return s.substr(first, last - first + 1);
}

} // namespace

ExtractedCode extract_code(std::string_view raw_text) {
  ExtractedCode out;
  const auto open = raw_text.find(kFence);
  if (open == std::string_view::npos) {
    out.source = trim_code(raw_text);
    out.origin = CodeOrigin::whole_text;
    if (out.source.empty()) throw Error(Errc::NoCode, "model response is empty");
    return out;
  }

  const auto body_start = open + kFence.size();
  const auto close = raw_text.find(kFence, body_start);
  // An unclosed fence (truncated response) runs to the end of the text.
  std::string_view segment = raw_text.substr(
      body_start, close == std::string_view::npos ? std::string_view::npos : close - body_start);

  out.origin = CodeOrigin::fenced;
  const auto nl = segment.find('\n');
  if (nl != std::string_view::npos) {
    const auto tag = trim_spaces(segment.substr(0, nl));
    if (!tag.empty()) out.fence_language_tag = std::string(tag);
    segment.remove_prefix(nl + 1);
  }
  out.source = trim_code(segment);
  if (out.source.empty()) throw Error(Errc::NoCode, "first fenced block is empty");
  return out;
}

std::string_view to_string(TokenKind kind) noexcept {
  switch (kind) {
    case TokenKind::identifier: return "identifier";
    case TokenKind::keyword: return "keyword";
    case TokenKind::string_literal: return "string_literal";
    case TokenKind::comment: return "comment";
    case TokenKind::number: return "number";
    case TokenKind::op: return "operator";
    case TokenKind::newline: return "newline";
    case TokenKind::indent_ws: return "indent_ws";
  }
  return "unknown";
}

bool is_python_keyword(std::string_view word) noexcept {
  static constexpr std::array<std::string_view, 35> kKeywords = {
      "False", "None",   "True",    "and",      "as",       "assert", "async",
      "await", "break",  "class",   "continue", "def",      "del",    "elif",
      "else",  "except", "finally", "for",      "from",     "global", "if",
      "import", "in",    "is",      "lambda",   "nonlocal", "not",    "or",
      "pass",  "raise",  "return",  "try",      "while",    "with",   "yield"};
  return std::find(kKeywords.begin(), kKeywords.end(), word) != kKeywords.end();
}

namespace {

// Length of a well-formed multi-byte UTF-8 sequence at pos, else 0.
std::size_t utf8_sequence_length(std::string_view s, std::size_t pos) {
  const auto lead = static_cast<unsigned char>(s[pos]);
  std::size_t len = 0;
  if (lead >= 0xC2 && lead <= 0xDF) len = 2;
  else if (lead >= 0xE0 && lead <= 0xEF) len = 3;
  else if (lead >= 0xF0 && lead <= 0xF4) len = 4;
  else return 0;
  if (pos + len > s.size()) return 0;
  for (std::size_t i = 1; i < len; ++i) {
    if ((static_cast<unsigned char>(s[pos + i]) & 0xC0) != 0x80) return 0;
  }
  const auto second = static_cast<unsigned char>(s[pos + 1]);
  if (lead == 0xE0 && second < 0xA0) return 0;   // overlong
  if (lead == 0xED && second > 0x9F) return 0;   // surrogates
  if (lead == 0xF0 && second < 0x90) return 0;   // overlong
  if (lead == 0xF4 && second > 0x8F) return 0;   // > U+10FFFF
  return len;
}

bool is_ascii_alpha(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }
bool is_digit(char c) { return c >= '0' && c <= '9'; }

// Length of an identifier-character at pos (ASCII word char or a non-ASCII
// code point), else 0.
std::size_t identifier_char(std::string_view s, std::size_t pos, bool first) {
  const char c = s[pos];
  if (is_ascii_alpha(c) || c == '_' || (!first && is_digit(c))) return 1;
  if (static_cast<unsigned char>(c) >= 0x80) return utf8_sequence_length(s, pos);
  return 0;
}

bool is_string_prefix(std::string_view word) {
  if (word.empty() || word.size() > 2) return false;
  std::string lower;
  for (char c : word) lower.push_back(static_cast<char>(c | 0x20));
  static const std::set<std::string> kPrefixes = {"r", "u", "b", "f", "rb", "br", "fr", "rf"};
  return kPrefixes.count(lower) > 0;
}

// End of a string literal whose opening quote is at pos.
std::size_t scan_string(std::string_view s, std::size_t pos) {
  const char quote = s[pos];
  const bool triple = s.compare(pos, 3, std::string(3, quote)) == 0;
  std::size_t i = pos + (triple ? 3 : 1);
  while (i < s.size()) {
    const char c = s[i];
    if (c == '\\') {
      i += 2;
      continue;
    }
    if (triple) {
      if (c == quote && s.compare(i, 3, std::string(3, quote)) == 0) return i + 3;
    } else {
      if (c == quote) return i + 1;
      // An unescaped line break leaves the string unterminated.
      if (c == '\n' || c == '\r') return s.size();
    }
    ++i;
  }
  return s.size();
}

std::size_t scan_number(std::string_view s, std::size_t pos) {
  const bool radix = s[pos] == '0' && pos + 1 < s.size() &&
                     std::string_view("xXoObB").find(s[pos + 1]) != std::string_view::npos;
  std::size_t i = pos;
  while (i < s.size()) {
    const char c = s[i];
    if (is_ascii_alpha(c) || is_digit(c) || c == '_' || c == '.') {
      ++i;
    } else if ((c == '+' || c == '-') && !radix && i > pos && (s[i - 1] == 'e' || s[i - 1] == 'E')) {
      ++i;
    } else {
      break;
    }
  }
  return i;
}

std::size_t scan_operator(std::string_view s, std::size_t pos) {
  static constexpr std::array<std::string_view, 5> kThree = {"**=", "//=", ">>=", "<<=", "..."};
  static constexpr std::array<std::string_view, 19> kTwo = {
      "**", "//", "<<", ">>", "<=", ">=", "==", "!=", "->", "+=",
      "-=", "*=", "/=", "%=", "&=", "|=", "^=", "@=", ":="};
  const auto rest = s.substr(pos);
  for (auto op : kThree) {
    if (rest.substr(0, 3) == op) return pos + 3;
  }
  for (auto op : kTwo) {
    if (rest.substr(0, 2) == op) return pos + 2;
  }
  return pos + 1;
}

} // namespace

std::vector<Token> lex(std::string_view s) {
  std::vector<Token> tokens;
  std::size_t line = 1;
  std::size_t column = 1;
  std::size_t i = 0;

  auto emit = [&](TokenKind kind, std::size_t end) {
    Token token{kind, std::string(s.substr(i, end - i)), line, column};
    for (std::size_t k = i; k < end; ++k) {
      const char c = s[k];
      if (c == '\n' || (c == '\r' && (k + 1 >= end || s[k + 1] != '\n'))) {
        ++line;
        column = 1;
      } else if (c != '\r') {
        ++column;
      }
    }
    tokens.push_back(std::move(token));
    i = end;
  };

  while (i < s.size()) {
    const char c = s[i];
    if (c == '\r' && i + 1 < s.size() && s[i + 1] == '\n') {
      emit(TokenKind::newline, i + 2);
    } else if (c == '\n' || c == '\r') {
      emit(TokenKind::newline, i + 1);
    } else if (c == ' ' || c == '\t' || c == '\f') {
      std::size_t end = i;
      while (end < s.size() && (s[end] == ' ' || s[end] == '\t' || s[end] == '\f')) ++end;
      emit(TokenKind::indent_ws, end);
    } else if (c == '#') {
      std::size_t end = i;
      while (end < s.size() && s[end] != '\n' && s[end] != '\r') ++end;
      emit(TokenKind::comment, end);
    } else if (c == '\'' || c == '"') {
      emit(TokenKind::string_literal, scan_string(s, i));
    } else if (is_digit(c) || (c == '.' && i + 1 < s.size() && is_digit(s[i + 1]))) {
      emit(TokenKind::number, scan_number(s, i));
    } else if (const auto first = identifier_char(s, i, true); first > 0) {
      std::size_t end = i + first;
      while (end < s.size()) {
        const auto n = identifier_char(s, end, false);
        if (n == 0) break;
        end += n;
      }
      const auto word = s.substr(i, end - i);
      if (end < s.size() && (s[end] == '\'' || s[end] == '"') && is_string_prefix(word)) {
        emit(TokenKind::string_literal, scan_string(s, end));
      } else {
        emit(is_python_keyword(word) ? TokenKind::keyword : TokenKind::identifier, end);
      }
    } else {
      emit(TokenKind::op, scan_operator(s, i));
    }
  }
  return tokens;
}

std::vector<ConstructMatch> detect_constructs(std::string_view source,
                                              const std::vector<std::string>& disallowed) {
  std::vector<ConstructMatch> matches;
  if (disallowed.empty()) return matches;
  const std::set<std::string, std::less<>> names(disallowed.begin(), disallowed.end());
  for (const auto& token : lex(source)) {
    if (token.kind != TokenKind::identifier && token.kind != TokenKind::keyword) continue;
    if (names.count(token.lexeme) > 0) {
      matches.push_back({token.lexeme, token.line, token.column});
    }
  }
  return matches;
}

} // namespace promptbench
