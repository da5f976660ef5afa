#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace promptbench {

enum class CodeOrigin { fenced, whole_text };

struct ExtractedCode {
  std::string source;
  CodeOrigin origin = CodeOrigin::whole_text;
  std::optional<std::string> fence_language_tag;

  bool operator==(const ExtractedCode&) const = default;
};

// Source of the first ``` fenced block (info string recorded, not enforced),
// or the whole text when there is no fence. Leading blank lines and trailing
// whitespace are trimmed. Throws Error{NoCode} when nothing is left.
ExtractedCode extract_code(std::string_view raw_text);

enum class TokenKind { identifier, keyword, string_literal, comment, number, op, newline, indent_ws };

std::string_view to_string(TokenKind kind) noexcept;

struct Token {
  TokenKind kind;
  std::string lexeme;
  std::size_t line;    // 1-based
  std::size_t column;  // 1-based, in bytes

  bool operator==(const Token&) const = default;
};

// Lossless Python tokenizer: concatenating every lexeme reproduces the input
// byte for byte. Never fails; bytes that start no other token become
// single-byte operator tokens, and an unterminated string runs to the end of
// the input.
std::vector<Token> lex(std::string_view source);

bool is_python_keyword(std::string_view word) noexcept;

struct ConstructMatch {
  std::string construct;
  std::size_t line;
  std::size_t column;

  bool operator==(const ConstructMatch&) const = default;
};

// One match per identifier or keyword token equal to a disallowed name, in
// document order. Text inside strings and comments never matches.
std::vector<ConstructMatch> detect_constructs(std::string_view source,
                                              const std::vector<std::string>& disallowed);

} // namespace promptbench
