#pragma once

#include <nlohmann/json.hpp>

#include <string>

namespace promptbench {

// Function-call test arguments are JSON values restricted to numbers,
// strings, booleans and (nested) arrays of those. Objects and null are
// outside the grammar.
[[nodiscard]] bool is_restricted_literal(const nlohmann::json& value) noexcept;

// Renders a restricted literal as Python source, e.g. [0, 1.5, "a", True].
// Throws Error{DriverUnrenderable} for values outside the grammar.
[[nodiscard]] std::string render_python_literal(const nlohmann::json& value);

// Python repr() of a finite double ("8.0", "0.1", "1e+16", "1.5e-05").
[[nodiscard]] std::string python_float_repr(double value);

// Double-quoted Python string literal with escapes for quotes, backslashes
// and control characters. Non-ASCII UTF-8 passes through unchanged.
[[nodiscard]] std::string python_string_literal(const std::string& text);

} // namespace promptbench
