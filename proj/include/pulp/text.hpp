#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace pulp {

// Shared source-text helpers for the assembler and the macro expansions.

std::string_view trim(std::string_view s);

// Double-quoted literal with the usual C escapes (\n \t \r \0 \\ \" \xNN);
// nullopt when the token is not a well-formed literal.
std::optional<std::string> unquote_string(std::string_view raw);

// Decimal or 0x/0X hexadecimal integer with optional leading minus.
std::optional<int64_t> parse_int(std::string_view text);

}  // namespace pulp
