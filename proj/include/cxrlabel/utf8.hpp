#pragma once

#include <string>
#include <string_view>

// UTF-8 <-> UTF-32 conversion. Text processing in this project operates on
// Unicode scalar values; wchar_t is 32 bits on the supported platforms.
namespace cxrlabel::utf8 {

static_assert(sizeof(wchar_t) == 4, "wchar_t must hold a Unicode scalar value");

bool is_valid(std::string_view bytes);

/// Throws Error{input, "utf8", "invalid-utf8"} on malformed input.
std::wstring decode(std::string_view bytes);

std::string encode(std::wstring_view text);
std::string encode(wchar_t scalar);

/// Number of scalar values; throws on malformed input.
std::size_t length(std::string_view bytes);

}  // namespace cxrlabel::utf8
