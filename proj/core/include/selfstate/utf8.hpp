#pragma once

#include <cstddef>
#include <string>
#include <string_view>

// UTF-8 helpers. Character offsets throughout the library are Unicode
// scalar-value indices; these functions convert between the two views.
namespace selfstate::utf8 {

/// Decodes UTF-8. Throws std::invalid_argument on ill-formed input.
std::u32string decode(std::string_view bytes);
std::string encode(std::u32string_view chars);
std::string encode(char32_t c);

bool is_valid(std::string_view bytes) noexcept;

/// Number of scalar values in a valid UTF-8 string.
std::size_t length(std::string_view bytes);

/// Converts a byte offset (on a character boundary) to a character offset.
std::size_t char_offset(std::string_view bytes, std::size_t byte_offset);

/// Substring by character offsets [start, end).
std::string slice(std::string_view bytes, std::size_t start, std::size_t end);

bool is_space(char32_t c) noexcept;
bool is_upper(char32_t c) noexcept;
bool is_lower(char32_t c) noexcept;
bool is_digit(char32_t c) noexcept;
bool is_alnum(char32_t c) noexcept;

/// Simple one-to-one lowercase mapping (ASCII, Latin-1, Latin Extended-A,
/// basic Greek and Cyrillic). Length preserving.
char32_t to_lower(char32_t c) noexcept;
std::u32string to_lower(std::u32string_view s);

}  // namespace selfstate::utf8
