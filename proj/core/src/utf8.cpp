#include "selfstate/utf8.hpp"

#include <stdexcept>

namespace selfstate::utf8 {
namespace {

// Returns the decoded scalar and advances `i`, or returns 0xFFFFFFFF on
// ill-formed input.
char32_t next(std::string_view s, std::size_t& i) noexcept {
  constexpr char32_t kBad = 0xFFFFFFFF;
  const auto b0 = static_cast<unsigned char>(s[i]);
  if (b0 < 0x80) {
    ++i;
    return b0;
  }
  std::size_t len = 0;
  char32_t cp = 0;
  char32_t min = 0;
  if ((b0 & 0xE0) == 0xC0) {
    len = 2, cp = b0 & 0x1F, min = 0x80;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3, cp = b0 & 0x0F, min = 0x800;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4, cp = b0 & 0x07, min = 0x10000;
  } else {
    return kBad;
  }
  if (i + len > s.size()) return kBad;
  for (std::size_t k = 1; k < len; ++k) {
    const auto b = static_cast<unsigned char>(s[i + k]);
    if ((b & 0xC0) != 0x80) return kBad;
    cp = (cp << 6) | (b & 0x3F);
  }
  if (cp < min || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return kBad;
  i += len;
  return cp;
}

}  // namespace

std::u32string decode(std::string_view bytes) {
  std::u32string out;
  out.reserve(bytes.size());
  std::size_t i = 0;
  while (i < bytes.size()) {
    const char32_t c = next(bytes, i);
    if (c == 0xFFFFFFFF) {
      throw std::invalid_argument("ill-formed UTF-8 at byte " + std::to_string(i));
    }
    out.push_back(c);
  }
  return out;
}

std::string encode(char32_t c) {
  std::string out;
  if (c < 0x80) {
    out.push_back(static_cast<char>(c));
  } else if (c < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (c >> 6)));
    out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
  } else if (c < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (c >> 12)));
    out.push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (c >> 18)));
    out.push_back(static_cast<char>(0x80 | ((c >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
  }
  return out;
}

std::string encode(std::u32string_view chars) {
  std::string out;
  out.reserve(chars.size());
  for (char32_t c : chars) out += encode(c);
  return out;
}

bool is_valid(std::string_view bytes) noexcept {
  std::size_t i = 0;
  while (i < bytes.size()) {
    if (next(bytes, i) == 0xFFFFFFFF) return false;
  }
  return true;
}

std::size_t length(std::string_view bytes) {
  std::size_t n = 0;
  for (unsigned char b : bytes) {
    if ((b & 0xC0) != 0x80) ++n;
  }
  return n;
}

std::size_t char_offset(std::string_view bytes, std::size_t byte_offset) {
  return length(bytes.substr(0, byte_offset));
}

std::string slice(std::string_view bytes, std::size_t start, std::size_t end) {
  std::size_t ch = 0;
  std::size_t b_start = bytes.size();
  std::size_t b_end = bytes.size();
  for (std::size_t i = 0; i <= bytes.size(); ++i) {
    const bool boundary =
        i == bytes.size() || (static_cast<unsigned char>(bytes[i]) & 0xC0) != 0x80;
    if (!boundary) continue;
    if (ch == start) b_start = i;
    if (ch == end) {
      b_end = i;
      break;
    }
    ++ch;
  }
  if (b_start > b_end) return {};
  return std::string(bytes.substr(b_start, b_end - b_start));
}

bool is_space(char32_t c) noexcept {
  switch (c) {
    case U' ': case U'\t': case U'\n': case U'\r': case U'\v': case U'\f':
    case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029:
    case 0x202F: case 0x205F: case 0x3000:
      return true;
    default:
      return c >= 0x2000 && c <= 0x200A;
  }
}

bool is_upper(char32_t c) noexcept {
  if (c >= U'A' && c <= U'Z') return true;
  if (c < 0x80) return false;
  if (c >= 0xC0 && c <= 0xDE) return c != 0xD7;
  if (c >= 0x100 && c <= 0x137) return c % 2 == 0;
  if (c >= 0x139 && c <= 0x148) return c % 2 == 1;
  if (c >= 0x14A && c <= 0x177) return c % 2 == 0;
  if (c == 0x178 || c == 0x179 || c == 0x17B || c == 0x17D) return true;
  if (c >= 0x391 && c <= 0x3A9) return c != 0x3A2;
  if (c >= 0x400 && c <= 0x42F) return true;
  return false;
}

char32_t to_lower(char32_t c) noexcept {
  if (c >= U'A' && c <= U'Z') return c + 32;
  if (c < 0x80 || !is_upper(c)) return c;
  if (c >= 0xC0 && c <= 0xDE) return c + 32;
  if (c == 0x178) return 0xFF;
  if (c >= 0x100 && c <= 0x17F) return c + 1;
  if (c >= 0x391 && c <= 0x3A9) return c + 32;
  if (c >= 0x400 && c <= 0x40F) return c + 80;
  if (c >= 0x410 && c <= 0x42F) return c + 32;
  return c;
}

bool is_lower(char32_t c) noexcept {
  if (c >= U'a' && c <= U'z') return true;
  if (c < 0x80) return false;
  if (c == 0xFF || c == 0xDF) return true;
  if (c >= 0xE0 && c <= 0xFE) return c != 0xF7;
  if (c >= 0x3B1 && c <= 0x3C9) return true;
  if (c >= 0x430 && c <= 0x45F) return true;
  return false;
}

bool is_digit(char32_t c) noexcept { return c >= U'0' && c <= U'9'; }

bool is_alnum(char32_t c) noexcept {
  return is_digit(c) || is_upper(c) || is_lower(c) || (c >= 0x100 && c <= 0x24F);
}

std::u32string to_lower(std::u32string_view s) {
  std::u32string out(s);
  for (auto& c : out) c = to_lower(c);
  return out;
}

}  // namespace selfstate::utf8
