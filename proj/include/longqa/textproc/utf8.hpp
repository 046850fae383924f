#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

namespace longqa::utf8 {

// True when `text` is well-formed UTF-8 (no overlongs, no surrogates).
bool is_valid(std::string_view text) noexcept;

// Length in bytes of the sequence introduced by lead byte `b` (1 for
// continuation or invalid bytes so callers always make progress).
std::size_t sequence_length(unsigned char b) noexcept;

// True when `pos` does not fall inside a multi-byte sequence.
inline bool is_boundary(std::string_view text, std::size_t pos) noexcept {
    return pos == 0 || pos >= text.size() ||
           (static_cast<unsigned char>(text[pos]) & 0xC0) != 0x80;
}

// Largest code point boundary <= pos.
std::size_t floor_boundary(std::string_view text, std::size_t pos) noexcept;

// Decodes the code point at `pos`; advances `pos`. Invalid bytes decode as
// U+FFFD and consume one byte.
char32_t decode(std::string_view text, std::size_t& pos) noexcept;

void append(std::string& out, char32_t cp);

// Number of code points in `text`.
std::size_t length(std::string_view text) noexcept;

}  // namespace longqa::utf8
