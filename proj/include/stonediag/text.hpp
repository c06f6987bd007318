#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace stonediag {

std::string trim(std::string_view s);

// Split on a separator character; fields are kept verbatim (may be empty).
std::vector<std::string> split(std::string_view s, char sep);

// Split, trim each field, drop fields that end up empty.
std::vector<std::string> split_trimmed(std::string_view s, char sep);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

// Whitespace-delimited words.
std::vector<std::string> split_words(std::string_view s);

// Matching key used by every vocabulary lookup: ASCII alphanumerics are
// lowercased, every other byte becomes a separator, runs collapse to one
// space, ends trimmed. "Black  crust." and "BLACK_CRUST" both fold to
// "black crust".
std::string fold_key(std::string_view s);

std::uint64_t fnv1a64(std::string_view s);

// splitmix64 step; advances state and returns the mixed value.
std::uint64_t splitmix64(std::uint64_t& state);

std::string to_hex16(std::uint64_t v);

std::string base64_encode(const unsigned char* data, std::size_t len);
std::string base64_encode(std::string_view bytes);
std::vector<unsigned char> base64_decode(std::string_view s);

} // namespace stonediag
