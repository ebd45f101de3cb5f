#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace forge {

// Number of Unicode scalars in a UTF-8 string (continuation bytes excluded).
// This is the unit for all character-count limits; byte counts would penalize
// non-ASCII text.
std::size_t utf8_scalar_count(std::string_view text);

std::string_view trim_view(std::string_view text);
std::string trim(std::string_view text);

// Removes any trailing markers (repeatedly, longest match first) plus the
// whitespace around them.
std::string strip_trailing_markers(std::string_view text, const std::vector<std::string>& markers);

// Position of the earliest occurrence of any needle, npos if none.
std::size_t find_first_of_any(std::string_view haystack, const std::vector<std::string>& needles);

std::string join(const std::vector<std::string>& parts, std::string_view separator);

std::size_t count_occurrences(std::string_view haystack, std::string_view needle);

} // namespace forge
