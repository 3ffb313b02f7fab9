#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace rehearsal::text {

/// Number of Unicode scalar values in a UTF-8 string (counts every
/// non-continuation byte, so malformed bytes still count as one each).
std::size_t utf8_length(std::string_view s);

std::string_view trim(std::string_view s);

std::string lower_ascii(std::string_view s);

bool contains(std::string_view haystack, std::string_view needle);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

std::vector<std::string> split_lines(std::string_view s);

/// Keeps only ASCII alphanumerics, lowercased. Drops whitespace,
/// punctuation and non-ASCII bytes.
std::string normalize_alnum(std::string_view s);

/// Renders a review set as "Review 1:\n<text>" blocks separated by blank
/// lines. Numbering is 1-based so models can reference reviews by number.
std::string numbered_blocks(const std::vector<std::string>& texts);

}  // namespace rehearsal::text
