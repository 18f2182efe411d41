#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace bloomqa::text {

std::string trim(std::string_view s);

// Whitespace-separated words; empty input gives an empty list.
std::vector<std::string> split_words(std::string_view s);
std::size_t word_count(std::string_view s);

// Joins the non-empty (after trimming) parts with single spaces.
std::string join_nonempty(const std::vector<std::string_view>& parts);

std::string replace_all(std::string_view s, std::string_view from, std::string_view to);

// Lower-cased with runs of whitespace collapsed to one space; used as a
// deduplication key.
std::string normalize_key(std::string_view s);

std::string to_lower(std::string_view s);

// Lower-cased alphanumeric word forms, punctuation stripped.
std::vector<std::string> content_words(std::string_view s);

}  // namespace bloomqa::text
