#pragma once

// Small parsing helpers shared by the loaders. Not part of the public API.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace threadminer::detail {

std::string_view trim(std::string_view s);

/// Splits one CSV record. Supports double-quoted fields with "" escapes.
std::vector<std::string> split_csv(std::string_view line);

/// Quotes a field when it contains a comma, quote or newline.
std::string csv_field(std::string_view s);

/// One entry per line, `#` starts a comment, blank lines ignored.
std::vector<std::string> read_word_list(const std::string& path);

std::uint64_t fnv1a64(std::string_view data,
                      std::uint64_t seed = 0xcbf29ce484222325ULL);

std::string hex64(std::uint64_t v);

}  // namespace threadminer::detail
