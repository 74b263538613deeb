#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "threadminer/corpus.hpp"

namespace threadminer {

using StopwordSet = std::unordered_set<std::string>;

struct TokenizedDoc {
  std::string thread_id;
  std::vector<std::string> tokens;  // unigrams, then "_"-joined bigrams

  std::size_t size() const { return tokens.size(); }
};

/// Title and first-post body joined by one newline. Replies are ignored.
std::string extract_document(const Thread& thread);

/// Lowercases, splits on non-alphanumeric bytes, drops stopwords, all-digit
/// tokens and dotted IPv4 addresses, then appends adjacent-pair bigrams of the
/// surviving unigrams.
std::vector<std::string> preprocess_document(std::string_view text,
                                             const StopwordSet& stopwords);

/// Just the filtered unigrams of `preprocess_document`.
std::vector<std::string> preprocess_unigrams(std::string_view text,
                                             const StopwordSet& stopwords);

TokenizedDoc tokenize_thread(const Thread& thread, const StopwordSet& stopwords);
std::vector<TokenizedDoc> tokenize_corpus(const ForumCorpus& corpus,
                                          const StopwordSet& stopwords);

bool is_ipv4(std::string_view s);
bool is_all_digits(std::string_view s);

/// Stopword file: one token per line, `#` comments. Entries are lowercased.
StopwordSet load_stopwords(const std::string& path);

/// Word index with corpus frequencies. Indices run 0..d-1 in descending
/// frequency, ties broken lexicographically.
class Vocabulary {
 public:
  Vocabulary() = default;
  /// Entries must already be in canonical order with unique words.
  Vocabulary(std::vector<std::string> words, std::vector<std::uint64_t> counts);

  std::size_t size() const { return words_.size(); }
  bool empty() const { return words_.empty(); }

  std::optional<std::size_t> index(std::string_view word) const;
  bool contains(std::string_view word) const { return index(word).has_value(); }
  const std::string& word(std::size_t i) const { return words_[i]; }
  std::uint64_t count(std::size_t i) const { return counts_[i]; }
  const std::vector<std::string>& words() const { return words_; }
  const std::vector<std::uint64_t>& counts() const { return counts_; }
  std::uint64_t total_count() const { return total_; }

 private:
  std::vector<std::string> words_;
  std::vector<std::uint64_t> counts_;
  std::unordered_map<std::string, std::size_t> index_;
  std::uint64_t total_ = 0;
};

Vocabulary build_vocabulary(std::span<const TokenizedDoc> docs,
                            std::uint64_t min_count);

}  // namespace threadminer
