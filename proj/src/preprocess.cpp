#include "threadminer/preprocess.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <numeric>

#include "text_util.hpp"
#include "threadminer/error.hpp"

namespace threadminer {

std::string extract_document(const Thread& thread) {
  std::string text = thread.title;
  text.push_back('\n');
  if (!thread.posts.empty()) text += thread.posts.front().body;
  return text;
}

bool is_all_digits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) {
    return std::isdigit(c) != 0;
  });
}

bool is_ipv4(std::string_view s) {
  int groups = 0;
  std::size_t start = 0;
  while (true) {
    const auto dot = s.find('.', start);
    const auto part = s.substr(start, dot == std::string_view::npos ? s.npos : dot - start);
    if (part.empty() || part.size() > 3 || !is_all_digits(part)) return false;
    ++groups;
    if (dot == std::string_view::npos) break;
    start = dot + 1;
  }
  return groups == 4;
}

namespace {

// Bytes >= 0x80 are kept inside tokens so UTF-8 words stay whole.
bool is_token_byte(unsigned char c) { return std::isalnum(c) != 0 || c >= 0x80; }

}  // namespace

std::vector<std::string> preprocess_unigrams(std::string_view text,
                                             const StopwordSet& stopwords) {
  // IPv4 addresses are removed before splitting, since the dots would
  // otherwise break them into plain numbers.
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    const auto c = static_cast<unsigned char>(text[i]);
    if (!is_token_byte(c)) {
      ++i;
      continue;
    }
    // Candidate span of alphanumerics and dots, for the IPv4 check.
    std::size_t j = i;
    while (j < text.size() && (is_token_byte(static_cast<unsigned char>(text[j])) ||
                               text[j] == '.')) {
      ++j;
    }
    std::string_view span = text.substr(i, j - i);
    while (!span.empty() && span.back() == '.') span.remove_suffix(1);
    if (is_ipv4(span)) {
      i += span.size();
      continue;
    }
    std::size_t k = i;
    while (k < text.size() && is_token_byte(static_cast<unsigned char>(text[k]))) ++k;
    std::string tok(text.substr(i, k - i));
    for (char& ch : tok) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    i = k;
    if (is_all_digits(tok) || stopwords.contains(tok)) continue;
    out.push_back(std::move(tok));
  }
  return out;
}

std::vector<std::string> preprocess_document(std::string_view text,
                                             const StopwordSet& stopwords) {
  std::vector<std::string> tokens = preprocess_unigrams(text, stopwords);
  const std::size_t n = tokens.size();
  if (n >= 2) tokens.reserve(2 * n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    tokens.push_back(tokens[i] + "_" + tokens[i + 1]);
  }
  return tokens;
}

TokenizedDoc tokenize_thread(const Thread& thread, const StopwordSet& stopwords) {
  return {thread.thread_id, preprocess_document(extract_document(thread), stopwords)};
}

std::vector<TokenizedDoc> tokenize_corpus(const ForumCorpus& corpus,
                                          const StopwordSet& stopwords) {
  std::vector<TokenizedDoc> docs;
  docs.reserve(corpus.size());
  for (const Thread& t : corpus.threads()) docs.push_back(tokenize_thread(t, stopwords));
  return docs;
}

StopwordSet load_stopwords(const std::string& path) {
  StopwordSet set;
  for (std::string w : detail::read_word_list(path)) {
    for (char& ch : w) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    set.insert(std::move(w));
  }
  return set;
}

Vocabulary::Vocabulary(std::vector<std::string> words,
                       std::vector<std::uint64_t> counts)
    : words_(std::move(words)), counts_(std::move(counts)) {
  if (words_.size() != counts_.size()) {
    throw Error(ErrorKind::kValidation, "vocabulary words/counts size mismatch");
  }
  index_.reserve(words_.size());
  for (std::size_t i = 0; i < words_.size(); ++i) {
    if (!index_.emplace(words_[i], i).second) {
      throw Error(ErrorKind::kValidation, "duplicate vocabulary word '" + words_[i] + "'");
    }
  }
  total_ = std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
}

std::optional<std::size_t> Vocabulary::index(std::string_view word) const {
  const auto it = index_.find(std::string(word));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

Vocabulary build_vocabulary(std::span<const TokenizedDoc> docs,
                            std::uint64_t min_count) {
  std::unordered_map<std::string, std::uint64_t> freq;
  for (const TokenizedDoc& d : docs) {
    for (const std::string& tok : d.tokens) ++freq[tok];
  }
  std::vector<std::pair<std::string, std::uint64_t>> kept;
  for (auto& [w, c] : freq) {
    if (c >= min_count) kept.emplace_back(w, c);
  }
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  std::vector<std::string> words;
  std::vector<std::uint64_t> counts;
  words.reserve(kept.size());
  counts.reserve(kept.size());
  for (auto& [w, c] : kept) {
    words.push_back(std::move(w));
    counts.push_back(c);
  }
  return Vocabulary(std::move(words), std::move(counts));
}

}  // namespace threadminer
