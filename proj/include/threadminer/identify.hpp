#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "threadminer/embedding.hpp"
#include "threadminer/preprocess.hpp"
#include "threadminer/threadspace.hpp"

namespace threadminer {

/// A bag of keywords in preprocessed form (lowercase unigrams or
/// "_"-joined bigrams) and the minimum number of hits a thread needs.
struct KeywordSet {
  std::string name;
  std::set<std::string> words;
  std::size_t threshold = 1;
};

/// Validates non-empty words and threshold >= 1.
KeywordSet make_keyword_set(std::string name, std::set<std::string> words,
                            std::size_t threshold = 1);

/// Keyword file: one keyword per line, `#` comments. Entries are lowercased.
KeywordSet load_keyword_set(const std::string& path, std::string name,
                            std::size_t threshold = 1);

/// Keywords that preprocessing would remove or alter (numbers, stopwords,
/// punctuation), so they can never match.
std::vector<std::string> unmatchable_keywords(const KeywordSet& set,
                                              const StopwordSet& stopwords);

/// Occurrences of the set's words in the doc, counted with multiplicity.
std::size_t keyword_hits(const TokenizedDoc& doc, const KeywordSet& set);

/// Threads whose hit count reaches the threshold of every set.
std::set<std::string> keyword_select(std::span<const TokenizedDoc> docs,
                                     std::span<const KeywordSet> sets);

enum class Provenance { kKeyword, kSimilarity };

struct ExpansionHit {
  double score;           // best cosine similarity to any seed
  std::string best_seed;  // seed achieving it (smallest id on ties)
};

struct SelectionResult {
  std::set<std::string> seeds;
  std::set<std::string> expanded;
  std::map<std::string, ExpansionHit> scores;  // expanded threads only
  std::vector<std::string> unprojectable;      // skipped, sorted
  std::size_t total_threads = 0;

  std::optional<Provenance> provenance(const std::string& thread_id) const;
  std::size_t selected() const { return seeds.size() + expanded.size(); }
  double selected_fraction() const;
};

using ThreadVectors = std::map<std::string, ThreadVector>;

/// Single-pass expansion: a candidate joins when its best cosine similarity
/// to any seed is >= t_sim. Expanded threads do not recruit further.
std::map<std::string, ExpansionHit> similarity_expand(const ThreadVectors& seeds,
                                                      const ThreadVectors& candidates,
                                                      double t_sim);

/// Both phases over a tokenized corpus. Threads with no in-vocabulary token
/// are reported in `unprojectable` and never expanded; they may still be
/// keyword seeds but do not act as anchors.
SelectionResult identify_threads(std::span<const TokenizedDoc> docs,
                                 const EmbeddingMatrix& emb,
                                 std::span<const KeywordSet> sets, double t_sim,
                                 ThreadVectors* projections = nullptr);

}  // namespace threadminer
