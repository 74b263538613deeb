#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "threadminer/corpus.hpp"
#include "threadminer/embedding.hpp"
#include "threadminer/forest.hpp"
#include "threadminer/identify.hpp"
#include "threadminer/preprocess.hpp"

namespace threadminer {

/// A user-defined class and the words that characterize it.
struct ClassSpec {
  std::string name;
  std::vector<std::string> words;
};

struct ClassVector {
  std::vector<double> w;                  // mean of in-vocabulary word vectors
  std::vector<std::string> missing_words;  // class words not in the vocabulary
};

/// Throws Error(kValidation) naming the class when no word is in vocabulary.
ClassVector class_vector(const ClassSpec& spec, const EmbeddingMatrix& emb);

/// Softmax with max subtraction. Components are positive and sum to 1.
std::vector<double> softmax(std::span<const double> scores);

/// beta[i] = softmax over the vocabulary of cos(v_i, w_c). Throws naming the
/// word when some vocabulary vector has zero norm.
std::vector<double> affinity_vector(const EmbeddingMatrix& emb, const ClassVector& cvec);

/// Avg/max pooling of beta[i] * v_i over the doc, concatenated (length 2m).
std::vector<double> weighted_thread_projection(const TokenizedDoc& doc,
                                               const EmbeddingMatrix& emb,
                                               std::span<const double> beta);

struct ContextualFeatures {
  double newlines_first_post = 0;
  double length_first_post = 0;  // Unicode code points
  double reply_count = 0;
  double avg_reply_newlines = 0;
  double avg_reply_length = 0;
  std::vector<double> keyword_set_counts;  // one per keyword set

  static constexpr std::size_t kFixedCount = 5;
  std::vector<double> to_vector() const;
};

ContextualFeatures contextual_features(const Thread& thread, const TokenizedDoc& doc,
                                       std::span<const KeywordSet> sets);

std::size_t utf8_length(std::string_view s);

struct EnsembleParams {
  ForestParams forest;
  double boost = 2.0;  // sample weight of the favoured class in its forest
  bool use_contextual = true;
};

struct LabeledThread {
  const Thread* thread;
  const TokenizedDoc* doc;
  std::size_t label;  // index into the class list
};

/// Sample weights for the forest favouring `favored`: boost for its
/// examples, 1 otherwise.
std::vector<double> class_sample_weights(std::span<const std::size_t> labels,
                                         std::size_t favored, double boost);

/// Weighted 2m projection followed by the contextual features (if enabled).
std::vector<double> thread_features(const Thread& thread, const TokenizedDoc& doc,
                                    const EmbeddingMatrix& emb, std::span<const double> beta,
                                    std::span<const KeywordSet> sets, bool use_contextual);

/// Plurality over per-forest votes; ties go to the larger summed
/// confidence, then to the earlier class.
std::size_t resolve_votes(std::span<const std::size_t> forest_votes,
                          std::span<const double> summed_confidence);

struct Prediction {
  std::size_t label = 0;
  std::vector<std::size_t> forest_votes;   // class voted by each per-class forest
  std::vector<std::size_t> vote_counts;    // forests voting for each class
  std::vector<double> summed_confidence;   // sum of tree-vote fractions per class
};

/// One affinity vector and one class-biased forest per class.
class EnsembleModel {
 public:
  const std::vector<ClassSpec>& classes() const { return classes_; }
  const std::vector<KeywordSet>& keyword_sets() const { return sets_; }
  const std::vector<std::vector<double>>& affinities() const { return betas_; }
  const std::vector<Forest>& forests() const { return forests_; }
  std::size_t dims() const { return dims_; }
  bool use_contextual() const { return use_contextual_; }
  std::uint64_t embedding_fingerprint() const { return fingerprint_; }
  std::size_t feature_count() const;

  /// Throws Error(kDependency) when `emb` is not the embedding it was trained on.
  void check_embedding(const EmbeddingMatrix& emb) const;

  /// Throws UnprojectableThread when the doc has no in-vocabulary token.
  Prediction predict(const Thread& thread, const TokenizedDoc& doc,
                     const EmbeddingMatrix& emb) const;

  void save(std::ostream& out, std::string_view provenance = {}) const;
  static EnsembleModel load(std::istream& in, std::string* provenance = nullptr);

 private:
  friend EnsembleModel train_ensemble(std::span<const LabeledThread>,
                                      std::span<const ClassSpec>, const EmbeddingMatrix&,
                                      std::span<const KeywordSet>, const EnsembleParams&);

  std::vector<ClassSpec> classes_;
  std::vector<KeywordSet> sets_;
  std::vector<std::vector<double>> betas_;
  std::vector<Forest> forests_;
  std::size_t dims_ = 0;
  bool use_contextual_ = true;
  double boost_ = 1.0;
  std::uint64_t fingerprint_ = 0;
};

EnsembleModel train_ensemble(std::span<const LabeledThread> labeled,
                             std::span<const ClassSpec> specs, const EmbeddingMatrix& emb,
                             std::span<const KeywordSet> sets, const EnsembleParams& params);

}  // namespace threadminer
