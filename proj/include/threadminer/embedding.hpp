#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "threadminer/preprocess.hpp"

namespace threadminer {

/// Skip-gram with negative sampling. Defaults follow the usual word2vec
/// configuration apart from the window, which is 10.
struct TrainParams {
  std::size_t dims = 100;
  std::size_t window = 10;
  std::size_t epochs = 5;
  std::size_t negatives = 5;
  double learning_rate = 0.025;
  double min_learning_rate = 1e-4;
  double subsample = 1e-3;  // <= 0 disables frequent-word subsampling
  double noise_power = 0.75;
  std::uint64_t seed = 1;
  /// 1 = deterministic. More workers share the weights without locking and
  /// the result then depends on scheduling.
  std::size_t workers = 1;
};

/// Dense (m, d) matrix; column i is the vector of vocabulary word i.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;
  EmbeddingMatrix(Vocabulary vocab, std::size_t dims, std::vector<double> data);

  std::size_t dims() const { return dims_; }
  std::size_t size() const { return vocab_.size(); }
  const Vocabulary& vocab() const { return vocab_; }

  std::span<const double> column(std::size_t i) const {
    return {data_.data() + i * dims_, dims_};
  }
  /// Throws Error(kValidation) naming the word when it is out of vocabulary.
  std::span<const double> vector(std::string_view word) const;
  const std::vector<double>& data() const { return data_; }

 private:
  Vocabulary vocab_;
  std::size_t dims_ = 0;
  std::vector<double> data_;
};

struct TrainReport {
  std::vector<double> epoch_loss;  // mean negative log-likelihood per pair
  std::vector<std::uint64_t> epoch_pairs;
};

EmbeddingMatrix train_skipgram(std::span<const TokenizedDoc> docs,
                               const Vocabulary& vocab, const TrainParams& params,
                               TrainReport* report = nullptr);

struct Neighbor {
  std::string word;
  double score;
};

/// Top-k words by cosine similarity to `word`, excluding the word itself.
/// Zero-norm columns score 0.
std::vector<Neighbor> nearest_neighbors(const EmbeddingMatrix& emb,
                                        std::string_view word, std::size_t k);

// Text: "d m" header, then "word c1 ... cm" per line.
void save_embedding_text(const EmbeddingMatrix& emb, std::ostream& out);
EmbeddingMatrix load_embedding_text(std::istream& in);
void save_embedding_text(const EmbeddingMatrix& emb, const std::string& path);
EmbeddingMatrix load_embedding_text(const std::string& path);

// Binary: magic, format version, provenance string, vocabulary with counts,
// raw little-endian doubles. Round-trips exactly.
void save_embedding_binary(const EmbeddingMatrix& emb, std::ostream& out,
                           std::string_view provenance = {});
EmbeddingMatrix load_embedding_binary(std::istream& in,
                                      std::string* provenance = nullptr);
void save_embedding_binary(const EmbeddingMatrix& emb, const std::string& path,
                           std::string_view provenance = {});
EmbeddingMatrix load_embedding_binary(const std::string& path,
                                      std::string* provenance = nullptr);

/// Stable content hash over words and vector bits.
std::uint64_t embedding_fingerprint(const EmbeddingMatrix& emb);

}  // namespace threadminer
