#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "threadminer/embedding.hpp"
#include "threadminer/preprocess.hpp"

namespace threadminer {

/// A thread in the 2m-dimensional space: mean-pooled and max-pooled word
/// vectors, concatenated.
struct ThreadVector {
  std::vector<double> full;  // avg (first m) followed by max (last m)
  std::size_t in_vocab_count = 0;

  std::size_t dims() const { return full.size() / 2; }
  std::span<const double> avg() const { return {full.data(), dims()}; }
  std::span<const double> max() const { return {full.data() + dims(), dims()}; }
};

/// Per-word scale applied before pooling, indexed by vocabulary position.
/// An empty span means no scaling.
using WordWeights = std::span<const double>;

/// Componentwise mean of the in-vocabulary token vectors (duplicates count).
/// Throws UnprojectableThread when no token is in the vocabulary.
std::vector<double> project_avg(const TokenizedDoc& doc, const EmbeddingMatrix& emb);

/// Componentwise max of the in-vocabulary token vectors.
std::vector<double> project_max(const TokenizedDoc& doc, const EmbeddingMatrix& emb);

ThreadVector project_thread(const TokenizedDoc& doc, const EmbeddingMatrix& emb,
                            WordWeights weights = {});

/// a.b / (|a||b|). Throws on length mismatch or a zero-norm input.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

}  // namespace threadminer
