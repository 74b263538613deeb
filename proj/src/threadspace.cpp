#include "threadminer/threadspace.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "threadminer/error.hpp"

namespace threadminer {

namespace {

// Single pass computing both pools. Avg accumulates sums and divides at the
// end; max starts at -inf.
ThreadVector pool(const TokenizedDoc& doc, const EmbeddingMatrix& emb, WordWeights weights) {
  const std::size_t m = emb.dims();
  if (!weights.empty() && weights.size() != emb.size()) {
    throw Error(ErrorKind::kValidation, "word weight vector length differs from vocabulary size");
  }
  ThreadVector tv;
  tv.full.assign(2 * m, 0.0);
  std::fill(tv.full.begin() + static_cast<std::ptrdiff_t>(m), tv.full.end(),
            -std::numeric_limits<double>::infinity());
  double* sum = tv.full.data();
  double* mx = tv.full.data() + m;
  for (const std::string& tok : doc.tokens) {
    const auto idx = emb.vocab().index(tok);
    if (!idx) continue;
    const auto v = emb.column(*idx);
    const double scale = weights.empty() ? 1.0 : weights[*idx];
    for (std::size_t k = 0; k < m; ++k) {
      const double x = scale * v[k];
      sum[k] += x;
      mx[k] = std::max(mx[k], x);
    }
    ++tv.in_vocab_count;
  }
  if (tv.in_vocab_count == 0) throw UnprojectableThread(doc.thread_id);
  const double n = static_cast<double>(tv.in_vocab_count);
  for (std::size_t k = 0; k < m; ++k) sum[k] /= n;
  return tv;
}

}  // namespace

std::vector<double> project_avg(const TokenizedDoc& doc, const EmbeddingMatrix& emb) {
  const ThreadVector tv = pool(doc, emb, {});
  return {tv.avg().begin(), tv.avg().end()};
}

std::vector<double> project_max(const TokenizedDoc& doc, const EmbeddingMatrix& emb) {
  const ThreadVector tv = pool(doc, emb, {});
  return {tv.max().begin(), tv.max().end()};
}

ThreadVector project_thread(const TokenizedDoc& doc, const EmbeddingMatrix& emb,
                            WordWeights weights) {
  return pool(doc, emb, weights);
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorKind::kValidation, "cosine_similarity: length mismatch");
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) {
    throw Error(ErrorKind::kNumeric, "cosine_similarity: zero-norm vector");
  }
  const double s = dot / (std::sqrt(na) * std::sqrt(nb));
  return std::clamp(s, -1.0, 1.0);
}

}  // namespace threadminer
