#include "threadminer/embedding.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <thread>

#include "binary_io.hpp"
#include "random.hpp"
#include "text_util.hpp"
#include "threadminer/error.hpp"

namespace threadminer {

EmbeddingMatrix::EmbeddingMatrix(Vocabulary vocab, std::size_t dims,
                                 std::vector<double> data)
    : vocab_(std::move(vocab)), dims_(dims), data_(std::move(data)) {
  if (dims_ == 0) throw Error(ErrorKind::kValidation, "embedding dimension must be > 0");
  if (data_.size() != dims_ * vocab_.size()) {
    throw Error(ErrorKind::kValidation, "embedding data size does not match (m, d)");
  }
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (!std::isfinite(data_[i])) {
      throw Error(ErrorKind::kNumeric,
                  "non-finite component in vector of '" + vocab_.word(i / dims_) + "'");
    }
  }
}

std::span<const double> EmbeddingMatrix::vector(std::string_view word) const {
  const auto idx = vocab_.index(word);
  if (!idx) {
    throw Error(ErrorKind::kValidation,
                "word '" + std::string(word) + "' is not in the vocabulary");
  }
  return column(*idx);
}

namespace {

// log(sigmoid(x)) without overflow.
double log_sigmoid(double x) {
  return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// Shared-weight access. In Hogwild mode every element access is a relaxed
// atomic so concurrent workers race benignly instead of undefinedly.
template <bool kShared>
struct Weights {
  double* p;
  double load(std::size_t i) const {
    if constexpr (kShared) {
      return std::atomic_ref<double>(p[i]).load(std::memory_order_relaxed);
    } else {
      return p[i];
    }
  }
  void add(std::size_t i, double v) const {
    if constexpr (kShared) {
      std::atomic_ref<double> r(p[i]);
      r.store(r.load(std::memory_order_relaxed) + v, std::memory_order_relaxed);
    } else {
      p[i] += v;
    }
  }
};

struct Trainer {
  const TrainParams& params;
  std::size_t dims;
  std::vector<std::vector<std::uint32_t>> sequences;  // in-vocab word ids
  std::vector<double> keep_prob;
  std::vector<double> noise_cdf;
  std::uint64_t tokens_per_epoch = 0;
  std::vector<double> input;   // (m, d) column-major
  std::vector<double> output;  // (m, d) column-major
  std::atomic<std::uint64_t> processed{0};

  std::uint32_t sample_noise(detail::Rng& rng) const {
    const double u = detail::uniform01(rng) * noise_cdf.back();
    const auto it = std::upper_bound(noise_cdf.begin(), noise_cdf.end(), u);
    return static_cast<std::uint32_t>(
        std::min<std::size_t>(it - noise_cdf.begin(), noise_cdf.size() - 1));
  }

  double current_lr(std::uint64_t done) const {
    const double total = static_cast<double>(tokens_per_epoch * params.epochs);
    const double progress = total > 0 ? static_cast<double>(done) / total : 1.0;
    const double lr = params.learning_rate -
                      (params.learning_rate - params.min_learning_rate) * progress;
    return std::max(lr, params.min_learning_rate);
  }

  // Trains on sequences[first, last) for one epoch. Returns (loss sum, pairs).
  template <bool kShared>
  std::pair<double, std::uint64_t> run(std::size_t first, std::size_t last,
                                       detail::Rng& rng) {
    const Weights<kShared> in{input.data()};
    const Weights<kShared> out{output.data()};
    std::vector<double> grad(dims);
    std::vector<double> center(dims);
    std::vector<std::uint32_t> kept;
    double loss = 0.0;
    std::uint64_t pairs = 0;

    for (std::size_t s = first; s < last; ++s) {
      const auto& seq = sequences[s];
      kept.clear();
      for (std::uint32_t w : seq) {
        if (keep_prob[w] >= 1.0 || detail::uniform01(rng) < keep_prob[w]) kept.push_back(w);
      }
      const double lr = current_lr(processed.fetch_add(seq.size(), std::memory_order_relaxed));

      for (std::size_t i = 0; i < kept.size(); ++i) {
        const std::size_t ci = static_cast<std::size_t>(kept[i]) * dims;
        const std::size_t lo = i >= params.window ? i - params.window : 0;
        const std::size_t hi = std::min(kept.size(), i + params.window + 1);
        for (std::size_t j = lo; j < hi; ++j) {
          if (j == i) continue;
          for (std::size_t k = 0; k < dims; ++k) center[k] = in.load(ci + k);
          std::fill(grad.begin(), grad.end(), 0.0);
          for (std::size_t n = 0; n <= params.negatives; ++n) {
            std::uint32_t target;
            double label;
            if (n == 0) {
              target = kept[j];
              label = 1.0;
            } else {
              target = sample_noise(rng);
              if (target == kept[j]) continue;
              label = 0.0;
            }
            const std::size_t ti = static_cast<std::size_t>(target) * dims;
            double dot = 0.0;
            for (std::size_t k = 0; k < dims; ++k) dot += center[k] * out.load(ti + k);
            loss -= label > 0 ? log_sigmoid(dot) : log_sigmoid(-dot);
            const double g = (label - sigmoid(dot)) * lr;
            for (std::size_t k = 0; k < dims; ++k) {
              grad[k] += g * out.load(ti + k);
              out.add(ti + k, g * center[k]);
            }
          }
          for (std::size_t k = 0; k < dims; ++k) in.add(ci + k, grad[k]);
          ++pairs;
        }
      }
    }
    return {loss, pairs};
  }
};

}  // namespace

EmbeddingMatrix train_skipgram(std::span<const TokenizedDoc> docs,
                               const Vocabulary& vocab, const TrainParams& params,
                               TrainReport* report) {
  if (docs.empty()) throw Error(ErrorKind::kValidation, "cannot train on an empty document list");
  if (vocab.empty()) throw Error(ErrorKind::kValidation, "cannot train with an empty vocabulary");
  if (params.dims == 0) throw Error(ErrorKind::kValidation, "dims must be >= 1");
  if (params.window == 0) throw Error(ErrorKind::kValidation, "window must be >= 1");
  if (params.epochs == 0) throw Error(ErrorKind::kValidation, "epochs must be >= 1");
  if (vocab.size() > UINT32_MAX) throw Error(ErrorKind::kValidation, "vocabulary too large");

  const std::size_t d = vocab.size();
  const std::size_t m = params.dims;
  Trainer tr{params, m, {}, {}, {}, 0, {}, {}};

  tr.sequences.reserve(docs.size());
  for (const TokenizedDoc& doc : docs) {
    std::vector<std::uint32_t> seq;
    seq.reserve(doc.tokens.size());
    for (const std::string& tok : doc.tokens) {
      if (const auto idx = vocab.index(tok)) seq.push_back(static_cast<std::uint32_t>(*idx));
    }
    tr.tokens_per_epoch += seq.size();
    tr.sequences.push_back(std::move(seq));
  }

  const double total = static_cast<double>(std::max<std::uint64_t>(vocab.total_count(), 1));
  tr.keep_prob.assign(d, 1.0);
  if (params.subsample > 0) {
    const double threshold = params.subsample * total;
    for (std::size_t i = 0; i < d; ++i) {
      const double f = static_cast<double>(std::max<std::uint64_t>(vocab.count(i), 1));
      tr.keep_prob[i] = (std::sqrt(f / threshold) + 1.0) * threshold / f;
    }
  }

  tr.noise_cdf.resize(d);
  double acc = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    acc += std::pow(static_cast<double>(std::max<std::uint64_t>(vocab.count(i), 1)),
                    params.noise_power);
    tr.noise_cdf[i] = acc;
  }

  detail::Rng init_rng(detail::derive_seed(params.seed, 0));
  tr.input.resize(m * d);
  for (double& x : tr.input) x = (detail::uniform01(init_rng) - 0.5) / static_cast<double>(m);
  tr.output.assign(m * d, 0.0);

  const std::size_t workers = std::max<std::size_t>(1, std::min(params.workers, docs.size()));
  for (std::size_t epoch = 0; epoch < params.epochs; ++epoch) {
    double loss = 0.0;
    std::uint64_t pairs = 0;
    if (workers == 1) {
      detail::Rng rng(detail::derive_seed(params.seed, 1 + epoch));
      std::tie(loss, pairs) = tr.run<false>(0, tr.sequences.size(), rng);
    } else {
      std::vector<std::pair<double, std::uint64_t>> partial(workers);
      {
        std::vector<std::jthread> pool;
        const std::size_t n = tr.sequences.size();
        for (std::size_t w = 0; w < workers; ++w) {
          pool.emplace_back([&, w] {
            detail::Rng rng(detail::derive_seed(params.seed, 1 + epoch * workers + w));
            partial[w] = tr.run<true>(n * w / workers, n * (w + 1) / workers, rng);
          });
        }
      }
      for (const auto& [l, p] : partial) {
        loss += l;
        pairs += p;
      }
    }
    if (report) {
      report->epoch_loss.push_back(pairs ? loss / static_cast<double>(pairs) : 0.0);
      report->epoch_pairs.push_back(pairs);
    }
  }

  return EmbeddingMatrix(vocab, m, std::move(tr.input));
}

std::vector<Neighbor> nearest_neighbors(const EmbeddingMatrix& emb,
                                        std::string_view word, std::size_t k) {
  const auto q = emb.vocab().index(word);
  if (!q) {
    throw Error(ErrorKind::kValidation,
                "word '" + std::string(word) + "' is not in the vocabulary");
  }
  if (k < 1 || k + 1 > emb.size()) {
    throw Error(ErrorKind::kValidation, "k must be in [1, d-1]");
  }
  const auto norm = [](std::span<const double> v) {
    return std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
  };
  const auto qv = emb.column(*q);
  const double qn = norm(qv);

  std::vector<std::pair<double, std::size_t>> scored;
  scored.reserve(emb.size() - 1);
  for (std::size_t i = 0; i < emb.size(); ++i) {
    if (i == *q) continue;
    const auto v = emb.column(i);
    const double vn = norm(v);
    const double s = (qn > 0 && vn > 0)
                         ? std::inner_product(qv.begin(), qv.end(), v.begin(), 0.0) / (qn * vn)
                         : 0.0;
    scored.emplace_back(s, i);
  }
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(k),
                    scored.end(), [](const auto& a, const auto& b) {
                      return a.first != b.first ? a.first > b.first : a.second < b.second;
                    });
  std::vector<Neighbor> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    out.push_back({emb.vocab().word(scored[i].second), scored[i].first});
  }
  return out;
}

void save_embedding_text(const EmbeddingMatrix& emb, std::ostream& out) {
  out << emb.size() << ' ' << emb.dims() << '\n';
  char buf[32];
  for (std::size_t i = 0; i < emb.size(); ++i) {
    out << emb.vocab().word(i);
    for (double x : emb.column(i)) {
      std::snprintf(buf, sizeof buf, " %.9g", x);
      out << buf;
    }
    out << '\n';
  }
}

EmbeddingMatrix load_embedding_text(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::kParse, "embedding text: missing header");
  std::size_t d = 0, m = 0;
  {
    std::istringstream hs(line);
    if (!(hs >> d >> m) || m == 0) {
      throw Error(ErrorKind::kParse, "embedding text: header must be 'd m'");
    }
  }
  std::vector<std::string> words;
  std::vector<double> data;
  words.reserve(d);
  data.reserve(d * m);
  std::size_t line_no = 1;
  while (words.size() < d && std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    std::istringstream ls(line);
    std::string word, field;
    ls >> word;
    words.push_back(std::move(word));
    std::size_t n = 0;
    while (ls >> field) {
      double v;
      const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
      if (ec != std::errc() || ptr != field.data() + field.size()) {
        throw Error(ErrorKind::kParse, "embedding text line " + std::to_string(line_no) +
                                           ": bad number '" + field + "'");
      }
      data.push_back(v);
      ++n;
    }
    if (n != m) {
      throw Error(ErrorKind::kParse, "embedding text line " + std::to_string(line_no) +
                                         ": expected " + std::to_string(m) +
                                         " values, got " + std::to_string(n));
    }
  }
  if (words.size() != d) {
    throw Error(ErrorKind::kParse, "embedding text: expected " + std::to_string(d) +
                                       " word lines, got " + std::to_string(words.size()));
  }
  return EmbeddingMatrix(Vocabulary(std::move(words), std::vector<std::uint64_t>(d, 0)), m,
                         std::move(data));
}

void save_embedding_text(const EmbeddingMatrix& emb, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::kIo, "cannot write '" + path + "'");
  save_embedding_text(emb, out);
  if (!out) throw Error(ErrorKind::kIo, "write failed for '" + path + "'");
}

EmbeddingMatrix load_embedding_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open embedding '" + path + "'");
  return load_embedding_text(in);
}

namespace {
constexpr std::string_view kEmbeddingMagic = "TMEMBED\0";
constexpr std::uint32_t kEmbeddingVersion = 1;
}  // namespace

void save_embedding_binary(const EmbeddingMatrix& emb, std::ostream& out,
                           std::string_view provenance) {
  detail::BinaryWriter w(out);
  w.raw(kEmbeddingMagic.data(), kEmbeddingMagic.size());
  w.u32(kEmbeddingVersion);
  w.str(provenance);
  w.u64(emb.size());
  w.u64(emb.dims());
  for (std::size_t i = 0; i < emb.size(); ++i) {
    w.str(emb.vocab().word(i));
    w.u64(emb.vocab().count(i));
  }
  w.f64s(emb.data());
  w.check();
}

EmbeddingMatrix load_embedding_binary(std::istream& in, std::string* provenance) {
  detail::BinaryReader r(in, "embedding");
  r.magic(kEmbeddingMagic);
  if (const auto v = r.u32(); v != kEmbeddingVersion) {
    throw Error(ErrorKind::kParse, "embedding: unsupported format version " + std::to_string(v));
  }
  std::string prov = r.str();
  if (provenance) *provenance = std::move(prov);
  const std::size_t d = r.length();
  const std::size_t m = r.length();
  std::vector<std::string> words(d);
  std::vector<std::uint64_t> counts(d);
  for (std::size_t i = 0; i < d; ++i) {
    words[i] = r.str();
    counts[i] = r.u64();
  }
  std::vector<double> data = r.f64s();
  if (data.size() != d * m) throw Error(ErrorKind::kParse, "embedding: dimension mismatch");
  return EmbeddingMatrix(Vocabulary(std::move(words), std::move(counts)), m, std::move(data));
}

void save_embedding_binary(const EmbeddingMatrix& emb, const std::string& path,
                           std::string_view provenance) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kIo, "cannot write '" + path + "'");
  save_embedding_binary(emb, out, provenance);
}

EmbeddingMatrix load_embedding_binary(const std::string& path, std::string* provenance) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open embedding '" + path + "'");
  return load_embedding_binary(in, provenance);
}

std::uint64_t embedding_fingerprint(const EmbeddingMatrix& emb) {
  std::uint64_t h = detail::fnv1a64(std::to_string(emb.dims()));
  for (std::size_t i = 0; i < emb.size(); ++i) {
    h = detail::fnv1a64(emb.vocab().word(i), h);
    h = detail::fnv1a64(std::string_view("\0", 1), h);
  }
  const auto& data = emb.data();
  h = detail::fnv1a64(std::string_view(reinterpret_cast<const char*>(data.data()),
                                       data.size() * sizeof(double)),
                      h);
  return h;
}

}  // namespace threadminer
