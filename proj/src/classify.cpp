#include "threadminer/classify.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>

#include "binary_io.hpp"
#include "threadminer/error.hpp"
#include "threadminer/threadspace.hpp"

namespace threadminer {

ClassVector class_vector(const ClassSpec& spec, const EmbeddingMatrix& emb) {
  ClassVector cv;
  cv.w.assign(emb.dims(), 0.0);
  std::size_t found = 0;
  for (const std::string& word : spec.words) {
    const auto idx = emb.vocab().index(word);
    if (!idx) {
      cv.missing_words.push_back(word);
      continue;
    }
    const auto v = emb.column(*idx);
    for (std::size_t k = 0; k < cv.w.size(); ++k) cv.w[k] += v[k];
    ++found;
  }
  if (found == 0) {
    throw Error(ErrorKind::kValidation,
                "class '" + spec.name + "' has no defining word in the vocabulary");
  }
  for (double& x : cv.w) x /= static_cast<double>(found);
  if (std::all_of(cv.w.begin(), cv.w.end(), [](double x) { return x == 0.0; })) {
    throw Error(ErrorKind::kNumeric, "class '" + spec.name + "' has a zero class vector");
  }
  return cv;
}

std::vector<double> softmax(std::span<const double> scores) {
  std::vector<double> out(scores.begin(), scores.end());
  if (out.empty()) return out;
  const double mx = *std::max_element(out.begin(), out.end());
  double total = 0.0;
  for (double& x : out) {
    x = std::exp(x - mx);
    total += x;
  }
  for (double& x : out) x /= total;
  return out;
}

std::vector<double> affinity_vector(const EmbeddingMatrix& emb, const ClassVector& cvec) {
  std::vector<double> sims(emb.size());
  for (std::size_t i = 0; i < emb.size(); ++i) {
    const auto v = emb.column(i);
    if (std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; })) {
      throw Error(ErrorKind::kNumeric,
                  "word '" + emb.vocab().word(i) + "' has a zero-norm vector");
    }
    sims[i] = cosine_similarity(v, cvec.w);
  }
  return softmax(sims);
}

std::vector<double> weighted_thread_projection(const TokenizedDoc& doc,
                                               const EmbeddingMatrix& emb,
                                               std::span<const double> beta) {
  if (beta.size() != emb.size()) {
    throw Error(ErrorKind::kValidation, "affinity vector length differs from vocabulary size");
  }
  return project_thread(doc, emb, beta).full;
}

std::size_t utf8_length(std::string_view s) {
  return static_cast<std::size_t>(std::count_if(s.begin(), s.end(), [](char c) {
    return (static_cast<unsigned char>(c) & 0xC0) != 0x80;
  }));
}

std::vector<double> ContextualFeatures::to_vector() const {
  std::vector<double> v{newlines_first_post, length_first_post, reply_count,
                        avg_reply_newlines, avg_reply_length};
  v.insert(v.end(), keyword_set_counts.begin(), keyword_set_counts.end());
  return v;
}

ContextualFeatures contextual_features(const Thread& thread, const TokenizedDoc& doc,
                                       std::span<const KeywordSet> sets) {
  const auto newlines = [](const std::string& s) {
    return static_cast<double>(std::count(s.begin(), s.end(), '\n'));
  };
  ContextualFeatures f;
  if (!thread.posts.empty()) {
    const std::string& first = thread.posts.front().body;
    f.newlines_first_post = newlines(first);
    f.length_first_post = static_cast<double>(utf8_length(first));
  }
  const std::size_t replies = thread.posts.size() > 1 ? thread.posts.size() - 1 : 0;
  f.reply_count = static_cast<double>(replies);
  if (replies > 0) {
    double nl = 0.0, len = 0.0;
    for (std::size_t i = 1; i < thread.posts.size(); ++i) {
      nl += newlines(thread.posts[i].body);
      len += static_cast<double>(utf8_length(thread.posts[i].body));
    }
    f.avg_reply_newlines = nl / static_cast<double>(replies);
    f.avg_reply_length = len / static_cast<double>(replies);
  }
  for (const KeywordSet& s : sets) {
    f.keyword_set_counts.push_back(static_cast<double>(keyword_hits(doc, s)));
  }
  return f;
}

std::vector<double> class_sample_weights(std::span<const std::size_t> labels,
                                         std::size_t favored, double boost) {
  std::vector<double> w(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) w[i] = labels[i] == favored ? boost : 1.0;
  return w;
}

std::vector<double> thread_features(const Thread& thread, const TokenizedDoc& doc,
                                    const EmbeddingMatrix& emb, std::span<const double> beta,
                                    std::span<const KeywordSet> sets, bool use_contextual) {
  std::vector<double> x = weighted_thread_projection(doc, emb, beta);
  if (use_contextual) {
    const auto ctx = contextual_features(thread, doc, sets).to_vector();
    x.insert(x.end(), ctx.begin(), ctx.end());
  }
  return x;
}

std::size_t resolve_votes(std::span<const std::size_t> forest_votes,
                          std::span<const double> summed_confidence) {
  const std::size_t k = summed_confidence.size();
  std::vector<std::size_t> counts(k, 0);
  for (std::size_t v : forest_votes) {
    if (v >= k) throw Error(ErrorKind::kValidation, "vote for unknown class");
    ++counts[v];
  }
  std::size_t best = 0;
  for (std::size_t c = 1; c < k; ++c) {
    if (counts[c] > counts[best] ||
        (counts[c] == counts[best] && summed_confidence[c] > summed_confidence[best])) {
      best = c;
    }
  }
  return best;
}

std::size_t EnsembleModel::feature_count() const {
  return 2 * dims_ + (use_contextual_ ? ContextualFeatures::kFixedCount + sets_.size() : 0);
}

void EnsembleModel::check_embedding(const EmbeddingMatrix& emb) const {
  if (emb.dims() != dims_ || threadminer::embedding_fingerprint(emb) != fingerprint_) {
    throw Error(ErrorKind::kDependency,
                "model was trained on a different embedding than the one supplied");
  }
}

Prediction EnsembleModel::predict(const Thread& thread, const TokenizedDoc& doc,
                                  const EmbeddingMatrix& emb) const {
  const std::size_t k = classes_.size();
  Prediction p;
  p.vote_counts.assign(k, 0);
  p.summed_confidence.assign(k, 0.0);
  for (std::size_t c = 0; c < k; ++c) {
    const auto x = thread_features(thread, doc, emb, betas_[c], sets_, use_contextual_);
    const auto fractions = forests_[c].vote_fractions(x);
    const auto vote = static_cast<std::size_t>(
        std::max_element(fractions.begin(), fractions.end()) - fractions.begin());
    p.forest_votes.push_back(vote);
    ++p.vote_counts[vote];
    for (std::size_t j = 0; j < k; ++j) p.summed_confidence[j] += fractions[j];
  }
  p.label = resolve_votes(p.forest_votes, p.summed_confidence);
  return p;
}

EnsembleModel train_ensemble(std::span<const LabeledThread> labeled,
                             std::span<const ClassSpec> specs, const EmbeddingMatrix& emb,
                             std::span<const KeywordSet> sets, const EnsembleParams& params) {
  if (specs.size() < 2) throw Error(ErrorKind::kValidation, "need at least two classes");
  if (!(params.boost > 0)) throw Error(ErrorKind::kValidation, "boost must be > 0");
  std::vector<std::size_t> labels;
  labels.reserve(labeled.size());
  std::vector<std::size_t> per_class(specs.size(), 0);
  for (const LabeledThread& lt : labeled) {
    if (lt.label >= specs.size()) throw Error(ErrorKind::kValidation, "label out of range");
    labels.push_back(lt.label);
    ++per_class[lt.label];
  }
  for (std::size_t c = 0; c < specs.size(); ++c) {
    if (per_class[c] == 0) {
      throw Error(ErrorKind::kValidation,
                  "class '" + specs[c].name + "' has no labeled example");
    }
  }

  EnsembleModel model;
  model.classes_.assign(specs.begin(), specs.end());
  model.sets_.assign(sets.begin(), sets.end());
  model.dims_ = emb.dims();
  model.use_contextual_ = params.use_contextual;
  model.boost_ = params.boost;
  model.fingerprint_ = embedding_fingerprint(emb);

  for (std::size_t c = 0; c < specs.size(); ++c) {
    std::vector<double> beta = affinity_vector(emb, class_vector(specs[c], emb));
    FeatureMatrix x(model.feature_count());
    for (const LabeledThread& lt : labeled) {
      x.push_row(thread_features(*lt.thread, *lt.doc, emb, beta, sets, params.use_contextual));
    }
    const auto weights = class_sample_weights(labels, c, params.boost);
    model.forests_.push_back(train_forest(x, labels, specs.size(), weights, params.forest));
    model.betas_.push_back(std::move(beta));
  }
  return model;
}

namespace {
constexpr std::string_view kModelMagic = "TMMODEL\0";
constexpr std::uint32_t kModelVersion = 1;
}  // namespace

void EnsembleModel::save(std::ostream& out, std::string_view provenance) const {
  detail::BinaryWriter w(out);
  w.raw(kModelMagic.data(), kModelMagic.size());
  w.u32(kModelVersion);
  w.str(provenance);
  w.u64(fingerprint_);
  w.u64(dims_);
  w.u8(use_contextual_ ? 1 : 0);
  w.f64(boost_);
  w.u64(classes_.size());
  for (const ClassSpec& c : classes_) {
    w.str(c.name);
    w.u64(c.words.size());
    for (const auto& word : c.words) w.str(word);
  }
  w.u64(sets_.size());
  for (const KeywordSet& s : sets_) {
    w.str(s.name);
    w.u64(s.threshold);
    w.u64(s.words.size());
    for (const auto& word : s.words) w.str(word);
  }
  for (std::size_t c = 0; c < classes_.size(); ++c) {
    w.f64s(betas_[c]);
    w.check();
    forests_[c].save(out);
  }
  w.check();
}

EnsembleModel EnsembleModel::load(std::istream& in, std::string* provenance) {
  detail::BinaryReader r(in, "model");
  r.magic(kModelMagic);
  if (const auto v = r.u32(); v != kModelVersion) {
    throw Error(ErrorKind::kParse, "model: unsupported format version " + std::to_string(v));
  }
  EnsembleModel m;
  std::string prov = r.str();
  if (provenance) *provenance = std::move(prov);
  m.fingerprint_ = r.u64();
  m.dims_ = r.length();
  m.use_contextual_ = r.u8() != 0;
  m.boost_ = r.f64();
  m.classes_.resize(r.length(1u << 20));
  for (ClassSpec& c : m.classes_) {
    c.name = r.str();
    c.words.resize(r.length(1u << 24));
    for (auto& word : c.words) word = r.str();
  }
  const std::size_t n_sets = r.length(1u << 20);
  for (std::size_t i = 0; i < n_sets; ++i) {
    KeywordSet s;
    s.name = r.str();
    s.threshold = r.length();
    const std::size_t n = r.length(1u << 24);
    for (std::size_t j = 0; j < n; ++j) s.words.insert(r.str());
    m.sets_.push_back(std::move(s));
  }
  for (std::size_t c = 0; c < m.classes_.size(); ++c) {
    m.betas_.push_back(r.f64s());
    m.forests_.push_back(Forest::load(in));
    if (m.forests_.back().n_features() != m.feature_count() ||
        m.forests_.back().n_classes() != m.classes_.size()) {
      throw Error(ErrorKind::kParse, "model: forest layout does not match the model");
    }
  }
  return m;
}

}  // namespace threadminer
