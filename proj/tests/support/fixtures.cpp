#include "fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

#include "random.hpp"

namespace tmtest {

namespace fs = std::filesystem;
using threadminer::detail::Rng;
using threadminer::detail::normal;
using threadminer::detail::uniform01;
using threadminer::detail::uniform_index;

tm::EmbeddingMatrix make_embedding(std::vector<std::string> words, std::size_t m,
                                   std::vector<double> columns) {
  std::vector<std::uint64_t> counts(words.size(), 1);
  return tm::EmbeddingMatrix(tm::Vocabulary(std::move(words), std::move(counts)), m,
                             std::move(columns));
}

tm::EmbeddingMatrix random_embedding(std::size_t d, std::size_t m, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::string> words;
  for (std::size_t i = 0; i < d; ++i) words.push_back("w" + std::to_string(i));
  std::vector<double> data(d * m);
  for (auto& x : data) x = normal(rng);
  return make_embedding(std::move(words), m, std::move(data));
}

tm::TokenizedDoc random_doc(const tm::EmbeddingMatrix& emb, std::size_t len, double oov_rate,
                            std::uint64_t seed, std::string id) {
  Rng rng(seed);
  tm::TokenizedDoc doc{std::move(id), {}};
  for (std::size_t i = 0; i < len; ++i) {
    if (uniform01(rng) < oov_rate) {
      doc.tokens.push_back("oov" + std::to_string(uniform_index(rng, 5)));
    } else {
      doc.tokens.push_back(emb.vocab().word(uniform_index(rng, emb.size())));
    }
  }
  doc.tokens.push_back(emb.vocab().word(uniform_index(rng, emb.size())));
  return doc;
}

namespace {

long linear_find(const tm::EmbeddingMatrix& emb, const std::string& w) {
  const auto& words = emb.vocab().words();
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (words[i] == w) return static_cast<long>(i);
  }
  return -1;
}

std::vector<std::vector<double>> scaled_vectors(const tm::TokenizedDoc& doc,
                                                const tm::EmbeddingMatrix& emb,
                                                std::span<const double> beta) {
  std::vector<std::vector<double>> out;
  const std::size_t m = emb.dims();
  for (const auto& t : doc.tokens) {
    const long i = linear_find(emb, t);
    if (i < 0) continue;
    std::vector<double> v(m);
    for (std::size_t k = 0; k < m; ++k) {
      v[k] = emb.data()[static_cast<std::size_t>(i) * m + k];
      if (!beta.empty()) v[k] = beta[static_cast<std::size_t>(i)] * v[k];
    }
    out.push_back(std::move(v));
  }
  if (out.empty()) throw std::runtime_error("reference: no in-vocabulary token");
  return out;
}

}  // namespace

std::vector<double> ref_avg(const tm::TokenizedDoc& doc, const tm::EmbeddingMatrix& emb,
                            std::span<const double> beta) {
  const auto vs = scaled_vectors(doc, emb, beta);
  std::vector<double> sum(emb.dims(), 0.0);
  for (const auto& v : vs) {
    for (std::size_t k = 0; k < v.size(); ++k) sum[k] += v[k];
  }
  for (auto& x : sum) x /= static_cast<double>(vs.size());
  return sum;
}

std::vector<double> ref_max(const tm::TokenizedDoc& doc, const tm::EmbeddingMatrix& emb,
                            std::span<const double> beta) {
  const auto vs = scaled_vectors(doc, emb, beta);
  std::vector<double> mx(emb.dims(), -std::numeric_limits<double>::infinity());
  for (const auto& v : vs) {
    for (std::size_t k = 0; k < v.size(); ++k) mx[k] = std::max(mx[k], v[k]);
  }
  return mx;
}

std::vector<double> ref_full(const tm::TokenizedDoc& doc, const tm::EmbeddingMatrix& emb,
                             std::span<const double> beta) {
  auto out = ref_avg(doc, emb, beta);
  const auto mx = ref_max(doc, emb, beta);
  out.insert(out.end(), mx.begin(), mx.end());
  return out;
}

double ref_cosine(std::span<const double> a, std::span<const double> b) {
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return dot / std::sqrt(na * nb);
}

std::vector<double> ref_affinity(const tm::EmbeddingMatrix& emb, std::span<const double> w) {
  std::vector<double> e(emb.size());
  double total = 0;
  for (std::size_t i = 0; i < emb.size(); ++i) {
    e[i] = std::exp(ref_cosine(emb.column(i), w));
    total += e[i];
  }
  for (auto& x : e) x /= total;
  return e;
}

std::set<std::string> ref_keyword_select(std::span<const tm::TokenizedDoc> docs,
                                         std::span<const tm::KeywordSet> sets) {
  std::set<std::string> out;
  for (const auto& doc : docs) {
    bool ok = true;
    for (const auto& s : sets) {
      std::size_t n = 0;
      for (const auto& t : doc.tokens) {
        for (const auto& w : s.words) {
          if (t == w) ++n;
        }
      }
      if (n < s.threshold) ok = false;
    }
    if (ok) out.insert(doc.thread_id);
  }
  return out;
}

std::map<std::string, double> ref_expand(const tm::ThreadVectors& seeds,
                                         const tm::ThreadVectors& candidates, double t_sim) {
  std::map<std::string, double> out;
  for (const auto& [cid, cv] : candidates) {
    double best = -2;
    for (const auto& [sid, sv] : seeds) best = std::max(best, ref_cosine(cv.full, sv.full));
    if (best >= t_sim) out[cid] = best;
  }
  return out;
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
  double d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

std::vector<tm::ClassSpec> table_classes() {
  return {{"Hacks", {"tutorial", "guide", "steps"}},
          {"Services", {"tool", "price", "pay"}},
          {"Alerts", {"announced", "reported", "hacked"}},
          {"Experiences", {"article", "story", "challenge"}}};
}

ClassForum make_class_forum(const ClassForumParams& p) {
  Rng rng(p.seed);
  ClassForum forum;
  forum.specs = table_classes();
  const std::size_t n_classes = forum.specs.size();
  const std::size_t m = p.dims;
  for (const auto& s : forum.specs) forum.class_names.push_back(s.name);

  std::vector<std::string> words;
  std::vector<double> data;
  auto add_word = [&](std::string w, const std::vector<double>& v) {
    words.push_back(std::move(w));
    data.insert(data.end(), v.begin(), v.end());
  };
  auto unit_normal = [&] {
    std::vector<double> v(m);
    double n = 0;
    for (auto& x : v) {
      x = normal(rng);
      n += x * x;
    }
    for (auto& x : v) x /= std::sqrt(n);
    return v;
  };

  std::vector<std::vector<std::string>> pools(n_classes);
  const char* prefixes[] = {"hk", "sv", "al", "ex"};
  for (std::size_t c = 0; c < n_classes; ++c) {
    const auto centre = unit_normal();
    for (const auto& w : forum.specs[c].words) {
      auto v = centre;
      for (auto& x : v) x += 0.1 * normal(rng);
      add_word(w, v);
      pools[c].push_back(w);
    }
    for (std::size_t i = 0; i < p.topical_words; ++i) {
      auto v = centre;
      const auto off = unit_normal();
      for (std::size_t k = 0; k < m; ++k) v[k] += p.spread * off[k];
      std::string w = prefixes[c] + std::to_string(i);
      add_word(w, v);
      pools[c].push_back(w);
    }
  }
  std::vector<std::string> noise;
  for (std::size_t i = 0; i < p.noise_words; ++i) {
    std::string w = "nz" + std::to_string(i);
    add_word(w, unit_normal());
    noise.push_back(w);
  }
  forum.emb = make_embedding(std::move(words), m, std::move(data));

  for (std::size_t t = 0; t < p.threads; ++t) {
    const std::size_t c = t % n_classes;
    char id[16];
    std::snprintf(id, sizeof id, "s%04zu", t);
    tm::TokenizedDoc doc{id, {}};
    const std::size_t len = p.min_len + uniform_index(rng, p.max_len - p.min_len + 1);
    for (std::size_t i = 0; i < len; ++i) {
      if (uniform01(rng) < p.topical_rate) {
        doc.tokens.push_back(pools[c][uniform_index(rng, pools[c].size())]);
      } else {
        doc.tokens.push_back(noise[uniform_index(rng, noise.size())]);
      }
    }

    std::string body;
    for (std::size_t i = 0; i < doc.tokens.size(); ++i) {
      body += (i ? " " : "") + doc.tokens[i];
    }
    const std::size_t lines =
        p.context_signal ? 2 * c + uniform_index(rng, 3) : uniform_index(rng, 9);
    for (std::size_t i = 0; i < lines; ++i) body += "\nthanks in advance";

    tm::Thread th{id, "thread " + std::to_string(t), {}};
    th.posts.push_back({std::string(id) + "p0", "u" + std::to_string(uniform_index(rng, 40)),
                        std::nullopt, body});
    const std::size_t replies = uniform_index(rng, 4);
    for (std::size_t r = 0; r < replies; ++r) {
      th.posts.push_back({std::string(id) + "p" + std::to_string(r + 1),
                          "u" + std::to_string(uniform_index(rng, 40)), std::nullopt,
                          "reply text\nmore"});
    }
    forum.threads.push_back(std::move(th));
    forum.docs.push_back(std::move(doc));
    forum.labels.push_back(c);
  }
  return forum;
}

tm::EvalReport evaluate_ensemble(const ClassForum& forum, const tm::EnsembleParams& params,
                                 std::size_t k, std::uint64_t seed,
                                 std::span<const tm::KeywordSet> sets) {
  auto run = [&](std::span<const std::size_t> train, std::span<const std::size_t> test) {
    std::vector<tm::LabeledThread> labeled;
    for (auto i : train) labeled.push_back({&forum.threads[i], &forum.docs[i], forum.labels[i]});
    const auto model = tm::train_ensemble(labeled, forum.specs, forum.emb, sets, params);
    std::vector<std::size_t> out;
    for (auto i : test) out.push_back(model.predict(forum.threads[i], forum.docs[i], forum.emb).label);
    return out;
  };
  return tm::cross_validate(forum.labels, forum.class_names, k, seed, run);
}

std::vector<tm::TokenizedDoc> twin_context_corpus(std::size_t target_tokens, std::uint64_t seed) {
  Rng rng(seed);
  auto pick = [&](const char* prefix, std::size_t n) {
    return std::string(prefix) + std::to_string(uniform_index(rng, n));
  };
  std::vector<tm::TokenizedDoc> docs;
  std::size_t total = 0;
  while (total < target_tokens) {
    tm::TokenizedDoc doc{"d" + std::to_string(docs.size()), {}};
    const double r = uniform01(rng);
    if (r < 0.4) {
      // shared contexts for alpha and beta
      for (int i = 0; i < 4; ++i) doc.tokens.push_back(pick("ctxa", 15));
      doc.tokens.push_back(uniform01(rng) < 0.5 ? "alpha" : "beta");
      for (int i = 0; i < 4; ++i) doc.tokens.push_back(pick("ctxa", 15));
    } else if (r < 0.6) {
      for (int i = 0; i < 4; ++i) doc.tokens.push_back(pick("ctxb", 15));
      doc.tokens.push_back("gamma");
      for (int i = 0; i < 4; ++i) doc.tokens.push_back(pick("ctxb", 15));
    } else {
      // filler falls into 10 topics so unrelated words do not share contexts
      const std::size_t topic = uniform_index(rng, 10);
      for (int i = 0; i < 9; ++i) {
        doc.tokens.push_back("fill" + std::to_string(topic * 6 + uniform_index(rng, 6)));
      }
    }
    total += doc.tokens.size();
    docs.push_back(std::move(doc));
  }
  return docs;
}

TempDir::TempDir() {
  static std::random_device rd;
  const auto base = fs::temp_directory_path();
  for (;;) {
    auto p = base / ("tmtest-" + std::to_string(rd()));
    if (fs::create_directory(p)) {
      path_ = p;
      return;
    }
  }
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

std::string TempDir::str(const std::string& name) const {
  return name.empty() ? path_.string() : (path_ / name).string();
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + p.string());
}

fs::path source_dir() { return TM_SOURCE_DIR; }

}  // namespace tmtest
