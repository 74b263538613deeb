#pragma once

// Shared fixtures and slow reference implementations for the test binaries.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "threadminer/classify.hpp"
#include "threadminer/corpus.hpp"
#include "threadminer/embedding.hpp"
#include "threadminer/identify.hpp"
#include "threadminer/metrics.hpp"
#include "threadminer/preprocess.hpp"
#include "threadminer/threadspace.hpp"

namespace tmtest {

namespace tm = threadminer;

/// Vocabulary in the given order, every count 1. `columns` is column-major.
tm::EmbeddingMatrix make_embedding(std::vector<std::string> words, std::size_t m,
                                   std::vector<double> columns);

/// d words named w0..w{d-1} with standard normal components.
tm::EmbeddingMatrix random_embedding(std::size_t d, std::size_t m, std::uint64_t seed);

/// `len` tokens drawn from the vocabulary plus OOV junk at rate `oov_rate`.
/// At least one token is in vocabulary.
tm::TokenizedDoc random_doc(const tm::EmbeddingMatrix& emb, std::size_t len, double oov_rate,
                            std::uint64_t seed, std::string id);

// Reference implementations. Vocabulary lookups are linear scans so they do
// not share code paths with the library.
std::vector<double> ref_avg(const tm::TokenizedDoc& doc, const tm::EmbeddingMatrix& emb,
                            std::span<const double> beta = {});
std::vector<double> ref_max(const tm::TokenizedDoc& doc, const tm::EmbeddingMatrix& emb,
                            std::span<const double> beta = {});
std::vector<double> ref_full(const tm::TokenizedDoc& doc, const tm::EmbeddingMatrix& emb,
                             std::span<const double> beta = {});
double ref_cosine(std::span<const double> a, std::span<const double> b);
/// exp(s_i) / sum exp(s_j) with no stabilisation.
std::vector<double> ref_affinity(const tm::EmbeddingMatrix& emb, std::span<const double> w);
std::set<std::string> ref_keyword_select(std::span<const tm::TokenizedDoc> docs,
                                         std::span<const tm::KeywordSet> sets);
std::map<std::string, double> ref_expand(const tm::ThreadVectors& seeds,
                                         const tm::ThreadVectors& candidates, double t_sim);

double max_abs_diff(std::span<const double> a, std::span<const double> b);

/// Four-class forum built around a hand-made embedding. Class words come
/// from the usual Hacks/Services/Alerts/Experiences table; every class also
/// owns a pool of topical words scattered around its centre.
struct ClassForumParams {
  std::size_t threads = 400;
  std::size_t dims = 16;
  std::size_t topical_words = 25;
  std::size_t noise_words = 150;
  double spread = 0.6;         // topical word distance from the class centre
  double topical_rate = 0.5;   // chance a token comes from the class pool
  std::size_t min_len = 8;
  std::size_t max_len = 20;
  bool context_signal = false;  // first-post line count depends on the class
  std::uint64_t seed = 11;
};

struct ClassForum {
  std::vector<tm::Thread> threads;
  std::vector<tm::TokenizedDoc> docs;
  std::vector<std::size_t> labels;
  std::vector<tm::ClassSpec> specs;
  std::vector<std::string> class_names;
  tm::EmbeddingMatrix emb;
};

ClassForum make_class_forum(const ClassForumParams& p);

std::vector<tm::ClassSpec> table_classes();

/// Stratified k-fold evaluation of the ensemble on the forum.
tm::EvalReport evaluate_ensemble(const ClassForum& forum, const tm::EnsembleParams& params,
                                 std::size_t k, std::uint64_t seed,
                                 std::span<const tm::KeywordSet> sets = {});

/// Corpus where "alpha" and "beta" share contexts and "gamma" never does.
std::vector<tm::TokenizedDoc> twin_context_corpus(std::size_t target_tokens, std::uint64_t seed);

/// Removes itself on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::string str(const std::string& name = {}) const;

 private:
  std::filesystem::path path_;
};

std::string read_file(const std::filesystem::path& p);
void write_file(const std::filesystem::path& p, const std::string& text);

/// Directory holding data/ (set at configure time).
std::filesystem::path source_dir();

}  // namespace tmtest
