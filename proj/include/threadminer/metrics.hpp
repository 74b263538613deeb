#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "threadminer/corpus.hpp"

namespace threadminer {

/// Counts indexed by (true class, predicted class).
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t n_classes = 0)
      : k_(n_classes), counts_(n_classes * n_classes, 0) {}
  ConfusionMatrix(std::size_t n_classes, std::span<const std::size_t> truth,
                  std::span<const std::size_t> predicted);

  void add(std::size_t truth, std::size_t predicted, std::size_t n = 1);
  void merge(const ConfusionMatrix& other);

  std::size_t classes() const { return k_; }
  std::size_t at(std::size_t truth, std::size_t predicted) const {
    return counts_[truth * k_ + predicted];
  }
  std::size_t total() const;
  std::size_t trace() const;
  std::size_t support(std::size_t c) const;    // row sum
  std::size_t predicted(std::size_t c) const;  // column sum

  /// Same counts with classes relabelled: new class i is old class perm[i].
  ConfusionMatrix permuted(std::span<const std::size_t> perm) const;

 private:
  std::size_t k_;
  std::vector<std::size_t> counts_;
};

struct ClassScores {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
  std::size_t support = 0;
  bool undefined = false;  // no truths and no predictions for the class
};

/// trace / total. Throws on an empty matrix.
double accuracy(const ConfusionMatrix& cm);
/// Support-weighted mean of per-class F1 (F1 is 0 when P + R = 0).
double weighted_f1(const ConfusionMatrix& cm);
std::vector<ClassScores> per_class_scores(const ConfusionMatrix& cm);

/// Per class, members are shuffled and dealt round-robin; each class starts
/// where the previous one stopped so fold sizes stay balanced. Classes with
/// fewer than k members are reported through `warnings`.
std::vector<std::vector<std::size_t>> stratified_kfold(std::span<const std::size_t> labels,
                                                       std::size_t k, std::uint64_t seed,
                                                       std::vector<std::string>* warnings = nullptr);

/// Subjects x categories matrix of rating counts.
using RatingMatrix = std::vector<std::vector<std::size_t>>;

/// Fleiss' kappa. Every subject needs the same number of ratings (>= 2).
/// Returns 1 when expected agreement is 1 (a single category is ever used).
double fleiss_kappa(const RatingMatrix& ratings);

/// Kappa after collapsing the categories to {category, everything else}.
double fleiss_kappa_binary(const RatingMatrix& ratings, std::size_t category);

/// Builds the rating matrix from the annotations of a label set. Subjects are
/// the annotated threads in id order.
RatingMatrix ratings_from_annotations(const LabelSet& labels);

struct FoldResult {
  ConfusionMatrix cm;
  double accuracy = 0;
  double weighted_f1 = 0;
};

struct AgreementReport {
  double overall = 0;
  std::vector<double> per_class;
  std::size_t subjects = 0;
  std::size_t raters = 0;
};

struct EvalReport {
  std::vector<std::string> classes;
  std::vector<FoldResult> folds;
  ConfusionMatrix pooled;
  double accuracy = 0;     // pooled
  double weighted_f1 = 0;  // pooled
  double accuracy_mean = 0, accuracy_std = 0;
  double f1_mean = 0, f1_std = 0;
  std::vector<ClassScores> per_class;  // pooled
  std::vector<std::string> warnings;
  std::optional<AgreementReport> agreement;
};

/// Trains on the other folds and predicts the held-out one.
using FoldRunner = std::function<std::vector<std::size_t>(
    std::span<const std::size_t> train_idx, std::span<const std::size_t> test_idx)>;

EvalReport cross_validate(std::span<const std::size_t> labels,
                          const std::vector<std::string>& classes, std::size_t k,
                          std::uint64_t seed, const FoldRunner& run);

std::string eval_report_json(const EvalReport& report, const std::string& header);
std::string eval_report_table(const EvalReport& report);

}  // namespace threadminer
