#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace threadminer {

/// Row-major dense feature matrix.
struct FeatureMatrix {
  std::size_t cols = 0;
  std::vector<double> data;

  FeatureMatrix() = default;
  explicit FeatureMatrix(std::size_t n_cols) : cols(n_cols) {}

  std::size_t rows() const { return cols == 0 ? 0 : data.size() / cols; }
  std::span<const double> row(std::size_t i) const { return {data.data() + i * cols, cols}; }
  void push_row(std::span<const double> r);
};

struct ForestParams {
  std::size_t trees = 100;
  std::size_t max_depth = 0;     // 0 = unlimited
  std::size_t min_leaf = 1;
  std::size_t max_features = 0;  // 0 = ceil(sqrt(F))
  bool bootstrap = true;
  std::uint64_t seed = 1;
  std::size_t workers = 1;
};

/// Binary CART tree. Leaves hold the weighted class distribution of their
/// training samples; the tree votes for its argmax.
class DecisionTree {
 public:
  struct Node {
    std::int32_t feature = -1;  // -1 marks a leaf
    double threshold = 0.0;     // go left when x[feature] <= threshold
    std::uint32_t left = 0;
    std::uint32_t right = 0;
    std::uint32_t label = 0;    // leaf vote
  };

  std::size_t predict(std::span<const double> x) const;
  std::size_t node_count() const { return nodes_.size(); }
  std::size_t depth() const;

  std::vector<Node>& nodes() { return nodes_; }
  const std::vector<Node>& nodes() const { return nodes_; }

 private:
  std::vector<Node> nodes_;
};

class Forest {
 public:
  Forest() = default;
  Forest(std::size_t n_classes, std::size_t n_features, std::vector<DecisionTree> trees)
      : n_classes_(n_classes), n_features_(n_features), trees_(std::move(trees)) {}

  /// Fraction of trees voting for each class.
  std::vector<double> vote_fractions(std::span<const double> x) const;
  /// Argmax of vote_fractions, lowest class index on ties.
  std::size_t predict(std::span<const double> x) const;

  std::size_t n_classes() const { return n_classes_; }
  std::size_t n_features() const { return n_features_; }
  const std::vector<DecisionTree>& trees() const { return trees_; }

  void save(std::ostream& out) const;
  static Forest load(std::istream& in);

 private:
  std::size_t n_classes_ = 0;
  std::size_t n_features_ = 0;
  std::vector<DecisionTree> trees_;
};

/// Bagged Gini CART trees with a random feature subset per split. Tree t is
/// seeded from (params.seed, t), so results do not depend on `workers`.
/// `sample_weights` may be empty (all 1). Throws when fewer than two classes
/// are present or a feature is NaN.
Forest train_forest(const FeatureMatrix& x, std::span<const std::size_t> y,
                    std::size_t n_classes, std::span<const double> sample_weights,
                    const ForestParams& params);

}  // namespace threadminer
