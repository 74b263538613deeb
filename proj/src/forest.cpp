#include "threadminer/forest.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <thread>

#include "binary_io.hpp"
#include "random.hpp"
#include "threadminer/error.hpp"

namespace threadminer {

void FeatureMatrix::push_row(std::span<const double> r) {
  if (r.size() != cols) throw Error(ErrorKind::kValidation, "feature row has wrong length");
  data.insert(data.end(), r.begin(), r.end());
}

std::size_t DecisionTree::predict(std::span<const double> x) const {
  std::uint32_t i = 0;
  while (nodes_[i].feature >= 0) {
    const Node& n = nodes_[i];
    i = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
  }
  return nodes_[i].label;
}

std::size_t DecisionTree::depth() const {
  if (nodes_.empty()) return 0;
  std::vector<std::pair<std::uint32_t, std::size_t>> stack{{0, 0}};
  std::size_t best = 0;
  while (!stack.empty()) {
    const auto [i, d] = stack.back();
    stack.pop_back();
    best = std::max(best, d);
    if (nodes_[i].feature >= 0) {
      stack.emplace_back(nodes_[i].left, d + 1);
      stack.emplace_back(nodes_[i].right, d + 1);
    }
  }
  return best;
}

std::vector<double> Forest::vote_fractions(std::span<const double> x) const {
  std::vector<double> votes(n_classes_, 0.0);
  if (trees_.empty()) return votes;
  for (const DecisionTree& t : trees_) votes[t.predict(x)] += 1.0;
  for (double& v : votes) v /= static_cast<double>(trees_.size());
  return votes;
}

std::size_t Forest::predict(std::span<const double> x) const {
  const auto v = vote_fractions(x);
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

namespace {

struct Sample {
  std::uint32_t row;
  double weight;
};

class TreeBuilder {
 public:
  TreeBuilder(const FeatureMatrix& x, std::span<const std::size_t> y, std::size_t n_classes,
              const ForestParams& params, std::size_t mtry, detail::Rng& rng)
      : x_(x), y_(y), k_(n_classes), params_(params), mtry_(mtry), rng_(rng),
        features_(x.cols) {
    for (std::size_t f = 0; f < features_.size(); ++f) features_[f] = f;
  }

  DecisionTree build(std::vector<Sample> samples) {
    samples_ = std::move(samples);
    DecisionTree tree;
    grow(tree, 0, samples_.size(), 0);
    return tree;
  }

 private:
  struct Split {
    std::size_t feature = 0;
    double threshold = 0.0;
    double score = -1.0;  // sum_L w^2/W_L + sum_R w^2/W_R, larger is purer
    std::size_t left_count = 0;
  };

  std::uint32_t grow(DecisionTree& tree, std::size_t begin, std::size_t end, std::size_t depth) {
    const auto id = static_cast<std::uint32_t>(tree.nodes().size());
    tree.nodes().emplace_back();

    std::vector<double> totals(k_, 0.0);
    for (std::size_t i = begin; i < end; ++i) totals[y_[samples_[i].row]] += samples_[i].weight;
    const auto label = static_cast<std::uint32_t>(
        std::max_element(totals.begin(), totals.end()) - totals.begin());
    const std::size_t classes_present = static_cast<std::size_t>(
        std::count_if(totals.begin(), totals.end(), [](double w) { return w > 0; }));

    const std::size_t n = end - begin;
    const bool stop = classes_present <= 1 || n < 2 * params_.min_leaf ||
                      (params_.max_depth > 0 && depth >= params_.max_depth);
    Split split;
    if (!stop) split = best_split(begin, end, totals);
    if (stop || split.score < 0) {
      tree.nodes()[id].label = label;
      return id;
    }

    // Partition [begin, end) by the chosen threshold.
    const auto mid = std::stable_partition(
        samples_.begin() + static_cast<std::ptrdiff_t>(begin),
        samples_.begin() + static_cast<std::ptrdiff_t>(end), [&](const Sample& s) {
          return x_.row(s.row)[split.feature] <= split.threshold;
        });
    const std::size_t cut = static_cast<std::size_t>(mid - samples_.begin());

    const std::uint32_t left = grow(tree, begin, cut, depth + 1);
    const std::uint32_t right = grow(tree, cut, end, depth + 1);
    auto& node = tree.nodes()[id];
    node.feature = static_cast<std::int32_t>(split.feature);
    node.threshold = split.threshold;
    node.left = left;
    node.right = right;
    node.label = label;
    return id;
  }

  // Visits features in random order until `mtry` non-constant ones have been
  // evaluated, so constant features never use up the budget.
  Split best_split(std::size_t begin, std::size_t end, const std::vector<double>& totals) {
    Split best;
    std::size_t evaluated = 0;
    const std::size_t n = end - begin;
    order_.resize(n);
    std::vector<double> left(k_), right(k_);

    for (std::size_t f_i = 0; f_i < features_.size() && evaluated < mtry_; ++f_i) {
      const std::size_t swap_with = f_i + detail::uniform_index(rng_, features_.size() - f_i);
      std::swap(features_[f_i], features_[swap_with]);
      const std::size_t f = features_[f_i];

      for (std::size_t i = 0; i < n; ++i) {
        order_[i] = {x_.row(samples_[begin + i].row)[f], begin + i};
      }
      std::sort(order_.begin(), order_.end());
      if (order_.front().first == order_.back().first) continue;
      ++evaluated;

      std::fill(left.begin(), left.end(), 0.0);
      right = totals;
      double wl = 0.0;
      double wr = 0.0;
      for (double w : totals) wr += w;
      for (std::size_t i = 0; i + 1 < n; ++i) {
        const Sample& s = samples_[order_[i].second];
        const std::size_t c = y_[s.row];
        left[c] += s.weight;
        right[c] -= s.weight;
        wl += s.weight;
        wr -= s.weight;
        if (order_[i].first == order_[i + 1].first) continue;
        if (i + 1 < params_.min_leaf || n - i - 1 < params_.min_leaf) continue;
        if (wl <= 0 || wr <= 0) continue;
        double sl = 0.0, sr = 0.0;
        for (std::size_t k = 0; k < k_; ++k) {
          sl += left[k] * left[k];
          sr += right[k] * right[k];
        }
        const double score = sl / wl + sr / wr;
        if (score > best.score) {
          best.score = score;
          best.feature = f;
          const double a = order_[i].first;
          const double b = order_[i + 1].first;
          best.threshold = a + (b - a) / 2.0;
          // The midpoint can round up to b for adjacent doubles.
          if (!(best.threshold < b)) best.threshold = a;
          best.left_count = i + 1;
        }
      }
    }
    return best;
  }

  const FeatureMatrix& x_;
  std::span<const std::size_t> y_;
  std::size_t k_;
  const ForestParams& params_;
  std::size_t mtry_;
  detail::Rng& rng_;
  std::vector<std::size_t> features_;
  std::vector<Sample> samples_;
  std::vector<std::pair<double, std::size_t>> order_;
};

}  // namespace

Forest train_forest(const FeatureMatrix& x, std::span<const std::size_t> y,
                    std::size_t n_classes, std::span<const double> sample_weights,
                    const ForestParams& params) {
  const std::size_t n = x.rows();
  if (n == 0 || y.size() != n) {
    throw Error(ErrorKind::kValidation, "train_forest: feature rows and labels differ in count");
  }
  if (!sample_weights.empty() && sample_weights.size() != n) {
    throw Error(ErrorKind::kValidation, "train_forest: sample weight count mismatch");
  }
  if (params.trees == 0) throw Error(ErrorKind::kValidation, "train_forest: trees must be >= 1");
  if (params.min_leaf == 0) throw Error(ErrorKind::kValidation, "train_forest: min_leaf must be >= 1");
  std::set<std::size_t> present;
  for (std::size_t label : y) {
    if (label >= n_classes) throw Error(ErrorKind::kValidation, "train_forest: label out of range");
    present.insert(label);
  }
  if (present.size() < 2) {
    throw Error(ErrorKind::kValidation, "train_forest: need at least two classes in the labels");
  }
  for (double v : x.data) {
    if (std::isnan(v)) throw Error(ErrorKind::kNumeric, "train_forest: NaN feature");
  }
  for (double w : sample_weights) {
    if (!(w > 0) || !std::isfinite(w)) {
      throw Error(ErrorKind::kValidation, "train_forest: sample weights must be positive");
    }
  }

  const std::size_t mtry =
      params.max_features > 0
          ? std::min(params.max_features, x.cols)
          : std::max<std::size_t>(1, static_cast<std::size_t>(
                                         std::ceil(std::sqrt(static_cast<double>(x.cols)))));

  std::vector<DecisionTree> trees(params.trees);
  const auto build_tree = [&](std::size_t t) {
    detail::Rng rng(detail::derive_seed(params.seed, t));
    std::vector<double> mult(n, 0.0);
    if (params.bootstrap) {
      for (std::size_t i = 0; i < n; ++i) mult[detail::uniform_index(rng, n)] += 1.0;
    } else {
      std::fill(mult.begin(), mult.end(), 1.0);
    }
    std::vector<Sample> samples;
    samples.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (mult[i] == 0) continue;
      const double w = sample_weights.empty() ? 1.0 : sample_weights[i];
      samples.push_back({static_cast<std::uint32_t>(i), mult[i] * w});
    }
    TreeBuilder builder(x, y, n_classes, params, mtry, rng);
    trees[t] = builder.build(std::move(samples));
  };

  const std::size_t workers = std::max<std::size_t>(1, std::min(params.workers, params.trees));
  if (workers == 1) {
    for (std::size_t t = 0; t < params.trees; ++t) build_tree(t);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t t = w; t < params.trees; t += workers) build_tree(t);
      });
    }
  }
  return Forest(n_classes, x.cols, std::move(trees));
}

namespace {
constexpr std::string_view kForestMagic = "TMFOREST";
}

void Forest::save(std::ostream& out) const {
  detail::BinaryWriter w(out);
  w.raw(kForestMagic.data(), kForestMagic.size());
  w.u64(n_classes_);
  w.u64(n_features_);
  w.u64(trees_.size());
  for (const DecisionTree& t : trees_) {
    w.u64(t.nodes().size());
    for (const auto& node : t.nodes()) {
      w.u32(static_cast<std::uint32_t>(node.feature));
      w.f64(node.threshold);
      w.u32(node.left);
      w.u32(node.right);
      w.u32(node.label);
    }
  }
  w.check();
}

Forest Forest::load(std::istream& in) {
  detail::BinaryReader r(in, "forest");
  r.magic(kForestMagic);
  const std::size_t n_classes = r.length();
  const std::size_t n_features = r.length();
  std::vector<DecisionTree> trees(r.length(1u << 24));
  for (DecisionTree& t : trees) {
    t.nodes().resize(r.length(1u << 30));
    if (t.nodes().empty()) throw Error(ErrorKind::kParse, "forest: empty tree");
    for (auto& node : t.nodes()) {
      node.feature = static_cast<std::int32_t>(r.u32());
      node.threshold = r.f64();
      node.left = r.u32();
      node.right = r.u32();
      node.label = r.u32();
    }
    // Children must point forward inside the tree; labels inside the class range.
    for (std::size_t i = 0; i < t.nodes().size(); ++i) {
      const auto& node = t.nodes()[i];
      const bool bad_child =
          node.feature >= 0 &&
          (node.left <= i || node.right <= i || node.left >= t.nodes().size() ||
           node.right >= t.nodes().size() || static_cast<std::size_t>(node.feature) >= n_features);
      if (bad_child || node.label >= n_classes) {
        throw Error(ErrorKind::kParse, "forest: corrupt tree structure");
      }
    }
  }
  return Forest(n_classes, n_features, std::move(trees));
}

}  // namespace threadminer
