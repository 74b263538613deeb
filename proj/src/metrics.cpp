#include "threadminer/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "random.hpp"
#include "threadminer/error.hpp"

namespace threadminer {

ConfusionMatrix::ConfusionMatrix(std::size_t n_classes, std::span<const std::size_t> truth,
                                 std::span<const std::size_t> predicted)
    : ConfusionMatrix(n_classes) {
  if (truth.size() != predicted.size()) {
    throw Error(ErrorKind::kValidation, "truth and prediction counts differ");
  }
  for (std::size_t i = 0; i < truth.size(); ++i) add(truth[i], predicted[i]);
}

void ConfusionMatrix::add(std::size_t truth, std::size_t predicted, std::size_t n) {
  if (truth >= k_ || predicted >= k_) {
    throw Error(ErrorKind::kValidation, "confusion matrix index out of range");
  }
  counts_[truth * k_ + predicted] += n;
}

void ConfusionMatrix::merge(const ConfusionMatrix& other) {
  if (other.k_ != k_) throw Error(ErrorKind::kValidation, "confusion matrix size mismatch");
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
}

std::size_t ConfusionMatrix::total() const {
  return std::accumulate(counts_.begin(), counts_.end(), std::size_t{0});
}

std::size_t ConfusionMatrix::trace() const {
  std::size_t t = 0;
  for (std::size_t c = 0; c < k_; ++c) t += at(c, c);
  return t;
}

std::size_t ConfusionMatrix::support(std::size_t c) const {
  std::size_t s = 0;
  for (std::size_t p = 0; p < k_; ++p) s += at(c, p);
  return s;
}

std::size_t ConfusionMatrix::predicted(std::size_t c) const {
  std::size_t s = 0;
  for (std::size_t t = 0; t < k_; ++t) s += at(t, c);
  return s;
}

ConfusionMatrix ConfusionMatrix::permuted(std::span<const std::size_t> perm) const {
  ConfusionMatrix out(k_);
  for (std::size_t i = 0; i < k_; ++i) {
    for (std::size_t j = 0; j < k_; ++j) out.add(i, j, at(perm[i], perm[j]));
  }
  return out;
}

double accuracy(const ConfusionMatrix& cm) {
  const std::size_t n = cm.total();
  if (n == 0) throw Error(ErrorKind::kValidation, "accuracy of an empty confusion matrix");
  return static_cast<double>(cm.trace()) / static_cast<double>(n);
}

std::vector<ClassScores> per_class_scores(const ConfusionMatrix& cm) {
  std::vector<ClassScores> out(cm.classes());
  for (std::size_t c = 0; c < cm.classes(); ++c) {
    const double tp = static_cast<double>(cm.at(c, c));
    const std::size_t pred = cm.predicted(c);
    const std::size_t sup = cm.support(c);
    ClassScores& s = out[c];
    s.support = sup;
    s.undefined = pred == 0 && sup == 0;
    s.precision = pred ? tp / static_cast<double>(pred) : 0.0;
    s.recall = sup ? tp / static_cast<double>(sup) : 0.0;
    s.f1 = s.precision + s.recall > 0
               ? 2.0 * s.precision * s.recall / (s.precision + s.recall)
               : 0.0;
  }
  return out;
}

double weighted_f1(const ConfusionMatrix& cm) {
  const std::size_t n = cm.total();
  if (n == 0) throw Error(ErrorKind::kValidation, "weighted F1 of an empty confusion matrix");
  double f = 0.0;
  for (const ClassScores& s : per_class_scores(cm)) {
    f += static_cast<double>(s.support) / static_cast<double>(n) * s.f1;
  }
  return f;
}

std::vector<std::vector<std::size_t>> stratified_kfold(std::span<const std::size_t> labels,
                                                       std::size_t k, std::uint64_t seed,
                                                       std::vector<std::string>* warnings) {
  if (k < 2) throw Error(ErrorKind::kValidation, "k-fold needs k >= 2");
  if (k > labels.size()) {
    throw Error(ErrorKind::kValidation, "k = " + std::to_string(k) + " exceeds sample count " +
                                            std::to_string(labels.size()));
  }
  std::map<std::size_t, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);

  std::vector<std::vector<std::size_t>> folds(k);
  detail::Rng rng(detail::derive_seed(seed, 0x6b666f6c64ULL));
  std::size_t next = 0;
  for (auto& [label, members] : by_class) {
    if (members.size() < k && warnings) {
      warnings->push_back("class " + std::to_string(label) + " has " +
                          std::to_string(members.size()) + " members, fewer than k = " +
                          std::to_string(k));
    }
    detail::shuffle(members.begin(), members.end(), rng);
    for (std::size_t idx : members) {
      folds[next].push_back(idx);
      next = (next + 1) % k;
    }
  }
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

double fleiss_kappa(const RatingMatrix& ratings) {
  if (ratings.empty()) throw Error(ErrorKind::kValidation, "fleiss_kappa: no subjects");
  const std::size_t cats = ratings.front().size();
  const std::size_t n = std::accumulate(ratings.front().begin(), ratings.front().end(),
                                        std::size_t{0});
  if (n < 2) throw Error(ErrorKind::kValidation, "fleiss_kappa: need at least two ratings per subject");
  std::vector<double> column(cats, 0.0);
  double p_bar = 0.0;
  for (const auto& row : ratings) {
    if (row.size() != cats) throw Error(ErrorKind::kValidation, "fleiss_kappa: ragged rating matrix");
    std::size_t total = 0;
    double sq = 0.0;
    for (std::size_t j = 0; j < cats; ++j) {
      total += row[j];
      sq += static_cast<double>(row[j]) * static_cast<double>(row[j]);
      column[j] += static_cast<double>(row[j]);
    }
    if (total != n) {
      throw Error(ErrorKind::kValidation, "fleiss_kappa: subjects have unequal rating totals");
    }
    p_bar += (sq - static_cast<double>(n)) / (static_cast<double>(n) * static_cast<double>(n - 1));
  }
  const double subjects = static_cast<double>(ratings.size());
  p_bar /= subjects;
  double p_e = 0.0;
  for (double c : column) {
    const double p = c / (subjects * static_cast<double>(n));
    p_e += p * p;
  }
  if (p_e >= 1.0) return 1.0;
  return (p_bar - p_e) / (1.0 - p_e);
}

double fleiss_kappa_binary(const RatingMatrix& ratings, std::size_t category) {
  RatingMatrix collapsed;
  collapsed.reserve(ratings.size());
  for (const auto& row : ratings) {
    if (category >= row.size()) throw Error(ErrorKind::kValidation, "category out of range");
    const std::size_t total = std::accumulate(row.begin(), row.end(), std::size_t{0});
    collapsed.push_back({row[category], total - row[category]});
  }
  return fleiss_kappa(collapsed);
}

RatingMatrix ratings_from_annotations(const LabelSet& labels) {
  std::map<std::string, std::vector<std::size_t>> rows;
  for (const auto& [key, label] : labels.annotations) {
    auto& row = rows[key.first];
    row.resize(labels.classes.size(), 0);
    const auto c = labels.class_index(label);
    if (!c) throw Error(ErrorKind::kValidation, "annotation with unknown class '" + label + "'");
    ++row[*c];
  }
  RatingMatrix m;
  m.reserve(rows.size());
  for (auto& [_, row] : rows) m.push_back(std::move(row));
  return m;
}

namespace {

std::pair<double, double> mean_std(const std::vector<double>& v) {
  if (v.empty()) return {0.0, 0.0};
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  if (v.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(v.size() - 1))};
}

}  // namespace

EvalReport cross_validate(std::span<const std::size_t> labels,
                          const std::vector<std::string>& classes, std::size_t k,
                          std::uint64_t seed, const FoldRunner& run) {
  EvalReport report;
  report.classes = classes;
  report.pooled = ConfusionMatrix(classes.size());
  std::vector<std::string> fold_warnings;
  const auto folds = stratified_kfold(labels, k, seed, &fold_warnings);
  for (auto& w : fold_warnings) report.warnings.push_back(std::move(w));

  std::vector<double> accs, f1s;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    std::vector<std::size_t> train;
    for (std::size_t g = 0; g < folds.size(); ++g) {
      if (g != f) train.insert(train.end(), folds[g].begin(), folds[g].end());
    }
    std::sort(train.begin(), train.end());
    const auto& test = folds[f];
    const auto predicted = run(train, test);
    if (predicted.size() != test.size()) {
      throw Error(ErrorKind::kValidation, "fold runner returned the wrong number of predictions");
    }
    FoldResult fr{ConfusionMatrix(classes.size()), 0, 0};
    for (std::size_t i = 0; i < test.size(); ++i) fr.cm.add(labels[test[i]], predicted[i]);
    fr.accuracy = accuracy(fr.cm);
    fr.weighted_f1 = weighted_f1(fr.cm);
    for (std::size_t c = 0; c < classes.size(); ++c) {
      if (fr.cm.support(c) == 0 && fr.cm.predicted(c) == 0) {
        report.warnings.push_back("fold " + std::to_string(f) + ": F1 undefined for class '" +
                                  classes[c] + "', counted as 0");
      }
    }
    report.pooled.merge(fr.cm);
    accs.push_back(fr.accuracy);
    f1s.push_back(fr.weighted_f1);
    report.folds.push_back(std::move(fr));
  }
  report.accuracy = accuracy(report.pooled);
  report.weighted_f1 = weighted_f1(report.pooled);
  std::tie(report.accuracy_mean, report.accuracy_std) = mean_std(accs);
  std::tie(report.f1_mean, report.f1_std) = mean_std(f1s);
  report.per_class = per_class_scores(report.pooled);
  return report;
}

std::string eval_report_json(const EvalReport& report, const std::string& header) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["header"] = header;
  j["classes"] = report.classes;
  j["accuracy"] = report.accuracy;
  j["weighted_f1"] = report.weighted_f1;
  j["accuracy_mean"] = report.accuracy_mean;
  j["accuracy_std"] = report.accuracy_std;
  j["weighted_f1_mean"] = report.f1_mean;
  j["weighted_f1_std"] = report.f1_std;
  ordered_json per_class = ordered_json::array();
  for (std::size_t c = 0; c < report.per_class.size(); ++c) {
    const auto& s = report.per_class[c];
    per_class.push_back({{"class", report.classes[c]},
                         {"precision", s.precision},
                         {"recall", s.recall},
                         {"f1", s.f1},
                         {"support", s.support}});
  }
  j["per_class"] = per_class;
  ordered_json folds = ordered_json::array();
  for (std::size_t f = 0; f < report.folds.size(); ++f) {
    const auto& fr = report.folds[f];
    folds.push_back({{"fold", f},
                     {"samples", fr.cm.total()},
                     {"accuracy", fr.accuracy},
                     {"weighted_f1", fr.weighted_f1}});
  }
  j["folds"] = folds;
  ordered_json cm = ordered_json::array();
  for (std::size_t t = 0; t < report.pooled.classes(); ++t) {
    ordered_json row = ordered_json::array();
    for (std::size_t p = 0; p < report.pooled.classes(); ++p) row.push_back(report.pooled.at(t, p));
    cm.push_back(row);
  }
  j["confusion_matrix"] = cm;
  if (report.agreement) {
    const auto& a = *report.agreement;
    ordered_json per = ordered_json::object();
    for (std::size_t c = 0; c < a.per_class.size(); ++c) per[report.classes[c]] = a.per_class[c];
    j["fleiss_kappa"] = {{"overall", a.overall},
                         {"per_class", per},
                         {"subjects", a.subjects},
                         {"raters", a.raters}};
  }
  j["warnings"] = report.warnings;
  return j.dump(2) + "\n";
}

std::string eval_report_table(const EvalReport& report) {
  std::ostringstream out;
  char buf[160];
  out << "fold  samples  accuracy  weighted_f1\n";
  for (std::size_t f = 0; f < report.folds.size(); ++f) {
    const auto& fr = report.folds[f];
    std::snprintf(buf, sizeof buf, "%4zu  %7zu  %8.4f  %11.4f\n", f, fr.cm.total(), fr.accuracy,
                  fr.weighted_f1);
    out << buf;
  }
  std::snprintf(buf, sizeof buf, "mean           %6.2f±%.2f  %6.2f±%.2f (percent)\n",
                100 * report.accuracy_mean, 100 * report.accuracy_std, 100 * report.f1_mean,
                100 * report.f1_std);
  out << buf;
  std::snprintf(buf, sizeof buf, "pooled         %8.4f  %11.4f\n", report.accuracy,
                report.weighted_f1);
  out << buf << "\nclass            precision  recall     f1  support\n";
  for (std::size_t c = 0; c < report.per_class.size(); ++c) {
    const auto& s = report.per_class[c];
    std::snprintf(buf, sizeof buf, "%-16s %9.4f  %6.4f  %5.4f  %7zu\n", report.classes[c].c_str(),
                  s.precision, s.recall, s.f1, s.support);
    out << buf;
  }
  if (report.agreement) {
    std::snprintf(buf, sizeof buf, "\nfleiss kappa     %.4f over %zu subjects x %zu raters\n",
                  report.agreement->overall, report.agreement->subjects,
                  report.agreement->raters);
    out << buf;
  }
  return out.str();
}

}  // namespace threadminer
