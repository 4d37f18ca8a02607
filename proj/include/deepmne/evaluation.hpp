#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "deepmne/common.hpp"
#include "deepmne/graph_io.hpp"
#include "deepmne/log.hpp"

namespace deepmne {

// One logistic classifier per label; column d holds the bias.
struct LinearOvrModel {
  Matrix weights;                           // L x (d + 1)
  std::vector<std::size_t> skipped_labels;  // labels without positives in training

  Eigen::Index feature_dim() const { return weights.cols() - 1; }
  Eigen::Index label_count() const { return weights.rows(); }
};

struct ClassifierConfig {
  std::size_t epochs = 500;
  double learning_rate = 0.5;
  std::uint64_t seed = 0;
  bool standardize = true;  // z-score features using training-fold statistics
};

namespace detail {

// Logit clamp keeps scores strictly inside (0, 1).
constexpr double kMaxLogit = 30.0;

inline Matrix with_bias_column(const Matrix& x) {
  Matrix out(x.rows(), x.cols() + 1);
  out.leftCols(x.cols()) = x;
  out.col(x.cols()).setOnes();
  return out;
}

inline Matrix logistic(const Matrix& logits) {
  return (1.0 + (-logits.array().min(kMaxLogit).max(-kMaxLogit)).exp()).inverse().matrix();
}

}  // namespace detail

// Full-batch gradient descent on the mean logistic loss, independently per label.
inline LinearOvrModel train_ovr(const Matrix& x, const BinaryMatrix& y, std::size_t epochs, double learning_rate,
                                std::uint64_t seed) {
  if (x.rows() != y.rows()) throw ValidationError("features and labels disagree on the row count");
  if (x.rows() == 0) throw ValidationError("no training rows");
  if (!(learning_rate > 0.0)) throw ValidationError("classifier learning rate must be positive");

  const Eigen::Index L = y.cols();
  const Eigen::Index d = x.cols();
  LinearOvrModel model;
  model.weights.resize(L, d + 1);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> init(-0.01, 0.01);
  for (Eigen::Index l = 0; l < L; ++l)
    for (Eigen::Index c = 0; c <= d; ++c) model.weights(l, c) = init(rng);

  std::vector<Eigen::Index> active;
  for (Eigen::Index l = 0; l < L; ++l) {
    if (y.col(l).cast<int>().sum() == 0) {
      model.skipped_labels.push_back(static_cast<std::size_t>(l));
      model.weights.row(l).setZero();
      model.weights(l, d) = -detail::kMaxLogit;
    } else {
      active.push_back(l);
    }
  }
  if (!model.skipped_labels.empty())
    log::warn("train_ovr: ", model.skipped_labels.size(), " label(s) without positives skipped");
  if (active.empty()) return model;

  const Matrix xb = detail::with_bias_column(x);
  Matrix target(x.rows(), static_cast<Eigen::Index>(active.size()));
  Matrix w(static_cast<Eigen::Index>(active.size()), d + 1);
  for (std::size_t a = 0; a < active.size(); ++a) {
    target.col(static_cast<Eigen::Index>(a)) = y.col(active[a]).cast<double>();
    w.row(static_cast<Eigen::Index>(a)) = model.weights.row(active[a]);
  }
  const double scale = learning_rate / static_cast<double>(x.rows());
  for (std::size_t e = 0; e < epochs; ++e) {
    Matrix p = detail::logistic(xb * w.transpose());
    w.noalias() -= scale * ((p - target).transpose() * xb);
  }
  for (std::size_t a = 0; a < active.size(); ++a) model.weights.row(active[a]) = w.row(static_cast<Eigen::Index>(a));
  return model;
}

inline Matrix predict_scores(const LinearOvrModel& model, const Matrix& x) {
  if (x.cols() != model.feature_dim())
    throw ValidationError("model expects " + std::to_string(model.feature_dim()) + " features, got " +
                          std::to_string(x.cols()));
  return detail::logistic(detail::with_bias_column(x) * model.weights.transpose());
}

inline BinaryMatrix threshold_scores(const Matrix& scores, double threshold = 0.5) {
  return (scores.array() >= threshold).cast<std::uint8_t>().matrix();
}

namespace detail {

inline void check_same_shape(Eigen::Index r1, Eigen::Index c1, Eigen::Index r2, Eigen::Index c2) {
  if (r1 != r2 || c1 != c2) throw ValidationError("metric inputs have different shapes");
}

}  // namespace detail

// 2TP / (2TP + FP + FN) over all cells; 0 when nothing is positive anywhere.
inline double micro_f1(const BinaryMatrix& truth, const BinaryMatrix& predicted) {
  detail::check_same_shape(truth.rows(), truth.cols(), predicted.rows(), predicted.cols());
  std::size_t tp = 0, fp = 0, fn = 0;
  for (Eigen::Index i = 0; i < truth.rows(); ++i) {
    for (Eigen::Index j = 0; j < truth.cols(); ++j) {
      bool t = truth(i, j) != 0;
      bool p = predicted(i, j) != 0;
      tp += t && p;
      fp += !t && p;
      fn += t && !p;
    }
  }
  const std::size_t denom = 2 * tp + fp + fn;
  return denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
}

// Fraction of (instance, label) cells predicted correctly.
inline double accuracy(const BinaryMatrix& truth, const BinaryMatrix& predicted) {
  detail::check_same_shape(truth.rows(), truth.cols(), predicted.rows(), predicted.cols());
  if (truth.size() == 0) return 0.0;
  std::size_t correct = 0;
  for (Eigen::Index i = 0; i < truth.rows(); ++i)
    for (Eigen::Index j = 0; j < truth.cols(); ++j) correct += (truth(i, j) != 0) == (predicted(i, j) != 0);
  return static_cast<double>(correct) / static_cast<double>(truth.size());
}

namespace detail {

struct Cell {
  double score;
  bool positive;
};

inline std::vector<Cell> pooled_cells(const BinaryMatrix& truth, const Matrix& scores) {
  check_same_shape(truth.rows(), truth.cols(), scores.rows(), scores.cols());
  std::vector<Cell> cells;
  cells.reserve(static_cast<std::size_t>(truth.size()));
  for (Eigen::Index i = 0; i < truth.rows(); ++i)
    for (Eigen::Index j = 0; j < truth.cols(); ++j) cells.push_back({scores(i, j), truth(i, j) != 0});
  return cells;
}

}  // namespace detail

// Mann-Whitney statistic over pooled cells, ties count one half.
// Undefined (nullopt) without at least one positive and one negative cell.
inline std::optional<double> micro_auroc(const BinaryMatrix& truth, const Matrix& scores) {
  auto cells = detail::pooled_cells(truth, scores);
  std::sort(cells.begin(), cells.end(), [](const auto& a, const auto& b) { return a.score < b.score; });
  double positives = 0.0;
  double rank_sum = 0.0;
  for (std::size_t start = 0; start < cells.size();) {
    std::size_t end = start;
    while (end < cells.size() && cells[end].score == cells[start].score) ++end;
    const double mid_rank = (static_cast<double>(start + 1) + static_cast<double>(end)) / 2.0;
    for (std::size_t k = start; k < end; ++k) {
      if (cells[k].positive) {
        positives += 1.0;
        rank_sum += mid_rank;
      }
    }
    start = end;
  }
  const double negatives = static_cast<double>(cells.size()) - positives;
  if (positives == 0.0 || negatives == 0.0) return std::nullopt;
  return (rank_sum - positives * (positives + 1.0) / 2.0) / (positives * negatives);
}

// Non-interpolated area under the precision-recall step curve, sweeping
// thresholds from the highest score down; tied scores form one step.
inline std::optional<double> micro_auprc(const BinaryMatrix& truth, const Matrix& scores) {
  auto cells = detail::pooled_cells(truth, scores);
  std::sort(cells.begin(), cells.end(), [](const auto& a, const auto& b) { return a.score > b.score; });
  const auto positives = static_cast<double>(std::count_if(cells.begin(), cells.end(), [](const auto& c) { return c.positive; }));
  if (positives == 0.0 || positives == static_cast<double>(cells.size())) return std::nullopt;
  double tp = 0.0, fp = 0.0, prev_recall = 0.0, area = 0.0;
  for (std::size_t start = 0; start < cells.size();) {
    std::size_t end = start;
    while (end < cells.size() && cells[end].score == cells[start].score) {
      (cells[end].positive ? tp : fp) += 1.0;
      ++end;
    }
    const double recall = tp / positives;
    area += (recall - prev_recall) * (tp / (tp + fp));
    prev_recall = recall;
    start = end;
  }
  return area;
}

struct FoldMetrics {
  double accuracy = 0.0;
  double micro_f1 = 0.0;
  double micro_auprc = 0.0;
  double micro_auroc = 0.0;
  bool defined = true;
};

// Metrics for an externally produced score matrix (e.g. from another classifier).
inline FoldMetrics evaluate_scores(const BinaryMatrix& truth, const Matrix& scores, double threshold = 0.5) {
  FoldMetrics m;
  const auto predicted = threshold_scores(scores, threshold);
  m.accuracy = accuracy(truth, predicted);
  m.micro_f1 = micro_f1(truth, predicted);
  auto auprc = micro_auprc(truth, scores);
  auto auroc = micro_auroc(truth, scores);
  m.defined = auprc.has_value() && auroc.has_value();
  m.micro_auprc = auprc.value_or(std::nan(""));
  m.micro_auroc = auroc.value_or(std::nan(""));
  return m;
}

struct MetricsReport {
  FoldMetrics mean;
  std::vector<FoldMetrics> per_fold;
  std::vector<std::size_t> fold_of;  // fold assignment per row
  Matrix held_out_scores;            // each row scored by the model that did not see it
  std::uint64_t fold_seed = 0;
  std::vector<std::string> warnings;
};

// Seeded shuffle into k near-equal folds; fold f receives shuffled positions [f*n/k, (f+1)*n/k).
inline std::vector<std::size_t> assign_folds(std::size_t n, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw ValidationError("need at least 2 folds");
  if (n < k) throw ValidationError("fewer rows (" + std::to_string(n) + ") than folds (" + std::to_string(k) + ")");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::size_t> fold_of(n);
  for (std::size_t f = 0; f < k; ++f)
    for (std::size_t p = f * n / k; p < (f + 1) * n / k; ++p) fold_of[order[p]] = f;
  return fold_of;
}

inline MetricsReport kfold_cv(const Matrix& x, const BinaryMatrix& y, std::size_t k, std::uint64_t seed,
                              const ClassifierConfig& classifier = {}) {
  if (x.rows() != y.rows()) throw ValidationError("features and labels disagree on the row count");
  MetricsReport report;
  report.fold_seed = seed;
  report.fold_of = assign_folds(static_cast<std::size_t>(x.rows()), k, seed);
  report.held_out_scores = Matrix::Zero(x.rows(), y.cols());

  std::size_t defined = 0;
  for (std::size_t f = 0; f < k; ++f) {
    std::vector<Eigen::Index> train_rows, test_rows;
    for (std::size_t i = 0; i < report.fold_of.size(); ++i)
      (report.fold_of[i] == f ? test_rows : train_rows).push_back(static_cast<Eigen::Index>(i));

    Matrix x_train = x(train_rows, Eigen::all);
    Matrix x_test = x(test_rows, Eigen::all);
    if (classifier.standardize) {
      Eigen::RowVectorXd mean = x_train.colwise().mean();
      Eigen::RowVectorXd sd = ((x_train.rowwise() - mean).array().square().colwise().sum() /
                               static_cast<double>(x_train.rows())).sqrt().matrix();
      for (Eigen::Index c = 0; c < sd.size(); ++c)
        if (!(sd(c) > 1e-12)) sd(c) = 1.0;
      x_train = ((x_train.rowwise() - mean).array().rowwise() / sd.array()).matrix();
      x_test = ((x_test.rowwise() - mean).array().rowwise() / sd.array()).matrix();
    }
    BinaryMatrix y_train = y(train_rows, Eigen::all);
    BinaryMatrix y_test = y(test_rows, Eigen::all);

    auto model = train_ovr(x_train, y_train, classifier.epochs, classifier.learning_rate, derive_seed(seed, f));
    if (!model.skipped_labels.empty())
      report.warnings.push_back("fold " + std::to_string(f) + ": " + std::to_string(model.skipped_labels.size()) +
                                " label(s) without training positives skipped");
    const Matrix scores = predict_scores(model, x_test);
    report.held_out_scores(test_rows, Eigen::all) = scores;
    auto metrics = evaluate_scores(y_test, scores);
    if (!metrics.defined)
      report.warnings.push_back("fold " + std::to_string(f) +
                                ": ranking metrics undefined (no positive or no negative cells); fold excluded");
    report.per_fold.push_back(metrics);
    if (metrics.defined) {
      ++defined;
      report.mean.accuracy += metrics.accuracy;
      report.mean.micro_f1 += metrics.micro_f1;
      report.mean.micro_auprc += metrics.micro_auprc;
      report.mean.micro_auroc += metrics.micro_auroc;
    }
  }
  for (const auto& w : report.warnings) log::warn(w);
  if (defined == 0) throw ValidationError("no fold has both positive and negative label cells");
  const auto count = static_cast<double>(defined);
  report.mean.accuracy /= count;
  report.mean.micro_f1 /= count;
  report.mean.micro_auprc /= count;
  report.mean.micro_auroc /= count;
  return report;
}

// Score matrix TSV: header "node<TAB>label...", then "node_id<TAB>score..." rows.
inline void write_scores_tsv(std::ostream& os, const std::vector<std::string>& node_ids,
                             const std::vector<std::string>& labels, const Matrix& scores) {
  if (static_cast<Eigen::Index>(node_ids.size()) != scores.rows() ||
      static_cast<Eigen::Index>(labels.size()) != scores.cols())
    throw ValidationError("score matrix shape does not match ids/labels");
  os << "node";
  for (const auto& l : labels) os << '\t' << l;
  os << '\n';
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    os << node_ids[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < scores.cols(); ++j) os << '\t' << format_double(scores(i, j));
    os << '\n';
  }
}

struct ScoreTable {
  std::vector<std::string> node_ids;
  std::vector<std::string> labels;
  Matrix scores;
};

inline ScoreTable read_scores_tsv(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  ScoreTable t;
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::vector<double>> rows;
  bool header = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = detail::split(line, '\t');
    if (header) {
      for (std::size_t f = 1; f < fields.size(); ++f) t.labels.emplace_back(fields[f]);
      header = false;
      continue;
    }
    if (fields.size() != t.labels.size() + 1) detail::fail_at(path, lineno, "column count does not match header");
    std::vector<double> row;
    for (std::size_t f = 1; f < fields.size(); ++f) {
      double v = 0.0;
      if (!parse_double(fields[f], v)) detail::fail_at(path, lineno, "cannot parse score '" + std::string(fields[f]) + "'");
      row.push_back(v);
    }
    t.node_ids.emplace_back(fields[0]);
    rows.push_back(std::move(row));
  }
  t.scores.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(t.labels.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      t.scores(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return t;
}

}  // namespace deepmne
