#include "featgenn/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace featgenn {

void ForestConfig::validate() const {
  if (n_trees < 1) throw std::invalid_argument("n_trees must be >= 1");
  if (min_samples_leaf < 1) throw std::invalid_argument("min_samples_leaf must be >= 1");
  if (max_depth < 0) throw std::invalid_argument("max_depth must be >= 0");
  if (features == SplitFeatures::fixed && fixed_features < 1) throw std::invalid_argument("fixed feature count must be >= 1");
}

std::size_t ForestConfig::features_per_split(std::size_t n_features) const {
  std::size_t m = n_features;
  switch (features) {
    case SplitFeatures::sqrt:
      m = static_cast<std::size_t>(std::sqrt(static_cast<double>(n_features)));
      break;
    case SplitFeatures::all:
      break;
    case SplitFeatures::fixed:
      m = static_cast<std::size_t>(fixed_features);
      break;
  }
  return std::clamp<std::size_t>(m, 1, std::max<std::size_t>(n_features, 1));
}

int DecisionTree::predict_row(const double* row) const {
  int i = 0;
  while (nodes_[static_cast<std::size_t>(i)].feature >= 0) {
    const auto& n = nodes_[static_cast<std::size_t>(i)];
    i = row[n.feature] <= n.threshold ? n.left : n.right;
  }
  return nodes_[static_cast<std::size_t>(i)].label;
}

std::size_t DecisionTree::depth() const {
  std::vector<std::pair<int, std::size_t>> stack{{0, 0}};
  std::size_t best = 0;
  while (!stack.empty()) {
    auto [i, d] = stack.back();
    stack.pop_back();
    best = std::max(best, d);
    const auto& n = nodes_[static_cast<std::size_t>(i)];
    if (n.feature >= 0) {
      stack.push_back({n.left, d + 1});
      stack.push_back({n.right, d + 1});
    }
  }
  return best;
}

/// Builds one tree over a bootstrap sample. Samples are the distinct drawn
/// rows, each weighted by its draw count.
class TreeBuilder {
 public:
  TreeBuilder(const std::vector<std::vector<double>>& columns, const Labels& y, int n_classes, const ForestConfig& cfg,
              Rng& rng)
      : columns_(columns), y_(y), n_classes_(n_classes), cfg_(cfg), rng_(rng) {}

  DecisionTree build(std::vector<std::size_t> samples, std::vector<int> weights) {
    samples_ = std::move(samples);
    weight_of_.assign(y_.size(), 0);
    for (std::size_t i = 0; i < samples_.size(); ++i) weight_of_[samples_[i]] = weights[i];
    features_.resize(columns_.size());
    std::iota(features_.begin(), features_.end(), 0);
    mtry_ = cfg_.features_per_split(columns_.size());
    DecisionTree tree;
    tree_ = &tree;
    grow(0, samples_.size(), 0);
    return tree;
  }

 private:
  struct Split {
    int feature = -1;
    double threshold = 0.0;
    double score = -std::numeric_limits<double>::infinity();
  };

  int majority(const std::vector<double>& counts) const {
    return static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
  }

  int grow(std::size_t begin, std::size_t end, int depth) {
    std::vector<double> counts(static_cast<std::size_t>(n_classes_), 0.0);
    double total = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
      const double w = weight_of_[samples_[i]];
      counts[static_cast<std::size_t>(y_[samples_[i]])] += w;
      total += w;
    }
    const int index = static_cast<int>(tree_->nodes_.size());
    tree_->nodes_.push_back({-1, 0.0, -1, -1, majority(counts)});

    const bool pure = std::count_if(counts.begin(), counts.end(), [](double c) { return c > 0.0; }) <= 1;
    const bool depth_limited = cfg_.max_depth > 0 && depth >= cfg_.max_depth;
    if (pure || depth_limited || total < 2.0 * cfg_.min_samples_leaf) return index;

    const Split split = find_split(begin, end, counts, total);
    if (split.feature < 0) return index;

    const auto& col = columns_[static_cast<std::size_t>(split.feature)];
    auto mid = std::partition(samples_.begin() + static_cast<std::ptrdiff_t>(begin),
                              samples_.begin() + static_cast<std::ptrdiff_t>(end),
                              [&](std::size_t s) { return col[s] <= split.threshold; });
    const auto cut = static_cast<std::size_t>(mid - samples_.begin());
    const int left = grow(begin, cut, depth + 1);
    const int right = grow(cut, end, depth + 1);
    auto& node = tree_->nodes_[static_cast<std::size_t>(index)];
    node.feature = split.feature;
    node.threshold = split.threshold;
    node.left = left;
    node.right = right;
    return index;
  }

  // Maximizes sum_c L_c^2 / W_L + sum_c R_c^2 / W_R, which is equivalent to
  // minimizing the weighted Gini impurity of the children.
  Split find_split(std::size_t begin, std::size_t end, const std::vector<double>& parent, double total) {
    Split best;
    const std::size_t n_features = features_.size();
    std::vector<std::pair<double, std::size_t>> order(end - begin);
    std::vector<double> left(static_cast<std::size_t>(n_classes_));
    std::size_t visited = 0;

    // Draw features without replacement; keep drawing past mtry while no
    // valid split has been found.
    for (std::size_t i = 0; i < n_features; ++i) {
      if (visited >= mtry_ && best.feature >= 0) break;
      std::uniform_int_distribution<std::size_t> pick(i, n_features - 1);
      std::swap(features_[i], features_[pick(rng_)]);
      const std::size_t f = features_[i];
      ++visited;
      const auto& col = columns_[f];
      for (std::size_t k = begin; k < end; ++k) order[k - begin] = {col[samples_[k]], samples_[k]};
      std::sort(order.begin(), order.end());
      if (order.front().first == order.back().first) continue;

      std::fill(left.begin(), left.end(), 0.0);
      double w_left = 0.0;
      for (std::size_t k = 0; k + 1 < order.size(); ++k) {
        const std::size_t s = order[k].second;
        const double w = weight_of_[s];
        left[static_cast<std::size_t>(y_[s])] += w;
        w_left += w;
        if (order[k].first == order[k + 1].first) continue;
        const double w_right = total - w_left;
        if (w_left < cfg_.min_samples_leaf || w_right < cfg_.min_samples_leaf) continue;
        double score = 0.0;
        for (std::size_t c = 0; c < left.size(); ++c) {
          const double r = parent[c] - left[c];
          score += left[c] * left[c] / w_left + r * r / w_right;
        }
        double threshold = 0.5 * (order[k].first + order[k + 1].first);
        if (threshold >= order[k + 1].first) threshold = order[k].first;
        const auto fi = static_cast<int>(f);
        const bool better = score > best.score ||
                            (score == best.score && (fi < best.feature || (fi == best.feature && threshold < best.threshold)));
        if (better) best = {fi, threshold, score};
      }
    }
    return best;
  }

  const std::vector<std::vector<double>>& columns_;
  const Labels& y_;
  int n_classes_;
  const ForestConfig& cfg_;
  Rng& rng_;
  std::vector<std::size_t> samples_;
  std::vector<int> weight_of_;
  std::vector<std::size_t> features_;
  std::size_t mtry_ = 1;
  DecisionTree* tree_ = nullptr;
};

Forest Forest::fit(const Matrix& x, const Labels& y, const ForestConfig& cfg) {
  cfg.validate();
  if (static_cast<std::size_t>(x.rows()) != y.size()) throw std::invalid_argument("fit_forest: row/label mismatch");
  if (x.rows() < 2) throw std::invalid_argument("fit_forest: need at least two rows");
  const int n_classes = *std::max_element(y.begin(), y.end()) + 1;
  std::vector<int> present(static_cast<std::size_t>(n_classes), 0);
  for (int label : y) present[static_cast<std::size_t>(label)] = 1;
  if (std::accumulate(present.begin(), present.end(), 0) < 2) throw std::invalid_argument("fit_forest: single-class input");

  std::vector<std::vector<double>> columns(static_cast<std::size_t>(x.cols()), std::vector<double>(y.size()));
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < x.cols(); ++j) columns[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] = x(i, j);

  Forest forest;
  forest.n_features_ = static_cast<std::size_t>(x.cols());
  forest.n_classes_ = n_classes;
  const std::size_t n = y.size();
  std::vector<int> draws(n);
  for (int t = 0; t < cfg.n_trees; ++t) {
    Rng rng(derive_seed(cfg.seed, {static_cast<std::uint64_t>(t)}));
    std::fill(draws.begin(), draws.end(), 0);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    for (std::size_t i = 0; i < n; ++i) ++draws[pick(rng)];
    std::vector<std::size_t> samples;
    std::vector<int> weights;
    for (std::size_t i = 0; i < n; ++i) {
      if (draws[i] > 0) {
        samples.push_back(i);
        weights.push_back(draws[i]);
      }
    }
    TreeBuilder builder(columns, y, n_classes, cfg, rng);
    forest.trees_.push_back(builder.build(std::move(samples), std::move(weights)));
  }
  return forest;
}

Labels Forest::predict(const Matrix& x) const {
  if (static_cast<std::size_t>(x.cols()) != n_features_) throw std::invalid_argument("predict: column count mismatch");
  Labels out(static_cast<std::size_t>(x.rows()));
  std::vector<int> votes(static_cast<std::size_t>(n_classes_));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    std::fill(votes.begin(), votes.end(), 0);
    const double* row = x.row(i).data();
    for (const auto& tree : trees_) ++votes[static_cast<std::size_t>(tree.predict_row(row))];
    // max_element returns the first maximum, i.e. the lower label on ties.
    out[static_cast<std::size_t>(i)] = static_cast<int>(std::max_element(votes.begin(), votes.end()) - votes.begin());
  }
  return out;
}

std::string to_string(F1Average a) { return a == F1Average::binary ? "binary" : "weighted"; }

F1Average parse_f1_average(const std::string& s) {
  if (s == "binary") return F1Average::binary;
  if (s == "weighted") return F1Average::weighted;
  throw std::invalid_argument("unknown f1 averaging: " + s);
}

double f1_score(std::span<const int> y_true, std::span<const int> y_pred, int positive) {
  if (y_true.size() != y_pred.size()) throw std::invalid_argument("f1_score: length mismatch");
  double tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const bool t = y_true[i] == positive, p = y_pred[i] == positive;
    tp += t && p;
    fp += !t && p;
    fn += t && !p;
  }
  const double precision = tp + fp > 0 ? tp / (tp + fp) : 0.0;
  const double recall = tp + fn > 0 ? tp / (tp + fn) : 0.0;
  return precision + recall > 0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
}

double weighted_f1(std::span<const int> y_true, std::span<const int> y_pred) {
  if (y_true.size() != y_pred.size()) throw std::invalid_argument("weighted_f1: length mismatch");
  if (y_true.empty()) return 0.0;
  std::vector<int> classes(y_true.begin(), y_true.end());
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  double sum = 0.0;
  for (int c : classes) {
    const auto support = static_cast<double>(std::count(y_true.begin(), y_true.end(), c));
    sum += support * f1_score(y_true, y_pred, c);
  }
  return sum / static_cast<double>(y_true.size());
}

EvalReport evaluate_cv(const Dataset& d, const FoldPlan& folds, const ForestConfig& cfg, int positive, F1Average average) {
  if (folds.assignments.size() != d.rows()) throw std::invalid_argument("evaluate_cv: fold plan does not match dataset");
  EvalReport report;
  report.n_features_used = d.cols();
  for (int f = 0; f < folds.k; ++f) {
    const RowIndex train = folds.train_rows(f);
    const RowIndex test = folds.test_rows(f);
    for (std::size_t r : test)
      if (folds.assignments[r] != f) throw std::logic_error("evaluate_cv: scored row leaked into training");
    if (train.size() + test.size() != d.rows()) throw std::logic_error("evaluate_cv: folds do not partition rows");

    Labels y_train(train.size()), y_test(test.size());
    for (std::size_t i = 0; i < train.size(); ++i) y_train[i] = d.y[train[i]];
    for (std::size_t i = 0; i < test.size(); ++i) y_test[i] = d.y[test[i]];
    if (std::all_of(y_train.begin(), y_train.end(), [&](int v) { return v == y_train.front(); }))
      throw std::invalid_argument("evaluate_cv: training fold has a single class");

    ForestConfig fold_cfg = cfg;
    fold_cfg.seed = derive_seed(cfg.seed, {static_cast<std::uint64_t>(f)});
    const Forest forest = Forest::fit(take_rows(d.x, train), y_train, fold_cfg);
    const Labels pred = forest.predict(take_rows(d.x, test));
    report.fold_f1.push_back(average == F1Average::binary ? f1_score(y_test, pred, positive) : weighted_f1(y_test, pred));
  }
  const double k = static_cast<double>(report.fold_f1.size());
  report.mean_f1 = std::accumulate(report.fold_f1.begin(), report.fold_f1.end(), 0.0) / k;
  double var = 0.0;
  for (double v : report.fold_f1) var += (v - report.mean_f1) * (v - report.mean_f1);
  report.std_f1 = std::sqrt(var / k);
  return report;
}

}  // namespace featgenn
