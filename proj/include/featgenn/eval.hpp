#pragma once

#include <span>
#include <string>
#include <vector>

#include "featgenn/common.hpp"
#include "featgenn/dataset.hpp"

namespace featgenn {

enum class SplitFeatures { sqrt, all, fixed };

struct ForestConfig {
  int n_trees = 10;
  int max_depth = 0;  // 0 = unlimited
  int min_samples_leaf = 1;
  SplitFeatures features = SplitFeatures::sqrt;
  int fixed_features = 0;  // used when features == fixed
  std::uint64_t seed = 7;

  void validate() const;
  std::size_t features_per_split(std::size_t n_features) const;
};

/// CART tree stored as a flat node array; node 0 is the root.
class DecisionTree {
 public:
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    int label = 0;
  };

  int predict_row(const double* row) const;
  const std::vector<Node>& nodes() const { return nodes_; }
  std::size_t depth() const;

 private:
  friend class TreeBuilder;
  std::vector<Node> nodes_;
};

class Forest {
 public:
  static Forest fit(const Matrix& x, const Labels& y, const ForestConfig& cfg);

  Labels predict(const Matrix& x) const;
  const std::vector<DecisionTree>& trees() const { return trees_; }
  std::size_t n_features() const { return n_features_; }
  int n_classes() const { return n_classes_; }

 private:
  std::vector<DecisionTree> trees_;
  std::size_t n_features_ = 0;
  int n_classes_ = 0;
};

enum class F1Average { binary, weighted };

std::string to_string(F1Average a);
F1Average parse_f1_average(const std::string& s);

/// F1 of the `positive` class; 0 when precision + recall is 0.
double f1_score(std::span<const int> y_true, std::span<const int> y_pred, int positive);
/// Support-weighted mean of per-class F1 over the classes present in y_true.
double weighted_f1(std::span<const int> y_true, std::span<const int> y_pred);

struct EvalReport {
  std::vector<double> fold_f1;
  double mean_f1 = 0.0;
  double std_f1 = 0.0;
  std::size_t n_features_used = 0;
};

EvalReport evaluate_cv(const Dataset& d, const FoldPlan& folds, const ForestConfig& cfg, int positive,
                       F1Average average = F1Average::binary);

}  // namespace featgenn
