#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace featgenn {

/// Published results for one benchmark. These are display-only constants;
/// nothing in the pipeline recomputes or tunes against them.
struct DatasetReference {
  std::string key;
  std::string display;
  int samples;
  int features;

  // Pooling comparison: base score, max-pooling and correlation-pooling mean (std).
  double base;
  double maxpool_mean;
  double maxpool_std;
  double corrpool_mean;
  double corrpool_std;

  // Literature comparison (f1).
  double lit_base;
  double lit_random;
  double lit_dfs;
  double lit_autofeat;
  double lit_nfs;
  double lit_difer;
  double featgenn_mean;
  double featgenn_std;
  double featgenn_max;

  // Generated-feature counts.
  int count_random;
  int count_autofeat;
  int count_nfs;
  int count_difer;
  int count_featgenn;
};

const std::vector<DatasetReference>& paper_references();
const DatasetReference* find_reference(std::string_view key);

/// Relative improvement of the full-data variant over the 60% and 30% variants.
inline constexpr double kFractionDeltaVs60 = 0.0076;
inline constexpr double kFractionDeltaVs30 = 0.0138;

}  // namespace featgenn
