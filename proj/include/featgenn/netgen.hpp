#pragma once

#include <span>
#include <string>
#include <vector>

#include "featgenn/common.hpp"
#include "featgenn/dataset.hpp"
#include "featgenn/stats.hpp"

namespace featgenn {

enum class Pooling { correlation, max };

std::string to_string(Pooling p);
Pooling parse_pooling(const std::string& s);

/// Architecture of the feature generator: a stack of 1-D convolutions over
/// the feature axis, each followed by tanh and a pooling stage, then an MLP
/// head with a linear output layer of width `n_out`.
struct GeneratorConfig {
  int conv_layers = 2;
  int channels = 4;
  int kernel = 3;
  int pool_group = 2;
  std::vector<int> mlp_hidden{16};
  int n_out = 1;
  Pooling pooling = Pooling::correlation;

  void validate() const;
};

/// Location of one layer's parameters inside the flat genome.
struct ParamBlock {
  std::size_t weight_offset = 0;
  std::size_t weight_count = 0;
  std::size_t bias_offset = 0;
  std::size_t bias_count = 0;
  std::size_t fan_in = 0;
  std::size_t fan_out = 0;

  bool operator==(const ParamBlock&) const = default;
};

struct GenomeLayout {
  std::size_t n_inputs = 0;
  // Input position count of every conv layer, plus the final pooled width.
  std::vector<std::size_t> positions;
  std::vector<ParamBlock> conv;
  std::vector<ParamBlock> dense;
  std::size_t total = 0;

  static GenomeLayout for_config(const GeneratorConfig& cfg, std::size_t n_inputs);
  bool operator==(const GenomeLayout&) const = default;
};

struct Genome {
  std::vector<double> weights;
  GenomeLayout layout;
};

/// Partition of one layer's positions into pooling groups. `scores` holds the
/// correlation score of every position and drives the in-group weighting.
struct PoolPlan {
  int layer = 0;
  std::vector<std::vector<std::size_t>> groups;
  std::vector<double> scores;

  bool operator==(const PoolPlan&) const = default;
};

Genome init_genome(const GeneratorConfig& cfg, std::size_t n_inputs, std::uint64_t seed);

/// Greedy correlation clustering: the unassigned position with the highest
/// score (restricted to unassigned positions) seeds a group and takes its
/// k-1 most |r|-correlated unassigned peers. Ties go to the lowest index.
PoolPlan build_pool_plan(const CorrelationMatrix& m, int k, int layer = 0);

/// Softmax(cs)-weighted sum of each group's columns.
Matrix correlation_pool(const Matrix& act, const PoolPlan& plan, const CorrelationScores& cs);

/// Max over non-overlapping windows of `k` consecutive columns.
Matrix max_pool(const Matrix& act, int k);

Matrix network_forward(const Matrix& x, const Genome& g, const GeneratorConfig& cfg, std::span<const PoolPlan> plans);

/// Channel-averaged pooled activations of every conv layer.
std::vector<Matrix> layer_activations(const Matrix& x, const Genome& g, const GeneratorConfig& cfg,
                                      std::span<const PoolPlan> plans);

/// Rebuilds the per-layer pool plans: layer 0 from raw input correlations,
/// deeper layers from `best`'s pooled activations of the previous layer, all
/// on the same row subsample. Returns no plans for max pooling.
std::vector<PoolPlan> update_pool_plans(const Genome& best, const GeneratorConfig& cfg, const Matrix& inputs,
                                        double fraction, std::uint64_t seed);

}  // namespace featgenn
