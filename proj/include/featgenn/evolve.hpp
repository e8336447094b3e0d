#pragma once

#include <functional>
#include <mutex>
#include <optional>
#include <unordered_map>
#include <utility>
#include <vector>

#include "featgenn/dataset.hpp"
#include "featgenn/netgen.hpp"

namespace featgenn {

struct EvolutionConfig {
  int pop_size = 16;
  int elite_size = 4;
  int generations = 30;
  double crossover_prob = 0.5;
  double mutation_rate = 0.1;
  double mutation_sigma = 0.05;
  double depreciation_eps = 0.05;
  int tournament_opponents = 3;
  std::uint64_t seed = 1;
  double corr_fraction = 0.8;
  std::size_t mrmr_keep = 0;  // 0 keeps every column
  int mrmr_bins = 10;
  int workers = 1;

  void validate() const;
};

struct Candidate {
  Genome genome;
  std::optional<double> score;
  int id = 0;
};

/// Best candidate ever scored, with the pool plans it was scored under.
struct HallOfFame {
  Candidate best;
  std::vector<PoolPlan> plans;
  int generation = 0;
};

struct Population {
  std::vector<Candidate> members;
  int generation = 0;
  std::vector<std::pair<int, double>> best_history;
  // Pool plans shared by every member for the current generation.
  std::vector<PoolPlan> plans;
  HallOfFame hall_of_fame;
};

/// Scores an augmented dataset (original columns + generated columns).
using Evaluator = std::function<double(const Dataset&)>;

/// Turns genomes into generated columns, appends them to the base dataset and
/// scores the result. Scores are cached by generated-matrix content.
class FitnessFunction {
 public:
  FitnessFunction(Dataset base, Matrix inputs, GeneratorConfig cfg, Evaluator evaluator);

  /// Generated columns, z-scored with the constant-to-zero rule.
  Matrix generate(const Genome& g, std::span<const PoolPlan> plans) const;
  Dataset augment(const Matrix& generated) const;
  double score(const Genome& g, std::span<const PoolPlan> plans);

  const Dataset& base() const { return base_; }
  const Matrix& inputs() const { return inputs_; }
  const GeneratorConfig& generator() const { return cfg_; }
  std::size_t evaluations() const { return evaluations_; }
  std::size_t cache_hits() const { return cache_hits_; }

 private:
  Dataset base_;
  Matrix inputs_;
  GeneratorConfig cfg_;
  Evaluator evaluator_;
  std::mutex mutex_;
  std::unordered_multimap<std::uint64_t, std::pair<Matrix, double>> cache_;
  std::size_t evaluations_ = 0;
  std::size_t cache_hits_ = 0;
};

Population init_population(const EvolutionConfig& ecfg, const GeneratorConfig& gcfg, FitnessFunction& fitness);

/// Round-robin tournament among q+1 sampled members other than `exclude`.
const Candidate& tournament_select(const Population& pop, int exclude, int q, Rng& rng);

Genome crossover(const Genome& a, const Genome& b, double p, Rng& rng);
Genome mutate(Genome g, double rate, double sigma, Rng& rng);
bool accept(double child_score, double incumbent_score, double eps, Rng& rng);

Population evolve_epoch(Population pop, const EvolutionConfig& ecfg, const GeneratorConfig& gcfg, FitnessFunction& fitness);

struct EvolutionResult {
  HallOfFame best;
  std::vector<double> history;  // hall-of-fame score per generation, init included
  std::vector<std::size_t> selected_features;
  Matrix generated;  // best candidate's generated columns over all rows
  std::size_t evaluations = 0;
};

/// mRMR pre-selection, population init, then `generations` epochs.
EvolutionResult run_evolution(const EvolutionConfig& ecfg, const GeneratorConfig& gcfg, const Dataset& d,
                              const Evaluator& evaluator);

}  // namespace featgenn
