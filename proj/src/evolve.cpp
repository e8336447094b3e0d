#include "featgenn/evolve.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>

#include "featgenn/stats.hpp"

namespace featgenn {

namespace {

constexpr std::uint64_t kInitStream = 0x1417;
constexpr std::uint64_t kPlanStream = 0x9a55;

bool in_unit(double v) { return v >= 0.0 && v <= 1.0; }

// Higher score first, then lower id.
bool ranks_before(const Candidate& a, const Candidate& b) {
  const double sa = a.score.value_or(-1.0), sb = b.score.value_or(-1.0);
  if (sa != sb) return sa > sb;
  return a.id < b.id;
}

const Candidate& population_best(const Population& pop) {
  return *std::min_element(pop.members.begin(), pop.members.end(), ranks_before);
}

void update_hall_of_fame(Population& pop) {
  const Candidate& best = population_best(pop);
  auto& hof = pop.hall_of_fame;
  if (!hof.best.score || *best.score > *hof.best.score) {
    hof.best = best;
    hof.plans = pop.plans;
    hof.generation = pop.generation;
  }
}

std::vector<PoolPlan> refresh_plans(const Genome& best, const EvolutionConfig& ecfg, const GeneratorConfig& gcfg,
                                    const FitnessFunction& fitness, int generation) {
  return update_pool_plans(best, gcfg, fitness.inputs(), ecfg.corr_fraction,
                           derive_seed(ecfg.seed, {kPlanStream, static_cast<std::uint64_t>(generation)}));
}

}  // namespace

void EvolutionConfig::validate() const {
  if (pop_size < 2) throw std::invalid_argument("pop_size must be >= 2");
  if (elite_size < 0 || elite_size >= pop_size) throw std::invalid_argument("elite_size must be in [0, pop_size)");
  if (generations < 0) throw std::invalid_argument("generations must be >= 0");
  if (!in_unit(crossover_prob) || !in_unit(mutation_rate) || !in_unit(depreciation_eps))
    throw std::invalid_argument("probabilities must lie in [0, 1]");
  if (mutation_sigma < 0.0) throw std::invalid_argument("mutation_sigma must be >= 0");
  if (tournament_opponents < 1 || tournament_opponents + 1 > pop_size - 1)
    throw std::invalid_argument("tournament_opponents must be in [1, pop_size - 2]");
  if (!(corr_fraction > 0.0 && corr_fraction <= 1.0)) throw std::invalid_argument("corr_fraction must be in (0, 1]");
  if (mrmr_bins < 2) throw std::invalid_argument("mrmr_bins must be >= 2");
}

FitnessFunction::FitnessFunction(Dataset base, Matrix inputs, GeneratorConfig cfg, Evaluator evaluator)
    : base_(std::move(base)), inputs_(std::move(inputs)), cfg_(std::move(cfg)), evaluator_(std::move(evaluator)) {
  if (static_cast<std::size_t>(inputs_.rows()) != base_.rows()) throw std::invalid_argument("inputs/base row mismatch");
}

Matrix FitnessFunction::generate(const Genome& g, std::span<const PoolPlan> plans) const {
  Matrix out = network_forward(inputs_, g, cfg_, plans);
  standardize_columns(out);
  return out;
}

Dataset FitnessFunction::augment(const Matrix& generated) const {
  std::vector<std::string> names;
  for (Eigen::Index j = 0; j < generated.cols(); ++j) names.push_back("featgenn_" + std::to_string(j));
  return append_features(base_, generated, names);
}

double FitnessFunction::score(const Genome& g, std::span<const PoolPlan> plans) {
  Matrix generated = generate(g, plans);
  const std::uint64_t key = hash_matrix(generated);
  {
    std::lock_guard lock(mutex_);
    auto [first, last] = cache_.equal_range(key);
    for (auto it = first; it != last; ++it) {
      if (it->second.first == generated) {
        ++cache_hits_;
        return it->second.second;
      }
    }
  }
  const double s = evaluator_(augment(generated));
  if (!(s >= 0.0 && s <= 1.0)) throw std::runtime_error("evaluator returned a score outside [0, 1]");
  std::lock_guard lock(mutex_);
  ++evaluations_;
  cache_.emplace(key, std::make_pair(std::move(generated), s));
  return s;
}

Population init_population(const EvolutionConfig& ecfg, const GeneratorConfig& gcfg, FitnessFunction& fitness) {
  ecfg.validate();
  Population pop;
  const auto n_inputs = static_cast<std::size_t>(fitness.inputs().cols());
  for (int i = 0; i < ecfg.pop_size; ++i) {
    Candidate c;
    c.id = i;
    c.genome = init_genome(gcfg, n_inputs, derive_seed(ecfg.seed, {kInitStream, static_cast<std::uint64_t>(i)}));
    pop.members.push_back(std::move(c));
  }
  // Layer 0 groups raw-feature correlations; deeper layers use member 0's
  // activations since nothing has been scored yet.
  pop.plans = refresh_plans(pop.members.front().genome, ecfg, gcfg, fitness, 0);

  std::vector<double> scores(pop.members.size());
  parallel_for(pop.members.size(), ecfg.workers,
               [&](std::size_t i) { scores[i] = fitness.score(pop.members[i].genome, pop.plans); });
  for (std::size_t i = 0; i < scores.size(); ++i) pop.members[i].score = scores[i];

  update_hall_of_fame(pop);
  pop.best_history.emplace_back(0, *pop.hall_of_fame.best.score);
  return pop;
}

const Candidate& tournament_select(const Population& pop, int exclude, int q, Rng& rng) {
  if (q < 1) throw std::invalid_argument("tournament needs at least one opponent");
  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < pop.members.size(); ++i)
    if (pop.members[i].id != exclude) eligible.push_back(i);
  const auto players = static_cast<std::size_t>(q) + 1;
  if (eligible.size() < players) throw std::invalid_argument("not enough members for tournament");

  for (std::size_t i = 0; i < players; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, eligible.size() - 1);
    std::swap(eligible[i], eligible[pick(rng)]);
  }
  eligible.resize(players);

  std::vector<int> wins(players, 0);
  for (std::size_t a = 0; a < players; ++a)
    for (std::size_t b = 0; b < players; ++b)
      if (a != b && pop.members[eligible[a]].score.value_or(-1.0) > pop.members[eligible[b]].score.value_or(-1.0)) ++wins[a];

  std::size_t winner = 0;
  for (std::size_t a = 1; a < players; ++a) {
    const auto& ca = pop.members[eligible[a]];
    const auto& cw = pop.members[eligible[winner]];
    if (wins[a] > wins[winner] || (wins[a] == wins[winner] && ranks_before(ca, cw))) winner = a;
  }
  return pop.members[eligible[winner]];
}

Genome crossover(const Genome& a, const Genome& b, double p, Rng& rng) {
  if (!(a.layout == b.layout) || a.weights.size() != b.weights.size())
    throw std::invalid_argument("crossover: parents have different layouts");
  Genome child = a;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t i = 0; i < child.weights.size(); ++i)
    if (!(u(rng) < p)) child.weights[i] = b.weights[i];
  return child;
}

Genome mutate(Genome g, double rate, double sigma, Rng& rng) {
  if (rate < 0.0 || sigma < 0.0) throw std::invalid_argument("mutate: rate and sigma must be >= 0");
  if (rate == 0.0 || sigma == 0.0) return g;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, sigma);
  for (double& w : g.weights)
    if (u(rng) < rate) w += noise(rng);
  return g;
}

bool accept(double child_score, double incumbent_score, double eps, Rng& rng) {
  if (child_score > incumbent_score) return true;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return u(rng) < eps;
}

Population evolve_epoch(Population pop, const EvolutionConfig& ecfg, const GeneratorConfig& gcfg, FitnessFunction& fitness) {
  for (const auto& m : pop.members)
    if (!m.score) throw std::invalid_argument("evolve_epoch: every member must be scored");
  const int next_generation = pop.generation + 1;

  std::vector<std::size_t> order(pop.members.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return ranks_before(pop.members[a], pop.members[b]); });
  std::vector<bool> elite(pop.members.size(), false);
  for (int i = 0; i < ecfg.elite_size; ++i) elite[order[static_cast<std::size_t>(i)]] = true;

  // Every offspring draws from its own (seed, generation, id) stream and reads
  // only the epoch-start population, so evaluation order cannot matter.
  struct Offspring {
    std::size_t slot;
    Genome genome;
    Rng rng;
    double score = 0.0;
  };
  std::vector<Offspring> offspring;
  for (std::size_t i = 0; i < pop.members.size(); ++i) {
    if (elite[i]) continue;
    const auto& parent = pop.members[i];
    Rng rng(derive_seed(ecfg.seed, {static_cast<std::uint64_t>(next_generation), static_cast<std::uint64_t>(parent.id)}));
    const Candidate& partner = tournament_select(pop, parent.id, ecfg.tournament_opponents, rng);
    Genome child = mutate(crossover(parent.genome, partner.genome, ecfg.crossover_prob, rng), ecfg.mutation_rate,
                          ecfg.mutation_sigma, rng);
    offspring.push_back({i, std::move(child), std::move(rng)});
  }
  parallel_for(offspring.size(), ecfg.workers,
               [&](std::size_t i) { offspring[i].score = fitness.score(offspring[i].genome, pop.plans); });

  for (auto& o : offspring) {
    auto& incumbent = pop.members[o.slot];
    if (accept(o.score, *incumbent.score, ecfg.depreciation_eps, o.rng)) {
      incumbent.genome = std::move(o.genome);
      incumbent.score = o.score;
    }
  }

  pop.generation = next_generation;
  update_hall_of_fame(pop);
  pop.best_history.emplace_back(pop.generation, *pop.hall_of_fame.best.score);
  pop.plans = refresh_plans(population_best(pop).genome, ecfg, gcfg, fitness, pop.generation);
  return pop;
}

EvolutionResult run_evolution(const EvolutionConfig& ecfg, const GeneratorConfig& gcfg, const Dataset& d,
                              const Evaluator& evaluator) {
  ecfg.validate();
  gcfg.validate();
  const std::size_t keep = ecfg.mrmr_keep == 0 ? d.cols() : std::min(ecfg.mrmr_keep, d.cols());
  EvolutionResult result;
  result.selected_features = mrmr_select(d, keep, ecfg.mrmr_bins);
  // The convolution slides over the original column order.
  std::vector<std::size_t> inputs = result.selected_features;
  std::sort(inputs.begin(), inputs.end());

  FitnessFunction fitness(d, take_columns(d.x, inputs), gcfg, evaluator);
  Population pop = init_population(ecfg, gcfg, fitness);
  for (int g = 0; g < ecfg.generations; ++g) pop = evolve_epoch(std::move(pop), ecfg, gcfg, fitness);

  for (const auto& [gen, score] : pop.best_history) result.history.push_back(score);
  result.best = pop.hall_of_fame;
  result.generated = fitness.generate(result.best.best.genome, result.best.plans);
  result.evaluations = fitness.evaluations();
  return result;
}

}  // namespace featgenn
