// featgenn: evolve correlation-pooled feature generators on tabular benchmarks.
//
//   featgenn baseline        --config configs/default.ini
//   featgenn run             --config configs/default.ini --dataset spambase --runs 1
//   featgenn compare-pooling --config configs/default.ini
//   featgenn data-fraction   --config configs/default.ini --fractions 0.3,0.6,0.8,1.0
//   featgenn bench           --config configs/default.ini --out results/bench

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "featgenn/experiment.hpp"

namespace {

constexpr int kExitConfigError = 2;

struct Flags {
  std::string config = "configs/default.ini";
  std::optional<std::string> dataset;
  std::optional<std::uint64_t> seed;
  std::optional<int> runs;
  std::optional<std::string> out;
  std::optional<int> workers;
  std::optional<std::string> fractions;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "experiment config (INI)");
  cmd->add_option("--dataset", f.dataset, "restrict to one manifest dataset");
  cmd->add_option("--seed", f.seed, "base evolution seed");
  cmd->add_option("--runs", f.runs, "independent seeded runs per cell");
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--workers", f.workers, "parallel runs");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"FeatGeNN automated feature engineering"};
  app.require_subcommand(1);
  Flags flags;
  auto* baseline = app.add_subcommand("baseline", "cross-validated random forest on the raw datasets");
  auto* run = app.add_subcommand("run", "evolve feature generators and export the best features");
  auto* compare = app.add_subcommand("compare-pooling", "paired correlation- vs max-pooling runs");
  auto* fraction = app.add_subcommand("data-fraction", "vary the share of rows used for pooling correlations");
  auto* bench = app.add_subcommand("bench", "baseline + FeatGeNN with literature comparison tables");
  for (auto* cmd : {baseline, run, compare, fraction, bench}) add_common(cmd, flags);
  fraction->add_option("--fractions", flags.fractions, "comma-separated fractions in (0,1]");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfigError;
  }

  featgenn::ExperimentConfig cfg;
  std::vector<double> fractions;
  featgenn::RunOptions opts;
  try {
    cfg = featgenn::load_config(flags.config);
    if (flags.seed) cfg.evolution.seed = *flags.seed;
    if (flags.runs) cfg.runs = *flags.runs;
    if (flags.out) cfg.out_dir = *flags.out;
    if (flags.workers) cfg.workers = *flags.workers;
    fractions = flags.fractions ? featgenn::parse_fractions(*flags.fractions) : cfg.fractions;
    if (flags.dataset) {
      cfg.entry(*flags.dataset);
      opts.dataset = flags.dataset;
    }
    cfg.validate();
  } catch (const featgenn::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  }

  try {
    featgenn::ResultTable table;
    if (*baseline) table = featgenn::cmd_baseline(cfg, opts);
    if (*run) table = featgenn::cmd_run(cfg, opts);
    if (*compare) table = featgenn::cmd_compare_pooling(cfg, opts);
    if (*fraction) table = featgenn::cmd_data_fraction(cfg, fractions, opts);
    if (*bench) table = featgenn::cmd_bench(cfg, opts);
    for (const auto& f : table.failures) std::cerr << "failed: " << f << "\n";
    std::cout << "wrote " << (cfg.out_dir / "results.json").string() << "\n";
    return table.exit_code();
  } catch (const featgenn::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
