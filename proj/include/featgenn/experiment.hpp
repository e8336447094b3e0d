#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "featgenn/config.hpp"

namespace featgenn {

struct ResultRow {
  std::string dataset;
  std::string method;
  double fraction = 1.0;
  double mean_f1 = 0.0;
  double std_f1 = 0.0;
  int n_generated = 0;
  int runs = 0;
  double seconds = 0.0;  // wall clock; written to timings.csv only
  std::string config_hash;
  std::vector<std::uint64_t> seeds;
  std::vector<double> scores;  // per-run best scores (per-fold for the baseline)
  std::vector<std::vector<double>> histories;  // per-run best-vs-generation curves
};

struct ResultTable {
  std::vector<ResultRow> rows;
  std::vector<std::string> failures;  // dataset-level errors
  std::vector<std::string> skipped;   // optional datasets without data
  int requested = 0;
  int failed = 0;

  const ResultRow* find(const std::string& dataset, const std::string& method) const;
  /// 0 on success, 1 if any requested run failed entirely.
  int exit_code() const { return failed > 0 ? 1 : 0; }
};

/// Restricts which manifest entries a command touches.
struct RunOptions {
  std::optional<std::string> dataset;
  bool write_outputs = true;
  bool quiet = false;
};

ResultTable cmd_baseline(const ExperimentConfig& cfg, const RunOptions& opts = {});
ResultTable cmd_run(const ExperimentConfig& cfg, const RunOptions& opts = {});
ResultTable cmd_compare_pooling(const ExperimentConfig& cfg, const RunOptions& opts = {});
ResultTable cmd_data_fraction(const ExperimentConfig& cfg, const std::vector<double>& fractions,
                              const RunOptions& opts = {});
ResultTable cmd_bench(const ExperimentConfig& cfg, const RunOptions& opts = {});

std::string fraction_label(double fraction);

/// results.csv / results.json / timings.csv / config_echo.ini in `dir`.
void write_results(const ResultTable& table, const ExperimentConfig& cfg, const std::filesystem::path& dir);

}  // namespace featgenn
