#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "featgenn/eval.hpp"
#include "featgenn/evolve.hpp"
#include "featgenn/netgen.hpp"

namespace featgenn {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One manifest entry: where a benchmark lives and how to score it.
struct DatasetEntry {
  std::string name;
  std::filesystem::path path;
  std::string target;
  std::string positive;
  std::optional<int> n_out;
  F1Average average = F1Average::binary;
  // Optional entries whose file is absent are skipped instead of failing.
  bool optional = false;
};

struct ExperimentConfig {
  std::vector<DatasetEntry> manifest;
  GeneratorConfig generator;
  EvolutionConfig evolution;
  ForestConfig forest;
  int folds = 5;
  std::uint64_t fold_seed = 2023;
  int runs = 5;
  std::vector<double> fractions{0.3, 0.6, 0.8, 1.0};
  std::filesystem::path out_dir = "results";
  int workers = 1;

  void validate() const;
  const DatasetEntry& entry(const std::string& name) const;
  /// Generated-feature count for a dataset: manifest value, else the
  /// published count for that benchmark, else generator.n_out.
  int n_out_for(const DatasetEntry& e) const;

  /// Canonical key=value rendering of every setting; the config hash is
  /// computed over this text.
  std::string echo() const;
  std::string hash() const;
};

/// Parses an INI file with [generator], [evolution], [forest], [experiment]
/// and one [dataset.<name>] section per manifest entry. Relative dataset
/// paths resolve against the config file's directory.
ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir);

std::vector<double> parse_fractions(const std::string& csv);

}  // namespace featgenn
