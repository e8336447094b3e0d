#include "featgenn/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "featgenn/reference.hpp"

namespace featgenn {

namespace pt = boost::property_tree;

namespace {

template <typename T>
T get(const pt::ptree& tree, const std::string& key, T fallback) {
  if (!tree.get_child_optional(key)) return fallback;
  try {
    return tree.get<T>(key);
  } catch (const pt::ptree_error& e) {
    throw ConfigError("bad value for '" + key + "': " + e.what());
  }
}

std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    item.erase(std::remove_if(item.begin(), item.end(), ::isspace), item.end());
    if (item.empty()) continue;
    int v = 0;
    auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (ec != std::errc() || ptr != item.data() + item.size()) throw ConfigError("bad integer list: " + s);
    out.push_back(v);
  }
  return out;
}

SplitFeatures parse_split_features(const std::string& s, int& fixed) {
  if (s == "sqrt") return SplitFeatures::sqrt;
  if (s == "all") return SplitFeatures::all;
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || v < 1) throw ConfigError("bad features_per_split: " + s);
  fixed = v;
  return SplitFeatures::fixed;
}

std::string num(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace

std::vector<double> parse_fractions(const std::string& csv) {
  std::vector<double> out;
  std::stringstream in(csv);
  std::string item;
  while (std::getline(in, item, ',')) {
    item.erase(std::remove_if(item.begin(), item.end(), ::isspace), item.end());
    if (item.empty()) continue;
    double v = 0;
    auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (ec != std::errc() || ptr != item.data() + item.size()) throw ConfigError("bad fraction: " + item);
    if (!(v > 0.0 && v <= 1.0)) throw ConfigError("fractions must lie in (0, 1]: " + item);
    out.push_back(v);
  }
  if (out.empty()) throw ConfigError("empty fraction list");
  return out;
}

void ExperimentConfig::validate() const {
  try {
    generator.validate();
    evolution.validate();
    forest.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (runs < 1) throw ConfigError("runs must be >= 1");
  if (folds < 2) throw ConfigError("folds must be >= 2");
  if (workers < 1) throw ConfigError("workers must be >= 1");
  for (double f : fractions)
    if (!(f > 0.0 && f <= 1.0)) throw ConfigError("fractions must lie in (0, 1]");
  std::set<std::string> names;
  for (const auto& e : manifest) {
    if (!names.insert(e.name).second) throw ConfigError("duplicate dataset: " + e.name);
    if (e.target.empty()) throw ConfigError("dataset " + e.name + " has no target column");
    if (e.n_out && *e.n_out < 1) throw ConfigError("dataset " + e.name + " has n_out < 1");
  }
}

const DatasetEntry& ExperimentConfig::entry(const std::string& name) const {
  auto it = std::find_if(manifest.begin(), manifest.end(), [&](const DatasetEntry& e) { return e.name == name; });
  if (it == manifest.end()) throw ConfigError("dataset not in manifest: " + name);
  return *it;
}

int ExperimentConfig::n_out_for(const DatasetEntry& e) const {
  if (e.n_out) return *e.n_out;
  if (const auto* ref = find_reference(e.name)) return ref->count_featgenn;
  return generator.n_out;
}

std::string ExperimentConfig::echo() const {
  std::ostringstream os;
  os << "[generator]\n"
     << "conv_layers=" << generator.conv_layers << "\n"
     << "channels=" << generator.channels << "\n"
     << "kernel=" << generator.kernel << "\n"
     << "pool_group=" << generator.pool_group << "\n"
     << "mlp_hidden=";
  for (std::size_t i = 0; i < generator.mlp_hidden.size(); ++i) os << (i ? "," : "") << generator.mlp_hidden[i];
  os << "\n"
     << "n_out=" << generator.n_out << "\n"
     << "pooling=" << to_string(generator.pooling) << "\n\n"
     << "[evolution]\n"
     << "pop_size=" << evolution.pop_size << "\n"
     << "elite_size=" << evolution.elite_size << "\n"
     << "generations=" << evolution.generations << "\n"
     << "crossover_prob=" << num(evolution.crossover_prob) << "\n"
     << "mutation_rate=" << num(evolution.mutation_rate) << "\n"
     << "mutation_sigma=" << num(evolution.mutation_sigma) << "\n"
     << "depreciation_eps=" << num(evolution.depreciation_eps) << "\n"
     << "tournament_opponents=" << evolution.tournament_opponents << "\n"
     << "seed=" << evolution.seed << "\n"
     << "corr_fraction=" << num(evolution.corr_fraction) << "\n"
     << "mrmr_keep=" << evolution.mrmr_keep << "\n"
     << "mrmr_bins=" << evolution.mrmr_bins << "\n\n"
     << "[forest]\n"
     << "n_trees=" << forest.n_trees << "\n"
     << "max_depth=" << forest.max_depth << "\n"
     << "min_samples_leaf=" << forest.min_samples_leaf << "\n"
     << "features_per_split="
     << (forest.features == SplitFeatures::sqrt  ? std::string("sqrt")
         : forest.features == SplitFeatures::all ? std::string("all")
                                                 : std::to_string(forest.fixed_features))
     << "\n"
     << "seed=" << forest.seed << "\n"
     << "folds=" << folds << "\n"
     << "fold_seed=" << fold_seed << "\n\n"
     << "[experiment]\n"
     << "runs=" << runs << "\n"
     << "fractions=";
  for (std::size_t i = 0; i < fractions.size(); ++i) os << (i ? "," : "") << num(fractions[i]);
  os << "\n";
  for (const auto& e : manifest) {
    os << "\n[dataset." << e.name << "]\n"
       << "path=" << e.path.filename().string() << "\n"
       << "target=" << e.target << "\n"
       << "positive=" << e.positive << "\n"
       << "n_out=" << n_out_for(e) << "\n"
       << "f1_average=" << to_string(e.average) << "\n"
       << "optional=" << (e.optional ? "true" : "false") << "\n";
  }
  return os.str();
}

std::string ExperimentConfig::hash() const {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << derive_seed(std::hash<std::string>{}(echo()), {});
  return os.str();
}

ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }

  ExperimentConfig cfg;
  auto& g = cfg.generator;
  g.conv_layers = get(tree, "generator.conv_layers", g.conv_layers);
  g.channels = get(tree, "generator.channels", g.channels);
  g.kernel = get(tree, "generator.kernel", g.kernel);
  g.pool_group = get(tree, "generator.pool_group", g.pool_group);
  if (auto h = tree.get_optional<std::string>("generator.mlp_hidden")) g.mlp_hidden = parse_int_list(*h);
  g.n_out = get(tree, "generator.n_out", g.n_out);
  try {
    g.pooling = parse_pooling(get<std::string>(tree, "generator.pooling", to_string(g.pooling)));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }

  auto& ev = cfg.evolution;
  ev.pop_size = get(tree, "evolution.pop_size", ev.pop_size);
  ev.elite_size = get(tree, "evolution.elite_size", ev.elite_size);
  ev.generations = get(tree, "evolution.generations", ev.generations);
  ev.crossover_prob = get(tree, "evolution.crossover_prob", ev.crossover_prob);
  ev.mutation_rate = get(tree, "evolution.mutation_rate", ev.mutation_rate);
  ev.mutation_sigma = get(tree, "evolution.mutation_sigma", ev.mutation_sigma);
  ev.depreciation_eps = get(tree, "evolution.depreciation_eps", ev.depreciation_eps);
  ev.tournament_opponents = get(tree, "evolution.tournament_opponents", ev.tournament_opponents);
  ev.seed = get(tree, "evolution.seed", ev.seed);
  ev.corr_fraction = get(tree, "evolution.corr_fraction", ev.corr_fraction);
  ev.mrmr_keep = get(tree, "evolution.mrmr_keep", ev.mrmr_keep);
  ev.mrmr_bins = get(tree, "evolution.mrmr_bins", ev.mrmr_bins);

  auto& f = cfg.forest;
  f.n_trees = get(tree, "forest.n_trees", f.n_trees);
  f.max_depth = get(tree, "forest.max_depth", f.max_depth);
  f.min_samples_leaf = get(tree, "forest.min_samples_leaf", f.min_samples_leaf);
  f.features = parse_split_features(get<std::string>(tree, "forest.features_per_split", "sqrt"), f.fixed_features);
  f.seed = get(tree, "forest.seed", f.seed);
  cfg.folds = get(tree, "forest.folds", cfg.folds);
  cfg.fold_seed = get(tree, "forest.fold_seed", cfg.fold_seed);

  cfg.runs = get(tree, "experiment.runs", cfg.runs);
  cfg.workers = get(tree, "experiment.workers", cfg.workers);
  if (auto fr = tree.get_optional<std::string>("experiment.fractions")) cfg.fractions = parse_fractions(*fr);
  if (auto out = tree.get_optional<std::string>("experiment.out")) cfg.out_dir = *out;

  const std::string prefix = "dataset.";
  for (const auto& [section, body] : tree) {
    if (section.rfind(prefix, 0) != 0) continue;
    DatasetEntry e;
    e.name = section.substr(prefix.size());
    const auto path = body.get<std::string>("path", "");
    if (path.empty()) throw ConfigError("dataset " + e.name + " has no path");
    e.path = std::filesystem::path(path).is_absolute() ? std::filesystem::path(path) : base_dir / path;
    e.target = body.get<std::string>("target", "");
    e.positive = body.get<std::string>("positive", "");
    if (auto n = body.get_optional<int>("n_out")) e.n_out = *n;
    try {
      e.average = parse_f1_average(body.get<std::string>("f1_average", "binary"));
    } catch (const std::invalid_argument& err) {
      throw ConfigError(err.what());
    }
    e.optional = body.get<bool>("optional", false);
    cfg.manifest.push_back(std::move(e));
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.parent_path());
}

}  // namespace featgenn
