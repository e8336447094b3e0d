#include "featgenn/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "featgenn/reference.hpp"

namespace featgenn {

using json = nlohmann::json;

namespace {

struct Prepared {
  DatasetEntry entry;
  Dataset data;
  FoldPlan folds;
  int positive = 0;
};

struct RunArtifacts {
  std::vector<double> scores;
  std::vector<std::vector<double>> histories;
  std::optional<EvolutionResult> best;  // highest-scoring run, lowest index on ties
  int failed = 0;
  std::vector<std::string> errors;
};

std::string fmt(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return ec == std::errc() ? std::string(buf, ptr) : std::string("nan");
}

std::string fmt_fixed(double v, int digits = 4) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Population standard deviation, matching the per-fold spread in EvalReport.
double std_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double e : v) s += (e - m) * (e - m);
  return std::sqrt(s / static_cast<double>(v.size()));
}

std::vector<const DatasetEntry*> selected_entries(const ExperimentConfig& cfg, const RunOptions& opts) {
  std::vector<const DatasetEntry*> out;
  if (opts.dataset) {
    out.push_back(&cfg.entry(*opts.dataset));
  } else {
    for (const auto& e : cfg.manifest) out.push_back(&e);
  }
  return out;
}

Prepared load_prepared(const DatasetEntry& entry, const ExperimentConfig& cfg) {
  Prepared p;
  p.entry = entry;
  p.data = prepare(load_csv(entry.path, entry.target)).first;
  p.data.name = entry.name;
  p.folds = make_folds(p.data, cfg.folds, cfg.fold_seed);
  if (entry.average == F1Average::binary) {
    if (entry.positive.empty()) throw DataError("dataset " + entry.name + " needs a positive label for binary f1");
    p.positive = p.data.class_code(entry.positive);
  } else if (!entry.positive.empty()) {
    p.positive = p.data.class_code(entry.positive);
  }
  return p;
}

Evaluator make_evaluator(const Prepared& p, const ForestConfig& forest) {
  return [folds = p.folds, forest, positive = p.positive, average = p.entry.average](const Dataset& d) {
    return evaluate_cv(d, folds, forest, positive, average).mean_f1;
  };
}

/// Effective config of a single table row; its hash tags the row.
ExperimentConfig row_config(const ExperimentConfig& cfg, const DatasetEntry& entry, Pooling pooling, double fraction) {
  ExperimentConfig c = cfg;
  c.manifest = {entry};
  c.generator.pooling = pooling;
  c.generator.n_out = cfg.n_out_for(entry);
  c.evolution.corr_fraction = fraction;
  return c;
}

std::string method_name(Pooling pooling) { return "featgenn-" + to_string(pooling); }

RunArtifacts run_featgenn(const Prepared& p, const ExperimentConfig& cfg, Pooling pooling, double fraction,
                          std::vector<std::uint64_t>& seeds) {
  GeneratorConfig gcfg = cfg.generator;
  gcfg.pooling = pooling;
  gcfg.n_out = cfg.n_out_for(p.entry);
  const auto evaluator = make_evaluator(p, cfg.forest);

  const auto runs = static_cast<std::size_t>(cfg.runs);
  seeds.resize(runs);
  std::vector<std::optional<EvolutionResult>> results(runs);
  std::vector<std::string> errors(runs);
  for (std::size_t r = 0; r < runs; ++r) seeds[r] = cfg.evolution.seed + r;
  parallel_for(runs, cfg.workers, [&](std::size_t r) {
    EvolutionConfig ecfg = cfg.evolution;
    ecfg.seed = seeds[r];
    ecfg.corr_fraction = fraction;
    ecfg.workers = 1;
    try {
      results[r] = run_evolution(ecfg, gcfg, p.data, evaluator);
    } catch (const std::exception& e) {
      errors[r] = e.what();
    }
  });

  RunArtifacts art;
  std::vector<std::uint64_t> ok_seeds;
  for (std::size_t r = 0; r < runs; ++r) {
    if (!results[r]) {
      ++art.failed;
      art.errors.push_back(p.entry.name + " run " + std::to_string(r) + ": " + errors[r]);
      continue;
    }
    const double s = *results[r]->best.best.score;
    art.scores.push_back(s);
    art.histories.push_back(results[r]->history);
    ok_seeds.push_back(seeds[r]);
    if (!art.best || s > *art.best->best.best.score) art.best = std::move(results[r]);
  }
  seeds = ok_seeds;
  return art;
}

void write_history(const std::filesystem::path& dir, const std::string& stem, const std::vector<double>& history) {
  std::ofstream out(dir / ("history_" + stem + ".csv"));
  out << "generation,best_f1\n";
  for (std::size_t g = 0; g < history.size(); ++g) out << g << "," << fmt(history[g]) << "\n";
}

void export_best(const std::filesystem::path& dir, const std::string& stem, const EvolutionResult& best,
                 const std::string& config_hash) {
  {
    std::ofstream out(dir / ("features_" + stem + ".csv"));
    for (Eigen::Index j = 0; j < best.generated.cols(); ++j) out << (j ? "," : "") << "featgenn_" << j;
    out << "\n";
    for (Eigen::Index i = 0; i < best.generated.rows(); ++i) {
      for (Eigen::Index j = 0; j < best.generated.cols(); ++j) out << (j ? "," : "") << fmt(best.generated(i, j));
      out << "\n";
    }
  }
  json g;
  g["config_hash"] = config_hash;
  g["score"] = *best.best.best.score;
  g["generation_found"] = best.best.generation;
  g["selected_features"] = best.selected_features;
  g["n_inputs"] = best.best.best.genome.layout.n_inputs;
  g["weights"] = best.best.best.genome.weights;
  json plans = json::array();
  for (const auto& plan : best.best.plans) plans.push_back({{"layer", plan.layer}, {"groups", plan.groups}, {"scores", plan.scores}});
  g["pool_plans"] = plans;
  std::ofstream(dir / ("genome_" + stem + ".json")) << g.dump(2) << "\n";
}

std::string dataset_display(const std::string& key) {
  const auto* ref = find_reference(key);
  return ref ? ref->display : key;
}

void log_line(const RunOptions& opts, const std::string& line) {
  static std::mutex m;
  if (opts.quiet) return;
  std::lock_guard lock(m);
  std::cout << line << std::endl;
}

void sort_rows(ResultTable& t) {
  std::sort(t.rows.begin(), t.rows.end(), [](const ResultRow& a, const ResultRow& b) {
    return std::tie(a.dataset, a.method, a.fraction) < std::tie(b.dataset, b.method, b.fraction);
  });
}

/// Loads one manifest entry, recording skips and failures in the table.
std::optional<Prepared> try_load(const DatasetEntry& e, const ExperimentConfig& cfg, ResultTable& table, int runs_at_stake,
                                 const RunOptions& opts) {
  if (e.optional && !std::filesystem::exists(e.path)) {
    table.skipped.push_back(e.name + ": " + e.path.string() + " not present");
    log_line(opts, "skip " + e.name + " (no data at " + e.path.string() + ")");
    return std::nullopt;
  }
  try {
    return load_prepared(e, cfg);
  } catch (const std::exception& ex) {
    table.requested += runs_at_stake;
    table.failed += runs_at_stake;
    table.failures.push_back(e.name + ": " + ex.what());
    log_line(opts, "FAILED " + e.name + ": " + ex.what());
    return std::nullopt;
  }
}

ResultRow baseline_row(const Prepared& p, const ExperimentConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  const EvalReport rep = evaluate_cv(p.data, p.folds, cfg.forest, p.positive, p.entry.average);
  ResultRow row;
  row.dataset = p.entry.name;
  row.method = "base";
  row.fraction = 1.0;
  row.scores = rep.fold_f1;
  row.mean_f1 = rep.mean_f1;
  row.std_f1 = rep.std_f1;
  row.n_generated = 0;
  row.runs = 1;
  row.config_hash = row_config(cfg, p.entry, cfg.generator.pooling, cfg.evolution.corr_fraction).hash();
  row.seeds = {cfg.forest.seed};
  row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return row;
}

/// Runs the FeatGeNN loop for one (dataset, pooling, fraction) cell and
/// writes its per-run histories and best-candidate export.
void featgenn_cell(const Prepared& p, const ExperimentConfig& cfg, Pooling pooling, double fraction,
                   const std::string& method, const std::string& export_stem, ResultTable& table,
                   const RunOptions& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  table.requested += cfg.runs;
  std::vector<std::uint64_t> seeds;
  RunArtifacts art = run_featgenn(p, cfg, pooling, fraction, seeds);
  for (const auto& e : art.errors) table.failures.push_back(e);
  table.failed += art.failed;
  if (art.scores.empty()) return;

  ResultRow row;
  row.dataset = p.entry.name;
  row.method = method;
  row.fraction = fraction;
  row.scores = art.scores;
  row.histories = art.histories;
  row.mean_f1 = mean_of(art.scores);
  row.std_f1 = std_of(art.scores);
  row.n_generated = static_cast<int>(art.best->generated.cols());
  row.runs = static_cast<int>(art.scores.size());
  row.seeds = seeds;
  const ExperimentConfig rc = row_config(cfg, p.entry, pooling, fraction);
  row.config_hash = rc.hash();
  row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  if (opts.write_outputs) {
    std::filesystem::create_directories(cfg.out_dir);
    for (std::size_t r = 0; r < art.histories.size(); ++r)
      write_history(cfg.out_dir, p.entry.name + "_" + method + "_" + std::to_string(r), art.histories[r]);
    export_best(cfg.out_dir, export_stem, *art.best, row.config_hash);
  }
  log_line(opts, dataset_display(p.entry.name) + " " + method + " mean f1 " + fmt_fixed(row.mean_f1) + " (" +
                     fmt_fixed(row.std_f1, 3) + ") over " + std::to_string(row.runs) + " runs");
  table.rows.push_back(std::move(row));
}

json literature_json() {
  json lit = json::array();
  for (const auto& r : paper_references()) {
    lit.push_back({{"dataset", r.key},
                   {"source", "paper"},
                   {"samples", r.samples},
                   {"features", r.features},
                   {"base", r.lit_base},
                   {"random", r.lit_random},
                   {"dfs", r.lit_dfs},
                   {"autofeat", r.lit_autofeat},
                   {"nfs", r.lit_nfs},
                   {"difer", r.lit_difer},
                   {"featgenn_mean", r.featgenn_mean},
                   {"featgenn_std", r.featgenn_std},
                   {"featgenn_max", r.featgenn_max},
                   {"count_random", r.count_random},
                   {"count_autofeat", r.count_autofeat},
                   {"count_nfs", r.count_nfs},
                   {"count_difer", r.count_difer},
                   {"count_featgenn", r.count_featgenn}});
  }
  return lit;
}

}  // namespace

const ResultRow* ResultTable::find(const std::string& dataset, const std::string& method) const {
  auto it = std::find_if(rows.begin(), rows.end(), [&](const ResultRow& r) { return r.dataset == dataset && r.method == method; });
  return it == rows.end() ? nullptr : &*it;
}

std::string fraction_label(double fraction) {
  if (fraction >= 1.0) return "featgenn-full";
  std::ostringstream os;
  os << "featgenn-" << std::lround(fraction * 100.0) << "pct";
  return os.str();
}

void write_results(const ResultTable& table, const ExperimentConfig& cfg, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "results.csv");
    out << "dataset,method,fraction,mean_f1,std_f1,n_generated,runs,config_hash,scores\n";
    for (const auto& r : table.rows) {
      out << r.dataset << "," << r.method << "," << fmt(r.fraction) << "," << fmt(r.mean_f1) << "," << fmt(r.std_f1)
          << "," << r.n_generated << "," << r.runs << "," << r.config_hash << ",";
      for (std::size_t i = 0; i < r.scores.size(); ++i) out << (i ? ";" : "") << fmt(r.scores[i]);
      out << "\n";
    }
  }
  {
    json j;
    j["config_hash"] = cfg.hash();
    json rows = json::array();
    for (const auto& r : table.rows) {
      rows.push_back({{"dataset", r.dataset},
                      {"method", r.method},
                      {"fraction", r.fraction},
                      {"mean_f1", r.mean_f1},
                      {"std_f1", r.std_f1},
                      {"n_generated", r.n_generated},
                      {"runs", r.runs},
                      {"config_hash", r.config_hash},
                      {"seeds", r.seeds},
                      {"scores", r.scores}});
    }
    j["rows"] = rows;
    j["failures"] = table.failures;
    j["skipped"] = table.skipped;
    std::ofstream(dir / "results.json") << j.dump(2) << "\n";
  }
  {
    std::ofstream out(dir / "timings.csv");
    out << "dataset,method,fraction,seconds\n";
    for (const auto& r : table.rows) out << r.dataset << "," << r.method << "," << fmt(r.fraction) << "," << fmt_fixed(r.seconds, 3) << "\n";
  }
  std::ofstream(dir / "config_echo.ini") << cfg.echo();
}

ResultTable cmd_baseline(const ExperimentConfig& cfg, const RunOptions& opts) {
  ResultTable table;
  for (const auto* e : selected_entries(cfg, opts)) {
    auto p = try_load(*e, cfg, table, 1, opts);
    if (!p) continue;
    ++table.requested;
    try {
      table.rows.push_back(baseline_row(*p, cfg));
      const auto& row = table.rows.back();
      const auto* ref = find_reference(e->name);
      log_line(opts, dataset_display(e->name) + " base f1 " + fmt_fixed(row.mean_f1) +
                         (ref ? "  (paper " + fmt_fixed(ref->base) + ")" : ""));
    } catch (const std::exception& ex) {
      ++table.failed;
      table.failures.push_back(e->name + ": " + ex.what());
    }
  }
  sort_rows(table);
  if (opts.write_outputs) write_results(table, cfg, cfg.out_dir);
  return table;
}

ResultTable cmd_run(const ExperimentConfig& cfg, const RunOptions& opts) {
  ResultTable table;
  for (const auto* e : selected_entries(cfg, opts)) {
    auto p = try_load(*e, cfg, table, cfg.runs, opts);
    if (!p) continue;
    const auto method = method_name(cfg.generator.pooling);
    featgenn_cell(*p, cfg, cfg.generator.pooling, cfg.evolution.corr_fraction, method, e->name, table, opts);
    if (const auto* ref = find_reference(e->name); ref && cfg.generator.pooling == Pooling::correlation)
      log_line(opts, "  paper reference " + fmt_fixed(ref->corrpool_mean) + " (" + fmt_fixed(ref->corrpool_std, 3) + ")");
  }
  sort_rows(table);
  if (opts.write_outputs) write_results(table, cfg, cfg.out_dir);
  return table;
}

ResultTable cmd_compare_pooling(const ExperimentConfig& cfg, const RunOptions& opts) {
  ResultTable table;
  for (const auto* e : selected_entries(cfg, opts)) {
    auto p = try_load(*e, cfg, table, 2 * cfg.runs, opts);
    if (!p) continue;
    for (Pooling mode : {Pooling::correlation, Pooling::max}) {
      const auto method = method_name(mode);
      featgenn_cell(*p, cfg, mode, cfg.evolution.corr_fraction, method, e->name + "_" + method, table, opts);
    }
  }
  sort_rows(table);
  if (opts.write_outputs) {
    write_results(table, cfg, cfg.out_dir);
    std::ofstream out(cfg.out_dir / "pooling_deltas.csv");
    out << "dataset,correlation_mean,max_mean,delta,paper_correlation,paper_max,paper_delta,seeds\n";
    for (const auto& ref : paper_references()) {
      const auto* corr = table.find(ref.key, method_name(Pooling::correlation));
      const auto* mx = table.find(ref.key, method_name(Pooling::max));
      if (!corr || !mx) continue;
      out << ref.key << "," << fmt(corr->mean_f1) << "," << fmt(mx->mean_f1) << "," << fmt(corr->mean_f1 - mx->mean_f1) << ","
          << fmt(ref.corrpool_mean) << "," << fmt(ref.maxpool_mean) << "," << fmt(ref.corrpool_mean - ref.maxpool_mean) << ",";
      for (std::size_t i = 0; i < corr->seeds.size(); ++i) out << (i ? ";" : "") << corr->seeds[i];
      out << "\n";
    }
  }
  return table;
}

ResultTable cmd_data_fraction(const ExperimentConfig& cfg, const std::vector<double>& fractions, const RunOptions& opts) {
  for (double f : fractions)
    if (!(f > 0.0 && f <= 1.0)) throw ConfigError("fractions must lie in (0, 1]");
  ResultTable table;
  for (const auto* e : selected_entries(cfg, opts)) {
    auto p = try_load(*e, cfg, table, static_cast<int>(fractions.size()) * cfg.runs, opts);
    if (!p) continue;
    for (double f : fractions) {
      const auto method = fraction_label(f);
      featgenn_cell(*p, cfg, Pooling::correlation, f, method, e->name + "_" + method, table, opts);
    }
  }
  sort_rows(table);
  if (opts.write_outputs) {
    write_results(table, cfg, cfg.out_dir);
    std::ofstream curves(cfg.out_dir / "curves.csv");
    curves << "dataset,fraction,run,generation,best_f1\n";
    for (const auto& r : table.rows)
      for (std::size_t run = 0; run < r.histories.size(); ++run)
        for (std::size_t g = 0; g < r.histories[run].size(); ++g)
          curves << r.dataset << "," << fmt(r.fraction) << "," << run << "," << g << "," << fmt(r.histories[run][g]) << "\n";

    std::ofstream deltas(cfg.out_dir / "fraction_deltas.csv");
    deltas << "dataset,fraction,mean_f1,full_mean_f1,relative_gain_of_full,paper_relative_gain\n";
    for (const auto& r : table.rows) {
      const auto* full = table.find(r.dataset, fraction_label(1.0));
      if (!full || r.fraction >= 1.0) continue;
      std::string paper = "";
      if (std::abs(r.fraction - 0.6) < 1e-9) paper = fmt(kFractionDeltaVs60);
      if (std::abs(r.fraction - 0.3) < 1e-9) paper = fmt(kFractionDeltaVs30);
      deltas << r.dataset << "," << fmt(r.fraction) << "," << fmt(r.mean_f1) << "," << fmt(full->mean_f1) << ","
             << fmt((full->mean_f1 - r.mean_f1) / r.mean_f1) << "," << paper << "\n";
    }
  }
  return table;
}

ResultTable cmd_bench(const ExperimentConfig& cfg, const RunOptions& opts) {
  ResultTable table;
  for (const auto* e : selected_entries(cfg, opts)) {
    auto p = try_load(*e, cfg, table, cfg.runs + 1, opts);
    if (!p) continue;
    ++table.requested;
    try {
      table.rows.push_back(baseline_row(*p, cfg));
    } catch (const std::exception& ex) {
      ++table.failed;
      table.failures.push_back(e->name + ": " + ex.what());
    }
    featgenn_cell(*p, cfg, Pooling::correlation, cfg.evolution.corr_fraction, method_name(Pooling::correlation), e->name,
                  table, opts);
  }
  sort_rows(table);
  if (!opts.write_outputs) return table;

  write_results(table, cfg, cfg.out_dir);
  const auto corr_method = method_name(Pooling::correlation);
  {
    std::ofstream out(cfg.out_dir / "table3.csv");
    out << "dataset,source,base,random,dfs,autofeat,nfs,difer,featgenn_mean,featgenn_std,featgenn_max\n";
    for (const auto& ref : paper_references()) {
      out << ref.key << ",paper," << fmt(ref.lit_base) << "," << fmt(ref.lit_random) << "," << fmt(ref.lit_dfs) << ","
          << fmt(ref.lit_autofeat) << "," << fmt(ref.lit_nfs) << "," << fmt(ref.lit_difer) << "," << fmt(ref.featgenn_mean)
          << "," << fmt(ref.featgenn_std) << "," << fmt(ref.featgenn_max) << "\n";
      const auto* base = table.find(ref.key, "base");
      const auto* fg = table.find(ref.key, corr_method);
      if (!base && !fg) continue;
      out << ref.key << ",measured," << (base ? fmt(base->mean_f1) : "") << ",,,,,,";
      if (fg) {
        out << fmt(fg->mean_f1) << "," << fmt(fg->std_f1) << "," << fmt(*std::max_element(fg->scores.begin(), fg->scores.end()));
      } else {
        out << ",,";
      }
      out << "\n";
    }
  }
  {
    std::ofstream out(cfg.out_dir / "table4.csv");
    out << "dataset,random,autofeat,nfs,difer,featgenn_paper,featgenn_configured,featgenn_measured\n";
    for (const auto& ref : paper_references()) {
      const auto* fg = table.find(ref.key, corr_method);
      std::string configured;
      auto it = std::find_if(cfg.manifest.begin(), cfg.manifest.end(), [&](const DatasetEntry& e) { return e.name == ref.key; });
      if (it != cfg.manifest.end()) configured = std::to_string(cfg.n_out_for(*it));
      out << ref.key << "," << ref.count_random << "," << ref.count_autofeat << "," << ref.count_nfs << "," << ref.count_difer
          << "," << ref.count_featgenn << "," << configured << "," << (fg ? std::to_string(fg->n_generated) : "") << "\n";
    }
  }
  {
    json j;
    j["literature"] = literature_json();
    json counts = json::array();
    for (const auto& r : table.rows)
      if (r.method == corr_method) counts.push_back({{"dataset", r.dataset}, {"n_generated", r.n_generated}, {"source", "measured"}});
    j["generated_counts"] = counts;
    std::ofstream(cfg.out_dir / "bench_report.json") << j.dump(2) << "\n";
  }
  for (const auto& ref : paper_references()) {
    const auto* base = table.find(ref.key, "base");
    const auto* fg = table.find(ref.key, corr_method);
    if (!base || !fg) continue;
    log_line(opts, ref.display + ": base " + fmt_fixed(base->mean_f1) + " featgenn " + fmt_fixed(fg->mean_f1) +
                       " | paper base " + fmt_fixed(ref.lit_base) + " DIFER " + fmt_fixed(ref.lit_difer) + " FeatGeNN " +
                       fmt_fixed(ref.featgenn_mean) + " | features " + std::to_string(fg->n_generated) + " (paper " +
                       std::to_string(ref.count_featgenn) + ")");
  }
  return table;
}

}  // namespace featgenn
