// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits nonzero if any criterion fails. Pass criterion numbers as arguments
// to run a subset, e.g. `acceptance 1 6 7`.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "featgenn/experiment.hpp"
#include "featgenn/reference.hpp"
#include "featgenn/stats.hpp"

using namespace featgenn;

namespace {

namespace fs = std::filesystem;

struct Outcome {
  bool pass = false;
  std::string detail;
};

const fs::path kSource = FEATGENN_SOURCE_DIR;
const RunOptions kQuiet{std::nullopt, true, true};

// The four datasets the improvement and pooling properties are judged on.
const std::vector<std::string> kCore{"spambase", "ionosphere", "spectf", "german_credit"};

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("featgenn_acceptance_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

ExperimentConfig default_config(const std::string& out) {
  auto cfg = load_config(kSource / "configs" / "default.ini");
  cfg.out_dir = scratch(out);
  return cfg;
}

bool available(const ExperimentConfig& cfg, const std::string& name) {
  for (const auto& e : cfg.manifest)
    if (e.name == name) return fs::exists(e.path);
  return false;
}

std::string f4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// ---- oracles ---------------------------------------------------------------

double pearson_oracle(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) sx += x[i], sy += y[i];
  const double mx = sx / n, my = sy / n;
  double num = 0, dx = 0, dy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    num += (x[i] - mx) * (y[i] - my);
    dx += (x[i] - mx) * (x[i] - mx);
    dy += (y[i] - my) * (y[i] - my);
  }
  if (dx == 0 || dy == 0) return 0.0;
  return num / std::sqrt(dx * dy);
}

double mi_oracle(const std::vector<int>& a, const std::vector<int>& b) {
  std::map<int, double> ca, cb;
  std::map<std::pair<int, int>, double> cab;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ca[a[i]] += 1;
    cb[b[i]] += 1;
    cab[{a[i], b[i]}] += 1;
  }
  const double n = static_cast<double>(a.size());
  double mi = 0;
  for (const auto& [k, c] : cab) mi += c / n * std::log(c * n / (ca[k.first] * cb[k.second]));
  return mi;
}

std::vector<int> bin_oracle(const std::vector<double>& x, int bins) {
  const double lo = *std::min_element(x.begin(), x.end()), hi = *std::max_element(x.begin(), x.end());
  std::vector<int> out;
  for (double v : x) {
    if (hi == lo) {
      out.push_back(0);
      continue;
    }
    int b = static_cast<int>(std::floor((v - lo) / (hi - lo) * bins));
    out.push_back(std::min(b, bins - 1));
  }
  return out;
}

// ---- criteria --------------------------------------------------------------

Outcome statistical_oracles() {
  Rng rng(2024);
  std::uniform_int_distribution<int> len(3, 30);
  std::uniform_real_distribution<double> val(-5.0, 5.0);
  double worst_r = 0, worst_cs = 0, worst_f1 = 0, worst_mi = 0;
  for (int t = 0; t < 100; ++t) {
    const int n = len(rng);
    std::vector<double> a(n), b(n);
    for (int i = 0; i < n; ++i) a[i] = val(rng), b[i] = val(rng);
    worst_r = std::max(worst_r, std::abs(pearson(a, b) - pearson_oracle(a, b)));

    const int d = 2 + t % 6;
    Matrix x(n, d);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < d; ++j) x(i, j) = val(rng);
    const auto cs = correlation_scores(correlation_matrix(x));
    for (int j = 0; j < d; ++j) {
      double sum = 0;
      std::vector<double> cj(n);
      for (int i = 0; i < n; ++i) cj[i] = x(i, j);
      for (int k = 0; k < d; ++k) {
        std::vector<double> ck(n);
        for (int i = 0; i < n; ++i) ck[i] = x(i, k);
        sum += pearson_oracle(cj, ck);
      }
      worst_cs = std::max(worst_cs, std::abs(cs.cs[static_cast<std::size_t>(j)] - sum / d));
    }

    std::vector<int> yt(n), yp(n);
    std::bernoulli_distribution coin(0.5);
    for (int i = 0; i < n; ++i) yt[i] = coin(rng), yp[i] = coin(rng);
    double tp = 0, fp = 0, fn = 0;
    for (int i = 0; i < n; ++i) {
      tp += yt[i] == 1 && yp[i] == 1;
      fp += yt[i] == 0 && yp[i] == 1;
      fn += yt[i] == 1 && yp[i] == 0;
    }
    const double f1 = tp == 0 ? 0.0 : 2 * tp / (2 * tp + fp + fn);
    worst_f1 = std::max(worst_f1, std::abs(f1_score(yt, yp, 1) - f1));

    const int bins = 2 + t % 9;
    const auto da = bin_oracle(a, bins), db = bin_oracle(b, bins);
    worst_mi = std::max(worst_mi, std::abs(mutual_information(a, db, bins) - mi_oracle(da, db)));
  }
  std::ostringstream os;
  os << "max |diff| pearson " << worst_r << ", cs " << worst_cs << ", f1 " << worst_f1 << ", mi " << worst_mi;
  return {worst_r <= 1e-12 && worst_cs <= 1e-12 && worst_f1 <= 1e-12 && worst_mi <= 1e-9, os.str()};
}

ResultTable g_baseline;
bool g_baseline_done = false;

const ResultTable& baseline_table() {
  if (!g_baseline_done) {
    g_baseline = cmd_baseline(default_config("baseline"), kQuiet);
    g_baseline_done = true;
  }
  return g_baseline;
}

Outcome baseline_reproduction() {
  const std::vector<std::pair<std::string, double>> tolerance{
      {"spambase", 0.02}, {"ionosphere", 0.03}, {"spectf", 0.05}, {"german_credit", 0.03}, {"credit_default", 0.03}};
  const auto& t = baseline_table();
  bool pass = true;
  std::ostringstream os;
  for (const auto& [name, tol] : tolerance) {
    const double target = find_reference(name)->base;
    const auto* row = t.find(name, "base");
    if (!row) {
      pass = false;
      os << name << " no data; ";
      continue;
    }
    const bool ok = std::abs(row->mean_f1 - target) <= tol;
    pass = pass && ok;
    os << name << " " << f4(row->mean_f1) << " vs " << f4(target) << " +-" << tol << (ok ? "" : " OUT") << "; ";
  }
  return {pass, os.str()};
}

ResultTable g_pooling;
bool g_pooling_done = false;

// pop 16, 10 generations, 5 paired seeds, published feature counts.
const ResultTable& pooling_table() {
  if (!g_pooling_done) {
    auto cfg = default_config("pooling");
    cfg.evolution.pop_size = 16;
    cfg.evolution.generations = 10;
    cfg.runs = 5;
    for (const auto& name : kCore) {
      if (!available(cfg, name)) continue;
      RunOptions opts = kQuiet;
      opts.dataset = name;
      auto t = cmd_compare_pooling(cfg, opts);
      for (auto& r : t.rows) g_pooling.rows.push_back(r);
    }
    g_pooling_done = true;
  }
  return g_pooling;
}

Outcome improvement_property() {
  const auto& base = baseline_table();
  const auto& pool = pooling_table();
  int improved = 0;
  bool never_below = true;
  std::ostringstream os;
  for (const auto& name : kCore) {
    const auto* b = base.find(name, "base");
    const auto* f = pool.find(name, "featgenn-correlation");
    if (!b || !f) {
      os << name << " no data; ";
      continue;
    }
    improved += f->mean_f1 > b->mean_f1;
    never_below = never_below && f->mean_f1 >= b->mean_f1 - 0.01;
    os << name << " " << f4(f->mean_f1) << " vs base " << f4(b->mean_f1) << "; ";
  }
  os << improved << " improved";
  return {improved >= 3 && never_below, os.str()};
}

Outcome pooling_property() {
  const auto& pool = pooling_table();
  int wins = 0, judged = 0;
  bool within = true;
  std::ostringstream os;
  for (const auto& name : kCore) {
    const auto* c = pool.find(name, "featgenn-correlation");
    const auto* m = pool.find(name, "featgenn-max");
    if (!c || !m) {
      os << name << " no data; ";
      continue;
    }
    ++judged;
    wins += c->mean_f1 > m->mean_f1;
    within = within && c->mean_f1 >= m->mean_f1 - 0.005;
    os << name << " corr " << f4(c->mean_f1) << " max " << f4(m->mean_f1) << "; ";
  }
  os << wins << " strict wins";
  return {judged > 0 && within && wins >= 2, os.str()};
}

Outcome ga_invariants() {
  auto cfg = default_config("ga");
  std::ostringstream os;
  bool monotone = true;
  int checked = 0;
  for (const auto& e : cfg.manifest) {
    if (!fs::exists(e.path)) continue;
    auto d = prepare(load_csv(e.path, e.target)).first;
    auto folds = make_folds(d, cfg.folds, cfg.fold_seed);
    const int positive = e.positive.empty() ? 0 : d.class_code(e.positive);
    Evaluator eval = [&](const Dataset& aug) { return evaluate_cv(aug, folds, cfg.forest, positive, e.average).mean_f1; };
    GeneratorConfig g = cfg.generator;
    g.n_out = cfg.n_out_for(e);
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      EvolutionConfig ev = cfg.evolution;
      ev.depreciation_eps = 0.0;
      ev.generations = 5;
      ev.seed = seed;
      auto r = run_evolution(ev, g, d, eval);
      monotone = monotone && std::is_sorted(r.history.begin(), r.history.end());
      ++checked;
    }
  }
  os << checked << " runs monotone=" << (monotone ? "yes" : "no");

  auto det = default_config("det_a");
  det.runs = 2;
  det.evolution.generations = 3;
  RunOptions opts = kQuiet;
  opts.dataset = "ionosphere";
  cmd_run(det, opts);
  const auto first = read_file(det.out_dir / "results.json");
  det.out_dir = scratch("det_b");
  cmd_run(det, opts);
  const bool identical = !first.empty() && first == read_file(det.out_dir / "results.json");
  os << ", results.json identical=" << (identical ? "yes" : "no");
  return {checked > 0 && monotone && identical, os.str()};
}

Outcome pooling_invariants() {
  Rng rng(77);
  std::normal_distribution<double> n01;
  auto random = [&](Eigen::Index r, Eigen::Index c) {
    Matrix m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
      for (Eigen::Index j = 0; j < c; ++j) m(i, j) = n01(rng);
    return m;
  };
  bool partition = true;
  for (int t = 0; t < 50; ++t) {
    const int d = 1 + t % 17, k = 2 + t % 3;
    auto plan = build_pool_plan(correlation_matrix(random(20, d)), k);
    std::vector<int> seen(static_cast<std::size_t>(d), 0);
    for (const auto& g : plan.groups) {
      partition = partition && !g.empty() && g.size() <= static_cast<std::size_t>(k);
      for (auto p : g) ++seen[p];
    }
    partition = partition && std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; });
  }

  Matrix col = random(40, 1);
  Matrix same(40, 3);
  same << col, col, col;
  PoolPlan plan{0, {{0, 1, 2}}, {0.3, -0.2, 0.8}};
  const bool identity = (correlation_pool(same, plan, CorrelationScores{plan.scores}).col(0) - col.col(0)).cwiseAbs().maxCoeff() < 1e-12;

  Matrix act = random(1000, 9);
  Matrix pooled = max_pool(act, 2);
  bool max_ok = pooled.cols() == 5;
  for (Eigen::Index r = 0; r < act.rows() && max_ok; ++r)
    for (Eigen::Index g = 0; g < 5; ++g) {
      double m = act(r, 2 * g);
      if (2 * g + 1 < 9) m = std::max(m, act(r, 2 * g + 1));
      max_ok = max_ok && pooled(r, g) == m;
    }

  bool dup = true;
  for (int t = 0; t < 30; ++t) {
    Matrix base = random(60, 8);
    const Eigen::Index src = t % 8;
    Matrix x(60, 9);
    x.leftCols(8) = base;
    x.col(8) = base.col(src);
    auto p = build_pool_plan(correlation_matrix(x), 2);
    const std::vector<std::size_t> pair{static_cast<std::size_t>(src), 8};
    dup = dup && std::find(p.groups.begin(), p.groups.end(), pair) != p.groups.end();
  }
  std::ostringstream os;
  os << "partition " << partition << ", identical-group " << identity << ", max_pool " << max_ok << ", duplicates paired "
     << dup;
  return {partition && identity && max_ok && dup, os.str()};
}

Outcome mrmr_property() {
  Dataset d;
  d.x.resize(10, 3);
  const double strong[10] = {0, 0, 0, 0, 1, 1, 1, 1, 1, 1};
  const double weak[10] = {0, 1, 0, 0, 0, 1, 1, 0, 1, 1};
  for (int i = 0; i < 10; ++i) d.x(i, 0) = strong[i], d.x(i, 1) = strong[i], d.x(i, 2) = weak[i];
  d.y = {0, 0, 0, 0, 0, 1, 1, 1, 1, 1};
  d.columns = {{"a", ColumnKind::numeric, {}}, {"a_copy", ColumnKind::numeric, {}}, {"b", ColumnKind::numeric, {}}};
  d.class_names = {"0", "1"};
  const auto picked = mrmr_select(d, 2, 2);
  const bool dup_skipped = picked.size() == 2 && picked[1] != 1;

  Rng rng(99);
  std::normal_distribution<double> n01;
  int agree = 0;
  for (int t = 0; t < 50; ++t) {
    const int rows = 80, cols = 6;
    Dataset s;
    s.x.resize(rows, cols);
    s.y.resize(rows);
    for (int i = 0; i < rows; ++i) {
      for (int j = 0; j < cols; ++j) s.x(i, j) = n01(rng);
      s.y[static_cast<std::size_t>(i)] = s.x(i, t % cols) + 0.7 * n01(rng) > 0 ? 1 : 0;
    }
    for (int j = 0; j < cols; ++j) s.columns.push_back({"c" + std::to_string(j), ColumnKind::numeric, {}});
    s.class_names = {"0", "1"};
    std::size_t best = 0;
    double best_mi = -1;
    for (int j = 0; j < cols; ++j) {
      std::vector<double> c(rows);
      for (int i = 0; i < rows; ++i) c[static_cast<std::size_t>(i)] = s.x(i, j);
      const double mi = mi_oracle(bin_oracle(c, 10), s.y);
      if (mi > best_mi + 1e-12) best_mi = mi, best = static_cast<std::size_t>(j);
    }
    agree += mrmr_select(s, 1, 10).front() == best;
  }
  std::ostringstream os;
  os << "duplicate second pick " << (dup_skipped ? "avoided" : "taken") << ", argmax MI first pick " << agree << "/50";
  return {dup_skipped && agree == 50, os.str()};
}

Outcome feature_count_parity() {
  auto cfg = default_config("bench");
  cfg.runs = 1;
  cfg.evolution.pop_size = 4;
  cfg.evolution.elite_size = 1;
  cfg.evolution.tournament_opponents = 2;
  cfg.evolution.generations = 0;
  auto t = cmd_bench(cfg, kQuiet);
  bool pass = true;
  int measured = 0;
  std::ostringstream os;
  for (const auto& ref : paper_references()) {
    const int configured = cfg.n_out_for(cfg.entry(ref.key));
    pass = pass && configured == ref.count_featgenn;
    os << ref.key << " " << configured;
    if (const auto* row = t.find(ref.key, "featgenn-correlation")) {
      pass = pass && row->n_generated == ref.count_featgenn;
      ++measured;
      os << "/" << row->n_generated;
    }
    os << " (table " << ref.count_featgenn << "); ";
  }
  os << measured << " of 6 measured";
  return {pass && measured > 0, os.str()};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"statistical oracles", statistical_oracles},
      {"baseline reproduction", baseline_reproduction},
      {"improvement over baseline", improvement_property},
      {"correlation vs max pooling", pooling_property},
      {"GA invariants and determinism", ga_invariants},
      {"pooling invariants", pooling_invariants},
      {"mRMR property", mrmr_property},
      {"feature-count parity", feature_count_parity},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::stoi(argv[i]));

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failures += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << id << " " << criteria[i].first << ": " << o.detail << " ["
              << static_cast<int>(secs) << "s]" << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
