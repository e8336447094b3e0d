#include "featgenn/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>

namespace featgenn {

void Dataset::validate() const {
  if (static_cast<std::size_t>(x.rows()) != y.size()) throw DataError("row count of x does not match y");
  if (static_cast<std::size_t>(x.cols()) != columns.size()) throw DataError("column count does not match metadata");
  if (!x.allFinite()) throw DataError("non-finite entry in feature matrix");
  std::set<std::string> seen;
  for (const auto& c : columns) {
    if (!seen.insert(c.name).second) throw DataError("duplicate column name: " + c.name);
  }
  for (int label : y) {
    if (label < 0 || label >= class_count()) throw DataError("label out of range");
  }
}

int Dataset::class_code(std::string_view raw) const {
  auto it = std::find(class_names.begin(), class_names.end(), raw);
  if (it == class_names.end()) throw DataError("unknown class label '" + std::string(raw) + "' in " + name);
  return static_cast<int>(it - class_names.begin());
}

RowIndex FoldPlan::train_rows(int fold) const {
  RowIndex out;
  for (std::size_t i = 0; i < assignments.size(); ++i)
    if (assignments[i] != fold) out.push_back(i);
  return out;
}

RowIndex FoldPlan::test_rows(int fold) const {
  RowIndex out;
  for (std::size_t i = 0; i < assignments.size(); ++i)
    if (assignments[i] == fold) out.push_back(i);
  return out;
}

namespace {

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(trim(cur));
  return fields;
}

bool parse_real(const std::string& s, double& out) {
  if (s.empty()) return false;
  const char* first = s.data();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(out);
}

bool is_missing(const std::string& s) { return s.empty() || s == "?" || s == "NA" || s == "NaN"; }

}  // namespace

Dataset load_csv(const std::filesystem::path& path, std::string_view target) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());

  std::string line;
  if (!std::getline(in, line)) throw DataError("missing header row in " + path.string());
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  const auto header = split_csv_line(line);
  auto target_it = std::find(header.begin(), header.end(), target);
  if (target_it == header.end()) throw DataError("target column '" + std::string(target) + "' not found in " + path.string());
  const auto target_col = static_cast<std::size_t>(target_it - header.begin());

  std::vector<std::vector<std::string>> cells;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto fields = split_csv_line(line);
    if (fields.size() != header.size())
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                      " fields, got " + std::to_string(fields.size()));
    for (const auto& f : fields)
      if (is_missing(f)) throw DataError(path.string() + ":" + std::to_string(line_no) + ": missing value");
    cells.push_back(std::move(fields));
  }
  if (cells.empty()) throw DataError("no data rows in " + path.string());

  const std::size_t n = cells.size();
  Dataset d;
  d.name = path.stem().string();
  d.x.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(header.size() - 1));

  Eigen::Index out_col = 0;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c == target_col) continue;
    ColumnMeta meta{header[c], ColumnKind::numeric, {}};
    std::vector<double> values(n);
    bool numeric = true;
    for (std::size_t r = 0; r < n && numeric; ++r) numeric = parse_real(cells[r][c], values[r]);
    if (!numeric) {
      meta.kind = ColumnKind::categorical;
      std::set<std::string> distinct;
      for (std::size_t r = 0; r < n; ++r) distinct.insert(cells[r][c]);
      meta.category_map.assign(distinct.begin(), distinct.end());
      for (std::size_t r = 0; r < n; ++r) {
        auto it = std::lower_bound(meta.category_map.begin(), meta.category_map.end(), cells[r][c]);
        values[r] = static_cast<double>(it - meta.category_map.begin());
      }
    }
    for (std::size_t r = 0; r < n; ++r) d.x(static_cast<Eigen::Index>(r), out_col) = values[r];
    d.columns.push_back(std::move(meta));
    ++out_col;
  }

  // Class codes follow numeric order when every label is numeric, else lexicographic order.
  std::vector<std::string> raw_labels(n);
  for (std::size_t r = 0; r < n; ++r) raw_labels[r] = cells[r][target_col];
  std::vector<std::string> classes(raw_labels);
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  bool numeric_labels = std::all_of(classes.begin(), classes.end(), [](const std::string& s) {
    double v;
    return parse_real(s, v);
  });
  if (numeric_labels) {
    std::stable_sort(classes.begin(), classes.end(), [](const std::string& a, const std::string& b) {
      double va, vb;
      parse_real(a, va);
      parse_real(b, vb);
      return va < vb;
    });
  }
  std::map<std::string, int> code;
  for (std::size_t i = 0; i < classes.size(); ++i) code[classes[i]] = static_cast<int>(i);
  d.y.resize(n);
  for (std::size_t r = 0; r < n; ++r) d.y[r] = code[raw_labels[r]];
  d.class_names = std::move(classes);

  d.validate();
  return d;
}

ScalerStats standardize_columns(Matrix& x) {
  const auto n = x.rows();
  ScalerStats stats;
  stats.mean.resize(static_cast<std::size_t>(x.cols()));
  stats.std.resize(static_cast<std::size_t>(x.cols()));
  stats.constant.resize(static_cast<std::size_t>(x.cols()));
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const auto col = x.col(j);
    const bool constant = n == 0 || (col.array() == col(0)).all();
    double mean = n > 0 ? col.mean() : 0.0;
    double var = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) var += (col(i) - mean) * (col(i) - mean);
    double sd = n > 0 ? std::sqrt(var / static_cast<double>(n)) : 0.0;
    const auto k = static_cast<std::size_t>(j);
    stats.mean[k] = mean;
    stats.std[k] = constant ? 0.0 : sd;
    stats.constant[k] = constant || sd == 0.0;
    if (stats.constant[k]) {
      x.col(j).setZero();
    } else {
      for (Eigen::Index i = 0; i < n; ++i) x(i, j) = (x(i, j) - mean) / sd;
    }
  }
  return stats;
}

std::pair<Dataset, ScalerStats> prepare(const Dataset& d) {
  Dataset out = d;
  ScalerStats stats = standardize_columns(out.x);
  return {std::move(out), std::move(stats)};
}

FoldPlan make_folds(const Labels& y, int k, std::uint64_t seed) {
  if (k < 2) throw DataError("fold count must be at least 2");
  const int n_classes = y.empty() ? 0 : *std::max_element(y.begin(), y.end()) + 1;
  std::vector<RowIndex> by_class(static_cast<std::size_t>(n_classes));
  for (std::size_t i = 0; i < y.size(); ++i) by_class[static_cast<std::size_t>(y[i])].push_back(i);

  Rng rng(derive_seed(seed, {0xf01d}));
  FoldPlan plan;
  plan.k = k;
  plan.assignments.assign(y.size(), -1);
  // Shuffle within class, then deal classes out in sequence so both per-class
  // and total fold sizes differ by at most one.
  std::size_t next = 0;
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& members = by_class[c];
    if (members.empty()) continue;
    if (members.size() < static_cast<std::size_t>(k))
      throw DataError("class " + std::to_string(c) + " has fewer than " + std::to_string(k) + " members");
    std::shuffle(members.begin(), members.end(), rng);
    for (std::size_t row : members) plan.assignments[row] = static_cast<int>(next++ % static_cast<std::size_t>(k));
  }
  return plan;
}

FoldPlan make_folds(const Dataset& d, int k, std::uint64_t seed) { return make_folds(d.y, k, seed); }

RowIndex subsample_rows(std::size_t n_rows, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw DataError("fraction must be in (0, 1]");
  // Guard against products like 0.7 * 10 = 7.000000000000001.
  auto count = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n_rows) - 1e-9));
  count = std::min(count, n_rows);
  RowIndex all(n_rows);
  std::iota(all.begin(), all.end(), std::size_t{0});
  if (count == n_rows) return all;
  Rng rng(derive_seed(seed, {0x5ab5}));
  for (std::size_t i = 0; i < count; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n_rows - 1);
    std::swap(all[i], all[pick(rng)]);
  }
  all.resize(count);
  std::sort(all.begin(), all.end());
  return all;
}

RowIndex subsample_rows(const Dataset& d, double fraction, std::uint64_t seed) {
  return subsample_rows(d.rows(), fraction, seed);
}

Dataset append_features(const Dataset& d, const Matrix& cols, const std::vector<std::string>& names) {
  if (cols.cols() == 0) return d;
  if (cols.rows() != d.x.rows()) throw DataError("appended columns have mismatched row count");
  if (static_cast<std::size_t>(cols.cols()) != names.size()) throw DataError("one name required per appended column");
  std::set<std::string> seen;
  for (const auto& c : d.columns) seen.insert(c.name);
  for (const auto& nm : names)
    if (!seen.insert(nm).second) throw DataError("duplicate column name: " + nm);

  Dataset out;
  out.name = d.name;
  out.y = d.y;
  out.class_names = d.class_names;
  out.columns = d.columns;
  out.x.resize(d.x.rows(), d.x.cols() + cols.cols());
  out.x.leftCols(d.x.cols()) = d.x;
  out.x.rightCols(cols.cols()) = cols;
  for (const auto& nm : names) out.columns.push_back({nm, ColumnKind::numeric, {}});
  return out;
}

Dataset select_columns(const Dataset& d, const std::vector<std::size_t>& cols) {
  Dataset out;
  out.name = d.name;
  out.y = d.y;
  out.class_names = d.class_names;
  out.x = take_columns(d.x, cols);
  for (std::size_t c : cols) out.columns.push_back(d.columns.at(c));
  return out;
}

}  // namespace featgenn
