#include "featgenn/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace featgenn {

namespace {

bool is_constant(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [&](double e) { return e == v.front(); });
}

double clamp_unit(double r) { return std::clamp(r, -1.0, 1.0); }

// Pearson on pre-centered data. Centering is algebraically identical to the
// n-weighted sum form and avoids cancellation for large offsets.
double centered_pearson(std::span<const double> cx, std::span<const double> cy, double sxx, double syy) {
  if (sxx <= 0.0 || syy <= 0.0) return 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < cx.size(); ++i) sxy += cx[i] * cy[i];
  return clamp_unit(sxy / std::sqrt(sxx * syy));
}

struct Centered {
  std::vector<double> values;
  double ss = 0.0;
};

Centered center(std::span<const double> v) {
  Centered c;
  c.values.assign(v.begin(), v.end());
  if (is_constant(v)) {
    std::fill(c.values.begin(), c.values.end(), 0.0);
    return c;
  }
  double mean = 0.0;
  for (double e : v) mean += e;
  mean /= static_cast<double>(v.size());
  for (double& e : c.values) {
    e -= mean;
    c.ss += e * e;
  }
  return c;
}

}  // namespace

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("pearson: length mismatch");
  if (x.size() < 2) throw std::invalid_argument("pearson: need at least two samples");
  const auto cx = center(x);
  const auto cy = center(y);
  return centered_pearson(cx.values, cy.values, cx.ss, cy.ss);
}

CorrelationMatrix correlation_matrix(const Matrix& x, const RowIndex& rows) {
  if (rows.size() < 2) throw std::invalid_argument("correlation_matrix: need at least two rows");
  const auto d = static_cast<std::size_t>(x.cols());
  std::vector<Centered> cols(d);
  std::vector<double> buf(rows.size());
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t i = 0; i < rows.size(); ++i) buf[i] = x(static_cast<Eigen::Index>(rows[i]), static_cast<Eigen::Index>(j));
    cols[j] = center(buf);
  }
  CorrelationMatrix m;
  m.r = Matrix::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  for (std::size_t a = 0; a < d; ++a) {
    m.r(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(a)) = cols[a].ss > 0.0 ? 1.0 : 0.0;
    for (std::size_t b = a + 1; b < d; ++b) {
      const double r = centered_pearson(cols[a].values, cols[b].values, cols[a].ss, cols[b].ss);
      m.r(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = r;
      m.r(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a)) = r;
    }
  }
  return m;
}

CorrelationMatrix correlation_matrix(const Matrix& x) {
  RowIndex all(static_cast<std::size_t>(x.rows()));
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return correlation_matrix(x, all);
}

CorrelationScores correlation_scores(const CorrelationMatrix& m) {
  CorrelationScores s;
  const auto n = m.size();
  s.cs.resize(n);
  for (std::size_t f = 0; f < n; ++f) {
    double sum = 0.0;
    for (std::size_t k = 0; k < n; ++k) sum += m.r(static_cast<Eigen::Index>(f), static_cast<Eigen::Index>(k));
    s.cs[f] = sum / static_cast<double>(n);
  }
  return s;
}

std::vector<int> discretize(std::span<const double> x, int bins) {
  if (bins < 2) throw std::invalid_argument("discretize: bins must be at least 2");
  std::vector<int> out(x.size(), 0);
  if (x.empty()) return out;
  const auto [lo_it, hi_it] = std::minmax_element(x.begin(), x.end());
  const double lo = *lo_it, hi = *hi_it;
  if (!(hi > lo)) return out;
  const double width = (hi - lo) / bins;
  for (std::size_t i = 0; i < x.size(); ++i) {
    auto b = static_cast<int>(std::floor((x[i] - lo) / width));
    out[i] = std::clamp(b, 0, bins - 1);
  }
  return out;
}

double mutual_information(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size()) throw std::invalid_argument("mutual_information: length mismatch");
  if (a.empty()) return 0.0;
  const int na = *std::max_element(a.begin(), a.end()) + 1;
  const int nb = *std::max_element(b.begin(), b.end()) + 1;
  if (*std::min_element(a.begin(), a.end()) < 0 || *std::min_element(b.begin(), b.end()) < 0)
    throw std::invalid_argument("mutual_information: codes must be non-negative");
  std::vector<double> joint(static_cast<std::size_t>(na) * static_cast<std::size_t>(nb), 0.0);
  std::vector<double> pa(static_cast<std::size_t>(na), 0.0), pb(static_cast<std::size_t>(nb), 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    joint[static_cast<std::size_t>(a[i]) * static_cast<std::size_t>(nb) + static_cast<std::size_t>(b[i])] += 1.0;
    pa[static_cast<std::size_t>(a[i])] += 1.0;
    pb[static_cast<std::size_t>(b[i])] += 1.0;
  }
  const double n = static_cast<double>(a.size());
  double mi = 0.0;
  for (int i = 0; i < na; ++i) {
    for (int j = 0; j < nb; ++j) {
      const double c = joint[static_cast<std::size_t>(i) * static_cast<std::size_t>(nb) + static_cast<std::size_t>(j)];
      if (c == 0.0) continue;
      // c/n * log((c/n) / ((ca/n)(cb/n)))
      mi += c / n * std::log(c * n / (pa[static_cast<std::size_t>(i)] * pb[static_cast<std::size_t>(j)]));
    }
  }
  return std::max(mi, 0.0);
}

double mutual_information(std::span<const double> x, std::span<const int> y, int bins) {
  if (x.size() != y.size()) throw std::invalid_argument("mutual_information: length mismatch");
  const auto codes = discretize(x, bins);
  return mutual_information(codes, y);
}

std::vector<std::size_t> mrmr_select(const Dataset& d, std::size_t m, int bins) {
  const std::size_t p = d.cols();
  if (m < 1 || m > p) throw std::invalid_argument("mrmr_select: m out of range");

  std::vector<std::vector<int>> codes(p);
  std::vector<double> relevance(p);
  std::vector<bool> informative(p);
  std::vector<double> col(d.rows());
  for (std::size_t j = 0; j < p; ++j) {
    for (std::size_t i = 0; i < d.rows(); ++i) col[i] = d.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    codes[j] = discretize(col, bins);
    relevance[j] = mutual_information(codes[j], d.y);
    informative[j] = std::any_of(codes[j].begin(), codes[j].end(), [&](int c) { return c != codes[j].front(); });
  }

  std::vector<std::size_t> selected;
  std::vector<bool> taken(p, false);
  std::vector<double> redundancy_sum(p, 0.0);
  while (selected.size() < m) {
    std::size_t best = p;
    double best_score = -std::numeric_limits<double>::infinity();
    bool best_informative = false;
    for (std::size_t j = 0; j < p; ++j) {
      if (taken[j]) continue;
      double score = relevance[j];
      if (!selected.empty()) score -= redundancy_sum[j] / static_cast<double>(selected.size());
      // Informative columns always outrank zero-entropy ones; otherwise the
      // strict comparison keeps the lowest index on ties.
      const bool better = (informative[j] && !best_informative) ||
                          (informative[j] == best_informative && score > best_score);
      if (best == p || better) {
        best = j;
        best_score = score;
        best_informative = informative[j];
      }
    }
    selected.push_back(best);
    taken[best] = true;
    for (std::size_t j = 0; j < p; ++j)
      if (!taken[j]) redundancy_sum[j] += mutual_information(codes[j], codes[best]);
  }
  return selected;
}

}  // namespace featgenn
