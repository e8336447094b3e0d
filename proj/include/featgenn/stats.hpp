#pragma once

#include <span>
#include <vector>

#include "featgenn/common.hpp"
#include "featgenn/dataset.hpp"

namespace featgenn {

/// Pairwise Pearson coefficients. Constant columns have r = 0 everywhere,
/// including the diagonal.
struct CorrelationMatrix {
  Matrix r;
  std::size_t size() const { return static_cast<std::size_t>(r.rows()); }
};

/// Per-feature mean correlation (row mean of the matrix, self-term included).
struct CorrelationScores {
  std::vector<double> cs;
};

/// Pearson r; 0 when either input has zero variance.
double pearson(std::span<const double> x, std::span<const double> y);

/// Correlations between the columns of `x`, using only `rows`.
CorrelationMatrix correlation_matrix(const Matrix& x, const RowIndex& rows);
CorrelationMatrix correlation_matrix(const Matrix& x);

CorrelationScores correlation_scores(const CorrelationMatrix& m);

/// Equal-width binning over [min, max]; a constant input maps to bin 0.
std::vector<int> discretize(std::span<const double> x, int bins);

/// Plug-in mutual information (nats) of two discrete sequences.
double mutual_information(std::span<const int> a, std::span<const int> b);
double mutual_information(std::span<const double> x, std::span<const int> y, int bins);

/// Greedy mRMR (difference form). Zero-entropy columns rank after every
/// informative column.
std::vector<std::size_t> mrmr_select(const Dataset& d, std::size_t m, int bins = 10);

}  // namespace featgenn
