#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace featgenn {

/// Row-major dense matrix; rows are samples, columns are features.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Labels = std::vector<int>;
using RowIndex = std::vector<std::size_t>;
using Rng = std::mt19937_64;

/// splitmix64 finalizer; mixes a base seed with a list of stream identifiers
/// so that (seed, generation, candidate) triples map to independent streams.
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> parts);

Matrix take_columns(const Matrix& x, const std::vector<std::size_t>& cols);
Matrix take_rows(const Matrix& x, const RowIndex& rows);

/// Runs fn(i) for i in [0, n) on up to `workers` threads. Callers keep
/// results deterministic by writing to per-index slots only.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

/// Content hash of a matrix (shape and raw bytes).
std::uint64_t hash_matrix(const Matrix& m);

}  // namespace featgenn
