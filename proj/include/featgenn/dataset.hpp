#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "featgenn/common.hpp"

namespace featgenn {

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ColumnKind { numeric, categorical };

struct ColumnMeta {
  std::string name;
  ColumnKind kind = ColumnKind::numeric;
  // Sorted distinct raw values; x stores the index into this list.
  std::vector<std::string> category_map;
};

/// Immutable feature matrix + encoded target. Class codes index `class_names`.
struct Dataset {
  Matrix x;
  Labels y;
  std::vector<ColumnMeta> columns;
  std::vector<std::string> class_names;
  std::string name;

  std::size_t rows() const { return static_cast<std::size_t>(x.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(x.cols()); }
  int class_count() const { return static_cast<int>(class_names.size()); }

  /// Throws DataError if any invariant is broken.
  void validate() const;
  /// Code of the class whose raw value is `raw`.
  int class_code(std::string_view raw) const;
};

struct FoldPlan {
  int k = 0;
  std::vector<int> assignments;

  RowIndex train_rows(int fold) const;
  RowIndex test_rows(int fold) const;
};

struct ScalerStats {
  std::vector<double> mean;
  std::vector<double> std;
  std::vector<bool> constant;
};

Dataset load_csv(const std::filesystem::path& path, std::string_view target);

/// Z-scores every column with population std; constant columns become zeros.
std::pair<Dataset, ScalerStats> prepare(const Dataset& d);

/// Same scaling rule applied in place to an arbitrary matrix.
ScalerStats standardize_columns(Matrix& x);

/// Stratified k-fold assignment.
FoldPlan make_folds(const Labels& y, int k, std::uint64_t seed);
FoldPlan make_folds(const Dataset& d, int k, std::uint64_t seed);

/// ceil(fraction * n) distinct indices, sorted ascending.
RowIndex subsample_rows(std::size_t n_rows, double fraction, std::uint64_t seed);
RowIndex subsample_rows(const Dataset& d, double fraction, std::uint64_t seed);

Dataset append_features(const Dataset& d, const Matrix& cols, const std::vector<std::string>& names);

Dataset select_columns(const Dataset& d, const std::vector<std::size_t>& cols);

}  // namespace featgenn
