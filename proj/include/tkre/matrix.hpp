#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace tkre {

/// Dense row-major matrix of doubles. The one numeric container shared by
/// the dataset, index and ensemble code.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), values_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
      : rows_(rows), cols_(cols), values_(std::move(values)) {
    if (values_.size() != rows_ * cols_)
      throw std::invalid_argument("Matrix: value count does not match shape");
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return values_.empty(); }

  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }
  double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }

  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(values_.data() + r * cols_, cols_);
  }
  std::span<double> row(std::size_t r) {
    return std::span<double>(values_.data() + r * cols_, cols_);
  }

  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }

  /// New matrix holding the given rows (in the given order).
  Matrix select_rows(std::span<const std::size_t> row_ids) const {
    Matrix out(row_ids.size(), cols_);
    for (std::size_t i = 0; i < row_ids.size(); ++i) {
      const auto src = row(row_ids[i]);
      std::copy(src.begin(), src.end(), out.row(i).begin());
    }
    return out;
  }

  /// New matrix holding the given columns (in the given order).
  Matrix select_cols(std::span<const std::size_t> col_ids) const {
    Matrix out(rows_, col_ids.size());
    for (std::size_t r = 0; r < rows_; ++r)
      for (std::size_t j = 0; j < col_ids.size(); ++j) out(r, j) = (*this)(r, col_ids[j]);
    return out;
  }

  bool operator==(const Matrix& other) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

}  // namespace tkre
