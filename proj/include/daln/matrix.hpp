#pragma once

#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace daln {

/// Dense row-major matrix of 64-bit reals; the universal numeric carrier.
/// Constructors taking entry data reject non-finite values.
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols);  // zero-filled
  Matrix(int rows, int cols, std::vector<double> data);

  static Matrix identity(int n);
  static Matrix filled(int rows, int cols, double value);
  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int size() const { return rows_ * cols_; }
  bool empty() const { return size() == 0; }

  double& operator()(int r, int c) { return data_[static_cast<size_t>(r) * cols_ + c]; }
  double operator()(int r, int c) const { return data_[static_cast<size_t>(r) * cols_ + c]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::span<const double> row(int r) const {
    return {data_.data() + static_cast<size_t>(r) * cols_, static_cast<size_t>(cols_)};
  }
  std::span<double> row(int r) {
    return {data_.data() + static_cast<size_t>(r) * cols_, static_cast<size_t>(cols_)};
  }

  void fill(double v);
  bool all_finite() const;
  double max_abs() const;
  double sum() const;

  bool operator==(const Matrix&) const = default;

  std::string shape_str() const;  // e.g. "3x4"

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

Matrix transpose(const Matrix& m);

/// Entry-wise a + b / a - b; shapes must agree.
Matrix add(const Matrix& a, const Matrix& b);
Matrix sub(const Matrix& a, const Matrix& b);
Matrix scaled(const Matrix& a, double c);

/// Largest |a - b| over entries; shapes must agree.
double max_abs_diff(const Matrix& a, const Matrix& b);

}  // namespace daln
