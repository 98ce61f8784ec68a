#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace chartgraph {

/// Dense row-major matrix of doubles. Used for node features, patch
/// states, adjacency operators and every learnable weight.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }
  const std::vector<double>& data() const noexcept { return data_; }

  bool same_shape(const Matrix& other) const noexcept {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }
  bool all_finite() const noexcept;

  Matrix transposed() const;

  Matrix& operator+=(const Matrix& other);
  Matrix& operator-=(const Matrix& other);
  Matrix& operator*=(double s);

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);

// Products. All throw Error(ShapeMismatch) on incompatible shapes.
Matrix matmul(const Matrix& a, const Matrix& b);     // a * b
Matrix matmul_tn(const Matrix& a, const Matrix& b);  // a^T * b
Matrix matmul_nt(const Matrix& a, const Matrix& b);  // a * b^T

Matrix hadamard(const Matrix& a, const Matrix& b);
Matrix relu(const Matrix& a);
/// Zeroes entries of `grad` where `pre` is not strictly positive.
Matrix relu_backward(const Matrix& pre, const Matrix& grad);

/// Adds a length-cols row vector to every row.
void add_row_broadcast(Matrix& m, std::span<const double> bias);
/// Column sums, i.e. the gradient of a broadcast bias.
std::vector<double> column_sums(const Matrix& m);

Matrix hconcat(const Matrix& left, const Matrix& right);
/// Selects rows in the given order.
Matrix gather_rows(const Matrix& m, std::span<const std::size_t> rows);

double max_abs_diff(const Matrix& a, const Matrix& b);

}  // namespace chartgraph
