#pragma once

#include <cstddef>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace deepclust {

// Training aborted because a loss went non-finite.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// File could not be read, parsed, or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Dense row-major matrix of 64-bit reals. The whole engine works in
// double precision; gradient checks need the headroom.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  double* row(std::size_t i) { return data_.data() + i * cols_; }
  const double* row(std::size_t i) const { return data_.data() + i * cols_; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool all_finite() const;
  bool same_shape(const Matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }
  std::string shape_str() const;

  bool operator==(const Matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_ && data_ == other.data_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

enum class Activation { relu, sigmoid, linear };

Activation activation_from_string(const std::string& name);
std::string to_string(Activation kind);

// out[i][j] = sum_k a[i][k] * b[k][j], fixed loop order so results are
// bit-identical between runs.
Matrix matmul(const Matrix& a, const Matrix& b);

Matrix transpose(const Matrix& a);

// input * weights + bias broadcast over rows.
Matrix affine(const Matrix& input, const Matrix& weights, const std::vector<double>& bias);

Matrix apply_activation(const Matrix& input, Activation kind);

// Elementwise derivative of the activation given its output value.
Matrix activation_grad_from_output(const Matrix& output, Activation kind);

// (1/N) * sum_i ||x_i - x_hat_i||^2, row-wise squared Euclidean norm
// averaged over the N rows.
double mse_reconstruction_loss(const Matrix& x, const Matrix& x_hat);

// sum_ij p_ij * log(p_ij / q_ij) with 0*log(0/.) = 0. Throws if q has a
// zero where p does not (support violation).
double kl_divergence(const Matrix& p, const Matrix& q);

// Row softmax with max-subtraction; rows sum to 1 within 1e-9.
Matrix softmax_rows(const Matrix& input);

// Symmetric N x N matrix of squared Euclidean distances, zero diagonal.
Matrix pairwise_sq_dists(const Matrix& x);

// Column-wise zero mean, unit variance; constant columns are centered
// and left unscaled.
Matrix standardize(const Matrix& x);

// argmax per row, ties to the lower column index.
std::vector<int> argmax_rows(const Matrix& m);

namespace detail {
[[noreturn]] void throw_shape(const std::string& op, const std::string& detail);
}

}  // namespace deepclust
