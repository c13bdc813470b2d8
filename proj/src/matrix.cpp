#include "deepclust/matrix.hpp"

#include <algorithm>
#include <cmath>

namespace deepclust {

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  Matrix m(rows.size(), rows.size() ? rows.begin()->size() : 0);
  std::size_t i = 0;
  for (const auto& r : rows) {
    if (r.size() != m.cols_)
      detail::throw_shape("Matrix::from_rows", "ragged initializer");
    std::copy(r.begin(), r.end(), m.row(i++));
  }
  return m;
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

bool Matrix::all_finite() const {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

std::string Matrix::shape_str() const {
  return std::to_string(rows_) + "x" + std::to_string(cols_);
}

Activation activation_from_string(const std::string& name) {
  if (name == "relu") return Activation::relu;
  if (name == "sigmoid") return Activation::sigmoid;
  if (name == "linear") return Activation::linear;
  throw std::invalid_argument("unknown activation kind: " + name);
}

std::string to_string(Activation kind) {
  switch (kind) {
    case Activation::relu: return "relu";
    case Activation::sigmoid: return "sigmoid";
    case Activation::linear: return "linear";
  }
  return "?";
}

namespace detail {
void throw_shape(const std::string& op, const std::string& what) {
  throw std::invalid_argument(op + ": " + what);
}
}  // namespace detail

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows())
    detail::throw_shape("matmul", a.shape_str() + " * " + b.shape_str());
  Matrix out(a.rows(), b.cols());
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  for (std::size_t i = 0; i < n; ++i) {
    double* out_row = out.row(i);
    const double* a_row = a.row(i);
    for (std::size_t p = 0; p < k; ++p) {
      const double av = a_row[p];
      if (av == 0.0) continue;
      const double* b_row = b.row(p);
      for (std::size_t j = 0; j < m; ++j) out_row[j] += av * b_row[j];
    }
  }
  return out;
}

Matrix transpose(const Matrix& a) {
  Matrix out(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
  return out;
}

Matrix affine(const Matrix& input, const Matrix& weights, const std::vector<double>& bias) {
  if (input.cols() != weights.rows())
    detail::throw_shape("affine", "input " + input.shape_str() + " vs weights " +
                                      weights.shape_str());
  if (bias.size() != weights.cols())
    detail::throw_shape("affine", "bias length " + std::to_string(bias.size()) +
                                      " vs weights " + weights.shape_str());
  Matrix out = matmul(input, weights);
  for (std::size_t i = 0; i < out.rows(); ++i) {
    double* r = out.row(i);
    for (std::size_t j = 0; j < out.cols(); ++j) r[j] += bias[j];
  }
  return out;
}

Matrix apply_activation(const Matrix& input, Activation kind) {
  Matrix out = input;
  switch (kind) {
    case Activation::relu:
      for (double& v : out.data()) v = v > 0.0 ? v : 0.0;
      break;
    case Activation::sigmoid:
      for (double& v : out.data()) v = 1.0 / (1.0 + std::exp(-v));
      break;
    case Activation::linear:
      break;
  }
  return out;
}

Matrix activation_grad_from_output(const Matrix& output, Activation kind) {
  Matrix g(output.rows(), output.cols(), 1.0);
  switch (kind) {
    case Activation::relu:
      for (std::size_t i = 0; i < output.size(); ++i)
        g.data()[i] = output.data()[i] > 0.0 ? 1.0 : 0.0;
      break;
    case Activation::sigmoid:
      for (std::size_t i = 0; i < output.size(); ++i) {
        const double y = output.data()[i];
        g.data()[i] = y * (1.0 - y);
      }
      break;
    case Activation::linear:
      break;
  }
  return g;
}

double mse_reconstruction_loss(const Matrix& x, const Matrix& x_hat) {
  if (!x.same_shape(x_hat))
    detail::throw_shape("mse_reconstruction_loss",
                        x.shape_str() + " vs " + x_hat.shape_str());
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x.data()[i] - x_hat.data()[i];
    total += d * d;
  }
  return total / static_cast<double>(x.rows());
}

double kl_divergence(const Matrix& p, const Matrix& q) {
  if (!p.same_shape(q))
    detail::throw_shape("kl_divergence", p.shape_str() + " vs " + q.shape_str());
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double pv = p.data()[i];
    if (pv == 0.0) continue;
    const double qv = q.data()[i];
    if (qv <= 0.0)
      throw std::invalid_argument(
          "kl_divergence: support violation (q == 0 where p > 0)");
    total += pv * std::log(pv / qv);
  }
  return total;
}

Matrix softmax_rows(const Matrix& input) {
  Matrix out(input.rows(), input.cols());
  for (std::size_t i = 0; i < input.rows(); ++i) {
    const double* in = input.row(i);
    double* o = out.row(i);
    double mx = in[0];
    for (std::size_t j = 1; j < input.cols(); ++j) mx = std::max(mx, in[j]);
    double sum = 0.0;
    for (std::size_t j = 0; j < input.cols(); ++j) {
      o[j] = std::exp(in[j] - mx);
      sum += o[j];
    }
    for (std::size_t j = 0; j < input.cols(); ++j) o[j] /= sum;
  }
  return out;
}

Matrix pairwise_sq_dists(const Matrix& x) {
  const std::size_t n = x.rows(), d = x.cols();
  Matrix out(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const double* xi = x.row(i);
    for (std::size_t j = i + 1; j < n; ++j) {
      const double* xj = x.row(j);
      double s = 0.0;
      for (std::size_t c = 0; c < d; ++c) {
        const double diff = xi[c] - xj[c];
        s += diff * diff;
      }
      out(i, j) = s;
      out(j, i) = s;
    }
  }
  return out;
}

Matrix standardize(const Matrix& x) {
  Matrix out = x;
  const std::size_t n = x.rows(), d = x.cols();
  if (n == 0) return out;
  for (std::size_t j = 0; j < d; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += x(i, j);
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double c = x(i, j) - mean;
      var += c * c;
    }
    var /= static_cast<double>(n);
    const double scale = var > 0.0 ? 1.0 / std::sqrt(var) : 1.0;
    for (std::size_t i = 0; i < n; ++i) out(i, j) = (x(i, j) - mean) * scale;
  }
  return out;
}

std::vector<int> argmax_rows(const Matrix& m) {
  std::vector<int> labels(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const double* r = m.row(i);
    std::size_t best = 0;
    for (std::size_t j = 1; j < m.cols(); ++j)
      if (r[j] > r[best]) best = j;
    labels[i] = static_cast<int>(best);
  }
  return labels;
}

}  // namespace deepclust
