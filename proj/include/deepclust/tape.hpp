#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "deepclust/matrix.hpp"

namespace deepclust {

// Sparse matrix in coordinate form. Entries are kept in a fixed order so
// repeated products accumulate identically run to run.
struct CooMatrix {
  struct Entry {
    std::size_t i, j;
    double v;
  };
  std::size_t rows = 0, cols = 0;
  std::vector<Entry> entries;

  Matrix to_dense() const;
};

// out = a * x with a sparse.
Matrix spmm(const CooMatrix& a, const Matrix& x);

// Reverse-mode tape. Build the forward graph with the op methods, call
// backward() on a scalar loss, then read grad() for any param node.
// The tape owns all values; Var is just an index into it.
class GradientTape {
 public:
  struct Var {
    int id = -1;
  };

  GradientTape() = default;
  GradientTape(const GradientTape&) = delete;
  GradientTape& operator=(const GradientTape&) = delete;

  Var constant(Matrix value);  // leaf, no gradient
  Var param(Matrix value);     // leaf, receives gradient

  // y = x*w + b (b broadcast over rows, shape 1 x cols(w)).
  Var affine(Var x, Var w, Var b);
  Var matmul(Var a, Var b);
  // y = adj * x; adj is not owned and must outlive the tape.
  Var graph_prop(const CooMatrix* adj, Var x);
  // y = ca*a + cb*b, elementwise.
  Var lincomb(Var a, Var b, double ca, double cb);
  Var act(Var x, Activation kind);
  Var row_softmax(Var x);
  // out(i,j) = ||h_i - centers_j||^2.
  Var sq_dists_to_centers(Var h, Var centers);
  // out = (1 + d2/v)^{-(v+1)/2}, elementwise on squared distances.
  Var student_t_kernel(Var d2, double v);
  Var add_scalar(Var x, double c);
  // Divide each row by its sum (sums assumed positive).
  Var row_normalize(Var x);
  // bases is z x (n_blocks*d_sub); out(i,b) = ||proj of h_i on block b||^2.
  Var subspace_scores(Var h, Var bases, std::size_t n_blocks, std::size_t d_sub);
  // sum of squared deviations of bases' gram matrix from identity
  // (within-block orthonormality + cross-block orthogonality), 1x1.
  Var basis_regularity(Var bases, std::size_t n_blocks, std::size_t d_sub);
  // mean over rows of squared row distance to target, 1x1.
  Var mse_against(const Matrix& target, Var x_hat);
  // KL(p_target || q), 1x1. p_target is a constant.
  Var kl_against(const Matrix& p_target, Var q);
  Var add(Var a, Var b);
  Var scale(Var a, double c);

  const Matrix& value(Var v) const { return nodes_[v.id].value; }
  const Matrix& grad(Var v) const { return nodes_[v.id].grad; }

  // Seeds d(loss)/d(loss) = 1 and sweeps the tape in reverse. loss must be 1x1.
  void backward(Var loss);

 private:
  struct Node {
    Matrix value;
    Matrix grad;  // lazily sized
    bool needs_grad = false;
    // Called with the tape and this node's own id during the reverse sweep.
    std::function<void(GradientTape&, int)> backprop;
  };

  Var push(Matrix value, bool needs_grad, std::function<void(GradientTape&, int)> backprop);
  Matrix& grad_buf(int id);

  std::vector<Node> nodes_;
};

// Adam with bias correction. State is lazily sized to match params on first use.
struct AdamState {
  long step = 0;
  std::vector<Matrix> m, v;
};

void adam_step(const std::vector<Matrix*>& params, const std::vector<Matrix>& grads,
               AdamState& state, double lr, double beta1 = 0.9, double beta2 = 0.999,
               double eps = 1e-8);

// Central-difference check of grad_fn against loss_fn on a sampled subset of
// coordinates of each param. Returns the max relative error,
// |a - n| / max(|n|, 1e-4); coordinates where both magnitudes are below 1e-6
// sit inside the finite-difference noise floor and are skipped. Params are
// perturbed in place and restored.
double finite_diff_check(const std::function<double()>& loss_fn,
                         const std::function<std::vector<Matrix>()>& grad_fn,
                         const std::vector<Matrix*>& params, double epsilon,
                         std::size_t max_coords_per_param = 24,
                         std::uint64_t seed = 12345);

}  // namespace deepclust
