#include "deepclust/tape.hpp"

#include <algorithm>
#include <cmath>

#include "deepclust/rng.hpp"

namespace deepclust {

Matrix CooMatrix::to_dense() const {
  Matrix m(rows, cols);
  for (const auto& e : entries) m(e.i, e.j) += e.v;
  return m;
}

Matrix spmm(const CooMatrix& a, const Matrix& x) {
  if (a.cols != x.rows())
    detail::throw_shape("spmm", std::to_string(a.rows) + "x" + std::to_string(a.cols) +
                                    " * " + x.shape_str());
  Matrix out(a.rows, x.cols());
  for (const auto& e : a.entries) {
    const double* src = x.row(e.j);
    double* dst = out.row(e.i);
    for (std::size_t c = 0; c < x.cols(); ++c) dst[c] += e.v * src[c];
  }
  return out;
}

GradientTape::Var GradientTape::push(Matrix value, bool needs_grad,
                                     std::function<void(GradientTape&, int)> backprop) {
  Node node;
  node.value = std::move(value);
  node.needs_grad = needs_grad;
  node.backprop = std::move(backprop);
  nodes_.push_back(std::move(node));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Matrix& GradientTape::grad_buf(int id) {
  Node& n = nodes_[id];
  if (n.grad.size() == 0) n.grad = Matrix(n.value.rows(), n.value.cols());
  return n.grad;
}

GradientTape::Var GradientTape::constant(Matrix value) {
  return push(std::move(value), false, nullptr);
}

GradientTape::Var GradientTape::param(Matrix value) {
  return push(std::move(value), true, nullptr);
}

GradientTape::Var GradientTape::affine(Var x, Var w, Var b) {
  const Matrix& xv = nodes_[x.id].value;
  const Matrix& wv = nodes_[w.id].value;
  const Matrix& bv = nodes_[b.id].value;
  if (bv.rows() != 1 || bv.cols() != wv.cols())
    detail::throw_shape("tape.affine", "bias " + bv.shape_str() + " vs weights " +
                                           wv.shape_str());
  Matrix out = deepclust::matmul(xv, wv);
  for (std::size_t i = 0; i < out.rows(); ++i)
    for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) += bv(0, j);
  const bool needs =
      nodes_[x.id].needs_grad || nodes_[w.id].needs_grad || nodes_[b.id].needs_grad;
  const int xi = x.id, wi = w.id, bi = b.id;
  return push(std::move(out), needs, [xi, wi, bi](GradientTape& t, int self) {
    const Matrix& g = t.nodes_[self].grad;
    if (t.nodes_[xi].needs_grad) {
      Matrix gx = deepclust::matmul(g, transpose(t.nodes_[wi].value));
      Matrix& acc = t.grad_buf(xi);
      for (std::size_t k = 0; k < acc.size(); ++k) acc.data()[k] += gx.data()[k];
    }
    if (t.nodes_[wi].needs_grad) {
      Matrix gw = deepclust::matmul(transpose(t.nodes_[xi].value), g);
      Matrix& acc = t.grad_buf(wi);
      for (std::size_t k = 0; k < acc.size(); ++k) acc.data()[k] += gw.data()[k];
    }
    if (t.nodes_[bi].needs_grad) {
      Matrix& acc = t.grad_buf(bi);
      for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = 0; j < g.cols(); ++j) acc(0, j) += g(i, j);
    }
  });
}

GradientTape::Var GradientTape::matmul(Var a, Var b) {
  Matrix out = deepclust::matmul(nodes_[a.id].value, nodes_[b.id].value);
  const bool needs = nodes_[a.id].needs_grad || nodes_[b.id].needs_grad;
  const int ai = a.id, bi = b.id;
  return push(std::move(out), needs, [ai, bi](GradientTape& t, int self) {
    const Matrix& g = t.nodes_[self].grad;
    if (t.nodes_[ai].needs_grad) {
      Matrix ga = deepclust::matmul(g, transpose(t.nodes_[bi].value));
      Matrix& acc = t.grad_buf(ai);
      for (std::size_t k = 0; k < acc.size(); ++k) acc.data()[k] += ga.data()[k];
    }
    if (t.nodes_[bi].needs_grad) {
      Matrix gb = deepclust::matmul(transpose(t.nodes_[ai].value), g);
      Matrix& acc = t.grad_buf(bi);
      for (std::size_t k = 0; k < acc.size(); ++k) acc.data()[k] += gb.data()[k];
    }
  });
}

GradientTape::Var GradientTape::graph_prop(const CooMatrix* adj, Var x) {
  Matrix out = spmm(*adj, nodes_[x.id].value);
  const bool needs = nodes_[x.id].needs_grad;
  const int xi = x.id;
  return push(std::move(out), needs, [adj, xi](GradientTape& t, int self) {
    if (!t.nodes_[xi].needs_grad) return;
    const Matrix& g = t.nodes_[self].grad;
    Matrix& acc = t.grad_buf(xi);
    // dL/dX = A^T * g, accumulated entry by entry in stored order.
    for (const auto& e : adj->entries) {
      const double* src = g.row(e.i);
      double* dst = acc.row(e.j);
      for (std::size_t c = 0; c < g.cols(); ++c) dst[c] += e.v * src[c];
    }
  });
}

GradientTape::Var GradientTape::lincomb(Var a, Var b, double ca, double cb) {
  const Matrix& av = nodes_[a.id].value;
  const Matrix& bv = nodes_[b.id].value;
  if (!av.same_shape(bv))
    detail::throw_shape("tape.lincomb", av.shape_str() + " vs " + bv.shape_str());
  Matrix out(av.rows(), av.cols());
  for (std::size_t k = 0; k < out.size(); ++k)
    out.data()[k] = ca * av.data()[k] + cb * bv.data()[k];
  const bool needs = nodes_[a.id].needs_grad || nodes_[b.id].needs_grad;
  const int ai = a.id, bi = b.id;
  return push(std::move(out), needs, [ai, bi, ca, cb](GradientTape& t, int self) {
    const Matrix& g = t.nodes_[self].grad;
    if (t.nodes_[ai].needs_grad) {
      Matrix& acc = t.grad_buf(ai);
      for (std::size_t k = 0; k < acc.size(); ++k) acc.data()[k] += ca * g.data()[k];
    }
    if (t.nodes_[bi].needs_grad) {
      Matrix& acc = t.grad_buf(bi);
      for (std::size_t k = 0; k < acc.size(); ++k) acc.data()[k] += cb * g.data()[k];
    }
  });
}

GradientTape::Var GradientTape::act(Var x, Activation kind) {
  Matrix out = apply_activation(nodes_[x.id].value, kind);
  const bool needs = nodes_[x.id].needs_grad;
  const int xi = x.id;
  return push(std::move(out), needs, [xi, kind](GradientTape& t, int self) {
    if (!t.nodes_[xi].needs_grad) return;
    const Matrix& g = t.nodes_[self].grad;
    const Matrix dact = activation_grad_from_output(t.nodes_[self].value, kind);
    Matrix& acc = t.grad_buf(xi);
    for (std::size_t k = 0; k < acc.size(); ++k)
      acc.data()[k] += g.data()[k] * dact.data()[k];
  });
}

GradientTape::Var GradientTape::row_softmax(Var x) {
  Matrix out = softmax_rows(nodes_[x.id].value);
  const bool needs = nodes_[x.id].needs_grad;
  const int xi = x.id;
  return push(std::move(out), needs, [xi](GradientTape& t, int self) {
    if (!t.nodes_[xi].needs_grad) return;
    const Matrix& g = t.nodes_[self].grad;
    const Matrix& q = t.nodes_[self].value;
    Matrix& acc = t.grad_buf(xi);
    for (std::size_t i = 0; i < q.rows(); ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < q.cols(); ++j) dot += g(i, j) * q(i, j);
      for (std::size_t j = 0; j < q.cols(); ++j)
        acc(i, j) += q(i, j) * (g(i, j) - dot);
    }
  });
}

GradientTape::Var GradientTape::sq_dists_to_centers(Var h, Var centers) {
  const Matrix& hv = nodes_[h.id].value;
  const Matrix& cv = nodes_[centers.id].value;
  if (hv.cols() != cv.cols())
    detail::throw_shape("tape.sq_dists_to_centers",
                        hv.shape_str() + " vs centers " + cv.shape_str());
  const std::size_t n = hv.rows(), k = cv.rows(), d = hv.cols();
  Matrix out(n, k);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < k; ++j) {
      double s = 0.0;
      for (std::size_t c = 0; c < d; ++c) {
        const double diff = hv(i, c) - cv(j, c);
        s += diff * diff;
      }
      out(i, j) = s;
    }
  const bool needs = nodes_[h.id].needs_grad || nodes_[centers.id].needs_grad;
  const int hi = h.id, ci = centers.id;
  return push(std::move(out), needs, [hi, ci](GradientTape& t, int self) {
    const Matrix& g = t.nodes_[self].grad;
    const Matrix& hv2 = t.nodes_[hi].value;
    const Matrix& cv2 = t.nodes_[ci].value;
    const std::size_t n = hv2.rows(), k = cv2.rows(), d = hv2.cols();
    const bool want_h = t.nodes_[hi].needs_grad;
    const bool want_c = t.nodes_[ci].needs_grad;
    Matrix* gh = want_h ? &t.grad_buf(hi) : nullptr;
    Matrix* gc = want_c ? &t.grad_buf(ci) : nullptr;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < k; ++j) {
        const double gij = g(i, j);
        if (gij == 0.0) continue;
        for (std::size_t c = 0; c < d; ++c) {
          const double diff = hv2(i, c) - cv2(j, c);
          if (want_h) (*gh)(i, c) += gij * 2.0 * diff;
          if (want_c) (*gc)(j, c) -= gij * 2.0 * diff;
        }
      }
  });
}

GradientTape::Var GradientTape::student_t_kernel(Var d2, double v) {
  const Matrix& dv = nodes_[d2.id].value;
  Matrix out(dv.rows(), dv.cols());
  const double expo = -(v + 1.0) / 2.0;
  for (std::size_t k = 0; k < dv.size(); ++k)
    out.data()[k] = std::pow(1.0 + dv.data()[k] / v, expo);
  const bool needs = nodes_[d2.id].needs_grad;
  const int di = d2.id;
  return push(std::move(out), needs, [di, v](GradientTape& t, int self) {
    if (!t.nodes_[di].needs_grad) return;
    const Matrix& g = t.nodes_[self].grad;
    const Matrix& w = t.nodes_[self].value;
    const Matrix& dv2 = t.nodes_[di].value;
    Matrix& acc = t.grad_buf(di);
    const double coef = -(v + 1.0) / (2.0 * v);
    for (std::size_t k = 0; k < acc.size(); ++k) {
      const double base = 1.0 + dv2.data()[k] / v;
      acc.data()[k] += g.data()[k] * coef * w.data()[k] / base;
    }
  });
}

GradientTape::Var GradientTape::add_scalar(Var x, double c) {
  Matrix out = nodes_[x.id].value;
  for (std::size_t k = 0; k < out.size(); ++k) out.data()[k] += c;
  const bool needs = nodes_[x.id].needs_grad;
  const int xi = x.id;
  return push(std::move(out), needs, [xi](GradientTape& t, int self) {
    if (!t.nodes_[xi].needs_grad) return;
    const Matrix& g = t.nodes_[self].grad;
    Matrix& acc = t.grad_buf(xi);
    for (std::size_t k = 0; k < acc.size(); ++k) acc.data()[k] += g.data()[k];
  });
}

GradientTape::Var GradientTape::row_normalize(Var x) {
  const Matrix& xv = nodes_[x.id].value;
  Matrix out(xv.rows(), xv.cols());
  for (std::size_t i = 0; i < xv.rows(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < xv.cols(); ++j) s += xv(i, j);
    for (std::size_t j = 0; j < xv.cols(); ++j) out(i, j) = xv(i, j) / s;
  }
  const bool needs = nodes_[x.id].needs_grad;
  const int xi = x.id;
  return push(std::move(out), needs, [xi](GradientTape& t, int self) {
    if (!t.nodes_[xi].needs_grad) return;
    const Matrix& g = t.nodes_[self].grad;
    const Matrix& q = t.nodes_[self].value;
    const Matrix& xv2 = t.nodes_[xi].value;
    Matrix& acc = t.grad_buf(xi);
    for (std::size_t i = 0; i < q.rows(); ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < q.cols(); ++j) s += xv2(i, j);
      double dot = 0.0;
      for (std::size_t j = 0; j < q.cols(); ++j) dot += g(i, j) * q(i, j);
      for (std::size_t j = 0; j < q.cols(); ++j) acc(i, j) += (g(i, j) - dot) / s;
    }
  });
}

GradientTape::Var GradientTape::subspace_scores(Var h, Var bases, std::size_t n_blocks,
                                                std::size_t d_sub) {
  const Matrix& hv = nodes_[h.id].value;
  const Matrix& dv = nodes_[bases.id].value;
  if (dv.cols() != n_blocks * d_sub || dv.rows() != hv.cols())
    detail::throw_shape("tape.subspace_scores",
                        "bases " + dv.shape_str() + " vs latent " + hv.shape_str());
  Matrix proj = deepclust::matmul(hv, dv);  // N x (K*d_sub)
  const std::size_t n = hv.rows();
  Matrix out(n, n_blocks);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t b = 0; b < n_blocks; ++b) {
      double s = 0.0;
      for (std::size_t c = 0; c < d_sub; ++c) {
        const double p = proj(i, b * d_sub + c);
        s += p * p;
      }
      out(i, b) = s;
    }
  const bool needs = nodes_[h.id].needs_grad || nodes_[bases.id].needs_grad;
  const int hi = h.id, di = bases.id;
  auto proj_shared = std::make_shared<Matrix>(std::move(proj));
  return push(std::move(out), needs,
              [hi, di, n_blocks, d_sub, proj_shared](GradientTape& t, int self) {
                const Matrix& g = t.nodes_[self].grad;
                const Matrix& pr = *proj_shared;
                Matrix gproj(pr.rows(), pr.cols());
                for (std::size_t i = 0; i < pr.rows(); ++i)
                  for (std::size_t b = 0; b < n_blocks; ++b) {
                    const double gib = g(i, b);
                    if (gib == 0.0) continue;
                    for (std::size_t c = 0; c < d_sub; ++c)
                      gproj(i, b * d_sub + c) = 2.0 * gib * pr(i, b * d_sub + c);
                  }
                if (t.nodes_[hi].needs_grad) {
                  Matrix gh = deepclust::matmul(gproj, transpose(t.nodes_[di].value));
                  Matrix& acc = t.grad_buf(hi);
                  for (std::size_t k = 0; k < acc.size(); ++k)
                    acc.data()[k] += gh.data()[k];
                }
                if (t.nodes_[di].needs_grad) {
                  Matrix gd = deepclust::matmul(transpose(t.nodes_[hi].value), gproj);
                  Matrix& acc = t.grad_buf(di);
                  for (std::size_t k = 0; k < acc.size(); ++k)
                    acc.data()[k] += gd.data()[k];
                }
              });
}

GradientTape::Var GradientTape::basis_regularity(Var bases, std::size_t n_blocks,
                                                 std::size_t d_sub) {
  const Matrix& dv = nodes_[bases.id].value;
  if (dv.cols() != n_blocks * d_sub)
    detail::throw_shape("tape.basis_regularity",
                        "bases " + dv.shape_str() + " vs " + std::to_string(n_blocks) +
                            " blocks of " + std::to_string(d_sub));
  Matrix gram = deepclust::matmul(transpose(dv), dv);
  double penalty = 0.0;
  const std::size_t w = n_blocks * d_sub;
  for (std::size_t a = 0; a < w; ++a)
    for (std::size_t b = 0; b < w; ++b) {
      const double target = (a == b) ? 1.0 : 0.0;
      const double diff = gram(a, b) - target;
      penalty += diff * diff;
    }
  Matrix out(1, 1);
  out(0, 0) = penalty;
  const bool needs = nodes_[bases.id].needs_grad;
  const int di = bases.id;
  auto gram_shared = std::make_shared<Matrix>(std::move(gram));
  return push(std::move(out), needs, [di, gram_shared](GradientTape& t, int self) {
    if (!t.nodes_[di].needs_grad) return;
    const double gscalar = t.nodes_[self].grad(0, 0);
    const Matrix& gm = *gram_shared;
    Matrix dgram(gm.rows(), gm.cols());
    for (std::size_t a = 0; a < gm.rows(); ++a)
      for (std::size_t b = 0; b < gm.cols(); ++b) {
        const double target = (a == b) ? 1.0 : 0.0;
        dgram(a, b) = 2.0 * (gm(a, b) - target) * gscalar;
      }
    // f = sum (D^T D - I)^2 with symmetric residual, so dD = 2 * D * dgram.
    Matrix gd = deepclust::matmul(t.nodes_[di].value, dgram);
    Matrix& acc = t.grad_buf(di);
    for (std::size_t k = 0; k < acc.size(); ++k) acc.data()[k] += 2.0 * gd.data()[k];
  });
}

GradientTape::Var GradientTape::mse_against(const Matrix& target, Var x_hat) {
  const Matrix& xv = nodes_[x_hat.id].value;
  Matrix out(1, 1);
  out(0, 0) = mse_reconstruction_loss(target, xv);
  const bool needs = nodes_[x_hat.id].needs_grad;
  const int xi = x_hat.id;
  auto tgt = std::make_shared<Matrix>(target);
  return push(std::move(out), needs, [xi, tgt](GradientTape& t, int self) {
    if (!t.nodes_[xi].needs_grad) return;
    const double g = t.nodes_[self].grad(0, 0);
    const Matrix& xv2 = t.nodes_[xi].value;
    Matrix& acc = t.grad_buf(xi);
    const double coef = 2.0 * g / static_cast<double>(xv2.rows());
    for (std::size_t k = 0; k < acc.size(); ++k)
      acc.data()[k] += coef * (xv2.data()[k] - tgt->data()[k]);
  });
}

GradientTape::Var GradientTape::kl_against(const Matrix& p_target, Var q) {
  const Matrix& qv = nodes_[q.id].value;
  Matrix out(1, 1);
  out(0, 0) = kl_divergence(p_target, qv);
  const bool needs = nodes_[q.id].needs_grad;
  const int qi = q.id;
  auto tgt = std::make_shared<Matrix>(p_target);
  return push(std::move(out), needs, [qi, tgt](GradientTape& t, int self) {
    if (!t.nodes_[qi].needs_grad) return;
    const double g = t.nodes_[self].grad(0, 0);
    const Matrix& qv2 = t.nodes_[qi].value;
    Matrix& acc = t.grad_buf(qi);
    for (std::size_t k = 0; k < acc.size(); ++k) {
      const double p = tgt->data()[k];
      if (p == 0.0) continue;
      acc.data()[k] -= g * p / qv2.data()[k];
    }
  });
}

GradientTape::Var GradientTape::add(Var a, Var b) {
  const Matrix& av = nodes_[a.id].value;
  const Matrix& bv = nodes_[b.id].value;
  if (!av.same_shape(bv))
    detail::throw_shape("tape.add", av.shape_str() + " vs " + bv.shape_str());
  Matrix out(av.rows(), av.cols());
  for (std::size_t k = 0; k < out.size(); ++k)
    out.data()[k] = av.data()[k] + bv.data()[k];
  const bool needs = nodes_[a.id].needs_grad || nodes_[b.id].needs_grad;
  const int ai = a.id, bi = b.id;
  return push(std::move(out), needs, [ai, bi](GradientTape& t, int self) {
    const Matrix& g = t.nodes_[self].grad;
    for (int id : {ai, bi}) {
      if (!t.nodes_[id].needs_grad) continue;
      Matrix& acc = t.grad_buf(id);
      for (std::size_t k = 0; k < acc.size(); ++k) acc.data()[k] += g.data()[k];
    }
  });
}

GradientTape::Var GradientTape::scale(Var a, double c) {
  Matrix out = nodes_[a.id].value;
  for (std::size_t k = 0; k < out.size(); ++k) out.data()[k] *= c;
  const bool needs = nodes_[a.id].needs_grad;
  const int ai = a.id;
  return push(std::move(out), needs, [ai, c](GradientTape& t, int self) {
    if (!t.nodes_[ai].needs_grad) return;
    const Matrix& g = t.nodes_[self].grad;
    Matrix& acc = t.grad_buf(ai);
    for (std::size_t k = 0; k < acc.size(); ++k) acc.data()[k] += c * g.data()[k];
  });
}

void GradientTape::backward(Var loss) {
  Node& top = nodes_[loss.id];
  if (top.value.rows() != 1 || top.value.cols() != 1)
    detail::throw_shape("tape.backward",
                        "loss must be scalar, got " + top.value.shape_str());
  for (Node& n : nodes_) {
    if (n.grad.size() != 0)
      std::fill(n.grad.data().begin(), n.grad.data().end(), 0.0);
  }
  grad_buf(loss.id)(0, 0) = 1.0;
  for (int id = loss.id; id >= 0; --id) {
    Node& n = nodes_[id];
    if (!n.backprop || !n.needs_grad || n.grad.size() == 0) continue;
    n.backprop(*this, id);
  }
}

void adam_step(const std::vector<Matrix*>& params, const std::vector<Matrix>& grads,
               AdamState& state, double lr, double beta1, double beta2, double eps) {
  if (params.size() != grads.size())
    throw std::invalid_argument("adam_step: params/grads count mismatch");
  if (state.m.empty()) {
    for (const Matrix* p : params) {
      state.m.emplace_back(p->rows(), p->cols());
      state.v.emplace_back(p->rows(), p->cols());
    }
  }
  state.step += 1;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
  for (std::size_t p = 0; p < params.size(); ++p) {
    Matrix& w = *params[p];
    const Matrix& g = grads[p];
    Matrix& m = state.m[p];
    Matrix& v = state.v[p];
    for (std::size_t k = 0; k < w.size(); ++k) {
      const double gk = g.data()[k];
      m.data()[k] = beta1 * m.data()[k] + (1.0 - beta1) * gk;
      v.data()[k] = beta2 * v.data()[k] + (1.0 - beta2) * gk * gk;
      const double mhat = m.data()[k] / bc1;
      const double vhat = v.data()[k] / bc2;
      w.data()[k] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
}

double finite_diff_check(const std::function<double()>& loss_fn,
                         const std::function<std::vector<Matrix>()>& grad_fn,
                         const std::vector<Matrix*>& params, double epsilon,
                         std::size_t max_coords_per_param, std::uint64_t seed) {
  const std::vector<Matrix> analytic = grad_fn();
  if (analytic.size() != params.size())
    throw std::invalid_argument("finite_diff_check: grad_fn returned wrong count");
  Rng rng(seed);
  double worst = 0.0;
  for (std::size_t p = 0; p < params.size(); ++p) {
    Matrix& w = *params[p];
    const std::size_t total = w.size();
    std::vector<std::size_t> coords;
    if (total <= max_coords_per_param) {
      coords.resize(total);
      for (std::size_t k = 0; k < total; ++k) coords[k] = k;
    } else {
      for (std::size_t k = 0; k < max_coords_per_param; ++k)
        coords.push_back(rng.uniform_int(total));
      std::sort(coords.begin(), coords.end());
      coords.erase(std::unique(coords.begin(), coords.end()), coords.end());
    }
    for (std::size_t k : coords) {
      const double keep = w.data()[k];
      w.data()[k] = keep + epsilon;
      const double up = loss_fn();
      w.data()[k] = keep - epsilon;
      const double dn = loss_fn();
      w.data()[k] = keep;
      const double numeric = (up - dn) / (2.0 * epsilon);
      const double a = analytic[p].data()[k];
      // central differences on an O(1) loss carry ~1e-10 of absolute noise at
      // 64 bits, so coordinates near zero can never certify a small relative
      // error. Skip the pure-noise region and floor the denominator so the
      // score stays relative for every gradient large enough to matter.
      if (std::abs(a) < 1e-6 && std::abs(numeric) < 1e-6) continue;
      const double err = std::abs(a - numeric) / std::max(std::abs(numeric), 1e-4);
      worst = std::max(worst, err);
    }
  }
  return worst;
}

}  // namespace deepclust
