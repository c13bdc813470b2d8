#include "deepclust/dc_models.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "deepclust/rng.hpp"

namespace deepclust {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_seconds(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

Matrix glorot(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  Matrix w(fan_in, fan_out);
  const double limit = std::sqrt(6.0 / double(fan_in + fan_out));
  for (double& v : w.data()) v = (rng.uniform() * 2.0 - 1.0) * limit;
  return w;
}

constexpr std::uint64_t kGcnSalt = 0x6763'6e77;      // gcn weight draws
constexpr std::uint64_t kCenterSalt = 0x636b'6d70;   // center k-means
constexpr std::uint64_t kSilSalt = 0x7369'6c73;      // silhouette subsample
constexpr std::uint64_t kBasesSalt = 0x6261'7365;    // basis padding draws

std::string divergence_message(const char* model, std::size_t epoch,
                               const std::vector<EpochRecord>& history,
                               double loss) {
  std::ostringstream os;
  os << model << " diverged at epoch " << epoch << " (loss=" << loss << ")";
  if (!history.empty()) {
    os << "; recent losses:";
    std::size_t start = history.size() > 3 ? history.size() - 3 : 0;
    for (std::size_t i = start; i < history.size(); ++i)
      os << ' ' << history[i].total_loss;
  }
  return os.str();
}

// Orthonormalize the d_sub columns of one basis block in place (two-pass
// modified Gram-Schmidt). A numerically dead column is either redrawn from
// rng (init path) or treated as a degenerate training state.
void orthonormalize_block(Matrix& bases, std::size_t block, std::size_t d_sub,
                          Rng* redraw) {
  const std::size_t z = bases.rows();
  const std::size_t c0 = block * d_sub;
  for (std::size_t j = 0; j < d_sub; ++j) {
    for (int attempt = 0;; ++attempt) {
      for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t prev = 0; prev < j; ++prev) {
          double dot = 0.0;
          for (std::size_t r = 0; r < z; ++r)
            dot += bases(r, c0 + prev) * bases(r, c0 + j);
          for (std::size_t r = 0; r < z; ++r)
            bases(r, c0 + j) -= dot * bases(r, c0 + prev);
        }
      }
      double norm_sq = 0.0;
      for (std::size_t r = 0; r < z; ++r)
        norm_sq += bases(r, c0 + j) * bases(r, c0 + j);
      if (norm_sq > 1e-20) {
        const double inv = 1.0 / std::sqrt(norm_sq);
        for (std::size_t r = 0; r < z; ++r) bases(r, c0 + j) *= inv;
        break;
      }
      if (redraw == nullptr || attempt >= 32)
        throw DivergenceError("subspace basis block " + std::to_string(block) +
                              " collapsed during re-orthonormalization");
      for (std::size_t r = 0; r < z; ++r) bases(r, c0 + j) = redraw->normal();
    }
  }
}

void orthonormalize_all_blocks(Matrix& bases, std::size_t k, std::size_t d_sub) {
  for (std::size_t g = 0; g < k; ++g) orthonormalize_block(bases, g, d_sub, nullptr);
}

std::size_t clamp_knn_k(std::size_t want, std::size_t n) {
  if (n < 2) throw std::invalid_argument("need at least 2 rows to build a knn graph");
  return std::max<std::size_t>(1, std::min(want, n - 1));
}

}  // namespace

Matrix soft_assignment_q(const Matrix& h, const Matrix& centers, double v) {
  if (h.cols() != centers.cols())
    detail::throw_shape("soft assignment",
                        h.shape_str() + " vs centers " + centers.shape_str());
  if (v <= 0.0) throw std::invalid_argument("soft assignment: v must be positive");
  const std::size_t n = h.rows(), k = centers.rows();
  Matrix q(n, k);
  const double expo = -(v + 1.0) / 2.0;
  for (std::size_t i = 0; i < n; ++i) {
    double row_sum = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      double d2 = 0.0;
      for (std::size_t c = 0; c < h.cols(); ++c) {
        const double d = h(i, c) - centers(j, c);
        d2 += d * d;
      }
      const double val = std::pow(1.0 + d2 / v, expo);
      q(i, j) = val;
      row_sum += val;
    }
    for (std::size_t j = 0; j < k; ++j) q(i, j) /= row_sum;
  }
  return q;
}

Matrix target_distribution_p(const Matrix& q) {
  const std::size_t n = q.rows(), k = q.cols();
  if (n == 0 || k == 0) throw std::invalid_argument("target distribution: empty input");
  std::vector<double> freq(k, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < k; ++j) freq[j] += q(i, j);
  Matrix p(n, k);
  for (std::size_t i = 0; i < n; ++i) {
    double row_sum = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      const double val = freq[j] > 0.0 ? q(i, j) * q(i, j) / freq[j] : 0.0;
      p(i, j) = val;
      row_sum += val;
    }
    if (row_sum > 0.0) {
      for (std::size_t j = 0; j < k; ++j) p(i, j) /= row_sum;
    } else {
      for (std::size_t j = 0; j < k; ++j) p(i, j) = 1.0 / double(k);
    }
  }
  return p;
}

Matrix refined_affinity(const Matrix& s) { return target_distribution_p(s); }

std::string trace_to_csv(const TrainTrace& trace) {
  std::ostringstream os;
  os << "epoch,total_loss,recon,kl_pq,kl_pz,basis_penalty,silhouette,predicted_k\n";
  char buf[256];
  for (std::size_t i = 0; i < trace.epochs.size(); ++i) {
    const EpochRecord& r = trace.epochs[i];
    std::snprintf(buf, sizeof(buf), "%zu,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%zu\n",
                  i, r.total_loss, r.recon, r.kl_pq, r.kl_pz, r.basis_penalty,
                  r.silhouette, r.predicted_k);
    os << buf;
  }
  return os.str();
}

// ---- SDCN ------------------------------------------------------------------

std::vector<Matrix*> sdcn_param_ptrs(SdcnState& st) {
  std::vector<Matrix*> out;
  for (std::size_t i = 0; i < st.ae.enc_w.size(); ++i) {
    out.push_back(&st.ae.enc_w[i]);
    out.push_back(&st.ae.enc_b[i]);
  }
  for (std::size_t i = 0; i < st.ae.dec_w.size(); ++i) {
    out.push_back(&st.ae.dec_w[i]);
    out.push_back(&st.ae.dec_b[i]);
  }
  for (Matrix& w : st.gcn_w) out.push_back(&w);
  out.push_back(&st.centers);
  return out;
}

std::vector<Matrix> init_gcn_weights(const AEConfig& ae, std::size_t k,
                                     std::uint64_t seed) {
  if (ae.input_dim == 0) throw std::invalid_argument("gcn init: input_dim not set");
  if (k == 0) throw std::invalid_argument("gcn init: k must be positive");
  std::vector<std::size_t> chain;
  chain.push_back(ae.input_dim);
  for (std::size_t h : ae.hidden_sizes) chain.push_back(h);
  chain.push_back(ae.latent_dim);
  Rng rng(Rng::mix(seed, kGcnSalt));
  std::vector<Matrix> w;
  w.reserve(chain.size());
  for (std::size_t i = 0; i + 1 < chain.size(); ++i)
    w.push_back(glorot(chain[i], chain[i + 1], rng));
  w.push_back(glorot(chain.back(), k, rng));
  return w;
}

SdcnGraphVars sdcn_forward_graph(GradientTape& t, const Matrix& x, SdcnState& st,
                                 std::vector<GradientTape::Var>* params_out) {
  using Var = GradientTape::Var;
  if (st.adj == nullptr) throw std::invalid_argument("sdcn forward: adjacency not set");
  if (st.gcn_w.size() != st.ae.enc_w.size() + 1)
    throw std::invalid_argument("sdcn forward: gcn depth must be encoder depth + 1");

  Var xv = t.constant(x);
  std::vector<Var> enc_w, enc_b, dec_w, dec_b, gcn_w;
  for (std::size_t i = 0; i < st.ae.enc_w.size(); ++i) {
    enc_w.push_back(t.param(st.ae.enc_w[i]));
    enc_b.push_back(t.param(st.ae.enc_b[i]));
  }
  for (std::size_t i = 0; i < st.ae.dec_w.size(); ++i) {
    dec_w.push_back(t.param(st.ae.dec_w[i]));
    dec_b.push_back(t.param(st.ae.dec_b[i]));
  }
  for (Matrix& w : st.gcn_w) gcn_w.push_back(t.param(w));
  Var centers = t.param(st.centers);
  if (params_out != nullptr) {
    params_out->clear();
    for (std::size_t i = 0; i < enc_w.size(); ++i) {
      params_out->push_back(enc_w[i]);
      params_out->push_back(enc_b[i]);
    }
    for (std::size_t i = 0; i < dec_w.size(); ++i) {
      params_out->push_back(dec_w[i]);
      params_out->push_back(dec_b[i]);
    }
    for (Var w : gcn_w) params_out->push_back(w);
    params_out->push_back(centers);
  }

  // encoder, keeping every layer output for the delivery operator
  std::vector<Var> enc_out;
  Var cur = xv;
  for (std::size_t i = 0; i < enc_w.size(); ++i) {
    cur = t.affine(cur, enc_w[i], enc_b[i]);
    if (i + 1 < enc_w.size()) cur = t.act(cur, st.ae.hidden_activation);
    enc_out.push_back(cur);
  }
  Var h = cur;

  Var dec = h;
  for (std::size_t i = 0; i < dec_w.size(); ++i) {
    dec = t.affine(dec, dec_w[i], dec_b[i]);
    if (i + 1 < dec_w.size()) dec = t.act(dec, st.ae.hidden_activation);
  }
  Var x_hat = dec;

  const bool dense = st.adj->use_dense();
  Var adj_dense;
  if (dense) adj_dense = t.constant(st.adj->dense);

  Var zcur;
  for (std::size_t i = 0; i < gcn_w.size(); ++i) {
    Var in = i == 0 ? xv
                    : t.lincomb(zcur, enc_out[i - 1], 1.0 - st.epsilon, st.epsilon);
    Var propped = dense ? t.matmul(adj_dense, in) : t.graph_prop(&st.adj->coo, in);
    Var lin = t.matmul(propped, gcn_w[i]);
    zcur = i + 1 < gcn_w.size() ? t.act(lin, st.ae.hidden_activation)
                                : t.row_softmax(lin);
  }
  Var z = zcur;

  Var d2 = t.sq_dists_to_centers(h, centers);
  Var q = t.row_normalize(t.student_t_kernel(d2, 1.0));
  return {x_hat, h, q, z};
}

SdcnForwardOut sdcn_forward(const Matrix& x, const AutoencoderParams& ae,
                            const std::vector<Matrix>& gcn_w,
                            const NormalizedAdjacency& adj, const Matrix& centers,
                            double epsilon) {
  SdcnState st;
  st.ae = ae;
  st.gcn_w = gcn_w;
  st.centers = centers;
  st.adj = &adj;
  st.epsilon = epsilon;
  GradientTape t;
  SdcnGraphVars g = sdcn_forward_graph(t, x, st, nullptr);
  return {t.value(g.x_hat), t.value(g.h), t.value(g.q), t.value(g.z)};
}

double sdcn_loss(const Matrix& x, const Matrix& x_hat, const Matrix& p,
                 const Matrix& q, const Matrix& z, double alpha, double beta) {
  return mse_reconstruction_loss(x, x_hat) + alpha * kl_divergence(p, q) +
         beta * kl_divergence(p, z);
}

TrainOutput sdcn_train(const Matrix& x, const DCConfig& config,
                       const AutoencoderParams* pretrained) {
  const auto t0 = Clock::now();
  if (config.k < 2) throw std::invalid_argument("sdcn: k must be at least 2");
  if (config.epochs == 0) throw std::invalid_argument("sdcn: epochs must be positive");
  if (x.rows() < config.k)
    throw std::invalid_argument("sdcn: fewer rows than clusters");
  if (config.p_interval == 0)
    throw std::invalid_argument("sdcn: p_interval must be positive");

  TrainTrace trace;
  const Matrix xs = config.ae.standardize_input ? standardize(x) : x;
  AEConfig ae_cfg = config.ae;
  ae_cfg.input_dim = x.cols();
  ae_cfg.standardize_input = false;  // already applied above

  AutoencoderParams ae;
  if (pretrained != nullptr) {
    ae = *pretrained;
    trace.notes.push_back("pretrained autoencoder supplied; pretraining skipped");
  } else {
    PretrainResult pr = pretrain(xs, ae_cfg);
    ae = std::move(pr.params);
    trace.pretrain_loss = std::move(pr.loss_trace);
  }

  const double bandwidth =
      config.heat_t > 0.0 ? config.heat_t : mean_pairwise_sq_dist(xs);
  const Matrix sim = config.kernel == DCConfig::Kernel::heat
                         ? heat_kernel_similarity(xs, bandwidth)
                         : dot_product_similarity(xs);
  const NormalizedAdjacency adj =
      normalize_adjacency(knn_graph(sim, clamp_knn_k(config.knn_k, xs.rows())));

  const Matrix h0 = encode(xs, ae);
  KMeansConfig km;
  km.k = config.k;
  km.seed = Rng::mix(config.seed, kCenterSalt);
  KMeansOutput ko = kmeans(h0, km);

  SdcnState st;
  st.ae = std::move(ae);
  st.gcn_w = init_gcn_weights(ae_cfg, config.k, config.seed);
  st.centers = std::move(ko.centers);
  st.adj = &adj;
  st.epsilon = config.epsilon;

  std::vector<Matrix*> params = sdcn_param_ptrs(st);
  AdamState opt;
  const std::uint64_t sil_seed = Rng::mix(config.seed, kSilSalt);

  Matrix p;
  std::vector<int> best_labels, last_labels;
  std::size_t best_k = 0, last_k = 0;
  double best_sil = 0.0;
  bool have_best = false;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    GradientTape t;
    std::vector<GradientTape::Var> pvars;
    SdcnGraphVars g = sdcn_forward_graph(t, xs, st, &pvars);

    if (epoch % config.p_interval == 0) p = target_distribution_p(t.value(g.q));

    GradientTape::Var recon = t.mse_against(xs, g.x_hat);
    GradientTape::Var klq = t.kl_against(p, g.q);
    GradientTape::Var klz = t.kl_against(p, g.z);
    GradientTape::Var loss =
        t.add(recon, t.add(t.scale(klq, config.alpha), t.scale(klz, config.beta)));

    EpochRecord rec;
    rec.recon = t.value(recon)(0, 0);
    rec.kl_pq = t.value(klq)(0, 0);
    rec.kl_pz = t.value(klz)(0, 0);
    rec.total_loss = t.value(loss)(0, 0);
    if (!std::isfinite(rec.total_loss))
      throw DivergenceError(
          divergence_message("sdcn", epoch, trace.epochs, rec.total_loss));

    std::vector<int> labels =
        argmax_rows(config.predict_from_q ? t.value(g.q) : t.value(g.z));
    rec.predicted_k = compact_labels(labels);
    rec.silhouette = rec.predicted_k >= 2
                         ? silhouette_sampled(t.value(g.h), labels, sil_seed)
                         : -1.0;

    if (rec.predicted_k >= 2 && (!have_best || rec.silhouette > best_sil)) {
      best_sil = rec.silhouette;
      best_labels = labels;
      best_k = rec.predicted_k;
      have_best = true;
    }
    last_labels = std::move(labels);
    last_k = rec.predicted_k;
    trace.epochs.push_back(rec);

    t.backward(loss);
    std::vector<Matrix> grads;
    grads.reserve(pvars.size());
    for (GradientTape::Var v : pvars) grads.push_back(t.grad(v));
    adam_step(params, grads, opt, config.lr);
  }

  TrainOutput out;
  if (have_best) {
    out.result.labels = std::move(best_labels);
    out.result.k_predicted = best_k;
  } else {
    trace.notes.push_back(
        "every epoch collapsed below two clusters; labels taken from the final epoch");
    out.result.labels = std::move(last_labels);
    out.result.k_predicted = last_k;
  }
  out.result.seconds = elapsed_seconds(t0);
  out.trace = std::move(trace);
  return out;
}

// ---- EDESC -----------------------------------------------------------------

void jacobi_eigh(const Matrix& sym, Matrix& eigvecs, std::vector<double>& eigvals) {
  if (sym.rows() != sym.cols())
    throw std::invalid_argument("jacobi: matrix must be square");
  const std::size_t n = sym.rows();
  Matrix a = sym;
  eigvecs = Matrix::identity(n);
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off < 1e-24) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (std::abs(apq) < 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double sign = theta >= 0.0 ? 1.0 : -1.0;
        const double t = sign / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t r = 0; r < n; ++r) {
          const double arp = a(r, p), arq = a(r, q);
          a(r, p) = c * arp - s * arq;
          a(r, q) = s * arp + c * arq;
        }
        for (std::size_t r = 0; r < n; ++r) {
          const double apr = a(p, r), aqr = a(q, r);
          a(p, r) = c * apr - s * aqr;
          a(q, r) = s * apr + c * aqr;
        }
        for (std::size_t r = 0; r < n; ++r) {
          const double vp = eigvecs(r, p), vq = eigvecs(r, q);
          eigvecs(r, p) = c * vp - s * vq;
          eigvecs(r, q) = s * vp + c * vq;
        }
      }
    }
  }
  eigvals.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) eigvals[i] = a(i, i);
}

namespace {

// Top principal directions of a point group (uncentered — subspaces pass
// through the origin), via the smaller of the two gram matrices.
std::vector<std::vector<double>> principal_directions(const Matrix& g,
                                                      std::size_t want) {
  const std::size_t m = g.rows(), z = g.cols();
  std::vector<std::pair<double, std::size_t>> order;
  Matrix vecs;
  std::vector<double> vals;
  const bool small_rows = m <= z;
  {
    const std::size_t s = small_rows ? m : z;
    Matrix gram(s, s);
    for (std::size_t i = 0; i < s; ++i)
      for (std::size_t j = i; j < s; ++j) {
        double dot = 0.0;
        const std::size_t inner = small_rows ? z : m;
        for (std::size_t c = 0; c < inner; ++c)
          dot += small_rows ? g(i, c) * g(j, c) : g(c, i) * g(c, j);
        gram(i, j) = dot;
        gram(j, i) = dot;
      }
    jacobi_eigh(gram, vecs, vals);
  }
  for (std::size_t i = 0; i < vals.size(); ++i) order.push_back({vals[i], i});
  std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  const double lead = order.empty() ? 0.0 : std::max(order[0].first, 0.0);

  std::vector<std::vector<double>> dirs;
  for (const auto& [lambda, idx] : order) {
    if (dirs.size() == want) break;
    if (lambda <= 1e-12 * std::max(lead, 1.0)) break;  // rank exhausted
    std::vector<double> u(z, 0.0);
    if (small_rows) {
      // right singular vector: G^T v / ||G^T v||
      for (std::size_t r = 0; r < m; ++r)
        for (std::size_t c = 0; c < z; ++c) u[c] += g(r, c) * vecs(r, idx);
      double norm = std::sqrt(std::inner_product(u.begin(), u.end(), u.begin(), 0.0));
      if (norm < 1e-12) continue;
      for (double& v : u) v /= norm;
    } else {
      for (std::size_t c = 0; c < z; ++c) u[c] = vecs(c, idx);
    }
    dirs.push_back(std::move(u));
  }
  return dirs;
}

}  // namespace

Matrix init_subspace_bases(const Matrix& h, std::size_t k, std::size_t d_sub,
                           std::uint64_t seed, std::vector<std::string>* notes) {
  if (k == 0 || d_sub == 0)
    throw std::invalid_argument("subspace init: k and d_sub must be positive");
  const std::size_t z = h.cols();
  if (z < d_sub)
    throw std::invalid_argument("subspace init: latent dim smaller than d_sub");
  if (h.rows() == 0) throw std::invalid_argument("subspace init: empty input");

  const std::size_t groups = std::min(k, h.rows());
  ClusteringResult grouping = birch(h, groups, 50, birch_auto_threshold(h));
  Rng rng(Rng::mix(seed, kBasesSalt));
  Matrix bases(z, k * d_sub);

  for (std::size_t g = 0; g < k; ++g) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < grouping.labels.size(); ++i)
      if (grouping.labels[i] == int(g)) members.push_back(i);

    std::vector<std::vector<double>> dirs;
    if (!members.empty()) {
      Matrix pts(members.size(), z);
      for (std::size_t r = 0; r < members.size(); ++r)
        for (std::size_t c = 0; c < z; ++c) pts(r, c) = h(members[r], c);
      dirs = principal_directions(pts, d_sub);
    }

    const std::size_t c0 = g * d_sub;
    for (std::size_t j = 0; j < d_sub; ++j) {
      if (j < dirs.size()) {
        for (std::size_t r = 0; r < z; ++r) bases(r, c0 + j) = dirs[j][r];
      } else {
        for (std::size_t r = 0; r < z; ++r) bases(r, c0 + j) = rng.normal();
      }
    }
    if (notes != nullptr && dirs.size() < d_sub) {
      std::ostringstream os;
      if (members.empty())
        os << "bases block " << g << ": empty group, fully random orthonormal init";
      else
        os << "bases block " << g << ": rank " << dirs.size() << " group, padded "
           << (d_sub - dirs.size()) << " random directions";
      notes->push_back(os.str());
    }
    orthonormalize_block(bases, g, d_sub, &rng);
  }
  return bases;
}

Matrix subspace_affinity(const Matrix& h, const Matrix& bases, std::size_t k,
                         std::size_t d_sub, double eta) {
  if (bases.rows() != h.cols() || bases.cols() != k * d_sub)
    detail::throw_shape("subspace affinity",
                        h.shape_str() + " vs bases " + bases.shape_str());
  const std::size_t n = h.rows(), z = h.cols();
  Matrix s(n, k);
  const double shift = eta * double(d_sub);
  for (std::size_t i = 0; i < n; ++i) {
    double row_sum = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      double energy = 0.0;
      for (std::size_t l = 0; l < d_sub; ++l) {
        double proj = 0.0;
        for (std::size_t c = 0; c < z; ++c)
          proj += h(i, c) * bases(c, j * d_sub + l);
        energy += proj * proj;
      }
      s(i, j) = energy + shift;
      row_sum += s(i, j);
    }
    if (row_sum > 0.0) {
      for (std::size_t j = 0; j < k; ++j) s(i, j) /= row_sum;
    } else {
      for (std::size_t j = 0; j < k; ++j) s(i, j) = 1.0 / double(k);
    }
  }
  return s;
}

std::vector<Matrix*> edesc_param_ptrs(EdescState& st) {
  std::vector<Matrix*> out;
  for (std::size_t i = 0; i < st.ae.enc_w.size(); ++i) {
    out.push_back(&st.ae.enc_w[i]);
    out.push_back(&st.ae.enc_b[i]);
  }
  for (std::size_t i = 0; i < st.ae.dec_w.size(); ++i) {
    out.push_back(&st.ae.dec_w[i]);
    out.push_back(&st.ae.dec_b[i]);
  }
  out.push_back(&st.bases);
  return out;
}

EdescGraphVars edesc_forward_graph(GradientTape& t, const Matrix& x, EdescState& st,
                                   std::vector<GradientTape::Var>* params_out) {
  using Var = GradientTape::Var;
  if (st.k == 0 || st.d_sub == 0)
    throw std::invalid_argument("edesc forward: k and d_sub must be set");

  Var xv = t.constant(x);
  std::vector<Var> enc_w, enc_b, dec_w, dec_b;
  for (std::size_t i = 0; i < st.ae.enc_w.size(); ++i) {
    enc_w.push_back(t.param(st.ae.enc_w[i]));
    enc_b.push_back(t.param(st.ae.enc_b[i]));
  }
  for (std::size_t i = 0; i < st.ae.dec_w.size(); ++i) {
    dec_w.push_back(t.param(st.ae.dec_w[i]));
    dec_b.push_back(t.param(st.ae.dec_b[i]));
  }
  Var bases = t.param(st.bases);
  if (params_out != nullptr) {
    params_out->clear();
    for (std::size_t i = 0; i < enc_w.size(); ++i) {
      params_out->push_back(enc_w[i]);
      params_out->push_back(enc_b[i]);
    }
    for (std::size_t i = 0; i < dec_w.size(); ++i) {
      params_out->push_back(dec_w[i]);
      params_out->push_back(dec_b[i]);
    }
    params_out->push_back(bases);
  }

  Var cur = xv;
  for (std::size_t i = 0; i < enc_w.size(); ++i) {
    cur = t.affine(cur, enc_w[i], enc_b[i]);
    if (i + 1 < enc_w.size()) cur = t.act(cur, st.ae.hidden_activation);
  }
  Var h = cur;
  Var dec = h;
  for (std::size_t i = 0; i < dec_w.size(); ++i) {
    dec = t.affine(dec, dec_w[i], dec_b[i]);
    if (i + 1 < dec_w.size()) dec = t.act(dec, st.ae.hidden_activation);
  }
  Var x_hat = dec;

  Var scores = t.subspace_scores(h, bases, st.k, st.d_sub);
  Var s = t.row_normalize(t.add_scalar(scores, st.eta * double(st.d_sub)));
  return {x_hat, h, s};
}

TrainOutput edesc_train(const Matrix& x, const DCConfig& config,
                        const AutoencoderParams* pretrained) {
  const auto t0 = Clock::now();
  if (config.k < 2) throw std::invalid_argument("edesc: k must be at least 2");
  if (config.epochs == 0) throw std::invalid_argument("edesc: epochs must be positive");
  if (config.d_sub == 0) throw std::invalid_argument("edesc: d_sub must be positive");
  if (config.ae.latent_dim != config.k * config.d_sub)
    throw std::invalid_argument(
        "edesc: latent dim must equal k*d_sub (got latent=" +
        std::to_string(config.ae.latent_dim) + ", k*d_sub=" +
        std::to_string(config.k * config.d_sub) + ")");
  if (x.rows() < config.k)
    throw std::invalid_argument("edesc: fewer rows than clusters");

  TrainTrace trace;
  const Matrix xs = config.ae.standardize_input ? standardize(x) : x;
  AEConfig ae_cfg = config.ae;
  ae_cfg.input_dim = x.cols();
  ae_cfg.standardize_input = false;

  AutoencoderParams ae;
  if (pretrained != nullptr) {
    ae = *pretrained;
    trace.notes.push_back("pretrained autoencoder supplied; pretraining skipped");
  } else {
    PretrainResult pr = pretrain(xs, ae_cfg);
    ae = std::move(pr.params);
    trace.pretrain_loss = std::move(pr.loss_trace);
  }

  EdescState st;
  st.ae = std::move(ae);
  st.k = config.k;
  st.d_sub = config.d_sub;
  st.eta = config.eta;
  const Matrix h0 = encode(xs, st.ae);
  st.bases = init_subspace_bases(h0, config.k, config.d_sub, config.seed, &trace.notes);

  std::vector<Matrix*> params = edesc_param_ptrs(st);
  AdamState opt;
  const std::uint64_t sil_seed = Rng::mix(config.seed, kSilSalt);

  std::vector<int> best_labels, last_labels;
  std::size_t best_k = 0, last_k = 0;
  double best_sil = 0.0;
  bool have_best = false;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    GradientTape t;
    std::vector<GradientTape::Var> pvars;
    EdescGraphVars g = edesc_forward_graph(t, xs, st, &pvars);

    // refined target is treated as a constant for the step
    const Matrix s_tilde = refined_affinity(t.value(g.s));

    GradientTape::Var recon = t.mse_against(xs, g.x_hat);
    GradientTape::Var kls = t.kl_against(s_tilde, g.s);
    GradientTape::Var reg = t.basis_regularity(pvars.back(), config.k, config.d_sub);
    GradientTape::Var loss = t.add(
        recon, t.add(t.scale(kls, config.gamma), t.scale(reg, config.basis_weight)));

    EpochRecord rec;
    rec.recon = t.value(recon)(0, 0);
    rec.kl_pq = t.value(kls)(0, 0);
    rec.basis_penalty = t.value(reg)(0, 0);
    rec.total_loss = t.value(loss)(0, 0);
    if (!std::isfinite(rec.total_loss))
      throw DivergenceError(
          divergence_message("edesc", epoch, trace.epochs, rec.total_loss));

    std::vector<int> labels = argmax_rows(t.value(g.s));
    rec.predicted_k = compact_labels(labels);
    rec.silhouette = rec.predicted_k >= 2
                         ? silhouette_sampled(t.value(g.h), labels, sil_seed)
                         : -1.0;

    if (rec.predicted_k >= 2 && (!have_best || rec.silhouette > best_sil)) {
      best_sil = rec.silhouette;
      best_labels = labels;
      best_k = rec.predicted_k;
      have_best = true;
    }
    last_labels = std::move(labels);
    last_k = rec.predicted_k;
    trace.epochs.push_back(rec);

    t.backward(loss);
    std::vector<Matrix> grads;
    grads.reserve(pvars.size());
    for (GradientTape::Var v : pvars) grads.push_back(t.grad(v));
    adam_step(params, grads, opt, config.lr);

    // keep every block orthonormal after the step
    orthonormalize_all_blocks(st.bases, config.k, config.d_sub);
  }

  TrainOutput out;
  if (have_best) {
    out.result.labels = std::move(best_labels);
    out.result.k_predicted = best_k;
  } else {
    trace.notes.push_back(
        "every epoch collapsed below two clusters; labels taken from the final epoch");
    out.result.labels = std::move(last_labels);
    out.result.k_predicted = last_k;
  }
  out.result.seconds = elapsed_seconds(t0);
  out.trace = std::move(trace);
  return out;
}

// ---- fallback + selection ----------------------------------------------------

TrainOutput ae_birch_pipeline(const Matrix& x, const DCConfig& config,
                              const AutoencoderParams* pretrained) {
  const auto t0 = Clock::now();
  if (config.k == 0) throw std::invalid_argument("ae+birch: k must be positive");
  if (x.rows() == 0) throw std::invalid_argument("ae+birch: empty input");

  TrainTrace trace;
  const Matrix xs = config.ae.standardize_input ? standardize(x) : x;
  AEConfig ae_cfg = config.ae;
  ae_cfg.input_dim = x.cols();
  ae_cfg.standardize_input = false;

  AutoencoderParams ae;
  if (pretrained != nullptr) {
    ae = *pretrained;
    trace.notes.push_back("pretrained autoencoder supplied; pretraining skipped");
  } else {
    PretrainResult pr = pretrain(xs, ae_cfg);
    ae = std::move(pr.params);
    trace.pretrain_loss = std::move(pr.loss_trace);
  }

  const Matrix h = encode(xs, ae);
  const double threshold = config.birch_threshold > 0.0 ? config.birch_threshold
                                                        : birch_auto_threshold(h);
  TrainOutput out;
  out.result = birch(h, config.k, config.birch_branching, threshold);
  out.result.seconds = elapsed_seconds(t0);
  out.trace = std::move(trace);
  return out;
}

bool silhouette_series_converged(const std::vector<double>& silhouettes) {
  if (silhouettes.empty()) return false;
  const double global_best =
      *std::max_element(silhouettes.begin(), silhouettes.end());
  if (global_best <= -1.0 + 1e-12) return false;  // never produced >= 2 clusters

  const std::size_t w = std::max<std::size_t>(1, (silhouettes.size() + 3) / 4);
  const std::size_t start = silhouettes.size() - w;
  double window_best = silhouettes[start];
  double mean = 0.0;
  for (std::size_t i = start; i < silhouettes.size(); ++i) {
    window_best = std::max(window_best, silhouettes[i]);
    mean += silhouettes[i];
  }
  mean /= double(w);
  double var = 0.0;
  for (std::size_t i = start; i < silhouettes.size(); ++i) {
    const double d = silhouettes[i] - mean;
    var += d * d;
  }
  var /= double(w);
  return window_best >= global_best - 0.01 && std::sqrt(var) < 0.02;
}

ModelSelection select_model(const TrainOutput& sdcn_run, const Matrix& x,
                            const DCConfig& config) {
  std::vector<double> sils;
  sils.reserve(sdcn_run.trace.epochs.size());
  for (const EpochRecord& r : sdcn_run.trace.epochs) sils.push_back(r.silhouette);
  if (silhouette_series_converged(sils))
    return {sdcn_run.result, true, "sdcn retained: silhouette series converged"};
  TrainOutput fallback = ae_birch_pipeline(x, config);
  ModelSelection sel;
  sel.result = fallback.result;
  sel.kept_sdcn = false;
  sel.note = "sdcn rejected: silhouette series not converged; ae+birch fallback used";
  return sel;
}

}  // namespace deepclust
