#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "deepclust/autoencoder.hpp"
#include "deepclust/clustering.hpp"
#include "deepclust/graph.hpp"
#include "deepclust/tape.hpp"

namespace deepclust {

// Student-t kernel assignment, v degrees of freedom, rows normalized.
Matrix soft_assignment_q(const Matrix& h, const Matrix& centers, double v = 1.0);

// Frequency-normalized squaring: p_ij = (q_ij^2/f_j) / sum_j'(q_ij'^2/f_j'),
// f_j the soft cluster frequency. One-hot rows are fixed points.
Matrix target_distribution_p(const Matrix& q);

// Same transform applied to a subspace affinity matrix.
Matrix refined_affinity(const Matrix& s);

struct DCConfig {
  AEConfig ae;
  std::size_t k = 2;        // cluster count
  std::size_t epochs = 50;  // joint-training epochs
  double lr = 1e-3;
  double epsilon = 0.5;  // delivery-operator mixing toward the AE features
  double alpha = 0.1;    // KL(P||Q) weight
  double beta = 0.01;    // KL(P||Z) weight
  double gamma = 0.1;    // KL(S~||S) weight
  double basis_weight = 0.1;
  std::size_t p_interval = 3;  // epochs between target-distribution updates
  std::size_t knn_k = 5;
  enum class Kernel { heat, dot } kernel = Kernel::heat;
  double heat_t = 0.0;  // 0 -> mean pairwise squared distance
  std::size_t d_sub = 5;
  double eta = 1e-4;
  bool predict_from_q = false;  // SDCN labels come from Z unless set
  std::size_t birch_branching = 50;
  double birch_threshold = 0.0;  // 0 -> pilot heuristic
  std::uint64_t seed = 0;
};

struct EpochRecord {
  double total_loss = 0.0;
  double recon = 0.0;
  double kl_pq = 0.0;
  double kl_pz = 0.0;
  double basis_penalty = 0.0;
  double silhouette = 0.0;  // -1 marks a collapsed (<2 cluster) epoch
  std::size_t predicted_k = 0;
};

struct TrainTrace {
  std::vector<double> pretrain_loss;
  std::vector<EpochRecord> epochs;
  std::vector<std::string> notes;
};

struct TrainOutput {
  ClusteringResult result;
  TrainTrace trace;
};

// epoch,total_loss,recon,kl_pq,kl_pz,basis_penalty,silhouette,predicted_k
std::string trace_to_csv(const TrainTrace& trace);

// ---- SDCN-style model ----------------------------------------------------

struct SdcnState {
  AutoencoderParams ae;
  std::vector<Matrix> gcn_w;  // widths follow the encoder chain, then K
  Matrix centers;
  const NormalizedAdjacency* adj = nullptr;
  double epsilon = 0.5;
};

// Every trainable matrix in fixed order: encoder w/b, decoder w/b, GCN
// weights, centers. Gradients from the graph builders line up with this.
std::vector<Matrix*> sdcn_param_ptrs(SdcnState& st);

std::vector<Matrix> init_gcn_weights(const AEConfig& ae, std::size_t k,
                                     std::uint64_t seed);

struct SdcnGraphVars {
  GradientTape::Var x_hat, h, q, z;
};

// Builds the whole forward graph on the tape. GCN layer 1 reads X; each later
// layer reads (1-eps)*Z_prev + eps*(matching AE layer output); the last layer
// maps to K and goes through a row softmax.
SdcnGraphVars sdcn_forward_graph(GradientTape& t, const Matrix& x, SdcnState& st,
                                 std::vector<GradientTape::Var>* params_out);

struct SdcnForwardOut {
  Matrix x_hat, h, q, z;
};

SdcnForwardOut sdcn_forward(const Matrix& x, const AutoencoderParams& ae,
                            const std::vector<Matrix>& gcn_w,
                            const NormalizedAdjacency& adj, const Matrix& centers,
                            double epsilon = 0.5);

// mse(x, x_hat) + alpha*KL(P||Q) + beta*KL(P||Z)
double sdcn_loss(const Matrix& x, const Matrix& x_hat, const Matrix& p,
                 const Matrix& q, const Matrix& z, double alpha, double beta);

// Pass pretrained to reuse an existing autoencoder; otherwise pretraining
// runs internally with config.ae.
TrainOutput sdcn_train(const Matrix& x, const DCConfig& config,
                       const AutoencoderParams* pretrained = nullptr);

// ---- EDESC-style model ---------------------------------------------------

// Bases live in one z x (K*d_sub) matrix of K column blocks. Birch groups H,
// each block takes the group's top principal directions; thin groups are
// padded with seeded random orthonormal completions (noted).
Matrix init_subspace_bases(const Matrix& h, std::size_t k, std::size_t d_sub,
                           std::uint64_t seed,
                           std::vector<std::string>* notes = nullptr);

// s_ij proportional to ||D_j^T h_i||^2 + eta*d_sub, rows normalized.
Matrix subspace_affinity(const Matrix& h, const Matrix& bases, std::size_t k,
                         std::size_t d_sub, double eta);

struct EdescState {
  AutoencoderParams ae;
  Matrix bases;
  std::size_t k = 0, d_sub = 0;
  double eta = 1e-4;
};

std::vector<Matrix*> edesc_param_ptrs(EdescState& st);

struct EdescGraphVars {
  GradientTape::Var x_hat, h, s;
};

EdescGraphVars edesc_forward_graph(GradientTape& t, const Matrix& x, EdescState& st,
                                   std::vector<GradientTape::Var>* params_out);

TrainOutput edesc_train(const Matrix& x, const DCConfig& config,
                        const AutoencoderParams* pretrained = nullptr);

// ---- fallback + selection --------------------------------------------------

TrainOutput ae_birch_pipeline(const Matrix& x, const DCConfig& config,
                              const AutoencoderParams* pretrained = nullptr);

// Convergence rule: best silhouette in the last quarter of epochs is within
// 0.01 of the global best AND that window's std is below 0.02. A series with
// no valid (non-collapsed) epoch never converges.
bool silhouette_series_converged(const std::vector<double>& silhouettes);

struct ModelSelection {
  ClusteringResult result;
  bool kept_sdcn = false;
  std::string note;
};

// Keeps the SDCN run when its silhouette series converged, otherwise runs
// the AE+Birch fallback on the same data.
ModelSelection select_model(const TrainOutput& sdcn_run, const Matrix& x,
                            const DCConfig& config);

// Cyclic Jacobi eigendecomposition of a symmetric matrix; eigvecs holds the
// eigenvectors as columns, unsorted.
void jacobi_eigh(const Matrix& sym, Matrix& eigvecs, std::vector<double>& eigvals);

}  // namespace deepclust
