#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "deepclust/matrix.hpp"

namespace deepclust {

struct KMeansConfig {
  std::size_t k = 2;
  std::size_t max_iters = 100;
  double tol = 1e-6;
  std::uint64_t seed = 0;
  enum class Init { kmeanspp, random } init = Init::kmeanspp;
};

// Labels are dense: every id in [0, k_predicted) appears at least once.
struct ClusteringResult {
  std::vector<int> labels;
  std::size_t k_predicted = 0;
  double seconds = 0.0;
};

struct KMeansOutput {
  ClusteringResult result;
  Matrix centers;
  double inertia = 0.0;
  std::vector<double> inertia_trace;  // one value per Lloyd iteration
};

// k-means++ seeding, Lloyd iterations until the max centroid shift drops
// below tol or max_iters is hit. An emptied cluster is reseeded to the point
// farthest from its assigned centroid.
KMeansOutput kmeans(const Matrix& x, const KMeansConfig& config);

// Clustering feature: point count, linear sum, scalar squared sum.
struct ClusterFeature {
  double n = 0.0;
  std::vector<double> ls;
  double ss = 0.0;
};

struct CfNode {
  bool leaf = true;
  std::vector<ClusterFeature> cfs;                 // one per child / subcluster
  std::vector<std::unique_ptr<CfNode>> children;   // empty for leaves
};

struct CfTree {
  std::size_t branching = 50;
  double threshold = 0.0;
  std::unique_ptr<CfNode> root;
};

// Single-pass insertion build; exposed so the tree invariants are testable.
CfTree build_cf_tree(const Matrix& x, std::size_t branching, double threshold);
std::vector<ClusterFeature> leaf_subclusters(const CfTree& tree);
bool cf_additive(const CfTree& tree, double tol);  // parent CF == sum of children
double max_leaf_radius(const CfTree& tree);

// CF-tree build, then Ward-style agglomerative merging of leaf subclusters
// down to K; points take the label of the nearest merged centroid.
ClusteringResult birch(const Matrix& x, std::size_t k, std::size_t branching,
                       double threshold);

// Pilot heuristic: 0.5 * mean nearest-neighbor distance over a seeded sample
// of at most 512 points.
double birch_auto_threshold(const Matrix& x);

// Mean over points of (b-a)/max(a,b); singleton clusters score 0. Throws on
// fewer than two clusters.
double silhouette(const Matrix& x, const std::vector<int>& labels);
double silhouette_from_dists(const Matrix& dists, const std::vector<int>& labels);

// Exact up to 5000 points, seeded 2048-point subsample above.
double silhouette_sampled(const Matrix& x, const std::vector<int>& labels,
                          std::uint64_t seed);

// Remap labels to dense first-appearance ids; returns the distinct count.
std::size_t compact_labels(std::vector<int>& labels);

}  // namespace deepclust
