#pragma once

#include <string>

#include "deepclust/matrix.hpp"
#include "deepclust/tape.hpp"

namespace deepclust {

// S_ij = exp(-||x_i - x_j||^2 / t). Entries in (0, 1], unit diagonal.
Matrix heat_kernel_similarity(const Matrix& x, double t);

// S_ij = x_i . x_j
Matrix dot_product_similarity(const Matrix& x);

// Self-tuning bandwidth default for the heat kernel.
double mean_pairwise_sq_dist(const Matrix& x);

// 0/1 adjacency with self-loops, symmetrized by union. Entries sorted by
// (row, col) so downstream products are order-stable.
struct KnnGraph {
  std::size_t n = 0;
  CooMatrix adj;
};

// Keep each row's top-k similarities (self excluded), ties to the lower
// index, then symmetrize and add self-loops.
KnnGraph knn_graph(const Matrix& s, std::size_t k);

// D^{-1/2} (A+I) D^{-1/2} over the self-looped adjacency. A dense copy is
// kept below the cutoff where dense products are faster than sparse ones.
struct NormalizedAdjacency {
  CooMatrix coo;
  Matrix dense;  // empty above the cutoff
  bool use_dense() const { return dense.size() != 0; }
};

NormalizedAdjacency normalize_adjacency(const KnnGraph& g);

// activation(adj * features * weights)
Matrix gcn_propagate(const NormalizedAdjacency& adj, const Matrix& features,
                     const Matrix& weights, Activation activation);

// Edge list as "i,j" lines (each undirected edge once, self-loops skipped).
void dump_edge_list(const KnnGraph& g, const std::string& path);

}  // namespace deepclust
