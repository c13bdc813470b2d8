#include "deepclust/graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>

namespace deepclust {

namespace {
// Below this many nodes a dense normalized adjacency is kept alongside the
// sparse one; propagation picks whichever is present.
constexpr std::size_t kDenseCutoff = 3000;
}  // namespace

Matrix heat_kernel_similarity(const Matrix& x, double t) {
  if (!(t > 0.0)) throw std::invalid_argument("heat_kernel_similarity: t must be > 0");
  Matrix d2 = pairwise_sq_dists(x);
  Matrix s(d2.rows(), d2.cols());
  for (std::size_t k = 0; k < d2.size(); ++k) s.data()[k] = std::exp(-d2.data()[k] / t);
  return s;
}

Matrix dot_product_similarity(const Matrix& x) {
  return matmul(x, transpose(x));
}

double mean_pairwise_sq_dist(const Matrix& x) {
  const std::size_t n = x.rows();
  if (n < 2) return 1.0;
  Matrix d2 = pairwise_sq_dists(x);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) sum += d2(i, j);
  const double mean = sum / (0.5 * static_cast<double>(n) * static_cast<double>(n - 1));
  return mean > 0.0 ? mean : 1.0;
}

KnnGraph knn_graph(const Matrix& s, std::size_t k) {
  const std::size_t n = s.rows();
  if (s.cols() != n)
    detail::throw_shape("knn_graph", "similarity must be square, got " + s.shape_str());
  if (k < 1 || k >= n)
    throw std::invalid_argument("knn_graph: need 1 <= k < N, got k=" +
                                std::to_string(k) + ", N=" + std::to_string(n));
  std::set<std::pair<std::size_t, std::size_t>> edges;
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < n; ++i) {
    idx.clear();
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) idx.push_back(j);
    std::partial_sort(idx.begin(), idx.begin() + k, idx.end(),
                      [&](std::size_t a, std::size_t b) {
                        if (s(i, a) != s(i, b)) return s(i, a) > s(i, b);
                        return a < b;
                      });
    for (std::size_t r = 0; r < k; ++r) {
      const std::size_t j = idx[r];
      edges.insert({i, j});
      edges.insert({j, i});  // union symmetrization
    }
  }
  for (std::size_t i = 0; i < n; ++i) edges.insert({i, i});
  KnnGraph g;
  g.n = n;
  g.adj.rows = g.adj.cols = n;
  for (const auto& [i, j] : edges) g.adj.entries.push_back({i, j, 1.0});
  return g;
}

NormalizedAdjacency normalize_adjacency(const KnnGraph& g) {
  std::vector<double> degree(g.n, 0.0);
  for (const auto& e : g.adj.entries) degree[e.i] += e.v;
  std::vector<double> inv_sqrt(g.n);
  for (std::size_t i = 0; i < g.n; ++i) inv_sqrt[i] = 1.0 / std::sqrt(degree[i]);
  NormalizedAdjacency out;
  out.coo.rows = out.coo.cols = g.n;
  for (const auto& e : g.adj.entries)
    out.coo.entries.push_back({e.i, e.j, e.v * inv_sqrt[e.i] * inv_sqrt[e.j]});
  if (g.n < kDenseCutoff) out.dense = out.coo.to_dense();
  return out;
}

Matrix gcn_propagate(const NormalizedAdjacency& adj, const Matrix& features,
                     const Matrix& weights, Activation activation) {
  Matrix prop = adj.use_dense() ? matmul(adj.dense, features) : spmm(adj.coo, features);
  return apply_activation(matmul(prop, weights), activation);
}

void dump_edge_list(const KnnGraph& g, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw IoError("dump_edge_list: cannot open for writing: " + path);
  for (const auto& e : g.adj.entries)
    if (e.i < e.j) std::fprintf(f, "%zu,%zu\n", e.i, e.j);
  if (std::fclose(f) != 0) throw IoError("dump_edge_list: write failed: " + path);
}

}  // namespace deepclust
