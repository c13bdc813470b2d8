#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "deepclust/graph.hpp"
#include "deepclust/matrix.hpp"
#include "deepclust/rng.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace deepclust;
using testutil::random_matrix;
using testutil::TmpDir;

namespace {

KnnGraph loops_only(std::size_t n) {
  KnnGraph g;
  g.n = n;
  g.adj.rows = g.adj.cols = n;
  for (std::size_t i = 0; i < n; ++i) g.adj.entries.push_back({i, i, 1.0});
  return g;
}

}  // namespace

TEST_CASE("heat kernel: identical points score 1, d^2 = t scores e^-1") {
  Matrix same = Matrix::from_rows({{2.0, 2.0}, {2.0, 2.0}});
  Matrix s = heat_kernel_similarity(same, 1.0);
  CHECK(s(0, 1) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(s(0, 0) == doctest::Approx(1.0).epsilon(1e-15));

  Matrix pair = Matrix::from_rows({{0.0}, {1.0}});
  Matrix sp = heat_kernel_similarity(pair, 1.0);
  CHECK(sp(0, 1) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
}

TEST_CASE("heat kernel: matches the elementwise formula on four points") {
  Rng rng(17);
  Matrix x = random_matrix(4, 3, rng);
  const double t = 2.7;
  Matrix s = heat_kernel_similarity(x, t);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) {
      double d2 = 0.0;
      for (std::size_t c = 0; c < 3; ++c) {
        const double diff = x(i, c) - x(j, c);
        d2 += diff * diff;
      }
      CHECK(s(i, j) == doctest::Approx(std::exp(-d2 / t)).epsilon(1e-13));
    }
}

TEST_CASE("heat kernel: nonpositive bandwidth rejected; entries live in (0,1]") {
  Rng rng(18);
  Matrix x = random_matrix(6, 2, rng);
  CHECK_THROWS_AS(heat_kernel_similarity(x, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(heat_kernel_similarity(x, -1.0), std::invalid_argument);
  Matrix s = heat_kernel_similarity(x, 0.9);
  for (double v : s.data()) {
    CHECK(v > 0.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("dot-product similarity: orthogonal 0, identical unit 1, hand case") {
  Matrix x = Matrix::from_rows({{1.0, 0.0}, {0.0, 1.0}, {1.0, 2.0}, {3.0, 4.0}});
  Matrix s = dot_product_similarity(x);
  CHECK(s(0, 1) == 0.0);
  CHECK(s(0, 0) == 1.0);
  CHECK(s(2, 3) == 11.0);
  CHECK(s(3, 2) == 11.0);
}

TEST_CASE("mean_pairwise_sq_dist: hand value on two points") {
  Matrix x = Matrix::from_rows({{0.0}, {2.0}});
  // off-diagonal distances are 4,4; mean over ordered pairs excludes diagonal
  CHECK(mean_pairwise_sq_dist(x) == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("knn graph: three collinear points, k=1") {
  // points 0, 1, 3: both ends pick the middle; middle picks the near end
  Matrix x = Matrix::from_rows({{0.0}, {1.0}, {3.0}});
  Matrix s = heat_kernel_similarity(x, 1.0);
  KnnGraph g = knn_graph(s, 1);
  Matrix a = g.adj.to_dense();
  CHECK(a(0, 1) == 1.0);
  CHECK(a(1, 0) == 1.0);
  CHECK(a(1, 2) == 1.0);
  CHECK(a(2, 1) == 1.0);
  CHECK(a(0, 2) == 0.0);
  CHECK(a(2, 0) == 0.0);
  for (std::size_t i = 0; i < 3; ++i) CHECK(a(i, i) == 1.0);
}

TEST_CASE("knn graph: k = N-1 gives the complete graph with loops") {
  Rng rng(19);
  Matrix x = random_matrix(5, 2, rng);
  KnnGraph g = knn_graph(heat_kernel_similarity(x, 1.0), 4);
  Matrix a = g.adj.to_dense();
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 5; ++j) CHECK(a(i, j) == 1.0);
}

TEST_CASE("knn graph: similarity ties resolve to the lower index") {
  // three coincident points: every row's single neighbor is the lowest other
  Matrix s(3, 3, 1.0);
  KnnGraph g = knn_graph(s, 1);
  Matrix a = g.adj.to_dense();
  CHECK(a(0, 1) == 1.0);  // 0 -> 1
  CHECK(a(0, 2) == 1.0);  // 2 -> 0, symmetrized
  CHECK(a(1, 2) == 0.0);  // nobody picked this pair
  CHECK(a(2, 1) == 0.0);
}

TEST_CASE("knn graph: k outside [1, N-1] is rejected") {
  Matrix s(4, 4, 1.0);
  CHECK_THROWS_AS(knn_graph(s, 0), std::invalid_argument);
  CHECK_THROWS_AS(knn_graph(s, 4), std::invalid_argument);
  CHECK_THROWS_AS(knn_graph(Matrix(4, 3, 1.0), 2), std::invalid_argument);
}

TEST_CASE("knn graph: symmetric, self-looped, permutation-consistent") {
  Rng rng(20);
  Matrix x = random_matrix(12, 3, rng);
  Matrix s = heat_kernel_similarity(x, 1.3);
  KnnGraph g = knn_graph(s, 3);
  Matrix a = g.adj.to_dense();
  for (std::size_t i = 0; i < 12; ++i) {
    CHECK(a(i, i) == 1.0);
    for (std::size_t j = 0; j < 12; ++j) CHECK(a(i, j) == a(j, i));
  }

  // relabeling the items relabels the edges and nothing else
  std::vector<std::size_t> perm(12);
  for (std::size_t i = 0; i < 12; ++i) perm[i] = i;
  for (std::size_t i = 11; i > 0; --i)
    std::swap(perm[i], perm[rng.uniform_int(i + 1)]);
  Matrix sp(12, 12);
  for (std::size_t i = 0; i < 12; ++i)
    for (std::size_t j = 0; j < 12; ++j) sp(i, j) = s(perm[i], perm[j]);
  Matrix ap = knn_graph(sp, 3).adj.to_dense();
  for (std::size_t i = 0; i < 12; ++i)
    for (std::size_t j = 0; j < 12; ++j) CHECK(ap(i, j) == a(perm[i], perm[j]));
}

TEST_CASE("normalize_adjacency: symmetric nonnegative, dense mirror agrees") {
  Rng rng(22);
  Matrix x = random_matrix(9, 2, rng);
  KnnGraph g = knn_graph(heat_kernel_similarity(x, 1.0), 2);
  NormalizedAdjacency norm = normalize_adjacency(g);
  Matrix d = norm.coo.to_dense();
  for (std::size_t i = 0; i < 9; ++i)
    for (std::size_t j = 0; j < 9; ++j) {
      CHECK(std::abs(d(i, j) - d(j, i)) <= 1e-12);
      CHECK(d(i, j) >= 0.0);
    }
  if (norm.use_dense())
    for (std::size_t i = 0; i < d.size(); ++i)
      CHECK(norm.dense.data()[i] == doctest::Approx(d.data()[i]).epsilon(1e-14));
}

TEST_CASE("gcn_propagate: isolated self-loops reduce to a plain linear map") {
  Rng rng(23);
  Matrix x = random_matrix(4, 3, rng);
  Matrix w = random_matrix(3, 2, rng);
  NormalizedAdjacency norm = normalize_adjacency(loops_only(4));
  Matrix got = gcn_propagate(norm, x, w, Activation::linear);
  Matrix want = matmul(x, w);
  for (std::size_t i = 0; i < want.size(); ++i)
    CHECK(got.data()[i] == doctest::Approx(want.data()[i]).epsilon(1e-12));
}

TEST_CASE("gcn_propagate: two-node clique with equal features keeps rows equal") {
  Matrix x = Matrix::from_rows({{1.0, 2.0}, {1.0, 2.0}});
  Matrix s = heat_kernel_similarity(x, 1.0);
  NormalizedAdjacency norm = normalize_adjacency(knn_graph(s, 1));
  Rng rng(24);
  Matrix w = random_matrix(2, 3, rng);
  Matrix out = gcn_propagate(norm, x, w, Activation::relu);
  for (std::size_t j = 0; j < 3; ++j)
    CHECK(out(0, j) == doctest::Approx(out(1, j)).epsilon(1e-14));
}

TEST_CASE("gcn_propagate: hand-normalized three-node path") {
  // path 0-1-2 with loops: degrees 2,3,2
  KnnGraph g;
  g.n = 3;
  g.adj.rows = g.adj.cols = 3;
  g.adj.entries = {{0, 0, 1.0}, {0, 1, 1.0}, {1, 0, 1.0}, {1, 1, 1.0},
                   {1, 2, 1.0}, {2, 1, 1.0}, {2, 2, 1.0}};
  NormalizedAdjacency norm = normalize_adjacency(g);
  Matrix x = Matrix::from_rows({{1.0}, {2.0}, {3.0}});
  Matrix w = Matrix::from_rows({{1.0}});
  Matrix out = gcn_propagate(norm, x, w, Activation::linear);
  const double r6 = 1.0 / std::sqrt(6.0);
  CHECK(out(0, 0) == doctest::Approx(0.5 + 2.0 * r6).epsilon(1e-12));
  CHECK(out(1, 0) == doctest::Approx(4.0 * r6 + 2.0 / 3.0).epsilon(1e-12));
  CHECK(out(2, 0) == doctest::Approx(2.0 * r6 + 1.5).epsilon(1e-12));
}

TEST_CASE("gcn_propagate: relu clips negative propagated values") {
  NormalizedAdjacency norm = normalize_adjacency(loops_only(2));
  Matrix x = Matrix::from_rows({{1.0}, {-1.0}});
  Matrix w = Matrix::from_rows({{2.0}});
  Matrix out = gcn_propagate(norm, x, w, Activation::relu);
  CHECK(out(0, 0) == 2.0);
  CHECK(out(1, 0) == 0.0);
}

TEST_CASE("dump_edge_list: undirected edges once, no loops") {
  Matrix x = Matrix::from_rows({{0.0}, {1.0}, {3.0}});
  KnnGraph g = knn_graph(heat_kernel_similarity(x, 1.0), 1);
  TmpDir tmp;
  const std::string path = tmp.file("edges.csv");
  dump_edge_list(g, path);

  std::ifstream in(path);
  std::set<std::string> lines;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) lines.insert(line);
  std::set<std::string> want{"0,1", "1,2"};
  CHECK(lines == want);
}
