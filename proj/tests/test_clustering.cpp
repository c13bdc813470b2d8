#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "deepclust/clustering.hpp"
#include "deepclust/data_io.hpp"
#include "deepclust/matrix.hpp"
#include "deepclust/metrics.hpp"
#include "deepclust/rng.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace deepclust;
using testutil::random_matrix;

namespace {

// textbook double-loop silhouette, written independently of the library code
double silhouette_naive(const Matrix& x, const std::vector<int>& labels) {
  const std::size_t n = x.rows();
  int k = 0;
  for (int l : labels) k = std::max(k, l + 1);
  std::vector<std::size_t> counts(k, 0);
  for (int l : labels) counts[l]++;

  auto dist = [&](std::size_t i, std::size_t j) {
    double d2 = 0.0;
    for (std::size_t c = 0; c < x.cols(); ++c) {
      const double diff = x(i, c) - x(j, c);
      d2 += diff * diff;
    }
    return std::sqrt(d2);
  };

  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (counts[labels[i]] == 1) continue;
    std::vector<double> sums(k, 0.0);
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) sums[labels[j]] += dist(i, j);
    const double a = sums[labels[i]] / double(counts[labels[i]] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (int c = 0; c < k; ++c)
      if (c != labels[i] && counts[c] > 0) b = std::min(b, sums[c] / double(counts[c]));
    total += (b - a) / std::max(a, b);
  }
  return total / double(n);
}

}  // namespace

TEST_CASE("kmeans: two points, two clusters, zero inertia") {
  Matrix x = Matrix::from_rows({{0.0, 0.0}, {5.0, 5.0}});
  KMeansConfig cfg;
  cfg.k = 2;
  KMeansOutput out = kmeans(x, cfg);
  CHECK(out.result.k_predicted == 2);
  CHECK(out.result.labels[0] != out.result.labels[1]);
  CHECK(out.inertia == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("kmeans: recovers well-separated blobs") {
  SynthData blobs = synth_blobs(300, 5, 4, 0.2, 9);
  KMeansConfig cfg;
  cfg.k = 4;
  cfg.seed = 1;
  KMeansOutput out = kmeans(blobs.data.x, cfg);
  CHECK(ari(blobs.labels, out.result.labels) >= 0.95);
}

TEST_CASE("kmeans: inertia trace never increases") {
  Rng rng(26);
  Matrix x = random_matrix(100, 4, rng, -3.0, 3.0);
  KMeansConfig cfg;
  cfg.k = 5;
  cfg.seed = 2;
  KMeansOutput out = kmeans(x, cfg);
  REQUIRE(!out.inertia_trace.empty());
  for (std::size_t i = 1; i < out.inertia_trace.size(); ++i)
    CHECK(out.inertia_trace[i] <= out.inertia_trace[i - 1] + 1e-9);
  CHECK(out.inertia == doctest::Approx(out.inertia_trace.back()));
}

TEST_CASE("kmeans: K outside [1, N] rejected") {
  Matrix x(3, 2, 1.0);
  KMeansConfig cfg;
  cfg.k = 4;
  CHECK_THROWS_AS(kmeans(x, cfg), std::invalid_argument);
  cfg.k = 0;
  CHECK_THROWS_AS(kmeans(x, cfg), std::invalid_argument);
}

TEST_CASE("kmeans: deterministic per seed") {
  Rng rng(27);
  Matrix x = random_matrix(80, 3, rng);
  KMeansConfig cfg;
  cfg.k = 4;
  cfg.seed = 31;
  KMeansOutput a = kmeans(x, cfg);
  KMeansOutput b = kmeans(x, cfg);
  CHECK(a.result.labels == b.result.labels);
  CHECK(a.centers == b.centers);
  CHECK(a.inertia_trace == b.inertia_trace);
}

TEST_CASE("kmeans: every point sits with its nearest centroid") {
  Rng rng(28);
  Matrix x = random_matrix(60, 3, rng, -2.0, 2.0);
  KMeansConfig cfg;
  cfg.k = 4;
  cfg.seed = 5;
  KMeansOutput out = kmeans(x, cfg);
  for (std::size_t i = 0; i < 60; ++i) {
    double own = 0.0;
    for (std::size_t c = 0; c < 3; ++c) {
      const double d = x(i, c) - out.centers(out.result.labels[i], c);
      own += d * d;
    }
    for (std::size_t j = 0; j < out.centers.rows(); ++j) {
      double other = 0.0;
      for (std::size_t c = 0; c < 3; ++c) {
        const double d = x(i, c) - out.centers(j, c);
        other += d * d;
      }
      CHECK(own <= other + 1e-9);
    }
  }
}

TEST_CASE("birch: everything within threshold collapses to one cluster") {
  Matrix x = Matrix::from_rows({{0.0, 0.0}, {0.01, 0.0}, {0.0, 0.01}, {0.01, 0.01}});
  ClusteringResult r = birch(x, 1, 50, 10.0);
  CHECK(r.k_predicted == 1);
  for (int l : r.labels) CHECK(l == 0);

  CfTree tree = build_cf_tree(x, 50, 10.0);
  CHECK(leaf_subclusters(tree).size() == 1);
}

TEST_CASE("birch: recovers well-separated blobs") {
  SynthData blobs = synth_blobs(300, 5, 4, 0.2, 10);
  ClusteringResult r = birch(blobs.data.x, 4, 50, 0.0);
  CHECK(ari(blobs.labels, r.labels) >= 0.95);
}

TEST_CASE("cf tree: parent features are the sum of their children") {
  Rng rng(29);
  Matrix x = random_matrix(200, 4, rng, -2.0, 2.0);
  CfTree tree = build_cf_tree(x, 4, 0.3);  // small branching forces splits
  CHECK(cf_additive(tree, 1e-6));
}

TEST_CASE("cf tree: leaf radius bounded by threshold, point count conserved") {
  Rng rng(30);
  Matrix x = random_matrix(150, 3, rng, -2.0, 2.0);
  const double threshold = 0.8;
  CfTree tree = build_cf_tree(x, 50, threshold);
  CHECK(max_leaf_radius(tree) <= threshold + 1e-9);
  double total = 0.0;
  for (const auto& cf : leaf_subclusters(tree)) total += cf.n;
  CHECK(total == 150.0);
}

TEST_CASE("birch: deterministic") {
  Rng rng(35);
  Matrix x = random_matrix(120, 3, rng);
  ClusteringResult a = birch(x, 5, 50, 0.0);
  ClusteringResult b = birch(x, 5, 50, 0.0);
  CHECK(a.labels == b.labels);
  CHECK(a.k_predicted == b.k_predicted);
}

TEST_CASE("silhouette: two tight far-apart pairs score ~0.990") {
  Matrix x = Matrix::from_rows({{0.0}, {0.1}, {10.0}, {10.1}});
  std::vector<int> labels{0, 0, 1, 1};
  const double s = silhouette(x, labels);
  CHECK(std::abs(s - 0.990) <= 0.001);
}

TEST_CASE("silhouette: perfectly interleaved labels on symmetric data sit near zero") {
  // coincident pairs, one of each label: s = -1/(n/2) by symmetry
  Rng rng(36);
  Matrix x(100, 2);
  std::vector<int> labels(100);
  for (std::size_t p = 0; p < 50; ++p) {
    const double a = rng.uniform(-5.0, 5.0), b = rng.uniform(-5.0, 5.0);
    x(2 * p, 0) = a;
    x(2 * p, 1) = b;
    x(2 * p + 1, 0) = a;
    x(2 * p + 1, 1) = b;
    labels[2 * p] = 0;
    labels[2 * p + 1] = 1;
  }
  CHECK(std::abs(silhouette(x, labels)) < 0.05);
}

TEST_CASE("silhouette: matches the textbook double loop on 50 random points") {
  Rng rng(37);
  Matrix x = random_matrix(50, 3, rng, -2.0, 2.0);
  std::vector<int> labels(50);
  for (auto& l : labels) l = int(rng.uniform_int(3));
  labels[0] = 0;
  labels[1] = 1;
  labels[2] = 2;  // keep all three clusters alive
  CHECK(silhouette(x, labels) ==
        doctest::Approx(silhouette_naive(x, labels)).epsilon(1e-12));
}

TEST_CASE("silhouette: fewer than two clusters rejected; bounded; relabel-invariant") {
  Rng rng(38);
  Matrix x = random_matrix(20, 2, rng);
  std::vector<int> one(20, 0);
  CHECK_THROWS_AS(silhouette(x, one), std::invalid_argument);

  std::vector<int> labels(20);
  for (auto& l : labels) l = int(rng.uniform_int(3));
  labels[0] = 0;
  labels[1] = 1;
  labels[2] = 2;
  const double s = silhouette(x, labels);
  CHECK(s >= -1.0);
  CHECK(s <= 1.0);

  // permute label names 0->2, 1->0, 2->1
  std::vector<int> renamed(20);
  const int map[3] = {2, 0, 1};
  for (std::size_t i = 0; i < 20; ++i) renamed[i] = map[labels[i]];
  CHECK(silhouette(x, renamed) == s);
}

TEST_CASE("silhouette_sampled: exact at small N") {
  Rng rng(39);
  Matrix x = random_matrix(40, 2, rng);
  std::vector<int> labels(40);
  for (auto& l : labels) l = int(rng.uniform_int(2));
  labels[0] = 0;
  labels[1] = 1;
  CHECK(silhouette_sampled(x, labels, 7) == silhouette(x, labels));
}

TEST_CASE("compact_labels: dense first-appearance remap") {
  std::vector<int> labels{5, 7, 5, 9};
  CHECK(compact_labels(labels) == 3);
  std::vector<int> want{0, 1, 0, 2};
  CHECK(labels == want);
}

TEST_CASE("birch_auto_threshold: positive on spread data") {
  Rng rng(40);
  Matrix x = random_matrix(100, 3, rng, -3.0, 3.0);
  CHECK(birch_auto_threshold(x) > 0.0);
}
