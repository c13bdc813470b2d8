#pragma once

#include <string>
#include <utility>
#include <vector>

#include "deepclust/matrix.hpp"

namespace deepclust {

// Overlap counts between ground-truth groups (rows) and predicted groups
// (columns); group order is first appearance in each labeling.
struct ContingencyTable {
  std::size_t r = 0, s = 0;
  long long n = 0;
  std::vector<long long> t;  // r*s row-major
  std::vector<long long> a;  // row sums
  std::vector<long long> b;  // column sums
  long long at(std::size_t i, std::size_t j) const { return t[i * s + j]; }
};

ContingencyTable contingency(const std::vector<int>& gt, const std::vector<int>& pred);

// Adjusted Rand index over the contingency table. Range is [-1, 1] — the
// "0 to 1" folklore is wrong, negative values occur for worse-than-chance
// agreement. Degenerate case (both labelings constant or both all-singleton)
// has denominator 0 and scores 1.
double ari(const std::vector<int>& gt, const std::vector<int>& pred);

// Minimum-cost perfect assignment on a square cost matrix, O(K^3).
// result[row] = column. Deterministic; an all-equal matrix yields the
// identity (lexicographically smallest) assignment.
std::vector<int> hungarian(const Matrix& cost);

// Clustering accuracy: best bijective mapping of predicted to ground-truth
// labels (benefit matrix zero-padded to square), matched fraction.
double acc(const std::vector<int>& gt, const std::vector<int>& pred);

struct PairCounts {
  long long tp = 0, fp = 0, tn = 0, fn = 0;
};

// Agreement over all n(n-1)/2 unordered pairs. tp: together in both;
// fn: together in gt only; fp: together in pred only; tn: apart in both.
PairCounts pair_counts(const std::vector<int>& gt, const std::vector<int>& pred);

struct ClusterStats {
  std::size_t k = 0;
  double mean_size = 0.0;
  double median_size = 0.0;  // midpoint convention for even counts
  std::size_t unary = 0;
  std::size_t largest = 0;
};

ClusterStats cluster_stats(const std::vector<int>& pred);

struct MetricsReport {
  std::size_t gt_k = 0;
  std::size_t predicted_k = 0;
  double mean_size = 0.0;
  double median_size = 0.0;
  std::size_t unary = 0;
  double seconds = 0.0;
  double ari = 0.0;
  double acc = 0.0;
  PairCounts pairs;
};

MetricsReport evaluate(const std::vector<int>& gt, const std::vector<int>& pred,
                       double seconds);

// Key-value rows in report order; keys are the exact report row names.
std::vector<std::pair<std::string, std::string>> report_rows(const MetricsReport& r);

}  // namespace deepclust
