#include "deepclust/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>

namespace deepclust {

namespace {

std::vector<int> dense_ids(const std::vector<int>& labels, std::size_t& k_out) {
  std::map<int, int> remap;
  std::vector<int> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto [it, fresh] = remap.emplace(labels[i], static_cast<int>(remap.size()));
    (void)fresh;
    out[i] = it->second;
  }
  k_out = remap.size();
  return out;
}

long long choose2(long long v) { return v * (v - 1) / 2; }

}  // namespace

ContingencyTable contingency(const std::vector<int>& gt, const std::vector<int>& pred) {
  if (gt.size() != pred.size())
    throw std::invalid_argument("contingency: label vectors differ in length (" +
                                std::to_string(gt.size()) + " vs " +
                                std::to_string(pred.size()) + ")");
  ContingencyTable ct;
  std::size_t r, s;
  const std::vector<int> g = dense_ids(gt, r);
  const std::vector<int> p = dense_ids(pred, s);
  ct.r = r;
  ct.s = s;
  ct.n = static_cast<long long>(gt.size());
  ct.t.assign(r * s, 0);
  ct.a.assign(r, 0);
  ct.b.assign(s, 0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    ct.t[g[i] * s + p[i]]++;
    ct.a[g[i]]++;
    ct.b[p[i]]++;
  }
  return ct;
}

double ari(const std::vector<int>& gt, const std::vector<int>& pred) {
  if (gt.size() != pred.size())
    throw std::invalid_argument("ari: label vectors differ in length");
  if (gt.size() < 2) throw std::invalid_argument("ari: need n >= 2");
  const ContingencyTable ct = contingency(gt, pred);
  long double sum_t = 0, sum_a = 0, sum_b = 0;
  for (long long v : ct.t) sum_t += choose2(v);
  for (long long v : ct.a) sum_a += choose2(v);
  for (long long v : ct.b) sum_b += choose2(v);
  const long double total = choose2(ct.n);
  const long double expected = sum_a * sum_b / total;
  const long double max_index = 0.5L * (sum_a + sum_b);
  const long double denom = max_index - expected;
  if (denom == 0.0L) return 1.0;  // both degenerate labelings agree trivially
  return static_cast<double>((sum_t - expected) / denom);
}

std::vector<int> hungarian(const Matrix& cost) {
  const std::size_t n = cost.rows();
  if (cost.cols() != n)
    detail::throw_shape("hungarian", "cost must be square, got " + cost.shape_str());
  if (n == 0) return {};
  // Shortest-augmenting-path assignment with potentials, 1-indexed buffers.
  const double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, kInf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = p[j0];
      double delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> assignment(n, -1);
  for (std::size_t j = 1; j <= n; ++j)
    if (p[j] != 0) assignment[p[j] - 1] = static_cast<int>(j - 1);
  return assignment;
}

double acc(const std::vector<int>& gt, const std::vector<int>& pred) {
  if (gt.size() != pred.size())
    throw std::invalid_argument("acc: label vectors differ in length");
  if (gt.empty()) throw std::invalid_argument("acc: empty labels");
  std::size_t r, s;
  const std::vector<int> g = dense_ids(gt, r);
  const std::vector<int> p = dense_ids(pred, s);
  const std::size_t k = std::max(r, s);
  // benefit[pred][gt] = co-occurrence count; zero padding leaves unmatched
  // clusters contributing nothing
  Matrix benefit(k, k);
  for (std::size_t i = 0; i < g.size(); ++i) benefit(p[i], g[i]) += 1.0;
  Matrix costm(k, k);
  for (std::size_t i = 0; i < costm.size(); ++i) costm.data()[i] = -benefit.data()[i];
  const std::vector<int> match = hungarian(costm);
  double hits = 0.0;
  for (std::size_t c = 0; c < k; ++c) hits += benefit(c, match[c]);
  return hits / static_cast<double>(gt.size());
}

PairCounts pair_counts(const std::vector<int>& gt, const std::vector<int>& pred) {
  const ContingencyTable ct = contingency(gt, pred);
  PairCounts pc;
  long long together_both = 0, together_gt = 0, together_pred = 0;
  for (long long v : ct.t) together_both += choose2(v);
  for (long long v : ct.a) together_gt += choose2(v);
  for (long long v : ct.b) together_pred += choose2(v);
  pc.tp = together_both;
  pc.fn = together_gt - together_both;
  pc.fp = together_pred - together_both;
  pc.tn = choose2(ct.n) - pc.tp - pc.fn - pc.fp;
  return pc;
}

ClusterStats cluster_stats(const std::vector<int>& pred) {
  if (pred.empty()) throw std::invalid_argument("cluster_stats: empty labels");
  std::map<int, std::size_t> sizes;
  for (int l : pred) sizes[l]++;
  std::vector<std::size_t> sorted;
  for (const auto& [label, size] : sizes) sorted.push_back(size);
  std::sort(sorted.begin(), sorted.end());
  ClusterStats st;
  st.k = sorted.size();
  st.mean_size = static_cast<double>(pred.size()) / static_cast<double>(st.k);
  const std::size_t mid = st.k / 2;
  st.median_size = (st.k % 2 == 1)
                       ? static_cast<double>(sorted[mid])
                       : 0.5 * static_cast<double>(sorted[mid - 1] + sorted[mid]);
  for (std::size_t v : sorted)
    if (v == 1) st.unary++;
  st.largest = sorted.back();
  return st;
}

MetricsReport evaluate(const std::vector<int>& gt, const std::vector<int>& pred,
                       double seconds) {
  MetricsReport r;
  const ClusterStats gs = cluster_stats(gt);
  const ClusterStats ps = cluster_stats(pred);
  r.gt_k = gs.k;
  r.predicted_k = ps.k;
  r.mean_size = ps.mean_size;
  r.median_size = ps.median_size;
  r.unary = ps.unary;
  r.seconds = seconds;
  r.ari = ari(gt, pred);
  r.acc = acc(gt, pred);
  r.pairs = pair_counts(gt, pred);
  return r;
}

std::vector<std::pair<std::string, std::string>> report_rows(const MetricsReport& r) {
  char buf[64];
  std::vector<std::pair<std::string, std::string>> rows;
  rows.emplace_back("Ground-truth clusters", std::to_string(r.gt_k));
  rows.emplace_back("Predicted clusters", std::to_string(r.predicted_k));
  std::snprintf(buf, sizeof buf, "%.2f", r.mean_size);
  rows.emplace_back("Mean cluster size", buf);
  std::snprintf(buf, sizeof buf, "%.1f", r.median_size);
  rows.emplace_back("Median cluster size", buf);
  rows.emplace_back("Unary clusters", std::to_string(r.unary));
  std::snprintf(buf, sizeof buf, "%.2f", r.seconds);
  rows.emplace_back("Run time (S)", buf);
  std::snprintf(buf, sizeof buf, "%.3f", r.ari);
  rows.emplace_back("ARI", buf);
  std::snprintf(buf, sizeof buf, "%.3f", r.acc);
  rows.emplace_back("ACC", buf);
  return rows;
}

}  // namespace deepclust
