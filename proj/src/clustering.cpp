#include "deepclust/clustering.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <queue>

#include "deepclust/rng.hpp"

namespace deepclust {

namespace {

double sq_dist_rows(const double* a, const double* b, std::size_t d) {
  double s = 0.0;
  for (std::size_t c = 0; c < d; ++c) {
    const double diff = a[c] - b[c];
    s += diff * diff;
  }
  return s;
}

double now_seconds() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

}  // namespace

std::size_t compact_labels(std::vector<int>& labels) {
  std::map<int, int> remap;
  for (int& l : labels) {
    auto [it, fresh] = remap.emplace(l, static_cast<int>(remap.size()));
    l = it->second;
    (void)fresh;
  }
  return remap.size();
}

KMeansOutput kmeans(const Matrix& x, const KMeansConfig& config) {
  const std::size_t n = x.rows(), d = x.cols(), k = config.k;
  if (k == 0 || config.max_iters == 0)
    throw std::invalid_argument("kmeans: K and max_iters must be >= 1");
  if (k > n)
    throw std::invalid_argument("kmeans: K=" + std::to_string(k) + " exceeds N=" +
                                std::to_string(n));
  const double t0 = now_seconds();
  Rng rng(config.seed);
  Matrix centers(k, d);

  if (config.init == KMeansConfig::Init::random) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    rng.shuffle(idx);
    for (std::size_t c = 0; c < k; ++c)
      std::copy(x.row(idx[c]), x.row(idx[c]) + d, centers.row(c));
  } else {
    // k-means++: first center uniform, then D^2 sampling.
    const std::size_t first = rng.uniform_int(n);
    std::copy(x.row(first), x.row(first) + d, centers.row(0));
    std::vector<double> best_d2(n);
    for (std::size_t i = 0; i < n; ++i)
      best_d2[i] = sq_dist_rows(x.row(i), centers.row(0), d);
    for (std::size_t c = 1; c < k; ++c) {
      double total = std::accumulate(best_d2.begin(), best_d2.end(), 0.0);
      std::size_t pick;
      if (total <= 0.0) {
        pick = rng.uniform_int(n);  // all points coincide with chosen centers
      } else {
        // target in (0, total] so zero-weight prefixes are never picked
        const double target = (1.0 - rng.uniform()) * total;
        double acc = 0.0;
        pick = n - 1;
        for (std::size_t i = 0; i < n; ++i) {
          acc += best_d2[i];
          if (acc >= target) {
            pick = i;
            break;
          }
        }
      }
      std::copy(x.row(pick), x.row(pick) + d, centers.row(c));
      for (std::size_t i = 0; i < n; ++i)
        best_d2[i] = std::min(best_d2[i], sq_dist_rows(x.row(i), centers.row(c), d));
    }
  }

  std::vector<int> labels(n, 0);
  std::vector<double> point_d2(n, 0.0);
  KMeansOutput out;

  auto assign = [&]() {
    double inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      int arg = 0;
      for (std::size_t c = 0; c < k; ++c) {
        const double d2 = sq_dist_rows(x.row(i), centers.row(c), d);
        if (d2 < best) {
          best = d2;
          arg = static_cast<int>(c);
        }
      }
      labels[i] = arg;
      point_d2[i] = best;
      inertia += best;
    }
    return inertia;
  };

  for (std::size_t iter = 0; iter < config.max_iters; ++iter) {
    double inertia = assign();

    // Reseed emptied clusters to the worst-fit point; bounded at k rounds.
    for (std::size_t round = 0; round < k; ++round) {
      std::vector<std::size_t> counts(k, 0);
      for (int l : labels) counts[l]++;
      std::size_t empty = k;
      for (std::size_t c = 0; c < k; ++c)
        if (counts[c] == 0) {
          empty = c;
          break;
        }
      if (empty == k) break;
      std::size_t farthest = 0;
      for (std::size_t i = 1; i < n; ++i)
        if (point_d2[i] > point_d2[farthest]) farthest = i;
      std::copy(x.row(farthest), x.row(farthest) + d, centers.row(empty));
      inertia = assign();
    }
    out.inertia_trace.push_back(inertia);

    // Centroid update.
    Matrix next(k, d);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      counts[labels[i]]++;
      const double* xi = x.row(i);
      double* c = next.row(labels[i]);
      for (std::size_t col = 0; col < d; ++col) c[col] += xi[col];
    }
    double shift = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;  // handled next iteration if it persists
      for (std::size_t col = 0; col < d; ++col)
        next(c, col) /= static_cast<double>(counts[c]);
      shift = std::max(shift, std::sqrt(sq_dist_rows(next.row(c), centers.row(c), d)));
      std::copy(next.row(c), next.row(c) + d, centers.row(c));
    }
    if (shift < config.tol) break;
  }
  out.inertia = assign();

  out.result.labels = labels;
  out.result.k_predicted = compact_labels(out.result.labels);
  // centers follow the compaction so row c is still the centroid of label c;
  // clusters emptied by the final assignment drop out entirely
  out.centers = Matrix(out.result.k_predicted, d);
  for (std::size_t i = 0; i < n; ++i) {
    double* dst = out.centers.row(out.result.labels[i]);
    const double* src = centers.row(labels[i]);
    std::copy(src, src + d, dst);
  }
  out.result.seconds = now_seconds() - t0;
  return out;
}

namespace {

void cf_add_point(ClusterFeature& cf, const double* p, std::size_t d) {
  if (cf.ls.empty()) cf.ls.assign(d, 0.0);
  cf.n += 1.0;
  double ss = 0.0;
  for (std::size_t c = 0; c < d; ++c) {
    cf.ls[c] += p[c];
    ss += p[c] * p[c];
  }
  cf.ss += ss;
}

ClusterFeature cf_merge(const ClusterFeature& a, const ClusterFeature& b) {
  ClusterFeature m;
  m.n = a.n + b.n;
  m.ls = a.ls;
  for (std::size_t c = 0; c < b.ls.size(); ++c) m.ls[c] += b.ls[c];
  m.ss = a.ss + b.ss;
  return m;
}

double cf_radius(const ClusterFeature& cf) {
  if (cf.n <= 0.0) return 0.0;
  double centroid_sq = 0.0;
  for (double v : cf.ls) centroid_sq += (v / cf.n) * (v / cf.n);
  const double var = cf.ss / cf.n - centroid_sq;
  return var > 0.0 ? std::sqrt(var) : 0.0;
}

double cf_centroid_sq_dist(const ClusterFeature& a, const ClusterFeature& b) {
  double s = 0.0;
  for (std::size_t c = 0; c < a.ls.size(); ++c) {
    const double diff = a.ls[c] / a.n - b.ls[c] / b.n;
    s += diff * diff;
  }
  return s;
}

ClusterFeature cf_point(const double* p, std::size_t d) {
  ClusterFeature cf;
  cf_add_point(cf, p, d);
  return cf;
}

// Split a node's entries into two by farthest-pair seeding and nearest-seed
// assignment; pairs (cf, child) stay together.
void split_entries(std::vector<ClusterFeature>& cfs,
                   std::vector<std::unique_ptr<CfNode>>& children, bool leaf,
                   std::vector<ClusterFeature>& cfs_a,
                   std::vector<std::unique_ptr<CfNode>>& kids_a,
                   std::vector<ClusterFeature>& cfs_b,
                   std::vector<std::unique_ptr<CfNode>>& kids_b) {
  std::size_t sa = 0, sb = 1;
  double worst = -1.0;
  for (std::size_t i = 0; i < cfs.size(); ++i)
    for (std::size_t j = i + 1; j < cfs.size(); ++j) {
      const double d2 = cf_centroid_sq_dist(cfs[i], cfs[j]);
      if (d2 > worst) {
        worst = d2;
        sa = i;
        sb = j;
      }
    }
  for (std::size_t i = 0; i < cfs.size(); ++i) {
    const double da = cf_centroid_sq_dist(cfs[i], cfs[sa]);
    const double db = cf_centroid_sq_dist(cfs[i], cfs[sb]);
    const bool to_a = (i == sa) || (i != sb && (da < db || (da == db && sa < sb)));
    if (to_a) {
      cfs_a.push_back(cfs[i]);
      if (!leaf) kids_a.push_back(std::move(children[i]));
    } else {
      cfs_b.push_back(cfs[i]);
      if (!leaf) kids_b.push_back(std::move(children[i]));
    }
  }
}

struct InsertResult {
  bool split = false;
  ClusterFeature cf_a, cf_b;  // replacement entries when split
  std::unique_ptr<CfNode> node_a, node_b;
};

InsertResult insert_point(CfNode& node, const double* p, std::size_t d,
                          std::size_t branching, double threshold) {
  InsertResult res;
  if (node.leaf) {
    // nearest subcluster by centroid
    std::size_t best = node.cfs.size();
    double best_d2 = std::numeric_limits<double>::infinity();
    const ClusterFeature pcf = cf_point(p, d);
    for (std::size_t i = 0; i < node.cfs.size(); ++i) {
      const double d2 = cf_centroid_sq_dist(node.cfs[i], pcf);
      if (d2 < best_d2) {
        best_d2 = d2;
        best = i;
      }
    }
    bool absorbed = false;
    if (best < node.cfs.size()) {
      ClusterFeature merged = cf_merge(node.cfs[best], pcf);
      if (cf_radius(merged) <= threshold) {
        node.cfs[best] = std::move(merged);
        absorbed = true;
      }
    }
    if (!absorbed) node.cfs.push_back(pcf);
  } else {
    // descend into nearest child
    std::size_t best = 0;
    double best_d2 = std::numeric_limits<double>::infinity();
    const ClusterFeature pcf = cf_point(p, d);
    for (std::size_t i = 0; i < node.cfs.size(); ++i) {
      const double d2 = cf_centroid_sq_dist(node.cfs[i], pcf);
      if (d2 < best_d2) {
        best_d2 = d2;
        best = i;
      }
    }
    InsertResult child_res =
        insert_point(*node.children[best], p, d, branching, threshold);
    if (child_res.split) {
      node.cfs[best] = child_res.cf_a;
      node.children[best] = std::move(child_res.node_a);
      node.cfs.push_back(child_res.cf_b);
      node.children.push_back(std::move(child_res.node_b));
    } else {
      node.cfs[best] = cf_merge(node.cfs[best], pcf);
    }
  }

  if (node.cfs.size() > branching) {
    auto a = std::make_unique<CfNode>();
    auto b = std::make_unique<CfNode>();
    a->leaf = b->leaf = node.leaf;
    split_entries(node.cfs, node.children, node.leaf, a->cfs, a->children, b->cfs,
                  b->children);
    res.split = true;
    ClusterFeature sum_a = a->cfs[0];
    for (std::size_t i = 1; i < a->cfs.size(); ++i) sum_a = cf_merge(sum_a, a->cfs[i]);
    ClusterFeature sum_b = b->cfs[0];
    for (std::size_t i = 1; i < b->cfs.size(); ++i) sum_b = cf_merge(sum_b, b->cfs[i]);
    res.cf_a = std::move(sum_a);
    res.cf_b = std::move(sum_b);
    res.node_a = std::move(a);
    res.node_b = std::move(b);
  }
  return res;
}

void collect_leaves(const CfNode& node, std::vector<ClusterFeature>& out) {
  if (node.leaf) {
    out.insert(out.end(), node.cfs.begin(), node.cfs.end());
    return;
  }
  for (const auto& child : node.children) collect_leaves(*child, out);
}

bool check_additive(const CfNode& node, double tol) {
  if (node.leaf) return true;
  for (std::size_t i = 0; i < node.children.size(); ++i) {
    const CfNode& child = *node.children[i];
    ClusterFeature sum;
    sum.ls.assign(node.cfs[i].ls.size(), 0.0);
    for (const auto& cf : child.cfs) sum = cf_merge(sum, cf);
    if (sum.n != node.cfs[i].n) return false;
    if (std::abs(sum.ss - node.cfs[i].ss) > tol) return false;
    for (std::size_t c = 0; c < sum.ls.size(); ++c)
      if (std::abs(sum.ls[c] - node.cfs[i].ls[c]) > tol) return false;
    if (!check_additive(child, tol)) return false;
  }
  return true;
}

double max_radius(const CfNode& node) {
  double worst = 0.0;
  if (node.leaf) {
    for (const auto& cf : node.cfs) worst = std::max(worst, cf_radius(cf));
  } else {
    for (const auto& child : node.children)
      worst = std::max(worst, max_radius(*child));
  }
  return worst;
}

}  // namespace

CfTree build_cf_tree(const Matrix& x, std::size_t branching, double threshold) {
  if (branching < 2) throw std::invalid_argument("birch: branching factor must be >= 2");
  if (threshold < 0.0) throw std::invalid_argument("birch: threshold must be >= 0");
  CfTree tree;
  tree.branching = branching;
  tree.threshold = threshold;
  tree.root = std::make_unique<CfNode>();
  const std::size_t d = x.cols();
  for (std::size_t i = 0; i < x.rows(); ++i) {
    InsertResult res = insert_point(*tree.root, x.row(i), d, branching, threshold);
    if (res.split) {
      auto new_root = std::make_unique<CfNode>();
      new_root->leaf = false;
      new_root->cfs.push_back(std::move(res.cf_a));
      new_root->cfs.push_back(std::move(res.cf_b));
      new_root->children.push_back(std::move(res.node_a));
      new_root->children.push_back(std::move(res.node_b));
      tree.root = std::move(new_root);
    }
  }
  return tree;
}

std::vector<ClusterFeature> leaf_subclusters(const CfTree& tree) {
  std::vector<ClusterFeature> out;
  collect_leaves(*tree.root, out);
  return out;
}

bool cf_additive(const CfTree& tree, double tol) {
  return check_additive(*tree.root, tol);
}

double max_leaf_radius(const CfTree& tree) { return max_radius(*tree.root); }

double birch_auto_threshold(const Matrix& x) {
  const std::size_t n = x.rows();
  if (n < 2) return 0.5;
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  if (n > 512) {
    Rng rng(611953);  // fixed pilot seed; the op itself takes no seedParam
    rng.shuffle(idx);
    idx.resize(512);
    std::sort(idx.begin(), idx.end());
  }
  const std::size_t m = idx.size(), d = x.cols();
  double sum_nn = 0.0;
  for (std::size_t a = 0; a < m; ++a) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t b = 0; b < m; ++b) {
      if (a == b) continue;
      best = std::min(best, sq_dist_rows(x.row(idx[a]), x.row(idx[b]), d));
    }
    sum_nn += std::sqrt(best);
  }
  const double t = 0.5 * sum_nn / static_cast<double>(m);
  return t > 0.0 ? t : 0.5;
}

ClusteringResult birch(const Matrix& x, std::size_t k, std::size_t branching,
                       double threshold) {
  if (k < 1) throw std::invalid_argument("birch: K must be >= 1");
  if (x.rows() == 0) throw std::invalid_argument("birch: empty input");
  const double t0 = now_seconds();
  CfTree tree = build_cf_tree(x, branching, threshold);
  std::vector<ClusterFeature> subs = leaf_subclusters(tree);

  // Ward-style agglomeration on CF statistics down to k groups.
  // merge cost = n_a*n_b/(n_a+n_b) * ||centroid_a - centroid_b||^2
  const std::size_t m = subs.size();
  std::vector<ClusterFeature> live = subs;
  std::vector<bool> alive(m, true);
  std::vector<int> version(m, 0);
  std::size_t n_alive = m;

  struct Cand {
    double cost;
    std::size_t a, b;
    int va, vb;
  };
  auto cmp = [](const Cand& l, const Cand& r) {
    if (l.cost != r.cost) return l.cost > r.cost;
    if (l.a != r.a) return l.a > r.a;
    return l.b > r.b;
  };
  std::priority_queue<Cand, std::vector<Cand>, decltype(cmp)> heap(cmp);
  auto ward_cost = [&](std::size_t a, std::size_t b) {
    return live[a].n * live[b].n / (live[a].n + live[b].n) *
           cf_centroid_sq_dist(live[a], live[b]);
  };
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = a + 1; b < m; ++b)
      heap.push({ward_cost(a, b), a, b, 0, 0});

  while (n_alive > k && !heap.empty()) {
    Cand c = heap.top();
    heap.pop();
    if (!alive[c.a] || !alive[c.b] || version[c.a] != c.va || version[c.b] != c.vb)
      continue;
    live[c.a] = cf_merge(live[c.a], live[c.b]);
    alive[c.b] = false;
    version[c.a]++;
    n_alive--;
    for (std::size_t o = 0; o < m; ++o) {
      if (!alive[o] || o == c.a) continue;
      const std::size_t lo = std::min(o, c.a), hi = std::max(o, c.a);
      heap.push({ward_cost(lo, hi), lo, hi, version[lo], version[hi]});
    }
  }

  // Final centroids of the merged groups, in first-alive order.
  std::vector<std::size_t> reps;
  for (std::size_t i = 0; i < m; ++i)
    if (alive[i]) reps.push_back(i);
  const std::size_t d = x.cols();
  Matrix centroids(reps.size(), d);
  for (std::size_t r = 0; r < reps.size(); ++r)
    for (std::size_t c = 0; c < d; ++c)
      centroids(r, c) = live[reps[r]].ls[c] / live[reps[r]].n;

  ClusteringResult out;
  out.labels.resize(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    int arg = 0;
    for (std::size_t r = 0; r < reps.size(); ++r) {
      const double d2 = sq_dist_rows(x.row(i), centroids.row(r), d);
      if (d2 < best) {
        best = d2;
        arg = static_cast<int>(r);
      }
    }
    out.labels[i] = arg;
  }
  out.k_predicted = compact_labels(out.labels);
  out.seconds = now_seconds() - t0;
  return out;
}

double silhouette_from_dists(const Matrix& dists, const std::vector<int>& labels) {
  const std::size_t n = labels.size();
  if (dists.rows() != n || dists.cols() != n)
    detail::throw_shape("silhouette", "distance matrix " + dists.shape_str() +
                                          " vs " + std::to_string(n) + " labels");
  int k = 0;
  for (int l : labels) k = std::max(k, l + 1);
  std::vector<std::size_t> counts(k, 0);
  for (int l : labels) {
    if (l < 0) throw std::invalid_argument("silhouette: negative label");
    counts[l]++;
  }
  std::size_t nonempty = 0;
  for (std::size_t c = 0; c < counts.size(); ++c)
    if (counts[c] > 0) nonempty++;
  if (nonempty < 2)
    throw std::invalid_argument("silhouette: need at least 2 clusters");

  double total = 0.0;
  std::vector<double> cluster_sum(k);
  for (std::size_t i = 0; i < n; ++i) {
    if (counts[labels[i]] == 1) continue;  // singleton scores 0
    std::fill(cluster_sum.begin(), cluster_sum.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) cluster_sum[labels[j]] += dists(i, j);
    const double a =
        cluster_sum[labels[i]] / static_cast<double>(counts[labels[i]] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (int c = 0; c < k; ++c) {
      if (c == labels[i] || counts[c] == 0) continue;
      b = std::min(b, cluster_sum[c] / static_cast<double>(counts[c]));
    }
    const double denom = std::max(a, b);
    total += denom > 0.0 ? (b - a) / denom : 0.0;
  }
  return total / static_cast<double>(n);
}

double silhouette(const Matrix& x, const std::vector<int>& labels) {
  if (x.rows() != labels.size())
    detail::throw_shape("silhouette",
                        x.shape_str() + " vs " + std::to_string(labels.size()) + " labels");
  Matrix d2 = pairwise_sq_dists(x);
  for (auto& v : d2.data()) v = std::sqrt(v);
  return silhouette_from_dists(d2, labels);
}

double silhouette_sampled(const Matrix& x, const std::vector<int>& labels,
                          std::uint64_t seed) {
  constexpr std::size_t kExactLimit = 5000;
  constexpr std::size_t kSampleSize = 2048;
  const std::size_t n = x.rows();
  if (n <= kExactLimit) return silhouette(x, labels);
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(Rng::mix(seed, 0x73696c68u));
  rng.shuffle(idx);
  idx.resize(kSampleSize);
  std::sort(idx.begin(), idx.end());
  Matrix xs(kSampleSize, x.cols());
  std::vector<int> ls(kSampleSize);
  for (std::size_t r = 0; r < kSampleSize; ++r) {
    std::copy(x.row(idx[r]), x.row(idx[r]) + x.cols(), xs.row(r));
    ls[r] = labels[idx[r]];
  }
  std::vector<int> compacted = ls;
  if (compact_labels(compacted) < 2) return 0.0;  // sample collapsed; neutral
  return silhouette(xs, ls);
}

}  // namespace deepclust
