#include "qross/features.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qross/error.hpp"
#include "qross/stats.hpp"

namespace qross {

double mst_length(const SquareMatrix& dist) {
  const std::size_t n = dist.size();
  if (n == 0) return 0.0;
  std::vector<double> best(n, std::numeric_limits<double>::infinity());
  std::vector<bool> in_tree(n, false);
  best[0] = 0.0;
  std::vector<double> tree_edges;
  tree_edges.reserve(n);
  for (std::size_t step = 0; step < n; ++step) {
    std::size_t u = n;
    for (std::size_t v = 0; v < n; ++v) {
      if (!in_tree[v] && (u == n || best[v] < best[u])) u = v;
    }
    in_tree[u] = true;
    tree_edges.push_back(best[u]);
    for (std::size_t v = 0; v < n; ++v) {
      if (!in_tree[v] && dist(u, v) < best[v]) best[v] = dist(u, v);
    }
  }
  // Summed in sorted order so the result does not depend on city labels.
  std::sort(tree_edges.begin(), tree_edges.end());
  double total = 0.0;
  for (double w : tree_edges) total += w;
  return total;
}

FeatureVector instance_features(const TspInstance& instance) {
  const auto& d = instance.dist_solver;
  const std::size_t n = instance.n_cities;

  std::vector<double> pairs;
  pairs.reserve(n * (n - 1) / 2);
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      if (i < j) pairs.push_back(d(i, j));
      nearest[i] = std::min(nearest[i], d(i, j));
    }
  }
  std::sort(pairs.begin(), pairs.end());
  std::sort(nearest.begin(), nearest.end());

  FeatureVector f(kFeatureCount, 0.0);
  f[0] = static_cast<double>(n);
  f[1] = stats::mean(pairs);
  f[2] = stats::population_std(pairs);
  f[3] = pairs.front();
  f[4] = pairs.back();
  constexpr std::array<double, 5> qs{0.1, 0.3, 0.5, 0.7, 0.9};
  for (std::size_t k = 0; k < qs.size(); ++k) f[5 + k] = stats::quantile_sorted(pairs, qs[k]);
  f[10] = stats::mean(nearest);
  f[11] = stats::population_std(nearest);
  const double denom = static_cast<double>(n) * f[1];
  f[12] = denom != 0.0 ? mst_length(d) / denom : 0.0;
  return f;
}

FeatureVector extract_features(const TspInstance& instance, double a_norm) {
  if (!(a_norm > 0.0) || !std::isfinite(a_norm)) {
    throw ValidationError("a_norm must be positive and finite");
  }
  auto f = instance_features(instance);
  f[kLogANormFeature] = std::log(a_norm);
  return f;
}

}  // namespace qross
