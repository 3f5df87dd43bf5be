#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "qross/tsp.hpp"

namespace qross {

// Bumped whenever the layout below changes; stored in model files.
inline constexpr int kFeatureSpecVersion = 1;

// Layout of the permutation-invariant instance descriptor. All distance
// statistics are over the off-diagonal entries of dist_solver.
//   0      n_cities
//   1..4   mean, std, min, max
//   5..9   10/30/50/70/90 % quantiles
//   10,11  mean and std of each city's nearest-neighbour distance
//   12     MST length / (n * mean distance)
//   13     log(a_norm)
inline constexpr std::size_t kFeatureCount = 14;
inline constexpr std::size_t kLogANormFeature = 13;

using FeatureVector = std::vector<double>;

FeatureVector extract_features(const TspInstance& instance, double a_norm);

// Same as extract_features with the A slot left at 0; callers sweeping A set
// the last entry themselves.
FeatureVector instance_features(const TspInstance& instance);

// Total weight of a minimum spanning tree of the complete graph (Prim, O(n^2)).
double mst_length(const SquareMatrix& dist);

}  // namespace qross
