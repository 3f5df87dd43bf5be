#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "qross/qubo.hpp"

namespace qross {

// Weighted minimum vertex cover on an undirected simple graph.
struct MvcInstance {
  std::size_t n_nodes = 0;
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  std::vector<double> weights;
};

struct MvcEncoding {
  QuboModel objective;  // sum_i w_i u_i
  QuboModel penalty;    // sum_{(i,j) in E} (1 - u_i - u_j + u_i u_j)
};

void validate(const MvcInstance& instance);
MvcEncoding encode_mvc(const MvcInstance& instance);

}  // namespace qross
