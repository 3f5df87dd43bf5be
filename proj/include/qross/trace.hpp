#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "qross/dataset.hpp"

namespace qross {

struct TraceEntry {
  double a_norm = 0.0;
  BatchStats stats;
  double best_so_far = std::numeric_limits<double>::infinity();
  std::string origin;  // which proposal rule produced this trial

  double objective() const {
    return stats.best_fitness.value_or(std::numeric_limits<double>::infinity());
  }
};

// Evaluation history of one tuning run. The bracket is recomputed after every
// append: a_left is the largest A whose latest evaluation had p_f == 0,
// a_right the smallest A whose latest evaluation had p_f == 1.
class TuningTrace {
 public:
  void append(const BatchStats& stats, std::string origin = {});

  const std::vector<TraceEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  std::optional<double> a_left() const { return a_left_; }
  std::optional<double> a_right() const { return a_right_; }

  double best_fitness() const;
  // Earliest trial attaining the best fitness; nullopt when nothing was feasible.
  std::optional<std::size_t> best_index() const;
  std::vector<double> best_so_far() const;

 private:
  void update_bracket();

  std::vector<TraceEntry> entries_;
  std::optional<double> a_left_;
  std::optional<double> a_right_;
};

}  // namespace qross
