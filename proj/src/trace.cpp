#include "qross/trace.hpp"

#include <algorithm>
#include <map>

namespace qross {

void TuningTrace::append(const BatchStats& stats, std::string origin) {
  TraceEntry e;
  e.a_norm = stats.a_norm;
  e.stats = stats;
  e.origin = std::move(origin);
  const double prev = entries_.empty() ? std::numeric_limits<double>::infinity()
                                       : entries_.back().best_so_far;
  e.best_so_far = std::min(prev, e.objective());
  entries_.push_back(std::move(e));
  update_bracket();
}

void TuningTrace::update_bracket() {
  std::map<double, double> latest;  // a_norm -> most recent p_f
  for (const auto& e : entries_) latest[e.a_norm] = e.stats.p_f;
  a_left_.reset();
  a_right_.reset();
  for (const auto& [a, p] : latest) {
    if (p == 0.0) a_left_ = a;  // ascending order: keeps the largest
    if (p == 1.0 && !a_right_) a_right_ = a;
  }
}

double TuningTrace::best_fitness() const {
  return entries_.empty() ? std::numeric_limits<double>::infinity() : entries_.back().best_so_far;
}

std::optional<std::size_t> TuningTrace::best_index() const {
  std::optional<std::size_t> best;
  for (std::size_t k = 0; k < entries_.size(); ++k) {
    if (entries_[k].stats.best_fitness &&
        (!best || entries_[k].objective() < entries_[*best].objective())) {
      best = k;
    }
  }
  return best;
}

std::vector<double> TuningTrace::best_so_far() const {
  std::vector<double> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.best_so_far);
  return out;
}

}  // namespace qross
