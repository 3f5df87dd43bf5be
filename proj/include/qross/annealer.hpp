#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>

#include "json.hpp"

#include "qross/qubo.hpp"

namespace qross {

// Black-box batch QUBO solver. Implementations must return exactly
// batch_size solutions and be a pure function of (model, batch_size, seed).
class QuboSolver {
 public:
  virtual ~QuboSolver() = default;
  virtual SolveBatch solve(const QuboModel& model, std::size_t batch_size,
                           std::uint64_t seed) const = 0;
};

struct AnnealConfig {
  std::size_t batch_size = 128;
  std::size_t sweeps = 2000;
  // Unset temperatures are derived per model: t_initial = max |dE| seen on a
  // random probe walk, t_final = 1e-3 * t_initial.
  std::optional<double> t_initial;
  std::optional<double> t_final;
  std::uint64_t seed = 0;
  // Replicas are distributed over this many threads; results do not depend on it.
  unsigned threads = 1;

  void validate() const;
};

AnnealConfig anneal_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const AnnealConfig& config);

// Single-bit-flip Metropolis annealing with a geometric schedule. Each
// replica starts from a random state and reports the best state it visited.
class SimulatedAnnealer final : public QuboSolver {
 public:
  explicit SimulatedAnnealer(AnnealConfig config = {});

  const AnnealConfig& config() const { return config_; }

  SolveBatch solve(const QuboModel& model, std::size_t batch_size,
                   std::uint64_t seed) const override;

 private:
  AnnealConfig config_;
};

// Uses config.batch_size and config.seed.
SolveBatch solve(const QuboModel& model, const AnnealConfig& config);

// Automatic starting temperature for a model (see AnnealConfig).
double probe_initial_temperature(const CompiledQubo& model, std::uint64_t seed);

}  // namespace qross
