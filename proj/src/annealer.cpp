#include "qross/annealer.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <thread>
#include <vector>

#include "qross/error.hpp"

namespace qross {

namespace {

std::mt19937_64 replica_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

constexpr std::uint64_t kProbeStream = ~std::uint64_t{0};

struct Schedule {
  double t_initial;
  double t_final;
  std::size_t sweeps;

  double at(std::size_t sweep) const {
    if (sweeps == 1) return t_final;
    const double frac = static_cast<double>(sweep) / static_cast<double>(sweeps - 1);
    return t_initial * std::pow(t_final / t_initial, frac);
  }
};

BinarySolution anneal_replica(const QuboModel& model, const CompiledQubo& compiled,
                              const Schedule& schedule, std::mt19937_64 rng) {
  const std::size_t n = compiled.n_vars();
  auto unit = [](std::mt19937_64& g) { return static_cast<double>(g() >> 11) * 0x1.0p-53; };

  Bits bits(n);
  for (auto& b : bits) b = static_cast<std::uint8_t>(rng() & 1U);
  std::vector<double> field(n);
  for (std::size_t i = 0; i < n; ++i) field[i] = compiled.local_field(bits, i);
  double current = compiled.energy(bits);
  double best = current;
  Bits best_bits = bits;

  for (std::size_t s = 0; s < schedule.sweeps; ++s) {
    const double beta = 1.0 / schedule.at(s);
    for (std::size_t i = 0; i < n; ++i) {
      const double delta = bits[i] ? -field[i] : field[i];
      if (delta > 0.0) {
        const double x = delta * beta;
        if (x > 40.0 || unit(rng) >= std::exp(-x)) continue;
      }
      bits[i] ^= 1U;
      current += delta;
      const double sign = bits[i] ? 1.0 : -1.0;
      const auto idx = compiled.neighbors(i);
      const auto w = compiled.couplings(i);
      for (std::size_t k = 0; k < idx.size(); ++k) field[idx[k]] += sign * w[k];
    }
    if (current < best) {
      best = current;
      best_bits = bits;
    }
  }
  // Stored energies are recomputed so they match energy(bits) exactly.
  const double e = model.energy(best_bits);
  return {std::move(best_bits), e};
}

}  // namespace

void AnnealConfig::validate() const {
  if (batch_size < 1) throw ValidationError("anneal config: batch_size must be >= 1");
  if (sweeps < 1) throw ValidationError("anneal config: sweeps must be >= 1");
  if (threads < 1) throw ValidationError("anneal config: threads must be >= 1");
  if (t_initial && !(*t_initial > 0.0)) throw ValidationError("anneal config: t_initial must be > 0");
  if (t_final && !(*t_final > 0.0)) throw ValidationError("anneal config: t_final must be > 0");
  if (t_initial && t_final && !(*t_initial > *t_final)) {
    throw ValidationError("anneal config: t_initial must exceed t_final");
  }
}

AnnealConfig anneal_config_from_json(const nlohmann::json& j) {
  AnnealConfig c;
  try {
    if (j.contains("batch_size")) c.batch_size = j.at("batch_size").get<std::size_t>();
    if (j.contains("sweeps")) c.sweeps = j.at("sweeps").get<std::size_t>();
    if (j.contains("t_initial") && !j.at("t_initial").is_null()) c.t_initial = j.at("t_initial").get<double>();
    if (j.contains("t_final") && !j.at("t_final").is_null()) c.t_final = j.at("t_final").get<double>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("threads")) c.threads = j.at("threads").get<unsigned>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("solver config: ") + e.what());
  }
  c.validate();
  return c;
}

nlohmann::json to_json(const AnnealConfig& c) {
  nlohmann::json j;
  j["batch_size"] = c.batch_size;
  j["sweeps"] = c.sweeps;
  j["t_initial"] = c.t_initial ? nlohmann::json(*c.t_initial) : nlohmann::json(nullptr);
  j["t_final"] = c.t_final ? nlohmann::json(*c.t_final) : nlohmann::json(nullptr);
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  return j;
}

double probe_initial_temperature(const CompiledQubo& model, std::uint64_t seed) {
  const std::size_t n = model.n_vars();
  auto rng = replica_rng(seed, kProbeStream);
  Bits bits(n);
  for (auto& b : bits) b = static_cast<std::uint8_t>(rng() & 1U);
  std::vector<double> field(n);
  for (std::size_t i = 0; i < n; ++i) field[i] = model.local_field(bits, i);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  double max_delta = 0.0;
  for (std::size_t step = 0; step < 4 * n; ++step) {
    const std::size_t i = pick(rng);
    const double delta = bits[i] ? -field[i] : field[i];
    max_delta = std::max(max_delta, std::abs(delta));
    bits[i] ^= 1U;
    const double sign = bits[i] ? 1.0 : -1.0;
    const auto idx = model.neighbors(i);
    const auto w = model.couplings(i);
    for (std::size_t k = 0; k < idx.size(); ++k) field[idx[k]] += sign * w[k];
  }
  return max_delta > 0.0 ? max_delta : 1.0;
}

SimulatedAnnealer::SimulatedAnnealer(AnnealConfig config) : config_(std::move(config)) {
  config_.validate();
}

SolveBatch SimulatedAnnealer::solve(const QuboModel& model, std::size_t batch_size,
                                    std::uint64_t seed) const {
  if (batch_size < 1) throw ValidationError("batch_size must be >= 1");
  const CompiledQubo compiled(model);
  Schedule schedule{0.0, 0.0, config_.sweeps};
  schedule.t_initial = config_.t_initial.value_or(probe_initial_temperature(compiled, seed));
  schedule.t_final = config_.t_final.value_or(1e-3 * schedule.t_initial);
  if (!(schedule.t_initial > schedule.t_final)) {
    throw ValidationError("anneal schedule: t_initial must exceed t_final");
  }

  SolveBatch batch;
  batch.solutions.resize(batch_size);
  auto run_range = [&](std::size_t begin, std::size_t end) {
    for (std::size_t r = begin; r < end; ++r) {
      batch.solutions[r] = anneal_replica(model, compiled, schedule, replica_rng(seed, r));
    }
  };

  const std::size_t n_threads = std::min<std::size_t>(config_.threads, batch_size);
  if (n_threads <= 1) {
    run_range(0, batch_size);
  } else {
    std::vector<std::jthread> workers;
    const std::size_t chunk = (batch_size + n_threads - 1) / n_threads;
    for (std::size_t t = 0; t < n_threads; ++t) {
      const std::size_t begin = t * chunk;
      const std::size_t end = std::min(batch_size, begin + chunk);
      if (begin < end) workers.emplace_back(run_range, begin, end);
    }
  }
  return batch;
}

SolveBatch solve(const QuboModel& model, const AnnealConfig& config) {
  return SimulatedAnnealer(config).solve(model, config.batch_size, config.seed);
}

}  // namespace qross
