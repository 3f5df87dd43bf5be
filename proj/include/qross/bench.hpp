#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <optional>
#include <string>
#include <vector>

#include "qross/annealer.hpp"
#include "qross/baselines.hpp"
#include "qross/dataset.hpp"
#include "qross/strategies.hpp"
#include "qross/surrogate.hpp"
#include "qross/trace.hpp"
#include "qross/tsp.hpp"

namespace qross {

// Stable 64-bit seed from a tuple of integers.
std::uint64_t derive_seed(std::initializer_list<std::uint64_t> parts);

enum class CoordDistribution { Uniform, Exponential };

struct GenConfig {
  std::size_t n_instances = 10;
  std::size_t n_min = 10;
  std::size_t n_max = 15;
  CoordDistribution kind = CoordDistribution::Uniform;
  double side = 100.0;  // uniform: coordinates in [0, side)^2
  double rate_lo = 0.01;  // exponential: rate ~ U(rate_lo, rate_hi) per instance
  double rate_hi = 0.1;
  double train_ratio = 0.9;
  std::uint64_t seed = 0;

  void validate() const;
};

struct GeneratedInstance {
  TspInstance instance;
  Split split = Split::Train;
};

// The first round(train_ratio * n) instances are Train, the rest Test.
std::vector<GeneratedInstance> generate_instances(const GenConfig& config);

// Writes <dir>/train/<name>.json and <dir>/test/<name>.json; returns the paths.
std::vector<std::filesystem::path> write_instances(const std::vector<GeneratedInstance>& instances,
                                                   const std::filesystem::path& dir);

// Reads every *.json instance in `dir` (sorted by file name).
std::vector<TspInstance> read_instance_dir(const std::filesystem::path& dir);

// (best - reference) / reference, clamped at 0. A run with no feasible
// solution yet scores kInfeasibleGap.
inline constexpr double kInfeasibleGap = 1.0;
double normalized_gap(double best_so_far, double reference);

// Exact optimum by enumeration (city 0 fixed, reflections skipped); n <= 11.
double brute_force_tour_length(const SquareMatrix& dist);

// Log-spaced sweep of raw A over [a_lo, a_hi]; one solver call per point.
std::vector<BatchStats> sweep_a(Evaluator& evaluator, double a_lo, double a_hi, std::size_t points);

struct GapCurve {
  std::string method;
  std::vector<double> mean_gap;
  std::vector<double> ci95_half_width;
  std::size_t n_instances = 0;

  bool operator==(const GapCurve&) const = default;
};

struct BenchConfig {
  // Any of: qross, ofs, random, tpe, gp-bo.
  std::vector<std::string> methods{"qross", "random", "tpe", "gp-bo"};
  std::size_t max_trials = 20;
  std::size_t n_seeds = 3;
  std::uint64_t seed = 0;
  AnnealConfig solver;
  TunerConfig tuner;  // raw-A range and n_init for the generic tuners
  ComposedOptions qross;
  std::optional<SurrogatePair> model;  // required by qross
  std::size_t reference_sweep_points = 64;
  std::size_t brute_force_max_n = 10;
  unsigned threads = 1;

  void validate() const;
};

struct RunRecord {
  std::string method;
  std::size_t instance = 0;
  std::size_t seed_index = 0;
  TuningTrace trace;
};

struct ReferenceRecord {
  std::string instance;
  std::size_t n_cities = 0;
  double reference = 0.0;
  double sweep_best = 0.0;  // +inf when the sweep found nothing feasible
  std::optional<double> brute_force;
  double methods_best = 0.0;
};

struct BenchResult {
  std::vector<GapCurve> curves;
  std::vector<ReferenceRecord> references;
  std::vector<RunRecord> runs;
};

// One tuning run of `method` on an instance; seeds depend on
// (config.seed, seed_index, instance_index) and not on the method.
TuningTrace run_method(const std::string& method, const TspInstance& instance,
                       std::size_t instance_index, std::size_t seed_index, const BenchConfig& config);

BenchResult run_benchmark(const std::vector<TspInstance>& instances, const BenchConfig& config);

// Per trial: per-instance mean over seeds, then mean and 1.96 * stderr over instances.
std::vector<GapCurve> aggregate_curves(const std::vector<RunRecord>& runs,
                                       const std::vector<double>& references,
                                       const std::vector<std::string>& methods, std::size_t max_trials);

std::string format_real(double v);

// CSV writers; all use a header row, ',' separators and '.' decimals.
void write_gap_curves_csv(const std::vector<GapCurve>& curves, const std::filesystem::path& path);
void write_summary_csv(const std::vector<GapCurve>& curves, const std::filesystem::path& path);
void write_references_csv(const std::vector<ReferenceRecord>& refs, const std::filesystem::path& path);
void write_runs_csv(const BenchResult& result, const std::vector<TspInstance>& instances,
                    const std::filesystem::path& path);
void write_sweep_csv(const std::vector<BatchStats>& sweep, const std::filesystem::path& path);

std::vector<GapCurve> read_gap_curves_csv(const std::filesystem::path& path);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const;
};
CsvTable read_csv(const std::filesystem::path& path);

}  // namespace qross
