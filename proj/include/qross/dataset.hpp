#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "qross/annealer.hpp"
#include "qross/tsp.hpp"

namespace qross {

// Summary of one solver call (B replicas) on objective + a_raw * penalty.
struct BatchStats {
  std::string instance_id;
  double a_raw = 0.0;
  double a_norm = 0.0;
  std::size_t batch_size = 0;
  double p_f = 0.0;
  // Mean and population std of all B composite energies, feasible or not.
  double e_avg = 0.0;
  double e_std = 0.0;
  // Shortest feasible tour under dist_original; absent iff p_f == 0.
  std::optional<double> best_fitness;

  bool operator==(const BatchStats&) const = default;
};

BatchStats batch_stats(const SolveBatch& batch, const TspEncoding& encoding,
                       const TspInstance& instance, double a_raw);

// Binds an instance to a solver: evaluate(a) composes the QUBO at raw A,
// solves it and summarises the batch. Every call is one solver call; the
// per-call seed is derived from (seed, call index).
class Evaluator {
 public:
  Evaluator(const TspInstance& instance, const QuboSolver& solver, std::size_t batch_size,
            std::uint64_t seed);

  BatchStats evaluate(double a_raw);
  BatchStats evaluate_norm(double a_norm) { return evaluate(a_norm * scale_); }

  const TspInstance& instance() const { return instance_; }
  const TspEncoding& encoding() const { return encoding_; }
  double scale() const { return scale_; }
  std::size_t batch_size() const { return batch_size_; }
  std::size_t calls() const { return calls_; }

 private:
  const TspInstance& instance_;
  const QuboSolver& solver_;
  TspEncoding encoding_;
  double scale_;
  std::size_t batch_size_;
  std::uint64_t seed_;
  std::size_t calls_ = 0;
};

using EvaluateFn = std::function<BatchStats(double a_raw)>;

struct SlopeBracket {
  double a_low = 0.0;   // last probe with p_f == 0
  double a_high = 0.0;  // last probe with p_f == 1
};

struct GridSample {
  std::vector<BatchStats> records;  // bracketing probes first, then the budget
  SlopeBracket bracket;
  std::size_t bracket_probes = 0;
};

// Brackets the P_f transition by halving/doubling from a0, then spends
// `budget` evaluations: 60% log-uniform inside the bracket, 20% below it and
// 20% above it (each side spanning a factor of 8).
GridSample sample_a_grid(const EvaluateFn& evaluate, double a0, std::size_t budget);
GridSample sample_a_grid(Evaluator& evaluator, std::size_t budget);

enum class Split { Train, Test };

struct DatasetRecord {
  BatchStats stats;
  std::vector<double> features;
  Split split = Split::Train;

  bool operator==(const DatasetRecord&) const = default;
};

// Corpus rows for one instance: the `budget` samples of sample_a_grid (the
// bracketing probes are not kept), each with its feature vector.
std::vector<DatasetRecord> instance_records(Evaluator& evaluator, Split split, std::size_t budget);

inline constexpr int kCorpusSchema = 1;

// Throws ValidationError naming the violated invariant.
void validate_record(const DatasetRecord& record);

nlohmann::json record_to_json(const DatasetRecord& record);
DatasetRecord record_from_json(const nlohmann::json& j);

// JSONL: header line {"schema": 1}, then one record per line.
void write_corpus(const std::vector<DatasetRecord>& records, const std::filesystem::path& path);
std::vector<DatasetRecord> read_corpus(const std::filesystem::path& path);

}  // namespace qross
