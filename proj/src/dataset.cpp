#include "qross/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "qross/error.hpp"
#include "qross/features.hpp"
#include "qross/stats.hpp"

namespace qross {

namespace {

constexpr std::size_t kMaxBracketSteps = 16;

std::uint64_t call_seed(std::uint64_t seed, std::size_t call) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(call), 0x51ed27u};
  std::uint32_t words[2];
  seq.generate(words, words + 2);
  return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

// n points evenly spaced in log space strictly inside (lo, hi).
std::vector<double> log_interior(double lo, double hi, std::size_t n) {
  std::vector<double> out;
  const double llo = std::log(lo);
  const double lhi = std::log(hi);
  for (std::size_t k = 1; k <= n; ++k) {
    out.push_back(std::exp(llo + (lhi - llo) * static_cast<double>(k) / static_cast<double>(n + 1)));
  }
  return out;
}

}  // namespace

BatchStats batch_stats(const SolveBatch& batch, const TspEncoding& encoding,
                       const TspInstance& instance, double a_raw) {
  if (batch.solutions.empty()) throw ValidationError("batch_stats: empty batch");
  BatchStats s;
  s.instance_id = instance.name;
  s.a_raw = a_raw;
  s.a_norm = a_raw / solver_distance_scale(instance);
  s.batch_size = batch.batch_size();
  std::vector<double> energies;
  energies.reserve(batch.batch_size());
  std::size_t feasible = 0;
  for (const auto& sol : batch.solutions) {
    energies.push_back(sol.energy);
    if (auto fit = decode_and_score(encoding, instance, sol.bits)) {
      ++feasible;
      if (!s.best_fitness || *fit < *s.best_fitness) s.best_fitness = fit;
    }
  }
  s.p_f = static_cast<double>(feasible) / static_cast<double>(batch.batch_size());
  s.e_avg = stats::mean(energies);
  s.e_std = stats::population_std(energies);
  return s;
}

Evaluator::Evaluator(const TspInstance& instance, const QuboSolver& solver, std::size_t batch_size,
                     std::uint64_t seed)
    : instance_(instance),
      solver_(solver),
      encoding_(encode_tsp(instance)),
      scale_(solver_distance_scale(instance)),
      batch_size_(batch_size),
      seed_(seed) {
  if (batch_size == 0) throw ValidationError("batch_size must be >= 1");
}

BatchStats Evaluator::evaluate(double a_raw) {
  if (!(a_raw > 0.0) || !std::isfinite(a_raw)) throw ValidationError("A must be positive and finite");
  const auto model = encoding_.compose(a_raw);
  const auto batch = solver_.solve(model, batch_size_, call_seed(seed_, calls_));
  ++calls_;
  return batch_stats(batch, encoding_, instance_, a_raw);
}

GridSample sample_a_grid(const EvaluateFn& evaluate, double a0, std::size_t budget) {
  if (budget < 12) throw ValidationError("sample_a_grid: budget must be >= 12");
  if (!(a0 > 0.0)) throw ValidationError("sample_a_grid: initial A must be positive");
  GridSample out;
  auto probe = [&](double a) {
    out.records.push_back(evaluate(a));
    ++out.bracket_probes;
    return out.records.back().p_f;
  };

  const double p0 = probe(a0);
  double low = a0;
  double high = a0;
  double p_low = p0;
  double p_high = p0;
  for (std::size_t k = 0; p_low > 0.0 && k < kMaxBracketSteps; ++k) p_low = probe(low /= 2.0);
  for (std::size_t k = 0; p_high < 1.0 && k < kMaxBracketSteps; ++k) p_high = probe(high *= 2.0);
  if (p_low > 0.0 || p_high < 1.0) {
    throw Error("sample_a_grid: could not bracket the feasibility transition");
  }
  out.bracket = {low, high};

  const auto inside = static_cast<std::size_t>(std::lround(0.6 * static_cast<double>(budget)));
  const std::size_t below = (budget - inside) / 2;
  const std::size_t above = budget - inside - below;
  std::vector<double> grid = log_interior(low, high, inside);
  for (double a : log_interior(low / 8.0, low, below)) grid.push_back(a);
  for (double a : log_interior(high, high * 8.0, above)) grid.push_back(a);
  for (double a : grid) out.records.push_back(evaluate(a));
  return out;
}

GridSample sample_a_grid(Evaluator& evaluator, std::size_t budget) {
  const double a0 = mean_off_diagonal(evaluator.instance().dist_original);
  return sample_a_grid([&](double a) { return evaluator.evaluate(a); }, a0, budget);
}

void validate_record(const DatasetRecord& r) {
  const auto& s = r.stats;
  auto fail = [&](const std::string& what) {
    throw ValidationError("record '" + s.instance_id + "': " + what);
  };
  if (!(s.p_f >= 0.0 && s.p_f <= 1.0)) fail("p_f must lie in [0, 1]");
  if (s.p_f == 0.0 && s.best_fitness) fail("best_fitness must be absent when p_f == 0");
  if (s.p_f > 0.0 && !s.best_fitness) fail("best_fitness must be present when p_f > 0");
  if (!(s.e_std >= 0.0)) fail("e_std must be non-negative");
  if (!std::isfinite(s.e_avg) || !std::isfinite(s.e_std)) fail("energy statistics must be finite");
  if (!(s.a_raw > 0.0) || !(s.a_norm > 0.0)) fail("A must be positive");
  if (s.batch_size == 0) fail("batch_size must be >= 1");
  const double count = s.p_f * static_cast<double>(s.batch_size);
  if (std::abs(count - std::round(count)) > 1e-9 * static_cast<double>(s.batch_size)) {
    fail("p_f * batch_size must be an integer count");
  }
  for (double f : r.features) {
    if (!std::isfinite(f)) fail("feature vector has non-finite entries");
  }
}

nlohmann::json record_to_json(const DatasetRecord& r) {
  const auto& s = r.stats;
  nlohmann::json j;
  j["instance_id"] = s.instance_id;
  j["a_raw"] = s.a_raw;
  j["a_norm"] = s.a_norm;
  j["batch_size"] = s.batch_size;
  j["p_f"] = s.p_f;
  j["e_avg"] = s.e_avg;
  j["e_std"] = s.e_std;
  j["best_fitness"] = s.best_fitness ? nlohmann::json(*s.best_fitness) : nlohmann::json(nullptr);
  j["features"] = r.features;
  j["split"] = r.split == Split::Train ? "train" : "test";
  return j;
}

DatasetRecord record_from_json(const nlohmann::json& j) {
  DatasetRecord r;
  auto& s = r.stats;
  s.instance_id = j.at("instance_id").get<std::string>();
  s.a_raw = j.at("a_raw").get<double>();
  s.a_norm = j.at("a_norm").get<double>();
  s.batch_size = j.at("batch_size").get<std::size_t>();
  s.p_f = j.at("p_f").get<double>();
  s.e_avg = j.at("e_avg").get<double>();
  s.e_std = j.at("e_std").get<double>();
  if (!j.at("best_fitness").is_null()) s.best_fitness = j.at("best_fitness").get<double>();
  r.features = j.at("features").get<std::vector<double>>();
  const auto split = j.at("split").get<std::string>();
  if (split == "train") {
    r.split = Split::Train;
  } else if (split == "test") {
    r.split = Split::Test;
  } else {
    throw ValidationError("unknown split '" + split + "'");
  }
  validate_record(r);
  return r;
}

void write_corpus(const std::vector<DatasetRecord>& records, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << nlohmann::json{{"schema", kCorpusSchema}}.dump() << '\n';
  for (const auto& r : records) {
    validate_record(r);
    out << record_to_json(r).dump() << '\n';
  }
  if (!out) throw Error("write to " + path.string() + " failed");
}

std::vector<DatasetRecord> read_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open corpus " + path.string());
  std::vector<DatasetRecord> records;
  std::string line;
  std::size_t line_no = 0;
  bool saw_header = false;
  std::optional<std::size_t> feature_len;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto where = [&] { return path.string() + ":" + std::to_string(line_no) + ": "; };
    try {
      const auto j = nlohmann::json::parse(line);
      if (!saw_header && j.contains("schema")) {
        if (j.at("schema").get<int>() != kCorpusSchema) {
          throw VersionError(where() + "unsupported corpus schema " + j.at("schema").dump());
        }
        saw_header = true;
        continue;
      }
      auto r = record_from_json(j);
      if (feature_len && r.features.size() != *feature_len) {
        throw ValidationError("feature vector length differs from earlier records");
      }
      feature_len = r.features.size();
      records.push_back(std::move(r));
    } catch (const VersionError&) {
      throw;
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(where() + e.what());
    } catch (const ValidationError& e) {
      throw ValidationError(where() + e.what());
    }
  }
  return records;
}

std::vector<DatasetRecord> instance_records(Evaluator& evaluator, Split split, std::size_t budget) {
  const auto sample = sample_a_grid(evaluator, budget);
  std::vector<DatasetRecord> out;
  for (std::size_t k = sample.bracket_probes; k < sample.records.size(); ++k) {
    const auto& st = sample.records[k];
    out.push_back({st, extract_features(evaluator.instance(), st.a_norm), split});
  }
  return out;
}

}  // namespace qross
