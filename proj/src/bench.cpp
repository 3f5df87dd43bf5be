#include "qross/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include "qross/error.hpp"
#include "qross/stats.hpp"

namespace qross {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

const std::vector<std::string>& known_methods() {
  static const std::vector<std::string> m{"qross", "ofs", "random", "tpe", "gp-bo"};
  return m;
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  return out;
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_real(const std::string& s, const std::string& where) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) throw ParseError(where + ": not a number: '" + s + "'");
  return v;
}

}  // namespace

std::uint64_t derive_seed(std::initializer_list<std::uint64_t> parts) {
  std::vector<std::uint32_t> words;
  for (auto p : parts) {
    words.push_back(static_cast<std::uint32_t>(p));
    words.push_back(static_cast<std::uint32_t>(p >> 32));
  }
  std::seed_seq seq(words.begin(), words.end());
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
}

void GenConfig::validate() const {
  if (n_instances < 1) throw ValidationError("gen: need at least one instance");
  if (n_min < 3 || n_max < n_min) throw ValidationError("gen: city range must satisfy 3 <= min <= max");
  if (!(side > 0.0)) throw ValidationError("gen: square side must be > 0");
  if (!(rate_lo > 0.0 && rate_hi >= rate_lo)) throw ValidationError("gen: exponential rate range invalid");
  if (!(train_ratio >= 0.0 && train_ratio <= 1.0)) throw ValidationError("gen: train ratio must lie in [0, 1]");
}

std::vector<GeneratedInstance> generate_instances(const GenConfig& config) {
  config.validate();
  const auto n_train = static_cast<std::size_t>(
      std::llround(config.train_ratio * static_cast<double>(config.n_instances)));
  const int width = static_cast<int>(std::to_string(config.n_instances - 1).size());
  std::vector<GeneratedInstance> out;
  for (std::size_t k = 0; k < config.n_instances; ++k) {
    std::mt19937_64 rng(derive_seed({config.seed, k}));
    std::uniform_int_distribution<std::size_t> size(config.n_min, config.n_max);
    const std::size_t n = size(rng);
    std::vector<Point> pts(n);
    if (config.kind == CoordDistribution::Uniform) {
      std::uniform_real_distribution<double> u(0.0, config.side);
      for (auto& p : pts) p = {u(rng), u(rng)};
    } else {
      const double rate = std::uniform_real_distribution<double>(config.rate_lo, config.rate_hi)(rng);
      std::exponential_distribution<double> e(rate);
      for (auto& p : pts) p = {e(rng), e(rng)};
    }
    char name[64];
    std::snprintf(name, sizeof name, "%s_%0*zu",
                  config.kind == CoordDistribution::Uniform ? "uni" : "exp", width, k);
    out.push_back({make_euclidean_instance(name, std::move(pts)), k < n_train ? Split::Train : Split::Test});
  }
  return out;
}

std::vector<std::filesystem::path> write_instances(const std::vector<GeneratedInstance>& instances,
                                                   const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> paths;
  for (const auto& g : instances) {
    const auto sub = dir / (g.split == Split::Train ? "train" : "test");
    std::filesystem::create_directories(sub);
    paths.push_back(sub / (g.instance.name + ".json"));
    write_instance(g.instance, paths.back());
  }
  return paths;
}

std::vector<TspInstance> read_instance_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw ValidationError("not a directory: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<TspInstance> out;
  for (const auto& f : files) out.push_back(read_instance(f));
  return out;
}

double normalized_gap(double best_so_far, double reference) {
  if (!(reference > 0.0) || !std::isfinite(reference)) {
    throw ValidationError("normalized gap needs a finite reference > 0");
  }
  if (!std::isfinite(best_so_far)) return kInfeasibleGap;
  if (best_so_far < reference * (1.0 - 1e-9)) {
    throw ValidationError("best fitness lies below the reference; the reference is not a lower bound");
  }
  return std::max(0.0, (best_so_far - reference) / reference);
}

double brute_force_tour_length(const SquareMatrix& dist) {
  const std::size_t n = dist.size();
  if (n < 3) throw DegenerateInstanceError("tour enumeration needs n >= 3");
  if (n > 11) throw ValidationError("tour enumeration is limited to n <= 11");
  std::vector<std::size_t> rest(n - 1);
  std::iota(rest.begin(), rest.end(), 1);
  double best = kInf;
  do {
    if (rest.front() > rest.back()) continue;  // each reflection once
    double len = dist(0, rest.front()) + dist(rest.back(), 0);
    for (std::size_t k = 0; k + 1 < rest.size(); ++k) len += dist(rest[k], rest[k + 1]);
    best = std::min(best, len);
  } while (std::next_permutation(rest.begin(), rest.end()));
  return best;
}

std::vector<BatchStats> sweep_a(Evaluator& evaluator, double a_lo, double a_hi, std::size_t points) {
  if (!(a_lo > 0.0 && a_hi > a_lo)) throw ValidationError("sweep range must satisfy 0 < lo < hi");
  if (points < 2) throw ValidationError("sweep needs at least 2 points");
  std::vector<BatchStats> out;
  for (std::size_t k = 0; k < points; ++k) {
    const double t = static_cast<double>(k) / static_cast<double>(points - 1);
    out.push_back(evaluator.evaluate(std::exp(std::log(a_lo) + t * (std::log(a_hi) - std::log(a_lo)))));
  }
  return out;
}

void BenchConfig::validate() const {
  if (methods.empty()) throw ValidationError("bench: no methods given");
  for (const auto& m : methods) {
    if (std::find(known_methods().begin(), known_methods().end(), m) == known_methods().end()) {
      throw ValidationError("bench: unknown method '" + m + "' (expected qross, ofs, random, tpe or gp-bo)");
    }
    if (m == "qross" && !model) {
      throw ValidationError("bench: method 'qross' needs a trained surrogate; pass --model <file> "
                            "(build one with the corpus and train subcommands)");
    }
  }
  if (max_trials < 3) throw ValidationError("bench: max_trials must be >= 3");
  if (n_seeds < 1) throw ValidationError("bench: need at least one seed");
  if (threads < 1) throw ValidationError("bench: threads must be >= 1");
  solver.validate();
  TunerConfig t = tuner;
  t.max_trials = max_trials;
  t.validate();
}

TuningTrace run_method(const std::string& method, const TspInstance& instance,
                       std::size_t instance_index, std::size_t seed_index, const BenchConfig& config) {
  const std::uint64_t eval_seed = derive_seed({config.seed, seed_index, instance_index, 1});
  const std::uint64_t tuner_seed = derive_seed({config.seed, seed_index, instance_index, 2});
  const SimulatedAnnealer solver(config.solver);
  Evaluator evaluator(instance, solver, config.solver.batch_size, eval_seed);
  auto eval_norm = [&](double a) { return evaluator.evaluate_norm(a); };
  auto eval_raw = [&](double a) { return evaluator.evaluate(a); };
  std::mt19937_64 rng(tuner_seed);

  if (method == "qross") {
    if (!config.model) throw ValidationError("qross needs a trained surrogate model");
    const InstanceSurrogate view(*config.model, instance);
    ComposedOptions opts = config.qross;
    opts.batch_size = config.solver.batch_size;
    return composed_strategy(view, eval_norm, config.max_trials, rng, opts);
  }
  if (method == "ofs") {
    const double a0 = mean_off_diagonal(instance.dist_original) / evaluator.scale();
    return run_ofs(eval_norm, a0, config.max_trials, rng, config.qross.ofs);
  }
  TunerConfig tc = config.tuner;
  tc.seed = tuner_seed;
  tc.max_trials = config.max_trials;
  if (method == "random") return random_search(tc, eval_raw);
  if (method == "tpe") return run_tpe(tc, eval_raw);
  if (method == "gp-bo") return run_gp_bo(tc, eval_raw);
  throw ValidationError("unknown method '" + method + "'");
}

BenchResult run_benchmark(const std::vector<TspInstance>& instances, const BenchConfig& config) {
  config.validate();
  if (instances.empty()) throw ValidationError("bench: no instances");
  const std::size_t n_methods = config.methods.size();
  const std::size_t n_inst = instances.size();

  std::vector<RunRecord> runs(n_methods * n_inst * config.n_seeds);
  std::vector<double> sweep_best(n_inst, kInf);
  std::vector<std::optional<double>> brute(n_inst);

  // Tasks: one per (method, instance) running all seeds, then one reference
  // task per instance. Results go to fixed slots.
  const std::size_t n_tasks = n_methods * n_inst + n_inst;
  auto run_task = [&](std::size_t task) {
    if (task < n_methods * n_inst) {
      const std::size_t m = task / n_inst;
      const std::size_t i = task % n_inst;
      for (std::size_t s = 0; s < config.n_seeds; ++s) {
        auto& r = runs[task * config.n_seeds + s];
        r.method = config.methods[m];
        r.instance = i;
        r.seed_index = s;
        r.trace = run_method(r.method, instances[i], i, s, config);
      }
      return;
    }
    const std::size_t i = task - n_methods * n_inst;
    const SimulatedAnnealer solver(config.solver);
    Evaluator ev(instances[i], solver, config.solver.batch_size, derive_seed({config.seed, i, 3}));
    for (const auto& st : sweep_a(ev, config.qross.range.lo * ev.scale(), config.qross.range.hi * ev.scale(),
                                  config.reference_sweep_points)) {
      if (st.best_fitness) sweep_best[i] = std::min(sweep_best[i], *st.best_fitness);
    }
    if (instances[i].n_cities <= config.brute_force_max_n) {
      brute[i] = brute_force_tour_length(instances[i].dist_original);
    }
  };

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t t = next++; t < n_tasks; t = next++) {
      try {
        run_task(t);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = n_tasks;
      }
    }
  };
  if (config.threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < config.threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  BenchResult result;
  std::vector<double> refs(n_inst);
  for (std::size_t i = 0; i < n_inst; ++i) {
    ReferenceRecord rec;
    rec.instance = instances[i].name;
    rec.n_cities = instances[i].n_cities;
    rec.sweep_best = sweep_best[i];
    rec.brute_force = brute[i];
    rec.methods_best = kInf;
    for (const auto& r : runs) {
      if (r.instance == i) rec.methods_best = std::min(rec.methods_best, r.trace.best_fitness());
    }
    rec.reference = std::min({rec.sweep_best, rec.methods_best, brute[i].value_or(kInf)});
    if (!std::isfinite(rec.reference)) {
      throw NumericalError("no feasible tour found for instance '" + rec.instance +
                           "'; widen the A range or raise the sweep count");
    }
    refs[i] = rec.reference;
    result.references.push_back(rec);
  }
  result.curves = aggregate_curves(runs, refs, config.methods, config.max_trials);
  result.runs = std::move(runs);
  return result;
}

std::vector<GapCurve> aggregate_curves(const std::vector<RunRecord>& runs,
                                       const std::vector<double>& references,
                                       const std::vector<std::string>& methods, std::size_t max_trials) {
  const std::size_t n_inst = references.size();
  std::vector<GapCurve> curves;
  for (const auto& method : methods) {
    // sums[i][t], counts[i]
    std::vector<std::vector<double>> sums(n_inst, std::vector<double>(max_trials, 0.0));
    std::vector<std::size_t> counts(n_inst, 0);
    for (const auto& r : runs) {
      if (r.method != method) continue;
      if (r.trace.size() != max_trials) throw NumericalError("run trace length differs from max_trials");
      const auto best = r.trace.best_so_far();
      for (std::size_t t = 0; t < max_trials; ++t) sums[r.instance][t] += normalized_gap(best[t], references[r.instance]);
      ++counts[r.instance];
    }
    GapCurve c;
    c.method = method;
    for (std::size_t i = 0; i < n_inst; ++i) c.n_instances += counts[i] > 0 ? 1 : 0;
    for (std::size_t t = 0; t < max_trials; ++t) {
      std::vector<double> per_instance;
      for (std::size_t i = 0; i < n_inst; ++i) {
        if (counts[i] > 0) per_instance.push_back(sums[i][t] / static_cast<double>(counts[i]));
      }
      if (per_instance.empty()) throw ValidationError("no runs recorded for method '" + method + "'");
      c.mean_gap.push_back(stats::mean(per_instance));
      const double n = static_cast<double>(per_instance.size());
      c.ci95_half_width.push_back(per_instance.size() > 1 ? 1.96 * stats::sample_std(per_instance) / std::sqrt(n)
                                                          : 0.0);
    }
    curves.push_back(std::move(c));
  }
  return curves;
}

std::string format_real(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

void write_gap_curves_csv(const std::vector<GapCurve>& curves, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "method,trial,mean_gap,ci95_half_width,n_instances\n";
  for (const auto& c : curves) {
    for (std::size_t t = 0; t < c.mean_gap.size(); ++t) {
      out << c.method << ',' << t + 1 << ',' << format_real(c.mean_gap[t]) << ','
          << format_real(c.ci95_half_width[t]) << ',' << c.n_instances << '\n';
    }
  }
}

void write_summary_csv(const std::vector<GapCurve>& curves, const std::filesystem::path& path) {
  auto out = open_out(path);
  std::vector<std::size_t> trials;
  const std::size_t len = curves.empty() ? 0 : curves.front().mean_gap.size();
  for (std::size_t t : {3, 20}) {
    if (t <= len) trials.push_back(t);
  }
  out << "method";
  for (auto t : trials) out << ",gap_trial_" << t << ",ci95_trial_" << t;
  out << '\n';
  for (const auto& c : curves) {
    out << c.method;
    for (auto t : trials) out << ',' << format_real(c.mean_gap[t - 1]) << ',' << format_real(c.ci95_half_width[t - 1]);
    out << '\n';
  }
}

void write_references_csv(const std::vector<ReferenceRecord>& refs, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "instance,n_cities,reference,sweep_best,methods_best,brute_force\n";
  for (const auto& r : refs) {
    out << r.instance << ',' << r.n_cities << ',' << format_real(r.reference) << ',' << format_real(r.sweep_best)
        << ',' << format_real(r.methods_best) << ',' << (r.brute_force ? format_real(*r.brute_force) : "") << '\n';
  }
}

void write_runs_csv(const BenchResult& result, const std::vector<TspInstance>& instances,
                    const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "method,instance,seed_index,trial,origin,a_raw,a_norm,p_f,best_fitness,best_so_far,gap\n";
  for (const auto& r : result.runs) {
    const double ref = result.references[r.instance].reference;
    const auto& entries = r.trace.entries();
    for (std::size_t t = 0; t < entries.size(); ++t) {
      const auto& e = entries[t];
      out << r.method << ',' << instances[r.instance].name << ',' << r.seed_index << ',' << t + 1 << ','
          << e.origin << ',' << format_real(e.stats.a_raw) << ',' << format_real(e.stats.a_norm) << ','
          << format_real(e.stats.p_f) << ',' << format_real(e.objective()) << ',' << format_real(e.best_so_far)
          << ',' << format_real(normalized_gap(e.best_so_far, ref)) << '\n';
    }
  }
}

void write_sweep_csv(const std::vector<BatchStats>& sweep, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "a_raw,a_norm,p_f,min_fitness,e_avg,e_std\n";
  for (const auto& s : sweep) {
    out << format_real(s.a_raw) << ',' << format_real(s.a_norm) << ',' << format_real(s.p_f) << ','
        << format_real(s.best_fitness.value_or(kInf)) << ',' << format_real(s.e_avg) << ','
        << format_real(s.e_std) << '\n';
  }
}

std::size_t CsvTable::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw ParseError("CSV has no column '" + name + "'");
  return static_cast<std::size_t>(it - header.begin());
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path.string() + ": empty CSV");
  t.header = split_line(line);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto row = split_line(line);
    if (row.size() != t.header.size()) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                       std::to_string(t.header.size()) + " fields, got " + std::to_string(row.size()));
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

std::vector<GapCurve> read_gap_curves_csv(const std::filesystem::path& path) {
  const auto t = read_csv(path);
  const auto c_method = t.column("method");
  const auto c_trial = t.column("trial");
  const auto c_gap = t.column("mean_gap");
  const auto c_ci = t.column("ci95_half_width");
  const auto c_n = t.column("n_instances");
  std::vector<GapCurve> curves;
  for (const auto& row : t.rows) {
    if (curves.empty() || curves.back().method != row[c_method]) {
      curves.push_back({row[c_method], {}, {}, static_cast<std::size_t>(parse_real(row[c_n], path.string()))});
    }
    auto& c = curves.back();
    if (parse_real(row[c_trial], path.string()) != static_cast<double>(c.mean_gap.size() + 1)) {
      throw ParseError(path.string() + ": trials out of order for method " + c.method);
    }
    c.mean_gap.push_back(parse_real(row[c_gap], path.string()));
    c.ci95_half_width.push_back(parse_real(row[c_ci], path.string()));
  }
  return curves;
}

}  // namespace qross
