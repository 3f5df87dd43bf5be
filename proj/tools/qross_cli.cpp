// qross: instance generation, corpus building, surrogate training, tuning,
// benchmarking and A sweeps for penalty-weighted TSP QUBOs.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "qross/annealer.hpp"
#include "qross/baselines.hpp"
#include "qross/bench.hpp"
#include "qross/dataset.hpp"
#include "qross/error.hpp"
#include "qross/strategies.hpp"
#include "qross/surrogate.hpp"
#include "qross/tsp.hpp"

namespace fs = std::filesystem;
using namespace qross;

namespace {

struct Common {
  std::uint64_t seed = 0;
  std::string solver_config;
  std::optional<std::size_t> batch_size;
  std::optional<std::size_t> sweeps;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--seed", c.seed, "Base RNG seed");
  cmd->add_option("--solver-config", c.solver_config, "JSON annealer config file")->check(CLI::ExistingFile);
  cmd->add_option("--batch-size", c.batch_size, "Solver batch size B");
  cmd->add_option("--sweeps", c.sweeps, "Annealing sweeps per replica");
}

AnnealConfig solver_config(const Common& c) {
  AnnealConfig cfg;
  if (!c.solver_config.empty()) {
    std::ifstream in(c.solver_config);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(c.solver_config + ": " + e.what());
    }
    cfg = anneal_config_from_json(j);
  }
  if (c.batch_size) cfg.batch_size = *c.batch_size;
  if (c.sweeps) cfg.sweeps = *c.sweeps;
  cfg.validate();
  return cfg;
}

// "10..12" or "10"
template <typename T>
std::pair<T, T> parse_range(const std::string& s, const char* what) {
  const auto dots = s.find("..");
  try {
    if (dots == std::string::npos) {
      const T v = static_cast<T>(std::stod(s));
      return {v, v};
    }
    return {static_cast<T>(std::stod(s.substr(0, dots))), static_cast<T>(std::stod(s.substr(dots + 2)))};
  } catch (const std::exception&) {
    throw ValidationError(std::string(what) + ": expected 'lo..hi', got '" + s + "'");
  }
}

void print_trace(const TuningTrace& trace) {
  std::printf("trial,origin,a_raw,a_norm,p_f,best_fitness,best_so_far\n");
  for (std::size_t t = 0; t < trace.size(); ++t) {
    const auto& e = trace.entries()[t];
    std::printf("%zu,%s,%s,%s,%s,%s,%s\n", t + 1, e.origin.c_str(), format_real(e.stats.a_raw).c_str(),
                format_real(e.a_norm).c_str(), format_real(e.stats.p_f).c_str(),
                format_real(e.objective()).c_str(), format_real(e.best_so_far).c_str());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Relaxation-parameter selection for penalty QUBOs"};
  app.require_subcommand(1);

  // gen
  Common gen_c;
  GenConfig gen;
  std::string gen_cities = "10..15", gen_dist = "uniform", gen_rate = "0.01..0.1", gen_out;
  auto* gen_cmd = app.add_subcommand("gen", "Generate random Euclidean TSP instances");
  gen_cmd->add_option("--n", gen.n_instances, "Number of instances")->required();
  gen_cmd->add_option("--cities", gen_cities, "City count range lo..hi");
  gen_cmd->add_option("--dist", gen_dist, "Coordinate distribution")->check(CLI::IsMember({"uniform", "exponential"}));
  gen_cmd->add_option("--rate", gen_rate, "Exponential rate range lo..hi");
  gen_cmd->add_option("--side", gen.side, "Uniform square side");
  gen_cmd->add_option("--train-ratio", gen.train_ratio, "Fraction written to train/");
  gen_cmd->add_option("--seed", gen_c.seed, "RNG seed");
  gen_cmd->add_option("--out", gen_out, "Output directory")->required();

  // corpus
  Common corpus_c;
  std::string corpus_in, corpus_out;
  std::size_t corpus_budget = 20;
  auto* corpus_cmd = app.add_subcommand("corpus", "Sample solver statistics over A for each instance");
  corpus_cmd->add_option("--instances", corpus_in, "Directory from gen (train/ and test/) or flat")->required();
  corpus_cmd->add_option("--budget", corpus_budget, "A samples per instance (after bracketing)");
  corpus_cmd->add_option("--out", corpus_out, "Output JSONL")->required();
  add_common(corpus_cmd, corpus_c);

  // train
  std::string train_in, train_out;
  TrainOptions train_opts;
  auto* train_cmd = app.add_subcommand("train", "Train the surrogate on a corpus");
  train_cmd->add_option("--corpus", train_in, "Corpus JSONL")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--epochs", train_opts.epochs, "Training epochs");
  train_cmd->add_option("--hidden", train_opts.hidden_width, "Hidden layer width");
  train_cmd->add_option("--lr", train_opts.learning_rate, "Learning rate");
  train_cmd->add_option("--seed", train_opts.seed, "RNG seed");
  train_cmd->add_option("--out", train_out, "Output model JSON")->required();

  // tune
  Common tune_c;
  std::string tune_in, tune_method = "qross", tune_model, tune_out;
  std::size_t tune_trials = 20;
  auto* tune_cmd = app.add_subcommand("tune", "Tune A on one instance and print the trace");
  tune_cmd->add_option("--instance", tune_in, "Instance JSON")->required()->check(CLI::ExistingFile);
  tune_cmd->add_option("--method", tune_method, "Tuner")
      ->check(CLI::IsMember({"qross", "mfs", "ofs", "random", "tpe", "gp-bo"}));
  tune_cmd->add_option("--model", tune_model, "Surrogate model JSON");
  tune_cmd->add_option("--max-trials", tune_trials, "Solver calls");
  tune_cmd->add_option("--out", tune_out, "Optional trace CSV");
  add_common(tune_cmd, tune_c);

  // bench
  Common bench_c;
  BenchConfig bench;
  std::string bench_in, bench_model, bench_out;
  auto* bench_cmd = app.add_subcommand("bench", "Gap curves of several tuners over an instance set");
  bench_cmd->add_option("--instances", bench_in, "Directory of instance JSON files")->required();
  bench_cmd->add_option("--methods", bench.methods, "Tuners (qross, ofs, random, tpe, gp-bo)")->delimiter(',');
  bench_cmd->add_option("--model", bench_model, "Surrogate model JSON (needed by qross)");
  bench_cmd->add_option("--max-trials", bench.max_trials, "Solver calls per run");
  bench_cmd->add_option("--seeds", bench.n_seeds, "Runs per (method, instance)");
  bench_cmd->add_option("--threads", bench.threads, "Worker threads");
  bench_cmd->add_option("--out", bench_out, "Output directory")->required();
  add_common(bench_cmd, bench_c);

  // sweep
  Common sweep_c;
  std::string sweep_in, sweep_out;
  std::optional<double> sweep_lo, sweep_hi;
  std::size_t sweep_points = 48;
  auto* sweep_cmd = app.add_subcommand("sweep", "Log-spaced raw-A sweep: P_f and batch-min fitness per A");
  sweep_cmd->add_option("--instance", sweep_in, "Instance JSON")->required()->check(CLI::ExistingFile);
  sweep_cmd->add_option("--a-min", sweep_lo, "Smallest raw A (default 0.05 x distance scale)");
  sweep_cmd->add_option("--a-max", sweep_hi, "Largest raw A (default 3 x distance scale)");
  sweep_cmd->add_option("--points", sweep_points, "Number of A values");
  sweep_cmd->add_option("--out", sweep_out, "Output CSV")->required();
  add_common(sweep_cmd, sweep_c);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*gen_cmd) {
      const auto [lo, hi] = parse_range<std::size_t>(gen_cities, "--cities");
      const auto [rlo, rhi] = parse_range<double>(gen_rate, "--rate");
      gen.n_min = lo;
      gen.n_max = hi;
      gen.rate_lo = rlo;
      gen.rate_hi = rhi;
      gen.kind = gen_dist == "uniform" ? CoordDistribution::Uniform : CoordDistribution::Exponential;
      gen.seed = gen_c.seed;
      const auto paths = write_instances(generate_instances(gen), gen_out);
      std::printf("wrote %zu instances to %s\n", paths.size(), gen_out.c_str());
    } else if (*corpus_cmd) {
      const auto cfg = solver_config(corpus_c);
      const SimulatedAnnealer solver(cfg);
      std::vector<std::pair<fs::path, Split>> dirs;
      if (fs::is_directory(fs::path(corpus_in) / "train") || fs::is_directory(fs::path(corpus_in) / "test")) {
        if (fs::is_directory(fs::path(corpus_in) / "train")) dirs.emplace_back(fs::path(corpus_in) / "train", Split::Train);
        if (fs::is_directory(fs::path(corpus_in) / "test")) dirs.emplace_back(fs::path(corpus_in) / "test", Split::Test);
      } else {
        dirs.emplace_back(corpus_in, Split::Train);
      }
      std::vector<DatasetRecord> records;
      std::size_t index = 0;
      for (const auto& [dir, split] : dirs) {
        for (const auto& inst : read_instance_dir(dir)) {
          Evaluator ev(inst, solver, cfg.batch_size, derive_seed({corpus_c.seed, index++}));
          auto rows = instance_records(ev, split, corpus_budget);
          records.insert(records.end(), rows.begin(), rows.end());
          std::fprintf(stderr, "%s: %zu solver calls\n", inst.name.c_str(), ev.calls());
        }
      }
      write_corpus(records, corpus_out);
      std::printf("wrote %zu records to %s\n", records.size(), corpus_out.c_str());
    } else if (*train_cmd) {
      const auto corpus = read_corpus(train_in);
      std::vector<DatasetRecord> train_set, test_set;
      for (const auto& r : corpus) (r.split == Split::Train ? train_set : test_set).push_back(r);
      const auto trained = train(train_set, train_opts);
      for (const auto& w : trained.report.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
      save_model(trained.model, train_out);
      std::printf("train: %zu records, bce %s -> %s, huber %s -> %s\n", train_set.size(),
                  format_real(trained.report.initial_bce).c_str(), format_real(trained.report.final_bce).c_str(),
                  format_real(trained.report.initial_huber).c_str(),
                  format_real(trained.report.final_huber).c_str());
      if (!test_set.empty()) {
        const auto m = evaluate_surrogate(trained.model, test_set);
        std::printf("held-out: %zu records, bce %s, plateau accuracy %s over %zu points\n", m.n_records,
                    format_real(m.bce).c_str(), format_real(m.plateau_accuracy).c_str(), m.n_plateau);
      }
    } else if (*tune_cmd) {
      const auto inst = read_instance(tune_in);
      BenchConfig cfg;
      cfg.solver = solver_config(tune_c);
      cfg.seed = tune_c.seed;
      cfg.max_trials = tune_trials;
      if (!tune_model.empty()) cfg.model = load_model(tune_model);
      if ((tune_method == "qross" || tune_method == "mfs") && !cfg.model) {
        throw ValidationError("tune: method '" + tune_method + "' needs --model <file>");
      }
      if (tune_method == "mfs") {
        const InstanceSurrogate view(*cfg.model, inst);
        const double a = mfs_propose(view, cfg.qross.range, cfg.solver.batch_size);
        std::printf("proposed a_norm %s a_raw %s (no solver calls)\n", format_real(a).c_str(),
                    format_real(a * solver_distance_scale(inst)).c_str());
        return 0;
      }
      const auto trace = run_method(tune_method, inst, 0, 0, cfg);
      print_trace(trace);
      if (const auto best = trace.best_index()) {
        const auto& e = trace.entries()[*best];
        std::printf("proposed a_raw %s a_norm %s best_fitness %s\n", format_real(e.stats.a_raw).c_str(),
                    format_real(e.a_norm).c_str(), format_real(e.objective()).c_str());
      } else {
        std::printf("no feasible solution in %zu trials\n", trace.size());
      }
      if (!tune_out.empty()) {
        BenchResult r;
        r.runs.push_back({tune_method, 0, 0, trace});
        ReferenceRecord ref;
        ref.reference = std::isfinite(trace.best_fitness()) ? trace.best_fitness() : 1.0;
        r.references.push_back(ref);
        write_runs_csv(r, {inst}, tune_out);
      }
    } else if (*bench_cmd) {
      bench.solver = solver_config(bench_c);
      bench.seed = bench_c.seed;
      if (!bench_model.empty()) bench.model = load_model(bench_model);
      bench.validate();
      const auto instances = read_instance_dir(bench_in);
      const auto result = run_benchmark(instances, bench);
      const fs::path out(bench_out);
      write_gap_curves_csv(result.curves, out / "gap_curves.csv");
      write_summary_csv(result.curves, out / "summary.csv");
      write_references_csv(result.references, out / "references.csv");
      write_runs_csv(result, instances, out / "runs.csv");
      std::printf("method,gap_trial_1,gap_trial_3,gap_trial_last\n");
      for (const auto& c : result.curves) {
        std::printf("%s,%s,%s,%s\n", c.method.c_str(), format_real(c.mean_gap[0]).c_str(),
                    format_real(c.mean_gap[2]).c_str(), format_real(c.mean_gap.back()).c_str());
      }
    } else if (*sweep_cmd) {
      const auto inst = read_instance(sweep_in);
      const auto cfg = solver_config(sweep_c);
      const SimulatedAnnealer solver(cfg);
      Evaluator ev(inst, solver, cfg.batch_size, sweep_c.seed);
      const double lo = sweep_lo.value_or(0.05 * ev.scale());
      const double hi = sweep_hi.value_or(3.0 * ev.scale());
      write_sweep_csv(sweep_a(ev, lo, hi, sweep_points), sweep_out);
      std::printf("wrote %zu sweep points to %s\n", sweep_points, sweep_out.c_str());
    }
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
