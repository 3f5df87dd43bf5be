#include "qross/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "qross/error.hpp"
#include "qross/stats.hpp"

namespace qross {

namespace {

constexpr double kGamma = 0.25;
constexpr std::size_t kTpeCandidates = 64;
constexpr std::size_t kEiGrid = 256;
constexpr std::size_t kHyperGrid = 16;

double uniform_draw(const TunerConfig& c, std::mt19937_64& rng) {
  return std::uniform_real_distribution<double>(c.a_lo, c.a_hi)(rng);
}

std::vector<double> log_grid(double lo, double hi, std::size_t n) {
  std::vector<double> g(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) / static_cast<double>(n - 1);
    g[k] = std::exp(std::log(lo) + t * (std::log(hi) - std::log(lo)));
  }
  return g;
}

// Gaussian KDE truncated to [lo, hi]; bandwidth by Silverman's rule.
class TruncatedKde {
 public:
  TruncatedKde(std::vector<double> centers, double lo, double hi)
      : centers_(std::move(centers)), lo_(lo), hi_(hi) {
    const double n = static_cast<double>(centers_.size());
    const double sd = stats::sample_std(centers_);
    bandwidth_ = 1.06 * sd * std::pow(n, -0.2);
    bandwidth_ = std::max(bandwidth_, 0.01 * (hi - lo));
    if (centers_.size() == 1) bandwidth_ = 0.1 * (hi - lo);
    for (double c : centers_) {
      mass_.push_back(stats::normal_cdf((hi - c) / bandwidth_) - stats::normal_cdf((lo - c) / bandwidth_));
    }
  }

  bool empty() const { return centers_.empty(); }

  double density(double x) const {
    if (centers_.empty()) return 1.0 / (hi_ - lo_);
    double s = 0.0;
    for (std::size_t k = 0; k < centers_.size(); ++k) {
      s += stats::normal_pdf((x - centers_[k]) / bandwidth_) / (bandwidth_ * mass_[k]);
    }
    return s / static_cast<double>(centers_.size());
  }

  double sample(std::mt19937_64& rng) const {
    std::uniform_int_distribution<std::size_t> pick(0, centers_.size() - 1);
    for (int attempt = 0; attempt < 1000; ++attempt) {
      const double c = centers_[pick(rng)];
      const double x = std::normal_distribution<double>(c, bandwidth_)(rng);
      if (x >= lo_ && x <= hi_) return x;
    }
    return std::clamp(centers_[pick(rng)], lo_, hi_);
  }

 private:
  std::vector<double> centers_;
  std::vector<double> mass_;
  double lo_, hi_;
  double bandwidth_ = 1.0;
};

bool cholesky(std::vector<double>& a, std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) {
    double d = a[j * n + j];
    for (std::size_t k = 0; k < j; ++k) d -= a[j * n + k] * a[j * n + k];
    if (!(d > 0.0) || !std::isfinite(d)) return false;
    d = std::sqrt(d);
    a[j * n + j] = d;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a[i * n + j];
      for (std::size_t k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
      a[i * n + j] = s / d;
    }
    for (std::size_t k = j + 1; k < n; ++k) a[j * n + k] = 0.0;
  }
  return true;
}

// Solves L z = b in place.
void forward_solve(const std::vector<double>& l, std::size_t n, std::vector<double>& b) {
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= l[i * n + k] * b[k];
    b[i] = s / l[i * n + i];
  }
}

// Solves L^T z = b in place.
void backward_solve(const std::vector<double>& l, std::size_t n, std::vector<double>& b) {
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= l[k * n + i] * b[k];
    b[i] = s / l[i * n + i];
  }
}

}  // namespace

void TunerConfig::validate() const {
  if (!(a_lo > 0.0)) throw ValidationError("tuner range: lo must be > 0");
  if (!(a_hi > a_lo)) throw ValidationError("tuner range: hi must exceed lo");
  if (!(n_init < max_trials)) throw ValidationError("tuner config: n_init must be < max_trials");
}

TuningTrace random_search(const TunerConfig& config, const EvaluateRawFn& evaluate) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  TuningTrace trace;
  for (std::size_t t = 0; t < config.max_trials; ++t) trace.append(evaluate(uniform_draw(config, rng)), "random");
  return trace;
}

double tpe_suggest(std::span<const Observation> history, const TunerConfig& config,
                   std::mt19937_64& rng) {
  if (history.size() < config.n_init) return uniform_draw(config, rng);
  std::vector<std::size_t> feasible;
  for (std::size_t k = 0; k < history.size(); ++k) {
    if (std::isfinite(history[k].objective)) feasible.push_back(k);
  }
  if (feasible.empty()) return uniform_draw(config, rng);
  std::stable_sort(feasible.begin(), feasible.end(),
                   [&](auto a, auto b) { return history[a].objective < history[b].objective; });
  const auto n_good = std::min(
      feasible.size(),
      std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(kGamma * static_cast<double>(history.size())))));
  std::vector<bool> is_good(history.size(), false);
  std::vector<double> good, bad;
  for (std::size_t k = 0; k < n_good; ++k) is_good[feasible[k]] = true;
  for (std::size_t k = 0; k < history.size(); ++k) (is_good[k] ? good : bad).push_back(history[k].a);

  const TruncatedKde l(good, config.a_lo, config.a_hi);
  const TruncatedKde g(bad, config.a_lo, config.a_hi);
  double best = 0.0;
  double best_ratio = -1.0;
  for (std::size_t c = 0; c < kTpeCandidates; ++c) {
    const double x = l.sample(rng);
    const double ratio = l.density(x) / std::max(g.density(x), 1e-300);
    if (ratio > best_ratio) {
      best_ratio = ratio;
      best = x;
    }
  }
  return best;
}

namespace gp {

Posterior::Posterior(std::vector<double> x, std::vector<double> y, Hyperparameters hp)
    : x_(std::move(x)), hp_(hp) {
  const std::size_t n = x_.size();
  if (n == 0 || y.size() != n) throw DimensionError("GP needs matching, non-empty x and y");
  std::vector<double> k(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) k[i * n + j] = kernel(x_[i], x_[j]);
    k[i * n + i] += hp_.noise_variance;
  }
  for (double jitter : {0.0, 1e-8, 1e-7, 1e-6, 1e-5, 1e-4}) {
    chol_ = k;
    for (std::size_t i = 0; i < n; ++i) chol_[i * n + i] += jitter;
    if (cholesky(chol_, n)) {
      jitter_ = jitter;
      alpha_ = y;
      forward_solve(chol_, n, alpha_);
      double quad = 0.0;
      for (double v : alpha_) quad += v * v;
      backward_solve(chol_, n, alpha_);
      double log_det = 0.0;
      for (std::size_t i = 0; i < n; ++i) log_det += 2.0 * std::log(chol_[i * n + i]);
      log_ml_ = -0.5 * quad - 0.5 * log_det -
                0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
      return;
    }
  }
  throw NumericalError("GP kernel matrix is singular even with 1e-4 jitter");
}

double Posterior::kernel(double a, double b) const {
  const double d = (a - b) / hp_.length_scale;
  return hp_.signal_variance * std::exp(-0.5 * d * d);
}

std::pair<double, double> Posterior::predict(double x) const {
  const std::size_t n = x_.size();
  std::vector<double> ks(n);
  for (std::size_t i = 0; i < n; ++i) ks[i] = kernel(x, x_[i]);
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += ks[i] * alpha_[i];
  forward_solve(chol_, n, ks);
  double reduce = 0.0;
  for (double v : ks) reduce += v * v;
  return {mean, std::max(hp_.signal_variance - reduce, 0.0)};
}

Posterior fit(std::vector<double> x, std::vector<double> y) {
  const auto lengths = log_grid(0.01, 2.0, kHyperGrid);
  const auto signals = log_grid(0.05, 20.0, kHyperGrid);
  const auto noises = log_grid(1e-8, 0.5, kHyperGrid);
  std::optional<Posterior> best;
  for (double l : lengths) {
    for (double s : signals) {
      for (double nv : noises) {
        try {
          Posterior p(x, y, {l, s, nv});
          if (!best || p.log_marginal_likelihood() > best->log_marginal_likelihood()) best = std::move(p);
        } catch (const NumericalError&) {
        }
      }
    }
  }
  if (!best) throw NumericalError("GP fit failed for every hyperparameter setting");
  return *best;
}

double expected_improvement(double mean, double variance, double best) {
  const double sd = std::sqrt(variance);
  if (sd <= 0.0) return std::max(best - mean, 0.0);
  const double z = (best - mean) / sd;
  return (best - mean) * stats::normal_cdf(z) + sd * stats::normal_pdf(z);
}

}  // namespace gp

double gp_bo_suggest(std::span<const Observation> history, const TunerConfig& config,
                     std::mt19937_64& rng) {
  if (history.size() < config.n_init) return uniform_draw(config, rng);
  double worst = -std::numeric_limits<double>::infinity();
  double best = std::numeric_limits<double>::infinity();
  for (const auto& o : history) {
    if (std::isfinite(o.objective)) {
      worst = std::max(worst, o.objective);
      best = std::min(best, o.objective);
    }
  }
  if (!std::isfinite(best)) return uniform_draw(config, rng);
  double spread = worst - best;
  if (!(spread > 0.0)) spread = std::max(0.1 * std::abs(worst), 1.0);
  const double imputed = worst + spread;

  const double width = config.a_hi - config.a_lo;
  std::vector<double> x, y;
  for (const auto& o : history) {
    x.push_back((o.a - config.a_lo) / width);
    y.push_back(std::isfinite(o.objective) ? o.objective : imputed);
  }
  const double y_mean = stats::mean(y);
  double y_sd = stats::population_std(y);
  if (!(y_sd > 0.0)) y_sd = 1.0;
  for (double& v : y) v = (v - y_mean) / y_sd;
  const double y_best = (best - y_mean) / y_sd;

  const auto post = gp::fit(std::move(x), std::move(y));
  double arg = config.a_lo;
  double best_ei = -1.0;
  for (std::size_t k = 0; k < kEiGrid; ++k) {
    const double u = static_cast<double>(k) / static_cast<double>(kEiGrid - 1);
    const auto [m, v] = post.predict(u);
    const double ei = gp::expected_improvement(m, v, y_best);
    if (ei > best_ei) {
      best_ei = ei;
      arg = config.a_lo + u * width;
    }
  }
  return arg;
}

TuningTrace run_sequential_tuner(const TunerConfig& config, const EvaluateRawFn& evaluate,
                                 const SuggestFn& suggest) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  TuningTrace trace;
  std::vector<Observation> history;
  for (std::size_t t = 0; t < config.max_trials; ++t) {
    const bool warmup = t < config.n_init;
    const double a = warmup ? uniform_draw(config, rng) : suggest(history, config, rng);
    const auto stats = evaluate(a);
    trace.append(stats, warmup ? "init" : "suggest");
    history.push_back({a, trace.entries().back().objective()});
  }
  return trace;
}

TuningTrace run_tpe(const TunerConfig& config, const EvaluateRawFn& evaluate) {
  return run_sequential_tuner(config, evaluate, tpe_suggest);
}

TuningTrace run_gp_bo(const TunerConfig& config, const EvaluateRawFn& evaluate) {
  return run_sequential_tuner(config, evaluate, gp_bo_suggest);
}

}  // namespace qross
