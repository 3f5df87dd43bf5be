#include "qross/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "qross/error.hpp"
#include "qross/stats.hpp"

namespace qross {

namespace {

constexpr double kMinRelativeStd = 1e-6;

double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }
double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double huber(double r, double delta) {
  const double a = std::abs(r);
  return a <= delta ? 0.5 * r * r : delta * (a - 0.5 * delta);
}

AffineScaler fit_scaler(const std::vector<double>& xs) {
  AffineScaler s;
  s.shift = stats::mean(xs);
  s.scale = stats::population_std(xs);
  if (!(s.scale > 0.0)) s.scale = 1.0;
  return s;
}

void momentum_step(std::vector<double>& params, std::vector<double>& velocity,
                   const std::vector<double>& grad, double lr, double momentum) {
  for (std::size_t k = 0; k < params.size(); ++k) {
    velocity[k] = momentum * velocity[k] - lr * grad[k];
    params[k] += velocity[k];
  }
}

}  // namespace

std::vector<double> SurrogatePair::standardize(std::span<const double> features) const {
  if (features.size() != input_mean.size()) {
    throw DimensionError("surrogate expects " + std::to_string(input_mean.size()) +
                         " features, got " + std::to_string(features.size()));
  }
  std::vector<double> out(features.size());
  for (std::size_t k = 0; k < features.size(); ++k) {
    out[k] = (features[k] - input_mean[k]) / input_std[k];
  }
  return out;
}

std::array<double, 2> energy_targets(const BatchStats& s) {
  const double scale = s.a_raw / s.a_norm;
  return {s.e_avg / scale, std::log(std::max(s.e_std / scale, kMinRelativeStd))};
}

double pf_loss(const Mlp& net, const std::vector<std::vector<double>>& inputs,
               std::span<const double> targets, std::span<double> grad) {
  const double inv_n = 1.0 / static_cast<double>(inputs.size());
  double loss = 0.0;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const double z = net.forward(inputs[k])[0];
    const double p = targets[k];
    loss += softplus(z) - p * z;  // BCE(p, logistic(z))
    if (!grad.empty()) {
      const double d = (logistic(z) - p) * inv_n;
      net.backward(inputs[k], std::span<const double>(&d, 1), grad);
    }
  }
  return loss * inv_n;
}

double energy_loss(const Mlp& net, const std::vector<std::vector<double>>& inputs,
                   const std::vector<std::array<double, 2>>& targets, double delta,
                   std::span<double> grad) {
  const double inv_n = 1.0 / static_cast<double>(inputs.size());
  double loss = 0.0;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const auto y = net.forward(inputs[k]);
    std::array<double, 2> d{};
    for (std::size_t o = 0; o < 2; ++o) {
      const double r = y[o] - targets[k][o];
      loss += huber(r, delta);
      d[o] = std::clamp(r, -delta, delta) * inv_n;
    }
    if (!grad.empty()) net.backward(inputs[k], d, grad);
  }
  return loss * inv_n;
}

TrainedSurrogate train(const std::vector<DatasetRecord>& corpus, const TrainOptions& opt) {
  if (corpus.empty()) throw ValidationError("cannot train a surrogate on an empty corpus");
  if (opt.batch_size == 0 || opt.hidden_width == 0) throw ValidationError("bad training options");
  TrainedSurrogate out;
  auto& model = out.model;
  auto& report = out.report;

  const std::size_t n = corpus.size();
  const std::size_t n_features = corpus.front().features.size();
  for (const auto& r : corpus) {
    if (r.features.size() != n_features) throw DimensionError("corpus feature lengths differ");
  }

  std::size_t slope = 0, zero = 0, one = 0;
  for (const auto& r : corpus) {
    if (r.stats.p_f == 0.0) {
      ++zero;
    } else if (r.stats.p_f == 1.0) {
      ++one;
    } else {
      ++slope;
    }
  }
  if (slope == 0 || zero == 0 || one == 0) {
    report.warnings.push_back("corpus lacks slope or plateau records (slope " + std::to_string(slope) +
                              ", p_f=0 " + std::to_string(zero) + ", p_f=1 " + std::to_string(one) + ")");
  }

  model.input_mean.assign(n_features, 0.0);
  model.input_std.assign(n_features, 1.0);
  for (std::size_t f = 0; f < n_features; ++f) {
    std::vector<double> col(n);
    for (std::size_t k = 0; k < n; ++k) col[k] = corpus[k].features[f];
    const auto s = fit_scaler(col);
    model.input_mean[f] = s.shift;
    model.input_std[f] = s.scale;
  }

  std::vector<std::vector<double>> inputs(n);
  std::vector<double> pf_targets(n);
  std::vector<double> raw_avg(n), raw_log_std(n);
  for (std::size_t k = 0; k < n; ++k) {
    inputs[k] = model.standardize(corpus[k].features);
    pf_targets[k] = corpus[k].stats.p_f;
    const auto t = energy_targets(corpus[k].stats);
    raw_avg[k] = t[0];
    raw_log_std[k] = t[1];
  }
  model.e_avg_scaler = fit_scaler(raw_avg);
  model.log_e_std_scaler = fit_scaler(raw_log_std);
  std::vector<std::array<double, 2>> e_targets(n);
  for (std::size_t k = 0; k < n; ++k) {
    e_targets[k] = {model.e_avg_scaler.forward(raw_avg[k]),
                    model.log_e_std_scaler.forward(raw_log_std[k])};
  }
  if (std::all_of(pf_targets.begin(), pf_targets.end(), [&](double p) { return p == pf_targets[0]; })) {
    report.warnings.push_back("all P_f targets are identical");
  }
  if (stats::population_std(raw_avg) == 0.0 && stats::population_std(raw_log_std) == 0.0) {
    report.warnings.push_back("all energy targets are identical");
  }

  std::mt19937_64 rng(opt.seed);
  const std::vector<std::size_t> dims_pf{n_features, opt.hidden_width, opt.hidden_width, 1};
  const std::vector<std::size_t> dims_e{n_features, opt.hidden_width, opt.hidden_width, 2};
  model.pf_net = Mlp(dims_pf, rng);
  model.energy_net = Mlp(dims_e, rng);

  report.initial_bce = pf_loss(model.pf_net, inputs, pf_targets);
  report.initial_huber = energy_loss(model.energy_net, inputs, e_targets, opt.huber_delta);

  std::vector<double> v_pf(model.pf_net.params().size(), 0.0);
  std::vector<double> v_e(model.energy_net.params().size(), 0.0);
  std::vector<double> g_pf(v_pf.size());
  std::vector<double> g_e(v_e.size());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<std::vector<double>> batch_x;
  std::vector<double> batch_p;
  std::vector<std::array<double, 2>> batch_e;

  for (std::size_t epoch = 0; epoch < opt.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < n; start += opt.batch_size) {
      const std::size_t end = std::min(n, start + opt.batch_size);
      batch_x.clear();
      batch_p.clear();
      batch_e.clear();
      for (std::size_t k = start; k < end; ++k) {
        batch_x.push_back(inputs[order[k]]);
        batch_p.push_back(pf_targets[order[k]]);
        batch_e.push_back(e_targets[order[k]]);
      }
      std::fill(g_pf.begin(), g_pf.end(), 0.0);
      std::fill(g_e.begin(), g_e.end(), 0.0);
      pf_loss(model.pf_net, batch_x, batch_p, g_pf);
      energy_loss(model.energy_net, batch_x, batch_e, opt.huber_delta, g_e);
      momentum_step(model.pf_net.params(), v_pf, g_pf, opt.learning_rate, opt.momentum);
      momentum_step(model.energy_net.params(), v_e, g_e, opt.learning_rate, opt.momentum);
    }
  }

  report.final_bce = pf_loss(model.pf_net, inputs, pf_targets);
  report.final_huber = energy_loss(model.energy_net, inputs, e_targets, opt.huber_delta);
  return out;
}

Prediction predict_from_features(const SurrogatePair& model, std::span<const double> features,
                                 double scale) {
  const auto x = model.standardize(features);
  Prediction p;
  p.p_f = logistic(model.pf_net.forward(x)[0]);
  const auto y = model.energy_net.forward(x);
  p.e_avg = model.e_avg_scaler.inverse(y[0]) * scale;
  p.e_std = std::exp(model.log_e_std_scaler.inverse(y[1])) * scale;
  return p;
}

HoldoutMetrics evaluate_surrogate(const SurrogatePair& model, const std::vector<DatasetRecord>& records) {
  HoldoutMetrics m;
  std::size_t correct = 0;
  for (const auto& r : records) {
    const double z = model.pf_net.forward(model.standardize(r.features))[0];
    const double p = r.stats.p_f;
    m.bce += softplus(z) - p * z;
    ++m.n_records;
    if (p == 0.0 || p == 1.0) {
      ++m.n_plateau;
      if ((z >= 0.0) == (p == 1.0)) ++correct;
    }
  }
  if (m.n_records > 0) m.bce /= static_cast<double>(m.n_records);
  if (m.n_plateau > 0) m.plateau_accuracy = static_cast<double>(correct) / static_cast<double>(m.n_plateau);
  return m;
}

Prediction predict(const SurrogatePair& model, const TspInstance& instance, double a_norm) {
  return predict_from_features(model, extract_features(instance, a_norm),
                               solver_distance_scale(instance));
}

InstanceSurrogate::InstanceSurrogate(const SurrogatePair& model, const TspInstance& instance)
    : model_(model), base_(instance_features(instance)), scale_(solver_distance_scale(instance)) {
  if (base_.size() != model.input_mean.size()) {
    throw DimensionError("surrogate/feature dimension mismatch");
  }
}

Prediction InstanceSurrogate::predict(double a_norm) const {
  if (!(a_norm > 0.0) || !std::isfinite(a_norm)) throw ValidationError("a_norm must be positive");
  FeatureVector f = base_;
  f[kLogANormFeature] = std::log(a_norm);
  return predict_from_features(model_, f, scale_);
}

nlohmann::json model_to_json(const SurrogatePair& m) {
  nlohmann::json j;
  j["schema"] = kModelSchema;
  j["feature_spec"] = m.feature_spec;
  j["input_scaler"] = {{"mean", m.input_mean}, {"std", m.input_std}};
  j["scalers"] = {
      {"e_avg", {{"shift", m.e_avg_scaler.shift}, {"scale", m.e_avg_scaler.scale}}},
      {"log_e_std", {{"shift", m.log_e_std_scaler.shift}, {"scale", m.log_e_std_scaler.scale}}}};
  j["pf_net"] = m.pf_net.to_json();
  j["energy_net"] = m.energy_net.to_json();
  return j;
}

SurrogatePair model_from_json(const nlohmann::json& j) {
  try {
    if (j.at("schema").get<int>() != kModelSchema) {
      throw VersionError("unsupported model schema " + j.at("schema").dump());
    }
    SurrogatePair m;
    m.feature_spec = j.at("feature_spec").get<int>();
    if (m.feature_spec != kFeatureSpecVersion) {
      throw VersionError("model was trained with feature spec " + std::to_string(m.feature_spec) +
                         ", this build uses " + std::to_string(kFeatureSpecVersion));
    }
    m.input_mean = j.at("input_scaler").at("mean").get<std::vector<double>>();
    m.input_std = j.at("input_scaler").at("std").get<std::vector<double>>();
    const auto& s = j.at("scalers");
    m.e_avg_scaler = {s.at("e_avg").at("shift").get<double>(), s.at("e_avg").at("scale").get<double>()};
    m.log_e_std_scaler = {s.at("log_e_std").at("shift").get<double>(),
                          s.at("log_e_std").at("scale").get<double>()};
    m.pf_net = Mlp::from_json(j.at("pf_net"));
    m.energy_net = Mlp::from_json(j.at("energy_net"));
    if (m.input_mean.size() != kFeatureCount || m.input_std.size() != kFeatureCount ||
        m.pf_net.n_inputs() != kFeatureCount || m.energy_net.n_inputs() != kFeatureCount ||
        m.pf_net.n_outputs() != 1 || m.energy_net.n_outputs() != 2) {
      throw ParseError("model dimensions do not match the feature layout");
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed model JSON: ") + e.what());
  }
}

void save_model(const SurrogatePair& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << model_to_json(model).dump() << '\n';
  if (!out) throw Error("write to " + path.string() + " failed");
}

SurrogatePair load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open model file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(buf.str());
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return model_from_json(j);
}

}  // namespace qross
