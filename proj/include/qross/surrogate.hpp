#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "qross/dataset.hpp"
#include "qross/features.hpp"
#include "qross/mlp.hpp"
#include "qross/tsp.hpp"

namespace qross {

struct Prediction {
  double p_f = 0.0;
  double e_avg = 0.0;
  double e_std = 0.0;
};

// Anything that maps normalised A to predicted solver statistics for one
// fixed instance. Strategies only see this interface.
class SurrogateView {
 public:
  virtual ~SurrogateView() = default;
  virtual Prediction predict(double a_norm) const = 0;
};

struct AffineScaler {
  double shift = 0.0;
  double scale = 1.0;

  double forward(double x) const { return (x - shift) / scale; }
  double inverse(double y) const { return y * scale + shift; }
};

inline constexpr int kModelSchema = 1;

// Two independently trained networks:
//  pf_net:     features -> logit of P_f
//  energy_net: features -> (normalised E_avg, normalised log E_std)
// Energies are divided by the instance's solver distance scale before the
// affine scalers are applied, and multiplied back on prediction.
struct SurrogatePair {
  int feature_spec = kFeatureSpecVersion;
  std::vector<double> input_mean;
  std::vector<double> input_std;
  AffineScaler e_avg_scaler;
  AffineScaler log_e_std_scaler;
  Mlp pf_net;
  Mlp energy_net;

  std::vector<double> standardize(std::span<const double> features) const;
};

struct TrainOptions {
  std::size_t epochs = 3000;
  double learning_rate = 1e-2;
  double momentum = 0.9;
  std::size_t batch_size = 32;
  std::size_t hidden_width = 64;
  double huber_delta = 1.0;
  std::uint64_t seed = 0;
};

struct TrainReport {
  double initial_bce = 0.0;
  double final_bce = 0.0;
  double initial_huber = 0.0;
  double final_huber = 0.0;
  std::vector<std::string> warnings;
};

struct TrainedSurrogate {
  SurrogatePair model;
  TrainReport report;
};

// Trains on every record passed in (callers filter by split).
TrainedSurrogate train(const std::vector<DatasetRecord>& corpus, const TrainOptions& options);

// Regression targets of a record before the affine scalers:
// (E_avg / s, log(max(E_std / s, 1e-6))) with s = a_raw / a_norm.
std::array<double, 2> energy_targets(const BatchStats& stats);

// Mean losses over a set of standardized inputs; when `grad` is non-empty the
// gradient of the mean loss w.r.t. the network parameters is added to it.
double pf_loss(const Mlp& net, const std::vector<std::vector<double>>& inputs,
               std::span<const double> targets, std::span<double> grad = {});
double energy_loss(const Mlp& net, const std::vector<std::vector<double>>& inputs,
                   const std::vector<std::array<double, 2>>& targets, double delta,
                   std::span<double> grad = {});

struct HoldoutMetrics {
  std::size_t n_records = 0;
  double bce = 0.0;
  // P_f classification at threshold 0.5, over records with p_f exactly 0 or 1.
  std::size_t n_plateau = 0;
  double plateau_accuracy = 0.0;
};
HoldoutMetrics evaluate_surrogate(const SurrogatePair& model, const std::vector<DatasetRecord>& records);

Prediction predict(const SurrogatePair& model, const TspInstance& instance, double a_norm);
// `scale` is solver_distance_scale(instance).
Prediction predict_from_features(const SurrogatePair& model, std::span<const double> features,
                                 double scale);

// Binds a trained model to one instance; caches the instance features.
class InstanceSurrogate final : public SurrogateView {
 public:
  InstanceSurrogate(const SurrogatePair& model, const TspInstance& instance);
  Prediction predict(double a_norm) const override;

 private:
  const SurrogatePair& model_;
  FeatureVector base_;
  double scale_;
};

nlohmann::json model_to_json(const SurrogatePair& model);
SurrogatePair model_from_json(const nlohmann::json& j);
void save_model(const SurrogatePair& model, const std::filesystem::path& path);
SurrogatePair load_model(const std::filesystem::path& path);

}  // namespace qross
