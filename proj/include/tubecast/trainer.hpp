#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "tubecast/kernels.hpp"
#include "tubecast/losses.hpp"
#include "tubecast/metrics.hpp"
#include "tubecast/net.hpp"
#include "tubecast/series.hpp"

namespace tubecast {

enum class LossKind { tube, qd, pinball };

std::string to_string(LossKind k);

struct LossSpec {
  LossKind kind = LossKind::tube;
  TubeConfig tube;
  QdConfig qd;
  double tau = 0.5;

  static LossSpec make_tube(const TubeConfig& cfg) { return {LossKind::tube, cfg, {}, 0.5}; }
  static LossSpec make_qd(const QdConfig& cfg) { return {LossKind::qd, {}, cfg, 0.5}; }
  static LossSpec make_pinball(double tau) { return {LossKind::pinball, {}, {}, tau}; }

  HeadKind required_head() const noexcept { return kind == LossKind::pinball ? HeadKind::scalar : HeadKind::interval; }
  void validate() const;
};

// Mini-batch objective on raw head outputs (outputs x batch). Tube and
// pinball are averaged over the batch; QD keeps its own batch normalization.
double batch_objective(const LossSpec& loss, const Eigen::MatrixXd& outputs, std::span<const double> targets,
                       Eigen::MatrixXd* d_outputs);

struct AdamConfig {
  double step = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct SgdConfig {
  double step = 1e-2;
  double momentum = 0.9;
};

struct TrainConfig {
  int epochs = 200;
  int batch_size = 64;
  std::variant<AdamConfig, SgdConfig> optimizer = AdamConfig{};
  int early_stop_patience = 20;  // 0 disables early stopping
  std::uint64_t shuffle_seed = 0;
  LossSpec loss;
  KernelOptions kernels;

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;
  double train_objective = 0.0;
  double validation_objective = 0.0;
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  int epochs_run = 0;
  int best_epoch = 0;
  double best_validation_objective = 0.0;
  double wall_seconds = 0.0;
  std::optional<double> validation_picp;
  std::optional<double> validation_mpiw;  // original units
  std::uint64_t seed = 0;
  std::uint64_t shuffle_seed = 0;
};

// Windows and targets are already scaled.
struct TrainData {
  WindowedDataset train;
  WindowedDataset validation;
};

struct TrainResult {
  PiModel model;
  TrainReport report;
};

// Trains from the spec's seed and returns the parameters of the epoch with
// the lowest validation objective.
TrainResult train(const ModelSpec& spec, const TrainData& data, const TrainConfig& cfg,
                  const Scaler& scaler = Scaler::identity());

// (min(a,b), max(a,b)); increments `crossings` when a > b.
IntervalPrediction repair_interval(double a, double b, std::size_t& crossings);

// A single interval-head model, or a (lower, upper) pair of scalar-head models.
class Forecaster {
 public:
  explicit Forecaster(PiModel interval_model);
  Forecaster(PiModel lower, PiModel upper);

  bool is_pair() const noexcept { return members_.size() == 2; }
  int lag() const noexcept { return members_.front().spec.lag; }
  const Scaler& scaler() const noexcept { return members_.front().scaler; }
  const std::vector<PiModel>& members() const noexcept { return members_; }

  // Raw (first, second) head values in original units, one row per window
  // column of `windows` (lag x count, original units). No repair applied.
  Eigen::MatrixXd raw_bounds(const Eigen::MatrixXd& windows, const KernelOptions& opts = {}) const;

 private:
  std::vector<PiModel> members_;
};

// Windows as columns (lag x count); converts a WindowedDataset's row-major storage.
Eigen::MatrixXd window_matrix(const WindowedDataset& data);

// One repaired interval per window. Actuals are attached from the dataset targets
// when `attach_actuals` is set; timestamps are taken from `stamps` when non-empty.
IntervalForecast forecast(const Forecaster& model, const WindowedDataset& windows,
                          std::span<const Timestamp> stamps = {}, bool attach_actuals = true,
                          const KernelOptions& opts = {});

// Teacher-forced one-step intervals for observations [begin, end) of
// `series`, each from the `lag` true observations preceding it.
IntervalForecast rolling_forecast(const Forecaster& model, const TimeSeries& series, std::size_t begin,
                                  std::size_t end, const KernelOptions& opts = {});

struct QuantilePair {
  PiModel lower;
  PiModel upper;
  TrainReport lower_report;
  TrainReport upper_report;
  double q_lo = 0.0;
  double q_hi = 0.0;
};

// Two scalar-head models trained with pinball losses at q_lo and q_hi
// (defaults alpha/2 and 1 - alpha/2). `cfg.loss` is ignored.
QuantilePair train_quantile_pair(ModelSpec spec, const TrainData& data, double alpha, std::optional<double> q_lo,
                                 std::optional<double> q_hi, const TrainConfig& cfg,
                                 const Scaler& scaler = Scaler::identity());

}  // namespace tubecast
