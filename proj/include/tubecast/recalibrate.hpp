#pragma once

#include <functional>
#include <string>
#include <vector>

#include "tubecast/metrics.hpp"
#include "tubecast/trainer.hpp"

namespace tubecast {

// Width-penalty tuning: train at delta = 0, then keep retraining with delta
// raised by `delta_step` while validation PICP stays above target + margin.
struct RecalConfig {
  double target = 0.95;
  double delta_step = 0.01;
  double margin = 0.005;
  int max_rounds = 20;  // total rounds, including the delta = 0 round

  void validate() const;
};

enum class StopReason { picp_at_target, picp_below_target, max_rounds };

std::string to_string(StopReason r);

struct RecalRound {
  int index = 0;
  double delta = 0.0;
  double validation_picp = 0.0;
  double validation_mpiw = 0.0;
  double wall_seconds = 0.0;
};

struct RecalReport {
  std::vector<RecalRound> rounds;
  int chosen_round = 0;
  StopReason stop_reason = StopReason::picp_at_target;
  std::string warning;
};

struct RecalResult {
  PiModel model;
  RecalReport report;
  TrainReport train_report;  // of the chosen round
};

// delta -> trained model for that round. Exposed so the stopping rule can be
// exercised without training.
using RoundTrainer = std::function<TrainResult(double delta)>;

RecalResult recalibrate_rounds(const RoundTrainer& train_round, const RecalConfig& cfg);

// Every round retrains from the spec's seed; only delta changes.
RecalResult recalibrate(const ModelSpec& spec, const TrainData& data, const TrainConfig& train_cfg,
                        const RecalConfig& recal_cfg, const Scaler& scaler = Scaler::identity());

struct RCandidate {
  double r = 0.0;
  EvalSummary validation;
  RecalReport recal;
};

struct TuneResult {
  double best_r = 0.5;
  RecalResult result;
  std::vector<RCandidate> candidates;
};

// Recalibrates once per r and keeps the winner under compare_models on the
// validation windows (ties keep the earlier grid entry).
TuneResult tune_r(const ModelSpec& spec, const TrainData& data, const std::vector<double>& r_grid,
                  const TrainConfig& train_cfg, const RecalConfig& recal_cfg, const Scaler& scaler = Scaler::identity());

}  // namespace tubecast
