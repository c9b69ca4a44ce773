#include "tubecast/recalibrate.hpp"

#include <chrono>

#include "tubecast/error.hpp"

namespace tubecast {

void RecalConfig::validate() const {
  if (!(target > 0.0 && target < 1.0)) throw ConfigError("recalibration: target must lie in (0,1)");
  if (!(delta_step > 0.0)) throw ConfigError("recalibration: delta_step must be positive");
  if (!(margin >= 0.0)) throw ConfigError("recalibration: margin must be >= 0");
  if (max_rounds < 1) throw ConfigError("recalibration: max_rounds must be >= 1");
}

std::string to_string(StopReason r) {
  switch (r) {
    case StopReason::picp_at_target: return "picp_at_target";
    case StopReason::picp_below_target: return "picp_below_target";
    case StopReason::max_rounds: return "max_rounds";
  }
  return "?";
}

RecalResult recalibrate_rounds(const RoundTrainer& train_round, const RecalConfig& cfg) {
  cfg.validate();
  RecalReport report;

  auto run = [&](int k) {
    const double delta = k * cfg.delta_step;
    const auto started = std::chrono::steady_clock::now();
    TrainResult res = train_round(delta);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    if (!res.report.validation_picp || !res.report.validation_mpiw)
      throw ConfigError("recalibration: round trainer did not report validation PICP/MPIW");
    report.rounds.push_back({k, delta, *res.report.validation_picp, *res.report.validation_mpiw, secs});
    return res;
  };

  TrainResult chosen = run(0);
  if (report.rounds[0].validation_picp < cfg.target) {
    report.stop_reason = StopReason::picp_below_target;
    report.warning = "validation PICP at delta = 0 is below target; recalibration cannot raise coverage "
                     "(change the architecture or lag)";
    return {std::move(chosen.model), std::move(report), std::move(chosen.report)};
  }

  report.stop_reason = StopReason::picp_at_target;
  int k = 0;
  while (report.rounds.back().validation_picp > cfg.target + cfg.margin) {
    if (k + 1 >= cfg.max_rounds) {
      report.stop_reason = StopReason::max_rounds;
      break;
    }
    ++k;
    TrainResult res = run(k);
    const RecalRound& round = report.rounds.back();
    if (round.validation_picp < cfg.target) {
      report.stop_reason = StopReason::picp_below_target;
      break;
    }
    if (round.validation_mpiw < report.rounds[static_cast<std::size_t>(report.chosen_round)].validation_mpiw) {
      report.chosen_round = k;
      chosen = std::move(res);
    }
  }
  return {std::move(chosen.model), std::move(report), std::move(chosen.report)};
}

RecalResult recalibrate(const ModelSpec& spec, const TrainData& data, const TrainConfig& train_cfg,
                        const RecalConfig& recal_cfg, const Scaler& scaler) {
  if (train_cfg.loss.kind != LossKind::tube) throw ConfigError("recalibration: requires the tube loss");
  if (data.validation.empty()) throw ConfigError("recalibration: validation segment is empty");
  return recalibrate_rounds(
      [&](double delta) {
        TrainConfig c = train_cfg;
        c.loss.tube.delta = delta;
        return train(spec, data, c, scaler);
      },
      recal_cfg);
}

namespace {

WindowedDataset unscale(const WindowedDataset& d, const Scaler& s) {
  return WindowedDataset(d.lag(), s.invert(d.inputs()), s.invert(d.targets()));
}

}  // namespace

TuneResult tune_r(const ModelSpec& spec, const TrainData& data, const std::vector<double>& r_grid,
                  const TrainConfig& train_cfg, const RecalConfig& recal_cfg, const Scaler& scaler) {
  if (r_grid.empty()) throw ConfigError("tune_r: empty r grid");
  for (double r : r_grid)
    if (!(r > 0.0 && r < 1.0)) throw ConfigError("tune_r: r values must lie in (0,1)");

  const WindowedDataset validation = unscale(data.validation, scaler);
  TuneResult out;
  std::size_t best = 0;
  for (std::size_t i = 0; i < r_grid.size(); ++i) {
    TrainConfig c = train_cfg;
    c.loss.tube.r = r_grid[i];
    RecalResult res = recalibrate(spec, data, c, recal_cfg, scaler);
    const EvalSummary summary = summarize(forecast(Forecaster(res.model), validation, {}, true, c.kernels), r_grid[i]);
    out.candidates.push_back({r_grid[i], summary, res.report});
    if (i == 0 ||
        compare_models(summary, out.candidates[best].validation, recal_cfg.target) == Comparison::a_better) {
      best = i;
      out.best_r = r_grid[i];
      out.result = std::move(res);
    }
  }
  return out;
}

}  // namespace tubecast
