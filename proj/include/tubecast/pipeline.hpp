#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "tubecast/config.hpp"
#include "tubecast/metrics.hpp"
#include "tubecast/recalibrate.hpp"
#include "tubecast/series.hpp"
#include "tubecast/trainer.hpp"

namespace tubecast {

// A series split chronologically, with the scaler fitted on its training part.
struct PreparedData {
  TimeSeries series;
  SplitSizes sizes;
  Scaler scaler;

  std::size_t validation_begin() const noexcept { return sizes.train; }
  std::size_t test_begin() const noexcept { return sizes.train + sizes.validation; }

  // Scaled training windows (within the training segment) and scaled
  // validation windows (history drawn from the end of the training segment).
  TrainData train_data(int lag) const;
  // Validation windows in original units.
  WindowedDataset validation_windows(int lag) const;
};

PreparedData prepare(const TimeSeries& series, const SplitSpec& split);
TimeSeries load_series(const RunConfig& cfg);

struct MethodRun {
  Method method = Method::tube;
  Architecture architecture = Architecture::mlp;
  int lag = 0;
  double r = 0.5;
  std::uint64_t seed = 0;
  std::optional<Forecaster> model;
  std::vector<std::pair<std::string, TrainReport>> train_reports;
  std::optional<RecalReport> recal;
  std::vector<RCandidate> r_candidates;
  std::vector<std::pair<int, EvalSummary>> lag_candidates;
  EvalSummary validation;
  IntervalForecast test;
  EvalSummary test_summary;
  double wall_seconds = 0.0;
};

// Trains one method/architecture combination and forecasts the test segment.
MethodRun run_method(const RunConfig& cfg, Method method, Architecture arch, const PreparedData& data,
                     std::uint64_t seed);

// "MLP+Tube" style label.
std::string row_label(Method method, Architecture arch);

void cmd_synth(const SyntheticSpec& spec, const std::string& path);

// Writes model.json, train_report*.jsonl, recal_report.json (when
// recalibrating), eval_summary.json, forecast.csv and timings.json.
MethodRun cmd_train(const RunConfig& cfg);

// Teacher-forced intervals for every context value after the first `lag`,
// followed by one interval for the step after the context.
IntervalForecast forecast_from_context(const Forecaster& model, const TimeSeries& context,
                                       const KernelOptions& opts = {});
IntervalForecast cmd_forecast(const std::string& model_path, const std::string& context_path,
                              const ColumnConfig& columns, const std::string& out_path);

struct EvaluateOutcome {
  std::vector<NamedSummary> summaries;
  std::vector<RankEntry> ranking;  // empty for a single file
};

EvaluateOutcome cmd_evaluate(const std::vector<std::string>& forecast_paths, double r, double target,
                             const std::string& out_dir);

struct BenchmarkRow {
  std::string label;
  Method method = Method::tube;
  Architecture architecture = Architecture::mlp;
  std::uint64_t seed = 0;
  std::optional<EvalSummary> summary;
  std::string error;  // set when the row failed
};

struct BenchmarkOutcome {
  std::vector<BenchmarkRow> rows;
  std::vector<RankEntry> ranking;
  std::vector<ImprovementRow> improvement;
};

// Every row shares the split, scaler and test windows; row i trains with seed ^ i.
BenchmarkOutcome cmd_benchmark(const RunConfig& cfg);

}  // namespace tubecast
