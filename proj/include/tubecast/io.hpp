#pragma once

#include <iosfwd>
#include <string>

#include <json.hpp>

#include "tubecast/metrics.hpp"
#include "tubecast/net.hpp"
#include "tubecast/recalibrate.hpp"
#include "tubecast/trainer.hpp"

namespace tubecast::io {

inline constexpr int kModelFormatVersion = 1;

nlohmann::json to_json(const ModelSpec& spec);
ModelSpec model_spec_from_json(const nlohmann::json& j);

nlohmann::json to_json(const EvalSummary& s);
EvalSummary eval_summary_from_json(const nlohmann::json& j);

// One JSON record per line: a header record, then one record per epoch.
// Wall-clock time is left out so repeated runs produce identical files.
void write_train_report(std::ostream& os, const TrainReport& report);

nlohmann::json to_json(const RecalReport& report);

// Self-describing model document: format tag and version, then one member
// (interval head) or two members (lower and upper quantile models), each
// with its spec, scaler and parameters.
void save_model(std::ostream& os, const Forecaster& model);
Forecaster load_model(std::istream& is);
void save_model_file(const std::string& path, const Forecaster& model);
Forecaster load_model_file(const std::string& path);

// "timestamp,lower,upper[,actual]" with 12 significant digits. The actual
// column is present when any step has one and left blank where missing.
void write_forecast_csv(std::ostream& os, const IntervalForecast& forecast);
IntervalForecast read_forecast_csv(std::istream& is);

void write_text_file(const std::string& path, const std::string& contents);

}  // namespace tubecast::io
