#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tubecast/net.hpp"
#include "tubecast/recalibrate.hpp"
#include "tubecast/series.hpp"
#include "tubecast/synth.hpp"
#include "tubecast/trainer.hpp"

namespace tubecast {

// Interval method: tube loss, QD loss, or a pair of pinball quantile models.
enum class Method { tube, qd, quantile };

std::string to_string(Method m);
Method parse_method(const std::string& s);

struct DataConfig {
  std::optional<std::string> path;
  ColumnConfig columns;
  std::optional<SyntheticSpec> synthetic = SyntheticSpec{};
};

struct LossConfig {
  Method method = Method::tube;
  double alpha = 0.05;
  double r = 0.5;
  double delta = 0.0;
  std::vector<double> r_grid;  // non-empty: tune r on validation
  double qd_lambda = 15.0;
  double qd_softness = 160.0;
  std::optional<double> quantile_low;   // default alpha/2
  std::optional<double> quantile_high;  // default 1 - alpha/2
};

struct ModelConfig {
  Architecture architecture = Architecture::mlp;
  std::optional<std::vector<int>> hidden_sizes;  // default depends on architecture
  std::vector<int> tcn_dilations{1, 2, 4};
  int kernel_width = 3;
};

struct TrainSection {
  int epochs = 200;
  int batch_size = 64;
  std::string optimizer = "adam";
  std::optional<double> step;  // adam 1e-3, sgd 1e-2
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double momentum = 0.9;
  int patience = 20;
  int threads = 0;
  Execution execution = Execution::parallel;
  std::size_t shard_size = 16;
};

struct RecalSection {
  bool enabled = false;
  std::optional<double> target;  // default 1 - alpha
  double delta_step = 0.01;
  double margin = 0.005;
  int max_rounds = 20;
};

struct BenchmarkSection {
  std::vector<Method> methods{Method::tube, Method::qd, Method::quantile};
  std::vector<Architecture> architectures{Architecture::mlp};
};

struct RunConfig {
  DataConfig data;
  SplitSpec split;
  std::optional<int> lag = 24;  // empty: tune over lag_grid
  std::vector<int> lag_grid{12, 24, 48};
  ModelConfig model;
  LossConfig loss;
  TrainSection train;
  RecalSection recalibration;
  BenchmarkSection benchmark;
  std::string output_dir = "out";
  std::uint64_t seed = 0;

  // Checks every field against the preconditions of the modules it feeds.
  void validate() const;

  double coverage_target() const { return recalibration.target.value_or(1.0 - loss.alpha); }
  ModelSpec model_spec(Architecture arch, int lag, std::uint64_t seed) const;
  TrainConfig train_config(Method method, std::uint64_t seed) const;
  RecalConfig recal_config() const;
};

// Unknown keys and mistyped values raise ConfigError naming the offending path.
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::string& path);
nlohmann::json to_json(const RunConfig& cfg);

}  // namespace tubecast
