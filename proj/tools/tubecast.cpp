#include <CLI11.hpp>

#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "tubecast/config.hpp"
#include "tubecast/error.hpp"
#include "tubecast/io.hpp"
#include "tubecast/pipeline.hpp"

namespace {

enum ExitCode : int { kOk = 0, kFailure = 1, kConfig = 2, kInput = 3, kNumeric = 4 };

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
};

tubecast::RunConfig resolve(const Globals& g) {
  tubecast::RunConfig cfg = g.config_path.empty() ? tubecast::RunConfig{} : tubecast::load_run_config(g.config_path);
  if (g.seed) cfg.seed = *g.seed;
  if (!g.out.empty()) cfg.output_dir = g.out;
  return cfg;
}

void print_summary(const std::string& name, const tubecast::EvalSummary& s) {
  std::cout << name << ": " << tubecast::io::to_json(s).dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Prediction-interval forecasting with the Tube loss"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--config", g.config_path, "Run configuration (JSON)");
  app.add_option("--seed", g.seed, "Global seed, overrides the config");
  app.add_option("--out", g.out, "Output directory, overrides the config");

  auto* print_cmd = app.add_subcommand("print-config", "Print the resolved configuration with all defaults");

  std::size_t synth_n = 0;
  std::string synth_kind = "sine_hetero";
  std::string synth_file = "series.csv";
  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic series as CSV");
  auto* kind_opt = synth_cmd->add_option("--kind", synth_kind, "sine_hetero, ar1 or lognormal_skew");
  auto* n_opt = synth_cmd->add_option("--n", synth_n, "Number of observations");
  synth_cmd->add_option("--file", synth_file, "File name inside the output directory");

  auto* train_cmd = app.add_subcommand("train", "Train, optionally recalibrate, and evaluate on the test segment");

  std::string model_path, context_path, forecast_out;
  tubecast::ColumnConfig columns;
  auto* forecast_cmd = app.add_subcommand("forecast", "One-step intervals from a saved model and a context CSV");
  forecast_cmd->add_option("--model", model_path, "Model file written by train")->required();
  forecast_cmd->add_option("--context", context_path, "CSV with at least lag observations")->required();
  forecast_cmd->add_option("--timestamp-column", columns.timestamp_column);
  forecast_cmd->add_option("--value-column", columns.value_column);
  forecast_cmd->add_option("--output", forecast_out, "Output CSV (default: stdout)");

  std::vector<std::string> eval_files;
  double eval_r = 0.5, eval_target = 0.95;
  auto* eval_cmd = app.add_subcommand("evaluate", "PICP/MPIW summaries and ranking of forecast CSVs");
  eval_cmd->add_option("files", eval_files, "Forecast CSVs with an actual column")->required();
  eval_cmd->add_option("--r", eval_r, "Blend-line position for region counts");
  eval_cmd->add_option("--target", eval_target, "Coverage target for ranking");

  auto* bench_cmd = app.add_subcommand("benchmark", "Train every method x architecture row on shared splits");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (print_cmd->parsed()) {
      std::cout << tubecast::to_json(resolve(g)).dump(2) << "\n";
    } else if (synth_cmd->parsed()) {
      tubecast::RunConfig cfg = resolve(g);
      tubecast::SyntheticSpec synth_spec = cfg.data.synthetic.value_or(tubecast::SyntheticSpec{});
      if (*kind_opt) synth_spec.kind = tubecast::parse_synthetic_kind(synth_kind);
      if (*n_opt) synth_spec.n = synth_n;
      if (g.seed) synth_spec.seed = *g.seed;
      synth_spec.validate();
      const std::string dir = g.out.empty() ? "." : g.out;
      tubecast::cmd_synth(synth_spec, (std::filesystem::path(dir) / synth_file).string());
    } else if (train_cmd->parsed()) {
      const auto run = tubecast::cmd_train(resolve(g));
      print_summary("test", run.test_summary);
    } else if (forecast_cmd->parsed()) {
      tubecast::cmd_forecast(model_path, context_path, columns, forecast_out);
    } else if (eval_cmd->parsed()) {
      const auto outcome = tubecast::cmd_evaluate(eval_files, eval_r, eval_target, g.out);
      for (const auto& s : outcome.summaries) print_summary(s.name, s.summary);
      if (!outcome.ranking.empty()) std::cout << tubecast::format_rank_table(outcome.ranking);
    } else if (bench_cmd->parsed()) {
      const auto outcome = tubecast::cmd_benchmark(resolve(g));
      if (!outcome.ranking.empty()) std::cout << tubecast::format_rank_table(outcome.ranking) << "\n";
      if (!outcome.improvement.empty())
        std::cout << tubecast::format_improvement_table(outcome.improvement, "Tube");
      for (const auto& row : outcome.rows)
        if (!row.error.empty()) return kFailure;
    }
  } catch (const tubecast::ConfigError& e) {
    std::cerr << "tubecast: config error: " << e.what() << "\n";
    return kConfig;
  } catch (const tubecast::ParseError& e) {
    std::cerr << "tubecast: input error: " << e.what() << "\n";
    return kInput;
  } catch (const tubecast::InputError& e) {
    std::cerr << "tubecast: input error: " << e.what() << "\n";
    return kInput;
  } catch (const tubecast::NumericError& e) {
    std::cerr << "tubecast: numeric error: " << e.what() << "\n";
    return kNumeric;
  } catch (const std::exception& e) {
    std::cerr << "tubecast: " << e.what() << "\n";
    return kFailure;
  }
  return kOk;
}
