#include "tubecast/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "tubecast/error.hpp"
#include "tubecast/io.hpp"
#include "tubecast/kernels.hpp"
#include "tubecast/synth.hpp"

namespace tubecast {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw InputError("cannot create output directory '" + dir.string() + "': " + ec.message());
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

std::string to_text(const IntervalForecast& f) {
  std::ostringstream os;
  io::write_forecast_csv(os, f);
  return os.str();
}

std::string to_text(const TrainReport& r) {
  std::ostringstream os;
  io::write_train_report(os, r);
  return os.str();
}

const char* pretty(Method m) {
  switch (m) {
    case Method::tube: return "Tube";
    case Method::qd: return "QD";
    case Method::quantile: return "Quantile";
  }
  return "?";
}

std::string upper(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

MethodRun run_with_lag(const RunConfig& cfg, Method method, Architecture arch, const PreparedData& data,
                       std::uint64_t seed, int lag) {
  MethodRun run;
  run.method = method;
  run.architecture = arch;
  run.lag = lag;
  run.seed = seed;
  run.r = method == Method::tube ? cfg.loss.r : 0.5;

  ModelSpec spec = cfg.model_spec(arch, lag, seed);
  const TrainConfig tc = cfg.train_config(method, seed);
  const TrainData td = data.train_data(lag);

  switch (method) {
    case Method::tube:
      if (cfg.recalibration.enabled && !cfg.loss.r_grid.empty()) {
        TuneResult tuned = tune_r(spec, td, cfg.loss.r_grid, tc, cfg.recal_config(), data.scaler);
        run.r = tuned.best_r;
        run.model.emplace(std::move(tuned.result.model));
        run.train_reports.emplace_back("", std::move(tuned.result.train_report));
        run.recal = std::move(tuned.result.report);
        run.r_candidates = std::move(tuned.candidates);
      } else if (cfg.recalibration.enabled) {
        RecalResult res = recalibrate(spec, td, tc, cfg.recal_config(), data.scaler);
        run.model.emplace(std::move(res.model));
        run.train_reports.emplace_back("", std::move(res.train_report));
        run.recal = std::move(res.report);
      } else {
        TrainResult res = train(spec, td, tc, data.scaler);
        run.model.emplace(std::move(res.model));
        run.train_reports.emplace_back("", std::move(res.report));
      }
      break;
    case Method::qd: {
      TrainResult res = train(spec, td, tc, data.scaler);
      run.model.emplace(std::move(res.model));
      run.train_reports.emplace_back("", std::move(res.report));
      break;
    }
    case Method::quantile: {
      QuantilePair pair = train_quantile_pair(spec, td, cfg.loss.alpha, cfg.loss.quantile_low, cfg.loss.quantile_high,
                                              tc, data.scaler);
      run.model.emplace(std::move(pair.lower), std::move(pair.upper));
      run.train_reports.emplace_back("lower", std::move(pair.lower_report));
      run.train_reports.emplace_back("upper", std::move(pair.upper_report));
      break;
    }
  }

  run.validation = summarize(forecast(*run.model, data.validation_windows(lag), {}, true, tc.kernels), run.r);
  run.test = rolling_forecast(*run.model, data.series, data.test_begin(), data.series.size(), tc.kernels);
  run.test_summary = summarize(run.test, run.r);
  return run;
}

}  // namespace

TrainData PreparedData::train_data(int lag) const {
  const std::vector<double> scaled = scaler.apply(series.values());
  const std::span<const double> all(scaled);
  const auto l = static_cast<std::size_t>(lag);
  return {make_windows(all.subspan(0, sizes.train), l),
          make_windows_with_context(all.subspan(0, sizes.train), all.subspan(sizes.train, sizes.validation), l)};
}

WindowedDataset PreparedData::validation_windows(int lag) const {
  const auto all = series.values();
  return make_windows_with_context(all.subspan(0, sizes.train), all.subspan(sizes.train, sizes.validation),
                                   static_cast<std::size_t>(lag));
}

PreparedData prepare(const TimeSeries& series, const SplitSpec& split) {
  const ChronoSplit parts = chrono_split(series, split);
  return {series, parts.sizes, fit_scaler(parts.train)};
}

TimeSeries load_series(const RunConfig& cfg) {
  if (cfg.data.path) return read_csv_file(*cfg.data.path, cfg.data.columns);
  return generate(*cfg.data.synthetic);
}

std::string row_label(Method method, Architecture arch) { return upper(to_string(arch)) + "+" + pretty(method); }

MethodRun run_method(const RunConfig& cfg, Method method, Architecture arch, const PreparedData& data,
                     std::uint64_t seed) {
  const auto started = std::chrono::steady_clock::now();
  if (cfg.lag) {
    MethodRun run = run_with_lag(cfg, method, arch, data, seed, *cfg.lag);
    run.wall_seconds = seconds_since(started);
    return run;
  }
  std::optional<MethodRun> best;
  std::vector<std::pair<int, EvalSummary>> candidates;
  for (int lag : cfg.lag_grid) {
    MethodRun run = run_with_lag(cfg, method, arch, data, seed, lag);
    candidates.emplace_back(lag, run.validation);
    if (!best || compare_models(run.validation, best->validation, cfg.coverage_target()) == Comparison::a_better)
      best = std::move(run);
  }
  best->lag_candidates = std::move(candidates);
  best->wall_seconds = seconds_since(started);
  return std::move(*best);
}

void cmd_synth(const SyntheticSpec& spec, const std::string& path) {
  const TimeSeries series = generate(spec);
  std::ostringstream os;
  write_series_csv(os, series);
  const fs::path p(path);
  if (p.has_parent_path()) ensure_dir(p.parent_path());
  io::write_text_file(path, os.str());
}

MethodRun cmd_train(const RunConfig& cfg) {
  cfg.validate();
  set_kernel_threads(cfg.train.threads);
  const fs::path out(cfg.output_dir);
  ensure_dir(out);

  const PreparedData data = prepare(load_series(cfg), cfg.split);
  MethodRun run = run_method(cfg, cfg.loss.method, cfg.model.architecture, data, cfg.seed);

  io::save_model_file((out / "model.json").string(), *run.model);
  json timings = {{"total_seconds", run.wall_seconds}};
  for (const auto& [name, report] : run.train_reports) {
    const std::string suffix = name.empty() ? "" : "_" + name;
    io::write_text_file((out / ("train_report" + suffix + ".jsonl")).string(), to_text(report));
    timings["train" + suffix + "_seconds"] = report.wall_seconds;
  }
  if (run.recal) {
    json recal = io::to_json(*run.recal);
    if (!run.r_candidates.empty()) {
      json cands = json::array();
      for (const auto& c : run.r_candidates) cands.push_back({{"r", c.r}, {"validation", io::to_json(c.validation)}});
      recal["r_candidates"] = cands;
      recal["chosen_r"] = run.r;
    }
    io::write_text_file((out / "recal_report.json").string(), dump(recal));
    json rounds = json::array();
    for (const auto& r : run.recal->rounds) rounds.push_back(r.wall_seconds);
    timings["recal_round_seconds"] = rounds;
  }
  io::write_text_file((out / "eval_summary.json").string(), dump(io::to_json(run.test_summary)));
  json info = {{"method", to_string(run.method)},
               {"architecture", to_string(run.architecture)},
               {"lag", run.lag},
               {"r", run.r},
               {"seed", run.seed},
               {"split", {{"train", data.sizes.train}, {"validation", data.sizes.validation}, {"test", data.sizes.test}}},
               {"scaler", {{"center", data.scaler.center()}, {"spread", data.scaler.spread()}}},
               {"validation", io::to_json(run.validation)},
               {"test", io::to_json(run.test_summary)}};
  if (!run.lag_candidates.empty()) {
    json lags = json::array();
    for (const auto& [lag, s] : run.lag_candidates) lags.push_back({{"lag", lag}, {"validation", io::to_json(s)}});
    info["lag_candidates"] = lags;
  }
  io::write_text_file((out / "run.json").string(), dump(info));
  io::write_text_file((out / "config.json").string(), dump(to_json(cfg)));
  io::write_text_file((out / "forecast.csv").string(), to_text(run.test));
  io::write_text_file((out / "timings.json").string(), dump(timings));
  return run;
}

IntervalForecast forecast_from_context(const Forecaster& model, const TimeSeries& context, const KernelOptions& opts) {
  const auto lag = static_cast<std::size_t>(model.lag());
  if (context.size() < lag)
    throw InputError("forecast: context has " + std::to_string(context.size()) + " observations, model needs " +
                     std::to_string(lag));
  IntervalForecast out = rolling_forecast(model, context, lag, context.size(), opts);

  const auto values = context.values();
  const WindowedDataset last(lag, std::vector<double>(values.end() - static_cast<std::ptrdiff_t>(lag), values.end()),
                             {0.0});
  const auto stamps = context.timestamps();
  const Timestamp& tail = stamps.back();
  const std::int64_t step = stamps.size() >= 2 ? tail.key - stamps[stamps.size() - 2].key : 1;
  const std::int64_t next_key = tail.key + step;
  const Timestamp next{next_key, parse_iso8601(tail.text) ? format_iso8601(next_key) : std::to_string(next_key)};
  IntervalForecast future = forecast(model, last, std::span<const Timestamp>(&next, 1), false, opts);
  out.steps.push_back(std::move(future.steps.front()));
  out.crossing_count += future.crossing_count;
  return out;
}

IntervalForecast cmd_forecast(const std::string& model_path, const std::string& context_path,
                              const ColumnConfig& columns, const std::string& out_path) {
  const Forecaster model = io::load_model_file(model_path);
  const TimeSeries context = read_csv_file(context_path, columns);
  IntervalForecast fc = forecast_from_context(model, context);
  if (out_path.empty() || out_path == "-") {
    io::write_forecast_csv(std::cout, fc);
  } else {
    const fs::path p(out_path);
    if (p.has_parent_path()) ensure_dir(p.parent_path());
    io::write_text_file(out_path, to_text(fc));
  }
  return fc;
}

EvaluateOutcome cmd_evaluate(const std::vector<std::string>& forecast_paths, double r, double target,
                             const std::string& out_dir) {
  if (forecast_paths.empty()) throw ConfigError("evaluate: no forecast files given");
  if (!(r > 0.0 && r < 1.0)) throw ConfigError("evaluate: r must lie in (0,1)");
  if (!(target > 0.0 && target < 1.0)) throw ConfigError("evaluate: target must lie in (0,1)");

  EvaluateOutcome outcome;
  for (const auto& path : forecast_paths) {
    std::ifstream in(path);
    if (!in) throw InputError("evaluate: cannot open '" + path + "'");
    const IntervalForecast fc = io::read_forecast_csv(in);
    for (const auto& s : fc.steps)
      if (!s.actual) throw InputError("evaluate: '" + path + "' has rows without an actual value");
    std::string name = fs::path(path).stem().string();
    for (const auto& prev : outcome.summaries)
      if (prev.name == name) name = path;
    outcome.summaries.push_back({name, summarize(fc, r)});
  }
  if (outcome.summaries.size() >= 2) outcome.ranking = rank_models(outcome.summaries, target);

  if (!out_dir.empty()) {
    ensure_dir(out_dir);
    json doc = json::object();
    for (const auto& s : outcome.summaries) doc[s.name] = io::to_json(s.summary);
    io::write_text_file((fs::path(out_dir) / "evaluation.json").string(), dump(doc));
    if (!outcome.ranking.empty()) {
      io::write_text_file((fs::path(out_dir) / "rank.txt").string(), format_rank_table(outcome.ranking));
      io::write_text_file((fs::path(out_dir) / "rank.csv").string(), format_rank_csv(outcome.ranking));
    }
  }
  return outcome;
}

BenchmarkOutcome cmd_benchmark(const RunConfig& cfg) {
  cfg.validate();
  const std::size_t combos = cfg.benchmark.methods.size() * cfg.benchmark.architectures.size();
  if (combos < 2) throw ConfigError("benchmark: needs at least 2 method/architecture combinations");
  set_kernel_threads(cfg.train.threads);
  const fs::path out(cfg.output_dir);
  ensure_dir(out);

  const PreparedData data = prepare(load_series(cfg), cfg.split);
  BenchmarkOutcome outcome;
  json rows = json::array();
  json timings = json::object();
  std::vector<NamedSummary> ok;
  std::vector<MethodMpiw> by_method;

  std::uint64_t index = 0;
  for (Method method : cfg.benchmark.methods) {
    for (Architecture arch : cfg.benchmark.architectures) {
      BenchmarkRow row{row_label(method, arch), method, arch, cfg.seed ^ index++, std::nullopt, {}};
      json record = {{"label", row.label},
                     {"method", to_string(method)},
                     {"architecture", to_string(arch)},
                     {"seed", row.seed}};
      try {
        MethodRun run = run_method(cfg, method, arch, data, row.seed);
        row.summary = run.test_summary;
        record["lag"] = run.lag;
        record["r"] = run.r;
        record["validation"] = io::to_json(run.validation);
        record["test"] = io::to_json(run.test_summary);
        if (run.recal) record["recalibration"] = io::to_json(*run.recal);
        timings[row.label] = run.wall_seconds;
        const fs::path dir = out / "rows" / row.label;
        ensure_dir(dir);
        io::write_text_file((dir / "forecast.csv").string(), to_text(run.test));
        io::save_model_file((dir / "model.json").string(), *run.model);
        ok.push_back({row.label, *row.summary});
        auto it = std::find_if(by_method.begin(), by_method.end(),
                               [&](const MethodMpiw& m) { return m.method == pretty(method); });
        if (it == by_method.end()) {
          by_method.push_back({pretty(method), {}});
          it = by_method.end() - 1;
        }
        it->mpiw.push_back(row.summary->mpiw);
      } catch (const std::exception& e) {
        row.error = e.what();
        record["error"] = row.error;
        std::cerr << "benchmark: " << row.label << " failed: " << row.error << "\n";
      }
      rows.push_back(record);
      outcome.rows.push_back(std::move(row));
    }
  }

  io::write_text_file((out / "benchmark.json").string(), dump({{"rows", rows}}));
  io::write_text_file((out / "timings.json").string(), dump(timings));
  io::write_text_file((out / "config.json").string(), dump(to_json(cfg)));
  if (ok.size() >= 2) {
    outcome.ranking = rank_models(ok, cfg.coverage_target());
    io::write_text_file((out / "rank.txt").string(), format_rank_table(outcome.ranking));
    io::write_text_file((out / "rank.csv").string(), format_rank_csv(outcome.ranking));
  }
  const bool has_tube = std::any_of(by_method.begin(), by_method.end(), [](const auto& m) { return m.method == "Tube"; });
  if (has_tube && by_method.size() >= 2) {
    outcome.improvement = improvement_table(by_method, "Tube");
    io::write_text_file((out / "improvement.txt").string(), format_improvement_table(outcome.improvement, "Tube"));
    io::write_text_file((out / "improvement.csv").string(), format_improvement_csv(outcome.improvement));
  }
  return outcome;
}

}  // namespace tubecast
