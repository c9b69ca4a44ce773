#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "oracles.hpp"
#include "tubecast/error.hpp"
#include "tubecast/synth.hpp"
#include "tubecast/trainer.hpp"

using namespace tubecast;

namespace {

// All-zero inputs make any network a constant predictor, so training reduces
// to fitting constant bounds.
WindowedDataset zero_windows(const std::vector<double>& targets) {
  return WindowedDataset(1, std::vector<double>(targets.size(), 0.0), targets);
}

std::vector<double> uniform_samples(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<double> v(n);
  for (auto& x : v) x = u(gen);
  return v;
}

ModelSpec constant_spec(HeadKind head) {
  ModelSpec s;
  s.architecture = Architecture::mlp;
  s.hidden_sizes = {1};
  s.lag = 1;
  s.head = head;
  s.seed = 7;
  return s;
}

TrainConfig constant_config(const LossSpec& loss) {
  TrainConfig c;
  c.epochs = 150;
  c.early_stop_patience = 150;
  c.batch_size = 64;
  c.optimizer = AdamConfig{5e-3};
  c.loss = loss;
  c.shuffle_seed = 3;
  return c;
}

double empirical_quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  return v[static_cast<std::size_t>(q * static_cast<double>(v.size() - 1))];
}

// Scaled windows of a synthetic series, split 70/30 into train and validation.
TrainData synthetic_data(int lag, std::size_t n, std::uint64_t seed, Scaler* scaler_out = nullptr) {
  SyntheticSpec spec;
  spec.n = n;
  spec.seed = seed;
  const TimeSeries series = generate(spec);
  const auto values = series.values();
  const std::size_t cut = n * 7 / 10;
  const Scaler scaler = fit_scaler(values.subspan(0, cut));
  std::vector<double> scaled(values.begin(), values.end());
  for (auto& v : scaled) v = scaler.apply(v);
  if (scaler_out) *scaler_out = scaler;
  const std::span<const double> all(scaled);
  return {make_windows(all.subspan(0, cut), static_cast<std::size_t>(lag)),
          make_windows_with_context(all.subspan(0, cut), all.subspan(cut), static_cast<std::size_t>(lag))};
}

TrainConfig small_config(const LossSpec& loss, int epochs = 15) {
  TrainConfig c;
  c.epochs = epochs;
  c.early_stop_patience = epochs;
  c.batch_size = 32;
  c.loss = loss;
  c.shuffle_seed = 11;
  return c;
}

ModelSpec small_mlp(int lag) {
  ModelSpec s = ModelSpec::defaults_for(Architecture::mlp, lag);
  s.hidden_sizes = {16};
  s.seed = 5;
  return s;
}

}  // namespace

TEST(Train, ConstantTubeMatchesGridSearch) {
  const auto y = uniform_samples(4000, 1);
  const auto yv = uniform_samples(1000, 2);
  const TrainData data{zero_windows(y), zero_windows(yv)};
  const auto res = train(constant_spec(HeadKind::interval), data, constant_config(LossSpec::make_tube({0.1, 0.5, 0.0})));
  const Network net(res.model.spec);
  const Eigen::MatrixXd out = net.forward(res.model.params.values, Eigen::MatrixXd::Zero(1, 1));
  const double lo = std::min(out(0, 0), out(1, 0)), hi = std::max(out(0, 0), out(1, 0));
  const auto oracle = tubecast::testing::grid_search_constant(y, 0.1, 0.5, 0.0, 1.0, 0.01);
  EXPECT_NEAR(lo, oracle.lower, 0.03);
  EXPECT_NEAR(hi, oracle.upper, 0.03);
  EXPECT_NEAR(lo, 0.05, 0.03);
  EXPECT_NEAR(hi, 0.95, 0.03);
}

TEST(Train, PinballMedianOnSymmetricNoise) {
  std::mt19937_64 gen(4);
  std::normal_distribution<double> nd(0, 1);
  std::vector<double> y(4000), yv(1000);
  for (auto& v : y) v = nd(gen);
  for (auto& v : yv) v = nd(gen);
  const TrainData data{zero_windows(y), zero_windows(yv)};
  const auto res = train(constant_spec(HeadKind::scalar), data, constant_config(LossSpec::make_pinball(0.5)));
  const double q = Network(res.model.spec).forward(res.model.params.values, Eigen::MatrixXd::Zero(1, 1))(0, 0);
  EXPECT_NEAR(q, empirical_quantile(y, 0.5), 0.05);
  EXPECT_NEAR(q, 0.0, 0.05);
}

TEST(QuantilePairTrain, DefaultLevelsAndUniformQuantiles) {
  const auto y = uniform_samples(4000, 5);
  const auto yv = uniform_samples(1000, 6);
  const TrainData data{zero_windows(y), zero_windows(yv)};
  const auto pair = train_quantile_pair(constant_spec(HeadKind::interval), data, 0.05, std::nullopt, std::nullopt,
                                        constant_config(LossSpec::make_tube({})));
  EXPECT_EQ(pair.q_lo, 0.025);
  EXPECT_EQ(pair.q_hi, 0.975);
  EXPECT_EQ(pair.lower.spec.head, HeadKind::scalar);
  const Forecaster f(pair.lower, pair.upper);
  const Eigen::MatrixXd b = f.raw_bounds(Eigen::MatrixXd::Zero(1, 1));
  EXPECT_NEAR(b(0, 0), empirical_quantile(y, 0.025), 0.03);
  EXPECT_NEAR(b(1, 0), empirical_quantile(y, 0.975), 0.03);
  EXPECT_NEAR(b(0, 0), 0.025, 0.03);
  EXPECT_NEAR(b(1, 0), 0.975, 0.03);
}

TEST(QuantilePairTrain, RejectsBadLevels) {
  const auto y = uniform_samples(200, 1);
  const TrainData data{zero_windows(y), zero_windows(y)};
  const auto cfg = small_config(LossSpec::make_pinball(0.5), 2);
  EXPECT_THROW(train_quantile_pair(constant_spec(HeadKind::scalar), data, 0.05, 0.9, 0.1, cfg), ConfigError);
  EXPECT_THROW(train_quantile_pair(constant_spec(HeadKind::scalar), data, 0.05, 0.5, 0.5, cfg), ConfigError);
}

TEST(Train, DeterministicGivenSeeds) {
  const TrainData data = synthetic_data(12, 800, 1);
  const auto cfg = small_config(LossSpec::make_tube({0.05, 0.5, 0.0}), 8);
  const auto a = train(small_mlp(12), data, cfg);
  const auto b = train(small_mlp(12), data, cfg);
  ASSERT_EQ(a.report.epochs.size(), b.report.epochs.size());
  for (std::size_t i = 0; i < a.report.epochs.size(); ++i) {
    EXPECT_EQ(a.report.epochs[i].train_objective, b.report.epochs[i].train_objective);
    EXPECT_EQ(a.report.epochs[i].validation_objective, b.report.epochs[i].validation_objective);
  }
  EXPECT_EQ(a.model.params.values, b.model.params.values);
  EXPECT_EQ(a.report.epochs_run, static_cast<int>(a.report.epochs.size()));
}

TEST(Train, SerialAndParallelKernelsAgree) {
  const TrainData data = synthetic_data(12, 600, 2);
  auto cfg = small_config(LossSpec::make_tube({0.05, 0.5, 0.0}), 3);
  cfg.kernels.execution = Execution::serial;
  const auto a = train(small_mlp(12), data, cfg);
  cfg.kernels.execution = Execution::parallel;
  const auto b = train(small_mlp(12), data, cfg);
  for (std::size_t i = 0; i < a.model.params.size(); ++i)
    EXPECT_NEAR(a.model.params.values[i], b.model.params.values[i], 1e-9);
}

TEST(Train, ShuffleSeedIsolation) {
  const TrainData data = synthetic_data(12, 800, 3);
  auto cfg = small_config(LossSpec::make_tube({0.05, 0.5, 0.0}), 12);
  const auto a = train(small_mlp(12), data, cfg);
  cfg.shuffle_seed = 12;
  const auto b = train(small_mlp(12), data, cfg);
  EXPECT_NE(a.report.epochs.front().train_objective, b.report.epochs.front().train_objective);
  for (const auto* r : {&a.report, &b.report})
    EXPECT_LT(r->best_validation_objective, r->epochs.front().validation_objective);
}

TEST(Train, ReturnsBestValidationEpoch) {
  const TrainData data = synthetic_data(12, 800, 4);
  const LossSpec loss = LossSpec::make_tube({0.05, 0.5, 0.0});
  auto cfg = small_config(loss, 20);
  cfg.optimizer = AdamConfig{0.02};  // noisy enough that later epochs get worse
  const auto res = train(small_mlp(12), data, cfg);
  for (const auto& e : res.report.epochs) EXPECT_GE(e.validation_objective, res.report.best_validation_objective);
  const Network net(res.model.spec);
  const double val = batch_objective(loss, net.forward(res.model.params.values, window_matrix(data.validation)),
                                     data.validation.targets(), nullptr);
  EXPECT_NEAR(val, res.report.best_validation_objective, 1e-12);
  EXPECT_EQ(res.report.epochs[static_cast<std::size_t>(res.report.best_epoch - 1)].validation_objective,
            res.report.best_validation_objective);
}

TEST(Train, EarlyStoppingHonoursPatience) {
  const TrainData data = synthetic_data(12, 600, 5);
  auto cfg = small_config(LossSpec::make_tube({0.05, 0.5, 0.0}), 200);
  cfg.early_stop_patience = 2;
  cfg.optimizer = AdamConfig{0.05};
  const auto res = train(small_mlp(12), data, cfg);
  EXPECT_LT(res.report.epochs_run, 200);
  EXPECT_EQ(res.report.epochs_run - res.report.best_epoch, 2);
}

TEST(Train, ObjectiveDecreases) {
  const TrainData data = synthetic_data(24, 5000, 1);
  auto cfg = small_config(LossSpec::make_tube({0.05, 0.5, 0.0}), 40);
  cfg.batch_size = 64;
  const auto res = train(ModelSpec::defaults_for(Architecture::mlp, 24), data, cfg);
  ASSERT_GE(res.report.epochs.size(), 20u);
  auto median = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
  };
  std::vector<double> first, last;
  for (std::size_t i = 0; i < 10; ++i) first.push_back(res.report.epochs[i].train_objective);
  for (std::size_t i = res.report.epochs.size() - 10; i < res.report.epochs.size(); ++i)
    last.push_back(res.report.epochs[i].train_objective);
  EXPECT_GT(median(first), median(last));
}

TEST(Train, Preconditions) {
  const TrainData data = synthetic_data(12, 400, 6);
  auto cfg = small_config(LossSpec::make_pinball(0.5), 2);
  EXPECT_THROW(train(small_mlp(12), data, cfg), ConfigError);  // interval head with pinball
  cfg.loss = LossSpec::make_tube({});
  cfg.batch_size = 100000;
  EXPECT_THROW(train(small_mlp(12), data, cfg), ConfigError);
  cfg.batch_size = 32;
  EXPECT_THROW(train(small_mlp(8), data, cfg), ConfigError);  // lag mismatch
  cfg.early_stop_patience = 3;
  EXPECT_THROW(train(small_mlp(12), data, cfg), ConfigError);  // patience > epochs
  cfg.early_stop_patience = 2;
  cfg.epochs = 0;
  EXPECT_THROW(train(small_mlp(12), data, cfg), ConfigError);
}

TEST(Train, DivergenceReportsEpoch) {
  const TrainData data = synthetic_data(12, 400, 7);
  auto cfg = small_config(LossSpec::make_tube({}), 5);
  cfg.optimizer = SgdConfig{1e200, 0.0};
  try {
    train(small_mlp(12), data, cfg);
    FAIL() << "expected divergence";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("epoch"), std::string::npos) << e.what();
  }
}

TEST(Repair, Examples) {
  std::size_t crossings = 0;
  auto iv = repair_interval(5, 3, crossings);
  EXPECT_EQ(iv.lower, 3);
  EXPECT_EQ(iv.upper, 5);
  EXPECT_EQ(crossings, 1u);
  iv = repair_interval(3, 5, crossings);
  EXPECT_EQ(iv.lower, 3);
  EXPECT_EQ(crossings, 1u);
  iv = repair_interval(4, 4, crossings);
  EXPECT_EQ(iv.width(), 0.0);
  EXPECT_EQ(crossings, 1u);
}

TEST(Forecast, ZeroModelGivesScalerCenter) {
  const ModelSpec spec = small_mlp(6);
  PiModel m{spec, init_params(spec, 1), Scaler(4.2, 1.7)};
  std::fill(m.params.values.begin(), m.params.values.end(), 0.0);
  const Forecaster f(m);
  std::vector<double> values(30);
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = static_cast<double>(i % 7);
  const auto fc = forecast(f, make_windows(values, 6));
  ASSERT_EQ(fc.size(), 24u);
  for (const auto& s : fc.steps) {
    EXPECT_DOUBLE_EQ(s.lower, 4.2);
    EXPECT_DOUBLE_EQ(s.upper, 4.2);
  }
}

TEST(Forecast, CountsWidthsAndNoLeakage) {
  SyntheticSpec syn;
  syn.n = 300;
  syn.seed = 2;
  const TimeSeries series = generate(syn);
  const ModelSpec spec = ModelSpec::defaults_for(Architecture::gru, 10);
  const Scaler scaler = fit_scaler(series.values().subspan(0, 200));
  const Forecaster f(PiModel{spec, init_params(spec, 9), scaler});

  const auto fc = rolling_forecast(f, series, 200, 300);
  ASSERT_EQ(fc.size(), 100u);
  EXPECT_EQ(fc.steps.front().timestamp, series.timestamps()[200].text);
  EXPECT_EQ(*fc.steps.back().actual, series[299]);

  // Width in original units equals the scaled width times the spread.
  const auto windows = make_windows_with_context(series.values().subspan(0, 200), series.values().subspan(200), 10);
  Eigen::MatrixXd scaled = window_matrix(windows).unaryExpr([&](double v) { return scaler.apply(v); });
  const Eigen::MatrixXd raw = Network(spec).forward(f.members()[0].params.values, scaled);
  for (std::size_t i = 0; i < fc.size(); ++i) {
    const double w = std::abs(raw(1, static_cast<Eigen::Index>(i)) - raw(0, static_cast<Eigen::Index>(i)));
    EXPECT_NEAR(fc.steps[i].upper - fc.steps[i].lower, w * scaler.spread(), 1e-9);
  }

  // Changing observation k only affects intervals for later observations.
  const std::size_t k = 250;
  std::vector<double> v(series.values().begin(), series.values().end());
  v[k] += 10.0;
  const TimeSeries perturbed(series.name(), std::vector<Timestamp>(series.timestamps().begin(), series.timestamps().end()), v);
  const auto fp = rolling_forecast(f, perturbed, 200, 300);
  for (std::size_t i = 200; i <= k; ++i) {
    EXPECT_EQ(fp.steps[i - 200].lower, fc.steps[i - 200].lower) << i;
    EXPECT_EQ(fp.steps[i - 200].upper, fc.steps[i - 200].upper) << i;
  }
  EXPECT_NE(fp.steps[k + 1 - 200].lower, fc.steps[k + 1 - 200].lower);
}

TEST(Forecast, WrongWindowLengthRejected) {
  const ModelSpec spec = small_mlp(6);
  const Forecaster f(PiModel{spec, init_params(spec, 1), Scaler::identity()});
  EXPECT_THROW(f.raw_bounds(Eigen::MatrixXd::Zero(5, 2)), ConfigError);
  EXPECT_THROW(forecast(f, make_windows(std::vector<double>{1, 2, 3, 4, 5, 6, 7, 8}, 3)), ConfigError);
  EXPECT_THROW(rolling_forecast(f, TimeSeries::from_values("x", {1, 2, 3, 4, 5, 6, 7, 8}), 3, 8), ConfigError);
}
