#include "tubecast/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "tubecast/error.hpp"

namespace tubecast {

std::string to_string(LossKind k) {
  switch (k) {
    case LossKind::tube: return "tube";
    case LossKind::qd: return "qd";
    case LossKind::pinball: return "pinball";
  }
  return "?";
}

void LossSpec::validate() const {
  switch (kind) {
    case LossKind::tube: tube.validate(); break;
    case LossKind::qd: qd.validate(); break;
    case LossKind::pinball:
      if (!(tau > 0.0 && tau < 1.0)) throw ConfigError("pinball: tau must lie in (0,1)");
      break;
  }
}

double batch_objective(const LossSpec& loss, const Eigen::MatrixXd& outputs, std::span<const double> targets,
                       Eigen::MatrixXd* d_outputs) {
  const auto batch = static_cast<std::size_t>(outputs.cols());
  if (batch != targets.size()) throw ConfigError("objective: outputs/targets length mismatch");
  if (batch == 0) throw ConfigError("objective: empty batch");
  const int needed = loss.required_head() == HeadKind::interval ? 2 : 1;
  if (outputs.rows() != needed) throw ConfigError("objective: head does not match the loss");
  if (d_outputs) d_outputs->resize(outputs.rows(), outputs.cols());
  const double inv = 1.0 / static_cast<double>(batch);

  if (loss.kind == LossKind::pinball) {
    double total = 0.0;
    for (std::size_t i = 0; i < batch; ++i) {
      const auto col = static_cast<Eigen::Index>(i);
      const auto res = pinball_loss(targets[i], outputs(0, col), loss.tau);
      total += res.value;
      if (d_outputs) (*d_outputs)(0, col) = res.d_qhat * inv;
    }
    return total * inv;
  }

  std::vector<IntervalPrediction> preds(batch);
  for (std::size_t i = 0; i < batch; ++i) {
    const auto col = static_cast<Eigen::Index>(i);
    preds[i] = {outputs(0, col), outputs(1, col)};
  }
  const bool tube = loss.kind == LossKind::tube;
  const ObjectiveResult res = tube ? tube_objective(preds, targets, loss.tube) : qd_loss(preds, targets, loss.qd);
  const double scale = tube ? inv : 1.0;
  if (d_outputs) {
    for (std::size_t i = 0; i < batch; ++i) {
      const auto col = static_cast<Eigen::Index>(i);
      (*d_outputs)(0, col) = res.grads[i].d_lower * scale;
      (*d_outputs)(1, col) = res.grads[i].d_upper * scale;
    }
  }
  return res.value * scale;
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("train: epochs must be positive");
  if (batch_size < 1) throw ConfigError("train: batch_size must be positive");
  if (early_stop_patience < 0 || early_stop_patience > epochs)
    throw ConfigError("train: early_stop_patience must lie in [0, epochs]");
  if (kernels.shard_size == 0) throw ConfigError("train: shard size must be positive");
  std::visit(
      [](const auto& o) {
        if (!(o.step > 0.0)) throw ConfigError("train: optimizer step must be positive");
      },
      optimizer);
  if (const auto* adam = std::get_if<AdamConfig>(&optimizer)) {
    if (!(adam->beta1 >= 0.0 && adam->beta1 < 1.0 && adam->beta2 >= 0.0 && adam->beta2 < 1.0))
      throw ConfigError("train: adam betas must lie in [0,1)");
    if (!(adam->epsilon > 0.0)) throw ConfigError("train: adam epsilon must be positive");
  }
  if (const auto* sgd = std::get_if<SgdConfig>(&optimizer))
    if (!(sgd->momentum >= 0.0 && sgd->momentum < 1.0)) throw ConfigError("train: sgd momentum must lie in [0,1)");
  loss.validate();
}

Eigen::MatrixXd window_matrix(const WindowedDataset& data) {
  const auto lag = static_cast<Eigen::Index>(data.lag());
  const auto count = static_cast<Eigen::Index>(data.count());
  // Row-major windows reinterpret as a column-major lag x count matrix.
  return Eigen::Map<const Eigen::MatrixXd>(data.inputs().data(), lag, count);
}

namespace {

class Optimizer {
 public:
  Optimizer(const std::variant<AdamConfig, SgdConfig>& cfg, std::size_t n) : cfg_(cfg), m_(n, 0.0), v_(n, 0.0) {}

  void step(std::vector<double>& params, const std::vector<double>& grad) {
    ++t_;
    if (const auto* adam = std::get_if<AdamConfig>(&cfg_)) {
      const double c1 = 1.0 - std::pow(adam->beta1, static_cast<double>(t_));
      const double c2 = 1.0 - std::pow(adam->beta2, static_cast<double>(t_));
      for (std::size_t i = 0; i < params.size(); ++i) {
        m_[i] = adam->beta1 * m_[i] + (1.0 - adam->beta1) * grad[i];
        v_[i] = adam->beta2 * v_[i] + (1.0 - adam->beta2) * grad[i] * grad[i];
        params[i] -= adam->step * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + adam->epsilon);
      }
    } else {
      const auto& sgd = std::get<SgdConfig>(cfg_);
      for (std::size_t i = 0; i < params.size(); ++i) {
        m_[i] = sgd.momentum * m_[i] + grad[i];
        params[i] -= sgd.step * m_[i];
      }
    }
  }

 private:
  std::variant<AdamConfig, SgdConfig> cfg_;
  std::vector<double> m_, v_;
  long t_ = 0;
};

// Batch boundaries over a shuffled order; a trailing singleton joins the
// previous batch so every batch holds at least two windows.
std::vector<std::pair<std::size_t, std::size_t>> batch_ranges(std::size_t count, std::size_t batch) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t b = 0; b < count; b += batch) out.emplace_back(b, std::min(count, b + batch));
  if (out.size() > 1 && out.back().second - out.back().first < 2) {
    out[out.size() - 2].second = out.back().second;
    out.pop_back();
  }
  return out;
}

}  // namespace

TrainResult train(const ModelSpec& spec, const TrainData& data, const TrainConfig& cfg, const Scaler& scaler) {
  cfg.validate();
  spec.validate();
  if (spec.head != cfg.loss.required_head())
    throw ConfigError("train: " + to_string(cfg.loss.kind) + " loss needs a " + to_string(cfg.loss.required_head()) +
                      " head, model has " + to_string(spec.head));
  if (data.train.lag() != static_cast<std::size_t>(spec.lag) ||
      (!data.validation.empty() && data.validation.lag() != static_cast<std::size_t>(spec.lag)))
    throw ConfigError("train: window length does not match model lag");
  if (data.train.count() < static_cast<std::size_t>(cfg.batch_size))
    throw ConfigError("train: " + std::to_string(data.train.count()) + " training windows, fewer than batch_size " +
                      std::to_string(cfg.batch_size));
  if (data.validation.empty()) throw ConfigError("train: validation segment is empty");

  const auto started = std::chrono::steady_clock::now();
  const Network net(spec);
  ParamSet params = net.init_params(spec.seed);
  std::vector<double> best_params = params.values;
  Optimizer opt(cfg.optimizer, params.size());

  const Eigen::MatrixXd X = window_matrix(data.train);
  const Eigen::MatrixXd Xv = window_matrix(data.validation);
  const auto yv = data.validation.targets();
  const OutputLoss loss = [&cfg](const Eigen::MatrixXd& out, std::span<const double> y, Eigen::MatrixXd& d) {
    return batch_objective(cfg.loss, out, y, &d);
  };

  std::mt19937_64 rng(cfg.shuffle_seed);
  std::vector<std::size_t> order(data.train.count());
  std::iota(order.begin(), order.end(), 0);
  const auto ranges = batch_ranges(order.size(), static_cast<std::size_t>(cfg.batch_size));

  TrainReport report;
  report.seed = spec.seed;
  report.shuffle_seed = cfg.shuffle_seed;
  report.best_validation_objective = std::numeric_limits<double>::infinity();
  int since_best = 0;

  Eigen::MatrixXd Xb;
  std::vector<double> yb;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    try {
      for (const auto& [lo, hi] : ranges) {
        const auto b = static_cast<Eigen::Index>(hi - lo);
        Xb.resize(X.rows(), b);
        yb.resize(hi - lo);
        for (std::size_t k = lo; k < hi; ++k) {
          Xb.col(static_cast<Eigen::Index>(k - lo)) = X.col(static_cast<Eigen::Index>(order[k]));
          yb[k - lo] = data.train.target(order[k]);
        }
        const BatchGradient g = batch_gradient(net, params.values, Xb, yb, loss, cfg.kernels);
        if (!std::isfinite(g.value)) throw NumericError("non-finite training objective");
        opt.step(params.values, g.grad);
        total += g.value * static_cast<double>(b);
      }
    } catch (const NumericError& e) {
      throw NumericError("train: divergence at epoch " + std::to_string(epoch) + ": " + e.what());
    }

    double val = 0.0;
    try {
      val = batch_objective(cfg.loss, batch_predict(net, params.values, Xv, cfg.kernels), yv, nullptr);
    } catch (const NumericError& e) {
      throw NumericError("train: divergence at epoch " + std::to_string(epoch) + ": " + e.what());
    }
    if (!std::isfinite(val))
      throw NumericError("train: divergence at epoch " + std::to_string(epoch) + ": non-finite validation objective");

    report.epochs.push_back({epoch, total / static_cast<double>(order.size()), val});
    report.epochs_run = epoch;
    if (val < report.best_validation_objective) {
      report.best_validation_objective = val;
      report.best_epoch = epoch;
      best_params = params.values;
      since_best = 0;
    } else if (cfg.early_stop_patience > 0 && ++since_best >= cfg.early_stop_patience) {
      break;
    }
  }

  params.values = std::move(best_params);
  TrainResult result{PiModel{spec, std::move(params), scaler}, std::move(report)};

  if (spec.head == HeadKind::interval) {
    const Eigen::MatrixXd out = batch_predict(net, result.model.params.values, Xv, cfg.kernels);
    std::size_t covered = 0, crossings = 0;
    double width = 0.0;
    for (Eigen::Index i = 0; i < out.cols(); ++i) {
      const auto iv = repair_interval(out(0, i), out(1, i), crossings);
      const double y = yv[static_cast<std::size_t>(i)];
      if (iv.lower <= y && y <= iv.upper) ++covered;
      width += iv.width();
    }
    const auto n = static_cast<double>(out.cols());
    result.report.validation_picp = static_cast<double>(covered) / n;
    result.report.validation_mpiw = width / n * scaler.spread();
  }
  result.report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return result;
}

IntervalPrediction repair_interval(double a, double b, std::size_t& crossings) {
  if (a > b) {
    ++crossings;
    return {b, a};
  }
  return {a, b};
}

Forecaster::Forecaster(PiModel interval_model) {
  if (interval_model.spec.head != HeadKind::interval)
    throw ConfigError("forecaster: a single model needs an interval head");
  members_.push_back(std::move(interval_model));
}

Forecaster::Forecaster(PiModel lower, PiModel upper) {
  if (lower.spec.head != HeadKind::scalar || upper.spec.head != HeadKind::scalar)
    throw ConfigError("forecaster: a quantile pair needs two scalar-head models");
  if (lower.spec.lag != upper.spec.lag) throw ConfigError("forecaster: quantile pair members differ in lag");
  if (lower.scaler.center() != upper.scaler.center() || lower.scaler.spread() != upper.scaler.spread())
    throw ConfigError("forecaster: quantile pair members use different scalers");
  members_.push_back(std::move(lower));
  members_.push_back(std::move(upper));
}

Eigen::MatrixXd Forecaster::raw_bounds(const Eigen::MatrixXd& windows, const KernelOptions& opts) const {
  if (windows.rows() != lag())
    throw ConfigError("forecast: window length " + std::to_string(windows.rows()) + " does not match lag " +
                      std::to_string(lag()));
  const Scaler& s = scaler();
  const Eigen::MatrixXd scaled = windows.unaryExpr([&s](double v) { return s.apply(v); });
  Eigen::MatrixXd out(2, windows.cols());
  if (is_pair()) {
    for (std::size_t m = 0; m < 2; ++m) {
      const Network net(members_[m].spec);
      out.row(static_cast<Eigen::Index>(m)) = batch_predict(net, members_[m].params.values, scaled, opts).row(0);
    }
  } else {
    const Network net(members_.front().spec);
    out = batch_predict(net, members_.front().params.values, scaled, opts);
  }
  return out.unaryExpr([&s](double v) { return s.invert(v); });
}

IntervalForecast forecast(const Forecaster& model, const WindowedDataset& windows, std::span<const Timestamp> stamps,
                          bool attach_actuals, const KernelOptions& opts) {
  if (windows.lag() != static_cast<std::size_t>(model.lag()))
    throw ConfigError("forecast: window length " + std::to_string(windows.lag()) + " does not match lag " +
                      std::to_string(model.lag()));
  if (!stamps.empty() && stamps.size() != windows.count())
    throw ConfigError("forecast: timestamp count does not match window count");
  IntervalForecast out;
  if (windows.empty()) return out;
  const Eigen::MatrixXd raw = model.raw_bounds(window_matrix(windows), opts);
  out.steps.resize(windows.count());
  for (std::size_t i = 0; i < windows.count(); ++i) {
    const auto col = static_cast<Eigen::Index>(i);
    const auto iv = repair_interval(raw(0, col), raw(1, col), out.crossing_count);
    auto& step = out.steps[i];
    step.timestamp = stamps.empty() ? std::to_string(i) : stamps[i].text;
    step.lower = iv.lower;
    step.upper = iv.upper;
    if (attach_actuals) step.actual = windows.target(i);
  }
  return out;
}

IntervalForecast rolling_forecast(const Forecaster& model, const TimeSeries& series, std::size_t begin,
                                  std::size_t end, const KernelOptions& opts) {
  const auto lag = static_cast<std::size_t>(model.lag());
  if (begin < lag) throw ConfigError("forecast: need " + std::to_string(lag) + " observations of history");
  if (end > series.size() || begin > end) throw ConfigError("forecast: range out of bounds");
  const auto values = series.values();
  const WindowedDataset windows =
      make_windows_with_context(values.subspan(0, begin), values.subspan(begin, end - begin), lag);
  return forecast(model, windows, series.timestamps().subspan(begin, end - begin), true, opts);
}

QuantilePair train_quantile_pair(ModelSpec spec, const TrainData& data, double alpha, std::optional<double> q_lo,
                                 std::optional<double> q_hi, const TrainConfig& cfg, const Scaler& scaler) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("quantile pair: alpha must lie in (0,1)");
  QuantilePair pair;
  pair.q_lo = q_lo.value_or(alpha / 2.0);
  pair.q_hi = q_hi.value_or(1.0 - alpha / 2.0);
  if (!(pair.q_lo > 0.0 && pair.q_lo < pair.q_hi && pair.q_hi < 1.0))
    throw ConfigError("quantile pair: need 0 < q_lo < q_hi < 1");
  spec.head = HeadKind::scalar;

  TrainConfig c = cfg;
  c.loss = LossSpec::make_pinball(pair.q_lo);
  auto lower = train(spec, data, c, scaler);
  c.loss = LossSpec::make_pinball(pair.q_hi);
  auto upper = train(spec, data, c, scaler);
  pair.lower = std::move(lower.model);
  pair.upper = std::move(upper.model);
  pair.lower_report = std::move(lower.report);
  pair.upper_report = std::move(upper.report);
  return pair;
}

}  // namespace tubecast
