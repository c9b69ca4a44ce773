#include "tubecast/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tubecast/error.hpp"

namespace tubecast {

namespace {

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw NumericError(std::string("loss: non-finite ") + what);
}

void require_ordered(const IntervalPrediction& pred) {
  require_finite(pred.lower, "lower bound");
  require_finite(pred.upper, "upper bound");
  if (pred.lower > pred.upper) throw ConfigError("loss: crossed bounds (lower > upper); repair the interval first");
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

void TubeConfig::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("tube: alpha must lie in (0,1), got " + std::to_string(alpha));
  if (!(r > 0.0 && r < 1.0)) throw ConfigError("tube: r must lie in (0,1), got " + std::to_string(r));
  if (!(delta >= 0.0) || !std::isfinite(delta)) throw ConfigError("tube: delta must be >= 0, got " + std::to_string(delta));
}

void QdConfig::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("qd: alpha must lie in (0,1), got " + std::to_string(alpha));
  if (!(lambda >= 0.0)) throw ConfigError("qd: lambda must be >= 0");
  if (!(softness > 0.0)) throw ConfigError("qd: softness must be > 0");
}

double blend_line(const IntervalPrediction& pred, double r) noexcept {
  return r * pred.upper + (1.0 - r) * pred.lower;
}

RegionId classify_region(double y, const IntervalPrediction& pred, double r) {
  require_finite(y, "target");
  require_ordered(pred);
  if (y > pred.upper) return RegionId::R1;
  if (y < pred.lower) return RegionId::R4;
  return y >= blend_line(pred, r) ? RegionId::R2 : RegionId::R3;
}

double tube_loss(double y, const IntervalPrediction& pred, double alpha, double r) {
  const double t = 1.0 - alpha;
  switch (classify_region(y, pred, r)) {
    case RegionId::R1: return t * (y - pred.upper);
    case RegionId::R2: return alpha * (pred.upper - y);
    case RegionId::R3: return alpha * (y - pred.lower);
    case RegionId::R4: return t * (pred.lower - y);
  }
  return 0.0;
}

IntervalGradient tube_loss_grad(double y, const IntervalPrediction& pred, double alpha, double r) {
  const double t = 1.0 - alpha;
  switch (classify_region(y, pred, r)) {
    case RegionId::R1: return {0.0, -t};
    case RegionId::R2: return {0.0, alpha};
    case RegionId::R3: return {-alpha, 0.0};
    case RegionId::R4: return {t, 0.0};
  }
  return {};
}

ObjectiveResult tube_objective(std::span<const IntervalPrediction> preds, std::span<const double> targets,
                               const TubeConfig& cfg) {
  cfg.validate();
  if (preds.empty()) throw ConfigError("tube objective: empty batch");
  if (preds.size() != targets.size()) throw ConfigError("tube objective: predictions/targets length mismatch");

  ObjectiveResult out;
  out.grads.resize(preds.size());
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const auto& p = preds[i];
    require_finite(p.lower, "lower bound");
    require_finite(p.upper, "upper bound");
    const bool crossed = p.lower > p.upper;
    const IntervalPrediction ordered = crossed ? IntervalPrediction{p.upper, p.lower} : p;

    out.value += tube_loss(targets[i], ordered, cfg.alpha, cfg.r);
    IntervalGradient g = tube_loss_grad(targets[i], ordered, cfg.alpha, cfg.r);
    if (crossed) std::swap(g.d_lower, g.d_upper);

    const double gap = p.lower - p.upper;
    out.value += cfg.delta * std::abs(gap);
    const double sign = gap > 0.0 ? 1.0 : (gap < 0.0 ? -1.0 : 0.0);
    g.d_lower += cfg.delta * sign;
    g.d_upper -= cfg.delta * sign;
    out.grads[i] = g;
  }
  return out;
}

PinballResult pinball_loss(double y, double q_hat, double tau) {
  if (!(tau > 0.0 && tau < 1.0)) throw ConfigError("pinball: tau must lie in (0,1)");
  require_finite(y, "target");
  require_finite(q_hat, "quantile estimate");
  if (y > q_hat) return {tau * (y - q_hat), -tau};
  return {(1.0 - tau) * (q_hat - y), 1.0 - tau};
}

ObjectiveResult qd_loss(std::span<const IntervalPrediction> preds, std::span<const double> targets,
                        const QdConfig& cfg) {
  cfg.validate();
  if (preds.empty()) throw ConfigError("qd loss: empty batch");
  if (preds.size() != targets.size()) throw ConfigError("qd loss: predictions/targets length mismatch");
  constexpr double kCapturedEps = 1e-3;

  const std::size_t m = preds.size();
  const double md = static_cast<double>(m);
  const double s = cfg.softness;
  std::vector<double> soft_lo(m), soft_hi(m);
  double captured = 0.0, captured_width = 0.0, soft_picp = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const auto& p = preds[i];
    require_finite(p.lower, "lower bound");
    require_finite(p.upper, "upper bound");
    require_finite(targets[i], "target");
    soft_lo[i] = sigmoid(s * (targets[i] - p.lower));
    soft_hi[i] = sigmoid(s * (p.upper - targets[i]));
    soft_picp += soft_lo[i] * soft_hi[i];
    if (p.lower <= targets[i] && targets[i] <= p.upper) {
      captured += 1.0;
      captured_width += p.upper - p.lower;
    }
  }
  soft_picp /= md;

  const double denom = captured + kCapturedEps;
  const double shortfall = std::max(0.0, (1.0 - cfg.alpha) - soft_picp);
  const double scale = cfg.lambda * md / (cfg.alpha * (1.0 - cfg.alpha));

  ObjectiveResult out;
  out.value = captured_width / denom + scale * shortfall * shortfall;
  out.grads.resize(m);
  // d(penalty)/d(soft_picp)
  const double d_picp = -2.0 * scale * shortfall;
  for (std::size_t i = 0; i < m; ++i) {
    const auto& p = preds[i];
    IntervalGradient g;
    if (p.lower <= targets[i] && targets[i] <= p.upper) {
      g.d_lower -= 1.0 / denom;
      g.d_upper += 1.0 / denom;
    }
    const double a = soft_lo[i], b = soft_hi[i];
    g.d_lower += d_picp * (b * a * (1.0 - a) * -s) / md;
    g.d_upper += d_picp * (a * b * (1.0 - b) * s) / md;
    out.grads[i] = g;
  }
  return out;
}

namespace {

// Summed Tube loss of constant bounds over sorted samples, O(log n) per call.
class SortedTubeObjective {
 public:
  SortedTubeObjective(std::vector<double> sorted, double alpha, double r)
      : y_(std::move(sorted)), prefix_(y_.size() + 1, 0.0), t_(1.0 - alpha), r_(r) {
    for (std::size_t i = 0; i < y_.size(); ++i) prefix_[i + 1] = prefix_[i] + y_[i];
  }

  double operator()(double lo, double hi) const {
    const double b = r_ * hi + (1.0 - r_) * lo;
    const std::size_t n = y_.size();
    const std::size_t a = idx_lower(lo);  // y < lo
    const std::size_t c = std::max(a, idx_lower(b));  // y < b
    const std::size_t d = std::max(c, idx_upper(hi));  // y <= hi
    const double below = t_ * (lo * static_cast<double>(a) - prefix_[a]);
    const double inside_low = (1.0 - t_) * (prefix_[c] - prefix_[a] - lo * static_cast<double>(c - a));
    const double inside_high = (1.0 - t_) * (hi * static_cast<double>(d - c) - (prefix_[d] - prefix_[c]));
    const double above = t_ * (prefix_[n] - prefix_[d] - hi * static_cast<double>(n - d));
    return below + inside_low + inside_high + above;
  }

  const std::vector<double>& samples() const noexcept { return y_; }
  double r() const noexcept { return r_; }

 private:
  std::size_t idx_lower(double v) const {
    return static_cast<std::size_t>(std::lower_bound(y_.begin(), y_.end(), v) - y_.begin());
  }
  std::size_t idx_upper(double v) const {
    return static_cast<std::size_t>(std::upper_bound(y_.begin(), y_.end(), v) - y_.begin());
  }

  std::vector<double> y_;
  std::vector<double> prefix_;
  double t_;
  double r_;
};

}  // namespace

ConstantInterval fit_constant_interval(std::span<const double> samples, double alpha, double r) {
  TubeConfig{alpha, r, 0.0}.validate();
  if (samples.empty()) throw ConfigError("constant interval: no samples");
  for (double v : samples) require_finite(v, "sample");

  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const SortedTubeObjective objective(sorted, alpha, r);
  const auto& y = objective.samples();
  const std::size_t n = y.size();

  auto quantile = [&](double q) {
    const auto k = static_cast<std::size_t>(std::clamp(q * static_cast<double>(n - 1), 0.0, static_cast<double>(n - 1)));
    return y[k];
  };
  double lo = quantile(alpha / 2.0);
  double hi = quantile(1.0 - alpha / 2.0);
  double best = objective(lo, hi);

  auto consider = [&](double cand_lo, double cand_hi, double& best_lo, double& best_hi, double& best_val) {
    if (!(cand_lo <= cand_hi) || !std::isfinite(cand_lo) || !std::isfinite(cand_hi)) return;
    const double v = objective(cand_lo, cand_hi);
    if (v < best_val) {
      best_val = v;
      best_lo = cand_lo;
      best_hi = cand_hi;
    }
  };

  // The objective is piecewise linear along each move direction, so its
  // minimum along a line sits on a kink: a sample crossing a bound or the
  // blend line. Moves: upper only, lower only, and a rigid shift of both.
  for (int sweep = 0; sweep < 10000; ++sweep) {
    double cand_lo = lo, cand_hi = hi, cand_val = best;
    for (double v : y) {
      consider(lo, v, cand_lo, cand_hi, cand_val);
      consider(lo, (v - (1.0 - r) * lo) / r, cand_lo, cand_hi, cand_val);
    }
    for (double v : y) {
      consider(v, hi, cand_lo, cand_hi, cand_val);
      consider((v - r * hi) / (1.0 - r), hi, cand_lo, cand_hi, cand_val);
    }
    const double b = blend_line({lo, hi}, r);
    for (double v : y) {
      consider(v, hi + (v - lo), cand_lo, cand_hi, cand_val);
      consider(lo + (v - hi), v, cand_lo, cand_hi, cand_val);
      consider(lo + (v - b), hi + (v - b), cand_lo, cand_hi, cand_val);
    }
    if (!(cand_val < best - 1e-12 * std::max(1.0, std::abs(best)))) break;
    lo = cand_lo;
    hi = cand_hi;
    best = cand_val;
  }

  ConstantInterval out;
  out.bounds = {lo, hi};
  out.loss = best;
  for (double v : y) ++out.regions[static_cast<std::size_t>(classify_region(v, out.bounds, r))];
  return out;
}

}  // namespace tubecast
