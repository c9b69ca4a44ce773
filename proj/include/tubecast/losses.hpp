#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace tubecast {

// Hyperparameters of the width-penalized Tube objective.
//   alpha: miscoverage rate; the tube targets coverage 1 - alpha.
//   r:     position of the line r*upper + (1-r)*lower that splits the tube interior.
//   delta: weight of the summed interval width.
struct TubeConfig {
  double alpha = 0.05;
  double r = 0.5;
  double delta = 0.0;

  void validate() const;
};

struct IntervalPrediction {
  double lower = 0.0;
  double upper = 0.0;

  double width() const noexcept { return upper - lower; }
  friend bool operator==(const IntervalPrediction&, const IntervalPrediction&) = default;
};

// R1: above the upper bound. R2: inside, on or above the blend line.
// R3: inside, below the blend line. R4: below the lower bound.
enum class RegionId { R1 = 0, R2 = 1, R3 = 2, R4 = 3 };

double blend_line(const IntervalPrediction& pred, double r) noexcept;

RegionId classify_region(double y, const IntervalPrediction& pred, double r);

// Piecewise-linear Tube loss with outside slope t = 1 - alpha and inside
// slope 1 - t = alpha. Requires lower <= upper.
double tube_loss(double y, const IntervalPrediction& pred, double alpha, double r);

struct IntervalGradient {
  double d_lower = 0.0;
  double d_upper = 0.0;
};

// Exact branch derivative; on a kink the inside-branch derivative is taken.
IntervalGradient tube_loss_grad(double y, const IntervalPrediction& pred, double alpha, double r);

struct ObjectiveResult {
  double value = 0.0;
  std::vector<IntervalGradient> grads;
};

// Sum of Tube losses plus delta * sum |lower - upper|. Crossed bounds are
// swapped before the data term and the gradient is routed back to the
// original outputs; the width term is unaffected by the swap.
ObjectiveResult tube_objective(std::span<const IntervalPrediction> preds, std::span<const double> targets,
                               const TubeConfig& cfg);

struct PinballResult {
  double value = 0.0;
  double d_qhat = 0.0;
};

// tau*(y - q) for y >= q, (1 - tau)*(q - y) otherwise. At y == q the
// subgradient is +(1 - tau).
PinballResult pinball_loss(double y, double q_hat, double tau);

struct QdConfig {
  double alpha = 0.05;
  double lambda = 15.0;
  double softness = 160.0;

  void validate() const;
};

// Quality-driven loss: mean width of captured points plus
// lambda * m / (alpha (1-alpha)) * max(0, (1-alpha) - soft_picp)^2, where
// soft_picp averages sigmoid(s(y-lower)) * sigmoid(s(upper-y)).
ObjectiveResult qd_loss(std::span<const IntervalPrediction> preds, std::span<const double> targets,
                        const QdConfig& cfg);

using RegionCounts = std::array<std::size_t, 4>;

struct ConstantInterval {
  IntervalPrediction bounds;
  double loss = 0.0;  // summed Tube loss at `bounds`
  RegionCounts regions{};
};

// Minimizes sum_i tube_loss(y_i, [lower, upper]) over constant bounds
// (delta = 0) by exact coordinate descent over the kinks of the piecewise
// linear objective, started from the empirical alpha/2 and 1-alpha/2 quantiles.
ConstantInterval fit_constant_interval(std::span<const double> samples, double alpha, double r);

}  // namespace tubecast
