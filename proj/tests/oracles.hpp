#pragma once

// Independent reference implementations used by the unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <span>
#include <vector>

namespace tubecast::testing {

inline double rel_error(double analytic, double numeric, double floor = 1e-6) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

struct TubeCase {
  double y, lower, upper, alpha, r;
};

// Random ordered bounds; one case in ten puts y exactly on a bound.
inline TubeCase random_tube_case(std::mt19937_64& gen) {
  std::uniform_real_distribution<double> pos(-5, 5), wide(-7, 7), unit(0.01, 0.99), pick(0, 1);
  TubeCase c{};
  do {
    c.lower = pos(gen);
    c.upper = pos(gen);
  } while (c.lower == c.upper);
  if (c.lower > c.upper) std::swap(c.lower, c.upper);
  c.alpha = unit(gen);
  c.r = unit(gen);
  const double p = pick(gen);
  c.y = p < 0.05 ? c.lower : (p < 0.10 ? c.upper : wide(gen));
  return c;
}

struct BranchValue {
  double value;
  int branch;  // 0..3 for the four cases, top to bottom
};

// The loss written in terms of the errors u1 = y - lower and u2 = y - upper,
// with outside weight 1 - alpha and inside weight alpha.
inline BranchValue tube_branch_oracle(double y, double lower, double upper, double alpha, double r) {
  const double u1 = y - lower;
  const double u2 = y - upper;
  if (u2 > 0) return {(1 - alpha) * u2, 0};
  if (u1 < 0) return {-(1 - alpha) * u1, 3};
  if (r * u2 + (1 - r) * u1 >= 0) return {-alpha * u2, 1};
  return {alpha * u1, 2};
}

inline double naive_tube_sum(std::span<const double> ys, double lower, double upper, double alpha, double r) {
  double s = 0;
  for (double y : ys) s += tube_branch_oracle(y, lower, upper, alpha, r).value;
  return s;
}

struct GridOptimum {
  double lower = 0, upper = 0, loss = std::numeric_limits<double>::infinity();
};

// Exhaustive search over lower <= upper on a uniform grid of [lo, hi].
inline GridOptimum grid_search_constant(std::span<const double> ys, double alpha, double r, double lo, double hi,
                                        double step) {
  const int g = static_cast<int>(std::lround((hi - lo) / step));
  GridOptimum best;
  for (int i = 0; i <= g; ++i) {
    const double a = lo + step * i;
    for (int j = i; j <= g; ++j) {
      const double b = lo + step * j;
      const double v = naive_tube_sum(ys, a, b, alpha, r);
      if (v < best.loss) best = {a, b, v};
    }
  }
  return best;
}

}  // namespace tubecast::testing
