#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "tubecast/losses.hpp"

namespace tubecast {

struct ForecastStep {
  std::string timestamp;
  double lower = 0.0;
  double upper = 0.0;
  std::optional<double> actual;
};

// One-step-ahead intervals in original units. `crossing_count` records how
// many raw head outputs had to be swapped to satisfy lower <= upper.
struct IntervalForecast {
  std::vector<ForecastStep> steps;
  std::size_t crossing_count = 0;

  std::size_t size() const noexcept { return steps.size(); }
};

// Fraction of actuals inside the closed interval [lower, upper].
double picp(const IntervalForecast& forecast);
// Mean of upper - lower.
double mpiw(const IntervalForecast& forecast);
RegionCounts region_counts(const IntervalForecast& forecast, double r);

struct EvalSummary {
  double picp = 0.0;
  double mpiw = 0.0;
  std::size_t n = 0;
  double mpiw_over_picp = 0.0;
  RegionCounts regions{};
  std::size_t crossing_count = 0;
};

EvalSummary summarize(const IntervalForecast& forecast, double r);

// Summary built from reported (PICP, MPIW) pairs only; region counts unknown.
EvalSummary summary_from(double picp, double mpiw, std::size_t n = 0);

enum class Comparison { a_better, b_better, tie };

// Both meet the target (PICP >= target): smaller MPIW wins. Neither meets it:
// PICP closer to the target wins. Otherwise the one meeting it wins.
Comparison compare_models(const EvalSummary& a, const EvalSummary& b, double target);

struct NamedSummary {
  std::string name;
  EvalSummary summary;
};

struct RankEntry {
  std::size_t rank = 0;
  std::string name;
  EvalSummary summary;
};

// Stable total order induced by compare_models.
std::vector<RankEntry> rank_models(const std::vector<NamedSummary>& entries, double target);

// (baseline - tube) * 100 / baseline; negative when the tube intervals are wider.
double pct_improvement(double baseline_mpiw, double tube_mpiw);

std::string format_rank_table(const std::vector<RankEntry>& ranking);
std::string format_rank_csv(const std::vector<RankEntry>& ranking);

struct ImprovementRow {
  std::string method;
  double average_mpiw = 0.0;
  std::optional<double> pct;  // empty for the baseline row
};

struct MethodMpiw {
  std::string method;
  std::vector<double> mpiw;
};

// Average MPIW per method and the improvement of `baseline` over every other method.
std::vector<ImprovementRow> improvement_table(const std::vector<MethodMpiw>& methods, const std::string& baseline);
std::string format_improvement_table(const std::vector<ImprovementRow>& rows, const std::string& baseline);
std::string format_improvement_csv(const std::vector<ImprovementRow>& rows);

}  // namespace tubecast
