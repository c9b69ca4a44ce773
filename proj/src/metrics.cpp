#include "tubecast/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>

#include "tubecast/error.hpp"

namespace tubecast {

namespace {

void require_actuals(const IntervalForecast& f, const char* what) {
  if (f.steps.empty()) throw ConfigError(std::string(what) + ": empty forecast");
  for (const auto& s : f.steps)
    if (!s.actual) throw ConfigError(std::string(what) + ": step '" + s.timestamp + "' has no actual value");
}

bool meets(const EvalSummary& s, double target) { return s.picp >= target; }

std::string fixed(double v, int digits) {
  if (!std::isfinite(v)) return "inf";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

}  // namespace

double picp(const IntervalForecast& forecast) {
  require_actuals(forecast, "picp");
  std::size_t covered = 0;
  for (const auto& s : forecast.steps)
    if (s.lower <= *s.actual && *s.actual <= s.upper) ++covered;
  return static_cast<double>(covered) / static_cast<double>(forecast.size());
}

double mpiw(const IntervalForecast& forecast) {
  if (forecast.steps.empty()) throw ConfigError("mpiw: empty forecast");
  double total = 0.0;
  for (const auto& s : forecast.steps) total += s.upper - s.lower;
  return total / static_cast<double>(forecast.size());
}

RegionCounts region_counts(const IntervalForecast& forecast, double r) {
  require_actuals(forecast, "region counts");
  RegionCounts counts{};
  for (const auto& s : forecast.steps)
    ++counts[static_cast<std::size_t>(classify_region(*s.actual, {s.lower, s.upper}, r))];
  return counts;
}

EvalSummary summarize(const IntervalForecast& forecast, double r) {
  EvalSummary s;
  s.n = forecast.size();
  s.picp = picp(forecast);
  s.mpiw = mpiw(forecast);
  s.mpiw_over_picp = s.picp > 0.0 ? s.mpiw / s.picp : std::numeric_limits<double>::infinity();
  s.regions = region_counts(forecast, r);
  s.crossing_count = forecast.crossing_count;
  return s;
}

EvalSummary summary_from(double picp_value, double mpiw_value, std::size_t n) {
  EvalSummary s;
  s.picp = picp_value;
  s.mpiw = mpiw_value;
  s.n = n;
  s.mpiw_over_picp = picp_value > 0.0 ? mpiw_value / picp_value : std::numeric_limits<double>::infinity();
  return s;
}

Comparison compare_models(const EvalSummary& a, const EvalSummary& b, double target) {
  if (a.n != 0 && b.n != 0 && a.n != b.n)
    throw ConfigError("compare: summaries come from test sets of different length");
  const bool a_meets = meets(a, target), b_meets = meets(b, target);
  if (a_meets != b_meets) return a_meets ? Comparison::a_better : Comparison::b_better;
  const double ka = a_meets ? a.mpiw : std::abs(a.picp - target);
  const double kb = b_meets ? b.mpiw : std::abs(b.picp - target);
  if (ka < kb) return Comparison::a_better;
  if (kb < ka) return Comparison::b_better;
  return Comparison::tie;
}

std::vector<RankEntry> rank_models(const std::vector<NamedSummary>& entries, double target) {
  if (entries.size() < 2) throw ConfigError("rank: need at least two models");
  std::vector<std::size_t> order(entries.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    return compare_models(entries[i].summary, entries[j].summary, target) == Comparison::a_better;
  });
  std::vector<RankEntry> out;
  for (std::size_t k = 0; k < order.size(); ++k)
    out.push_back({k + 1, entries[order[k]].name, entries[order[k]].summary});
  return out;
}

double pct_improvement(double baseline_mpiw, double tube_mpiw) {
  if (!(baseline_mpiw > 0.0)) throw ConfigError("pct_improvement: baseline MPIW must be positive");
  return (baseline_mpiw - tube_mpiw) * 100.0 / baseline_mpiw;
}

std::string format_rank_table(const std::vector<RankEntry>& ranking) {
  std::size_t name_w = 5;
  for (const auto& e : ranking) name_w = std::max(name_w, e.name.size());
  std::ostringstream os;
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%-4s  %-*s  %8s  %9s  %9s\n", "Rank", static_cast<int>(name_w), "Model", "PICP",
                "MPIW", "MPIW/PICP");
  os << buf;
  for (const auto& e : ranking) {
    std::snprintf(buf, sizeof(buf), "%-4zu  %-*s  %8s  %9s  %9s\n", e.rank, static_cast<int>(name_w), e.name.c_str(),
                  fixed(e.summary.picp, 4).c_str(), fixed(e.summary.mpiw, 4).c_str(),
                  fixed(e.summary.mpiw_over_picp, 2).c_str());
    os << buf;
  }
  return os.str();
}

std::string format_rank_csv(const std::vector<RankEntry>& ranking) {
  std::ostringstream os;
  os << "rank,model,picp,mpiw,mpiw_over_picp\n";
  for (const auto& e : ranking)
    os << e.rank << ',' << e.name << ',' << fixed(e.summary.picp, 6) << ',' << fixed(e.summary.mpiw, 6) << ','
       << fixed(e.summary.mpiw_over_picp, 6) << '\n';
  return os.str();
}

std::vector<ImprovementRow> improvement_table(const std::vector<MethodMpiw>& methods, const std::string& baseline) {
  auto average = [](const std::vector<double>& v) {
    if (v.empty()) throw ConfigError("improvement: method without MPIW values");
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  };
  const auto base = std::find_if(methods.begin(), methods.end(), [&](const auto& m) { return m.method == baseline; });
  if (base == methods.end()) throw ConfigError("improvement: baseline method '" + baseline + "' missing");
  const double base_mpiw = average(base->mpiw);

  std::vector<ImprovementRow> rows{{baseline, base_mpiw, std::nullopt}};
  for (const auto& m : methods) {
    if (m.method == baseline) continue;
    const double avg = average(m.mpiw);
    rows.push_back({m.method, avg, pct_improvement(avg, base_mpiw)});
  }
  return rows;
}

std::string format_improvement_table(const std::vector<ImprovementRow>& rows, const std::string& baseline) {
  std::size_t name_w = 6;
  for (const auto& r : rows) name_w = std::max(name_w, r.method.size());
  std::ostringstream os;
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%-*s  %12s  %s\n", static_cast<int>(name_w), "Method", "Average MPIW",
                "% of Improvement");
  os << buf;
  for (const auto& r : rows) {
    std::string pct;
    if (!r.pct)
      pct = "Baseline";
    else if (*r.pct >= 0.0)
      pct = fixed(*r.pct, 2) + "%";
    else
      pct = r.method + " is better by " + fixed(-*r.pct, 2) + "% than " + baseline;
    std::snprintf(buf, sizeof(buf), "%-*s  %12s  %s\n", static_cast<int>(name_w), r.method.c_str(),
                  fixed(r.average_mpiw, 4).c_str(), pct.c_str());
    os << buf;
  }
  return os.str();
}

std::string format_improvement_csv(const std::vector<ImprovementRow>& rows) {
  std::ostringstream os;
  os << "method,average_mpiw,pct_improvement\n";
  for (const auto& r : rows) os << r.method << ',' << fixed(r.average_mpiw, 6) << ',' << (r.pct ? fixed(*r.pct, 4) : "") << '\n';
  return os.str();
}

}  // namespace tubecast
