#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "published_tables.hpp"
#include "tubecast/error.hpp"
#include "tubecast/metrics.hpp"

using namespace tubecast;
using tubecast::testing::improvement_rows;
using tubecast::testing::jaisalmer_ranking;
using tubecast::testing::jaisalmer_rows;

namespace {

IntervalForecast make_forecast(const std::vector<std::array<double, 3>>& rows) {
  IntervalForecast f;
  for (std::size_t i = 0; i < rows.size(); ++i)
    f.steps.push_back({std::to_string(i), rows[i][0], rows[i][1], rows[i][2]});
  return f;
}

std::vector<NamedSummary> published() {
  std::vector<NamedSummary> out;
  for (const auto& r : jaisalmer_rows()) out.push_back({r.name, summary_from(r.picp, r.mpiw)});
  return out;
}

}  // namespace

TEST(Picp, Examples) {
  EXPECT_EQ(picp(make_forecast({{0, 1, 0.5}, {0, 1, 0.2}})), 1.0);
  EXPECT_EQ(picp(make_forecast({{0, 1, 0.5}, {0, 1, 0.2}, {0, 1, 0.9}, {0, 1, 1.5}})), 0.75);
  EXPECT_EQ(picp(make_forecast({{0, 1, 1.0}, {0, 1, 0.0}})), 1.0);
}

TEST(Picp, MissingActualsRejected) {
  auto f = make_forecast({{0, 1, 0.5}});
  f.steps.push_back({"x", 0, 1, std::nullopt});
  EXPECT_THROW(picp(f), ConfigError);
  EXPECT_THROW(picp(IntervalForecast{}), ConfigError);
}

TEST(Mpiw, Examples) {
  EXPECT_EQ(mpiw(make_forecast({{0, 2, 0}, {1, 5, 0}})), 3.0);
  EXPECT_DOUBLE_EQ(mpiw(make_forecast({{0, 1.5, 0}, {-3, -1.5, 0}, {7, 8.5, 0}})), 1.5);
  EXPECT_EQ(mpiw(make_forecast({{2, 2, 0}, {3, 3, 0}})), 0.0);
  EXPECT_THROW(mpiw(IntervalForecast{}), ConfigError);
}

TEST(Mpiw, TranslationInvariantAndLinearInScale) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(0, 10);
  std::vector<std::array<double, 3>> rows;
  for (int i = 0; i < 200; ++i) {
    const double a = u(gen), w = u(gen);
    rows.push_back({a, a + w, u(gen)});
  }
  const double base = mpiw(make_forecast(rows));
  auto shifted = rows, scaled = rows;
  for (auto& r : shifted) r[0] += 42.5, r[1] += 42.5;
  for (auto& r : scaled) r[0] *= 3.6, r[1] *= 3.6;
  EXPECT_NEAR(mpiw(make_forecast(shifted)), base, 1e-12 * base);
  EXPECT_NEAR(mpiw(make_forecast(scaled)), 3.6 * base, 1e-12 * base);
}

TEST(Regions, Examples) {
  EXPECT_EQ(region_counts(make_forecast({{0, 1, 2}, {0, 1, 3}}), 0.5), (RegionCounts{2, 0, 0, 0}));
  EXPECT_EQ(region_counts(make_forecast({{0, 1, 0.7}}), 0.5), (RegionCounts{0, 1, 0, 0}));
}

TEST(Regions, UniformMatchesBinomial) {
  std::mt19937_64 gen(17);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<std::array<double, 3>> rows;
  const int n = 10000;
  for (int i = 0; i < n; ++i) rows.push_back({0.05, 0.95, u(gen)});
  const auto c = region_counts(make_forecast(rows), 0.5);
  auto within = [&](std::size_t count, double p) {
    const double mean = n * p, sd = std::sqrt(n * p * (1 - p));
    return std::abs(static_cast<double>(count) - mean) <= 3 * sd;
  };
  EXPECT_TRUE(within(c[0], 0.05)) << c[0];
  EXPECT_TRUE(within(c[1], 0.45)) << c[1];
  EXPECT_TRUE(within(c[2], 0.45)) << c[2];
  EXPECT_TRUE(within(c[3], 0.05)) << c[3];
}

TEST(Summary, PicpEqualsInsideRegionsOverN) {
  std::mt19937_64 gen(5);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> ur(0.05, 0.95);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::array<double, 3>> rows;
    for (int i = 0; i < 37; ++i) {
      const double a = nd(gen), w = std::abs(nd(gen));
      rows.push_back({a, a + w, i % 9 == 0 ? a + w : nd(gen)});
    }
    const auto f = make_forecast(rows);
    const double r = ur(gen);
    const auto s = summarize(f, r);
    EXPECT_EQ(s.regions[0] + s.regions[1] + s.regions[2] + s.regions[3], s.n);
    EXPECT_EQ(s.picp, static_cast<double>(s.regions[1] + s.regions[2]) / static_cast<double>(s.n));
    EXPECT_EQ(s.picp, picp(f));
  }
}

TEST(Compare, Examples) {
  EXPECT_EQ(compare_models(summary_from(0.96, 3.4), summary_from(0.97, 4.4), 0.95), Comparison::a_better);
  EXPECT_EQ(compare_models(summary_from(0.94, 2.0), summary_from(0.96, 9.0), 0.95), Comparison::b_better);
  EXPECT_EQ(compare_models(summary_from(0.93, 1.0), summary_from(0.94, 5.0), 0.95), Comparison::b_better);
  EXPECT_EQ(compare_models(summary_from(0.955, 3.392), summary_from(0.9666, 3.966), 0.95), Comparison::a_better);
  EXPECT_EQ(compare_models(summary_from(0.96, 3.0), summary_from(0.99, 3.0), 0.95), Comparison::tie);
  EXPECT_THROW(compare_models(summary_from(0.96, 3, 10), summary_from(0.96, 3, 11), 0.95), ConfigError);
}

TEST(Compare, AntisymmetricAndConsistentWithRanking) {
  // Every pairing of meeters and non-meeters on a small grid.
  std::vector<EvalSummary> pool;
  for (double p : {0.90, 0.93, 0.95, 0.97, 1.0})
    for (double w : {1.0, 2.0, 3.0}) pool.push_back(summary_from(p, w));
  auto flip = [](Comparison c) {
    return c == Comparison::a_better ? Comparison::b_better : c == Comparison::b_better ? Comparison::a_better : c;
  };
  for (std::size_t i = 0; i < pool.size(); ++i)
    for (std::size_t j = 0; j < pool.size(); ++j)
      EXPECT_EQ(compare_models(pool[i], pool[j], 0.95), flip(compare_models(pool[j], pool[i], 0.95)));

  for (std::size_t i = 0; i < pool.size(); ++i)
    for (std::size_t j = 0; j < pool.size(); ++j)
      for (std::size_t k = 0; k < pool.size(); ++k) {
        const std::vector<NamedSummary> entries{{"a", pool[i]}, {"b", pool[j]}, {"c", pool[k]}};
        const auto ranking = rank_models(entries, 0.95);
        for (std::size_t x = 0; x + 1 < ranking.size(); ++x)
          EXPECT_NE(compare_models(ranking[x].summary, ranking[x + 1].summary, 0.95), Comparison::b_better);
      }
}

TEST(Rank, PublishedTopRows) {
  const std::vector<NamedSummary> entries{{"TCN+Tube", summary_from(0.9581, 3.453)},
                                          {"LSTM+Tube", summary_from(0.9589, 3.697)},
                                          {"GRU+Tube", summary_from(0.955, 3.392)}};
  const auto ranking = rank_models(entries, 0.95);
  ASSERT_EQ(ranking.size(), 3u);
  EXPECT_EQ(ranking[0].name, "GRU+Tube");
  EXPECT_EQ(ranking[1].name, "TCN+Tube");
  EXPECT_EQ(ranking[2].name, "LSTM+Tube");
  EXPECT_NEAR(ranking[0].summary.mpiw_over_picp, 3.55, 0.01);
  EXPECT_NEAR(ranking[1].summary.mpiw_over_picp, 3.60, 0.01);
  EXPECT_NEAR(ranking[2].summary.mpiw_over_picp, 3.86, 0.01);
  EXPECT_EQ(ranking[2].rank, 3u);
}

TEST(Rank, FullPublishedTable) {
  const auto ranking = rank_models(published(), 0.95);
  const auto& expected = jaisalmer_ranking();
  ASSERT_EQ(ranking.size(), expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i) EXPECT_EQ(ranking[i].name, expected[i]) << "rank " << i + 1;
  EXPECT_NEAR(ranking[2].summary.mpiw_over_picp, 3.66, 0.01);
}

TEST(Rank, NonMeeterBelowMeetersAndStableTies) {
  const std::vector<NamedSummary> entries{{"miss", summary_from(0.949, 0.1)},
                                          {"x", summary_from(0.96, 5)},
                                          {"y", summary_from(0.96, 5)},
                                          {"z", summary_from(0.99, 9)}};
  const auto ranking = rank_models(entries, 0.95);
  EXPECT_EQ(ranking.back().name, "miss");
  EXPECT_EQ(ranking[0].name, "x");
  EXPECT_EQ(ranking[1].name, "y");
  EXPECT_THROW(rank_models({entries[0]}, 0.95), ConfigError);
}

TEST(Improvement, PublishedRows) {
  for (const auto& row : improvement_rows())
    EXPECT_NEAR(pct_improvement(row.baseline_mpiw, row.tube_mpiw), row.pct, 0.01) << row.label;
  EXPECT_EQ(pct_improvement(3.5, 3.5), 0.0);
  EXPECT_THROW(pct_improvement(0.0, 1.0), ConfigError);
}

TEST(Improvement, TubeAverageOverArchitectures) {
  const double tube = (3.697 + 3.392 + 3.453) / 3;
  EXPECT_NEAR(tube, 3.514, 0.0005);
  const auto rows = improvement_table({{"Tube", {3.697, 3.392, 3.453}}, {"Quantile", {4.937, 5.365, 4.094}}}, "Tube");
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_FALSE(rows[0].pct);
  EXPECT_NEAR(rows[1].average_mpiw, 4.7987, 1e-4);
  EXPECT_DOUBLE_EQ(*rows[1].pct, pct_improvement(rows[1].average_mpiw, rows[0].average_mpiw));
  // The published 26.76 uses the rounded averages 4.798 and 3.514.
  EXPECT_NEAR(pct_improvement(4.798, 3.514), 26.76, 0.01);
}

TEST(Formatting, TablesAndCsv) {
  const auto ranking = rank_models(published(), 0.95);
  const auto table = format_rank_table(ranking);
  EXPECT_NE(table.find("MPIW/PICP"), std::string::npos);
  EXPECT_NE(table.find("3.55"), std::string::npos);
  const auto csv = format_rank_csv(ranking);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "rank,model,picp,mpiw,mpiw_over_picp");
  EXPECT_NE(csv.find("1,GRU+Tube,0.955000,3.392000,"), std::string::npos);

  const auto rows = improvement_table({{"Tube", {3.627}}, {"MDN", {3.487}}}, "Tube");
  const auto text = format_improvement_table(rows, "Tube");
  EXPECT_NE(text.find("MDN is better by 4.01% than Tube"), std::string::npos) << text;
  EXPECT_NE(format_improvement_csv(rows).find("MDN,3.487000,-4.0149"), std::string::npos);
}
