#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "tubecast/error.hpp"
#include "tubecast/series.hpp"

using namespace tubecast;

namespace {

TimeSeries parse(const std::string& text, ColumnConfig cols = {"t", "v", true}) {
  std::istringstream in(text);
  return parse_csv(in, cols);
}

std::string parse_error(const std::string& text, ColumnConfig cols = {"t", "v", true}) {
  try {
    parse(text, cols);
  } catch (const ParseError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(Csv, ParsesThreeRows) {
  const auto s = parse("t,v\n2020-01-01T00:00,5.0\n2020-01-01T01:00,6.1\n2020-01-01T02:00,4.9");
  ASSERT_EQ(s.size(), 3u);
  EXPECT_EQ(s[0], 5.0);
  EXPECT_EQ(s[1], 6.1);
  EXPECT_EQ(s[2], 4.9);
  EXPECT_EQ(s.timestamps()[1].key - s.timestamps()[0].key, 3600);
  EXPECT_EQ(s.timestamps()[2].text, "2020-01-01T02:00");
}

TEST(Csv, DuplicateTimestampReportsLine) {
  const auto msg = parse_error("t,v\n2020-01-01T00:00,5\n2020-01-01T01:00,6\n2020-01-01T01:00,7\n");
  EXPECT_NE(msg.find("non-increasing timestamps"), std::string::npos) << msg;
  EXPECT_NE(msg.find("line 4"), std::string::npos) << msg;
}

TEST(Csv, NanValueRejected) {
  const auto msg = parse_error("t,v\n2020-01-01T00:00,5\n2020-01-01T01:00,NaN\n");
  EXPECT_NE(msg.find("non-finite value"), std::string::npos) << msg;
  EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
}

TEST(Csv, MalformedRowsCarryLineNumbers) {
  EXPECT_NE(parse_error("t,v\n2020-01-01T00:00,5\n2020-01-01T01:00\n").find("line 3"), std::string::npos);
  EXPECT_NE(parse_error("t,v\n2020-01-01T00:00,abc\n").find("malformed row"), std::string::npos);
  EXPECT_NE(parse_error("t,v\nyesterday,1\n").find("ISO-8601"), std::string::npos);
  EXPECT_NE(parse_error("t,v\n2020-01-01T00:00,\n").find("missing value"), std::string::npos);
  EXPECT_NE(parse_error("a,b\n1,2\n").find("value column"), std::string::npos);
}

TEST(Csv, MissingTimestampColumnUsesRowIndex) {
  const auto s = parse("v\n1.5\n2.5\n", {"t", "v", true});
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s.timestamps()[1].key, 1);
  EXPECT_THROW(parse("v\n1.5\n", {"t", "v", false}), ParseError);
}

TEST(Csv, MissingFileIsInputError) {
  EXPECT_THROW(read_csv_file("/nonexistent/file.csv", {}), InputError);
}

TEST(Iso8601, ParsesVariants) {
  EXPECT_EQ(parse_iso8601("1970-01-01"), 0);
  EXPECT_EQ(parse_iso8601("1970-01-01T00:01"), 60);
  EXPECT_EQ(parse_iso8601("1970-01-01 00:00:10"), 10);
  EXPECT_EQ(parse_iso8601("1970-01-01T01:00:00+01:00"), 0);
  EXPECT_EQ(parse_iso8601("1970-01-01T00:00:00Z"), 0);
  EXPECT_FALSE(parse_iso8601("1970-13-01"));
  EXPECT_FALSE(parse_iso8601("hello"));
  EXPECT_EQ(format_iso8601(1577836800), "2020-01-01T00:00:00");
  EXPECT_EQ(parse_iso8601(format_iso8601(1234567890)), 1234567890);
}

TEST(TimeSeriesType, RejectsNonFiniteAndUnordered) {
  EXPECT_THROW(TimeSeries::from_values("x", {1.0, std::nan("")}), ConfigError);
  EXPECT_THROW(TimeSeries("x", {{2, "2"}, {1, "1"}}, {1.0, 2.0}), ConfigError);
}

TEST(Split, ThousandDefaults) {
  const auto s = split_sizes(1000, {});
  EXPECT_EQ(s.test, 300u);
  EXPECT_EQ(s.validation, 70u);
  EXPECT_EQ(s.train, 630u);
}

TEST(Split, TenPoints) {
  const auto s = split_sizes(10, {0.3, 0.1});
  EXPECT_EQ(s.test, 3u);
  EXPECT_EQ(s.validation, 1u);
  EXPECT_EQ(s.train, 6u);
}

TEST(Split, InvalidFractions) {
  EXPECT_THROW(split_sizes(100, {0.0, 0.1}), ConfigError);
  EXPECT_THROW(split_sizes(100, {0.3, 1.0}), ConfigError);
  EXPECT_THROW(chrono_split(TimeSeries::from_values("x", {1, 2, 3}), {}), ConfigError);
}

TEST(Split, PartitionIsExact) {
  std::mt19937_64 gen(4);
  std::normal_distribution<double> nd;
  for (std::size_t n : {20u, 101u, 997u}) {
    std::vector<double> v(n);
    for (auto& x : v) x = nd(gen);
    const auto series = TimeSeries::from_values("x", v);
    const auto parts = chrono_split(series, {});
    std::vector<double> joined;
    for (const auto* seg : {&parts.train, &parts.validation, &parts.test})
      joined.insert(joined.end(), seg->values().begin(), seg->values().end());
    EXPECT_EQ(joined, v);
    EXPECT_EQ(parts.validation.timestamps().front().key, static_cast<std::int64_t>(parts.sizes.train));
  }
}

TEST(Windows, Enumeration) {
  const std::vector<double> v{1, 2, 3, 4};
  const auto w = make_windows(v, 2);
  ASSERT_EQ(w.count(), 2u);
  EXPECT_EQ(std::vector<double>(w.input(0).begin(), w.input(0).end()), (std::vector<double>{1, 2}));
  EXPECT_EQ(std::vector<double>(w.input(1).begin(), w.input(1).end()), (std::vector<double>{2, 3}));
  EXPECT_EQ(w.target(0), 3);
  EXPECT_EQ(w.target(1), 4);
}

TEST(Windows, Boundaries) {
  EXPECT_THROW(make_windows(std::vector<double>{1, 2}, 2), ConfigError);
  EXPECT_THROW(make_windows(std::vector<double>{1, 2}, 0), ConfigError);
  const auto w = make_windows(std::vector<double>{5, 5, 5}, 1);
  ASSERT_EQ(w.count(), 2u);
  EXPECT_EQ(w.input(0)[0], 5);
  EXPECT_EQ(w.input(1)[0], 5);
  EXPECT_EQ(w.target(1), 5);
}

TEST(Windows, ReassemblyRoundTrip) {
  std::mt19937_64 gen(9);
  std::uniform_real_distribution<double> u(-3, 3);
  for (std::size_t lag : {1u, 3u, 24u}) {
    std::vector<double> v(60);
    for (auto& x : v) x = u(gen);
    const auto w = make_windows(v, lag);
    ASSERT_EQ(w.count(), v.size() - lag);
    std::vector<double> rebuilt(w.input(0).begin(), w.input(0).end());
    for (std::size_t k = 0; k < w.count(); ++k) {
      rebuilt.push_back(w.target(k));
      for (std::size_t j = 0; j < lag; ++j) EXPECT_EQ(w.input(k)[j], v[k + j]);
    }
    EXPECT_EQ(rebuilt, v);
  }
}

TEST(Windows, WithContextYieldsOnePairPerSegmentValue) {
  const std::vector<double> ctx{1, 2, 3, 4}, seg{5, 6};
  const auto w = make_windows_with_context(ctx, seg, 3);
  ASSERT_EQ(w.count(), 2u);
  EXPECT_EQ(w.input(0)[0], 2);
  EXPECT_EQ(w.target(0), 5);
  EXPECT_EQ(w.input(1)[2], 5);
  EXPECT_EQ(w.target(1), 6);
  EXPECT_THROW(make_windows_with_context(std::vector<double>{1}, seg, 3), ConfigError);
  EXPECT_TRUE(make_windows_with_context(ctx, std::vector<double>{}, 3).empty());
}

TEST(ScalerTest, HandArithmetic) {
  const auto s = fit_scaler(std::vector<double>{0, 2});
  EXPECT_DOUBLE_EQ(s.center(), 1.0);
  EXPECT_DOUBLE_EQ(s.spread(), 1.0);
  EXPECT_DOUBLE_EQ(s.apply(3.0), 2.0);
}

TEST(ScalerTest, RoundTrip) {
  const Scaler s(3.7, 0.41);
  EXPECT_NEAR(s.invert(s.apply(7.3)), 7.3, 7.3 * 1e-12);
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> u(-100, 100);
  for (int i = 0; i < 1000; ++i) {
    const double v = u(gen);
    EXPECT_NEAR(s.invert(s.apply(v)), v, std::abs(v) * 1e-12 + 1e-13);
  }
}

TEST(ScalerTest, ConstantSeriesRejected) {
  EXPECT_THROW(fit_scaler(std::vector<double>{4, 4, 4}), ConfigError);
  EXPECT_THROW(fit_scaler(std::vector<double>{}), ConfigError);
  EXPECT_THROW(Scaler(0.0, 0.0), ConfigError);
}

TEST(ScalerTest, FitUsesTrainSegmentOnly) {
  std::vector<double> v(100);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(i);
  const auto parts = chrono_split(TimeSeries::from_values("x", v), {});
  const Scaler s = fit_scaler(parts.train);
  const double n = static_cast<double>(parts.sizes.train);
  EXPECT_DOUBLE_EQ(s.center(), (n - 1) / 2);
  // Poisoning validation and test leaves the fitted statistics untouched.
  auto poisoned = v;
  for (std::size_t i = parts.sizes.train; i < poisoned.size(); ++i) poisoned[i] = 1e6 + static_cast<double>(i);
  const Scaler s2 = fit_scaler(chrono_split(TimeSeries::from_values("x", poisoned), {}).train);
  EXPECT_EQ(s.center(), s2.center());
  EXPECT_EQ(s.spread(), s2.spread());
}
