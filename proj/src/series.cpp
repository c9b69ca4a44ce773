#include "tubecast/series.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "tubecast/error.hpp"

namespace tubecast {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') quoted = !quoted;
    if (line[i] == ',' && !quoted) {
      out.push_back(trim(line.substr(start, i - start)));
      start = i + 1;
    }
  }
  out.push_back(trim(line.substr(start)));
  return out;
}

bool parse_int(std::string_view s, int& out) {
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

}  // namespace

std::optional<std::int64_t> parse_iso8601(std::string_view text) {
  // Date part: YYYY-MM-DD
  if (text.size() < 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
  int y = 0, mo = 0, d = 0;
  if (!parse_int(text.substr(0, 4), y) || !parse_int(text.substr(5, 2), mo) ||
      !parse_int(text.substr(8, 2), d))
    return std::nullopt;
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(mo)},
                                        std::chrono::day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) return std::nullopt;
  std::int64_t seconds =
      std::chrono::duration_cast<std::chrono::seconds>(std::chrono::sys_days{ymd}.time_since_epoch()).count();
  std::string_view rest = text.substr(10);
  if (rest.empty()) return seconds;
  if (rest[0] != 'T' && rest[0] != ' ') return std::nullopt;
  rest.remove_prefix(1);

  int hh = 0, mm = 0, ss = 0;
  if (rest.size() < 5 || rest[2] != ':' || !parse_int(rest.substr(0, 2), hh) || !parse_int(rest.substr(3, 2), mm))
    return std::nullopt;
  rest.remove_prefix(5);
  if (!rest.empty() && rest[0] == ':') {
    if (rest.size() < 3 || !parse_int(rest.substr(1, 2), ss)) return std::nullopt;
    rest.remove_prefix(3);
    // Fractional seconds are accepted but truncated.
    if (!rest.empty() && rest[0] == '.') {
      rest.remove_prefix(1);
      while (!rest.empty() && rest[0] >= '0' && rest[0] <= '9') rest.remove_prefix(1);
    }
  }
  if (hh > 23 || mm > 59 || ss > 60) return std::nullopt;
  seconds += hh * 3600 + mm * 60 + ss;

  if (rest.empty() || rest == "Z") return seconds;
  if ((rest[0] == '+' || rest[0] == '-') && rest.size() == 6 && rest[3] == ':') {
    int oh = 0, om = 0;
    if (!parse_int(rest.substr(1, 2), oh) || !parse_int(rest.substr(4, 2), om)) return std::nullopt;
    const std::int64_t offset = oh * 3600 + om * 60;
    return rest[0] == '+' ? seconds - offset : seconds + offset;
  }
  return std::nullopt;
}

std::string format_iso8601(std::int64_t epoch_seconds) {
  using namespace std::chrono;
  const sys_seconds tp{seconds{epoch_seconds}};
  const auto day_point = floor<days>(tp);
  const year_month_day ymd{day_point};
  const hh_mm_ss tod{tp - day_point};
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02d:%02d:%02d", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(tod.hours().count()), static_cast<int>(tod.minutes().count()),
                static_cast<int>(tod.seconds().count()));
  return buf;
}

TimeSeries::TimeSeries(std::string name, std::vector<Timestamp> timestamps, std::vector<double> values)
    : name_(std::move(name)), timestamps_(std::move(timestamps)), values_(std::move(values)) {
  if (timestamps_.size() != values_.size())
    throw ConfigError("time series: " + std::to_string(timestamps_.size()) + " timestamps for " +
                      std::to_string(values_.size()) + " values");
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) throw ConfigError("time series: non-finite value at index " + std::to_string(i));
    if (i > 0 && timestamps_[i].key <= timestamps_[i - 1].key)
      throw ConfigError("time series: non-increasing timestamps at index " + std::to_string(i));
  }
}

TimeSeries TimeSeries::from_values(std::string name, std::vector<double> values) {
  std::vector<Timestamp> stamps(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) stamps[i] = {static_cast<std::int64_t>(i), std::to_string(i)};
  return TimeSeries(std::move(name), std::move(stamps), std::move(values));
}

TimeSeries TimeSeries::slice(std::size_t begin, std::size_t end) const {
  if (begin > end || end > size()) throw ConfigError("time series: slice out of range");
  return TimeSeries(name_, {timestamps_.begin() + begin, timestamps_.begin() + end},
                    {values_.begin() + begin, values_.begin() + end});
}

TimeSeries parse_csv(std::istream& source, const ColumnConfig& columns, std::string name) {
  std::string line;
  std::size_t line_no = 0;
  // Skip leading blank lines; the first non-blank line is the header.
  while (std::getline(source, line)) {
    ++line_no;
    if (!trim(line).empty()) break;
  }
  if (trim(line).empty()) throw InputError("csv: missing header row");
  if (line_no == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);

  std::vector<std::string> header;
  for (auto f : split_fields(line)) header.emplace_back(f);
  auto find_column = [&](const std::string& col) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == col) return i;
    return std::nullopt;
  };

  const auto value_idx = find_column(columns.value_column);
  if (!value_idx) throw ParseError("value column '" + columns.value_column + "' not in header", line_no);
  std::optional<std::size_t> time_idx;
  if (!columns.timestamp_column.empty()) {
    time_idx = find_column(columns.timestamp_column);
    if (!time_idx && !columns.timestamp_optional)
      throw ParseError("timestamp column '" + columns.timestamp_column + "' not in header", line_no);
  }

  std::vector<Timestamp> stamps;
  std::vector<double> values;
  while (std::getline(source, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != header.size())
      throw ParseError("malformed row: expected " + std::to_string(header.size()) + " fields, got " +
                           std::to_string(fields.size()),
                       line_no);

    const std::string_view raw = fields[*value_idx];
    if (raw.empty()) throw ParseError("missing value", line_no);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), v);
    if (ec != std::errc{} || ptr != raw.data() + raw.size())
      throw ParseError("malformed row: value '" + std::string(raw) + "' is not a decimal number", line_no);
    if (!std::isfinite(v)) throw ParseError("non-finite value '" + std::string(raw) + "'", line_no);

    Timestamp ts;
    if (time_idx) {
      const std::string_view t = fields[*time_idx];
      const auto key = parse_iso8601(t);
      if (!key) throw ParseError("malformed row: timestamp '" + std::string(t) + "' is not ISO-8601", line_no);
      ts = {*key, std::string(t)};
    } else {
      ts = {static_cast<std::int64_t>(values.size()), std::to_string(values.size())};
    }
    if (!stamps.empty() && ts.key <= stamps.back().key)
      throw ParseError("non-increasing timestamps ('" + ts.text + "' after '" + stamps.back().text + "')", line_no);
    stamps.push_back(std::move(ts));
    values.push_back(v);
  }
  return TimeSeries(std::move(name), std::move(stamps), std::move(values));
}

TimeSeries read_csv_file(const std::string& path, const ColumnConfig& columns) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open input file '" + path + "'");
  return parse_csv(in, columns, path);
}

void SplitSpec::validate() const {
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw ConfigError("split: test_fraction must lie in (0,1), got " + std::to_string(test_fraction));
  if (!(validation_fraction_of_train > 0.0 && validation_fraction_of_train < 1.0))
    throw ConfigError("split: validation_fraction_of_train must lie in (0,1), got " +
                      std::to_string(validation_fraction_of_train));
}

SplitSizes split_sizes(std::size_t n, const SplitSpec& spec) {
  spec.validate();
  SplitSizes s;
  s.test = static_cast<std::size_t>(std::llround(spec.test_fraction * static_cast<double>(n)));
  s.validation = static_cast<std::size_t>(std::llround(spec.validation_fraction_of_train * static_cast<double>(n - s.test)));
  s.train = n - s.test - s.validation;
  return s;
}

ChronoSplit chrono_split(const TimeSeries& series, const SplitSpec& spec) {
  const SplitSizes s = split_sizes(series.size(), spec);
  if (s.train == 0 || s.validation == 0 || s.test == 0 || s.test + s.validation >= series.size())
    throw ConfigError("split: series of length " + std::to_string(series.size()) +
                      " is too short for the requested split");
  return {series.slice(0, s.train), series.slice(s.train, s.train + s.validation),
          series.slice(s.train + s.validation, series.size()), s};
}

WindowedDataset::WindowedDataset(std::size_t lag, std::vector<double> inputs, std::vector<double> targets)
    : lag_(lag), inputs_(std::move(inputs)), targets_(std::move(targets)) {
  if (lag_ == 0) throw ConfigError("windows: lag must be positive");
  if (inputs_.size() != targets_.size() * lag_) throw ConfigError("windows: inputs/targets size mismatch");
}

WindowedDataset make_windows(std::span<const double> values, std::size_t lag) {
  if (lag == 0) throw ConfigError("windows: lag must be positive");
  if (lag >= values.size())
    throw ConfigError("windows: lag " + std::to_string(lag) + " must be smaller than series length " +
                      std::to_string(values.size()));
  const std::size_t m = values.size() - lag;
  std::vector<double> inputs;
  inputs.reserve(m * lag);
  std::vector<double> targets(m);
  for (std::size_t k = 0; k < m; ++k) {
    inputs.insert(inputs.end(), values.begin() + static_cast<std::ptrdiff_t>(k),
                  values.begin() + static_cast<std::ptrdiff_t>(k + lag));
    targets[k] = values[k + lag];
  }
  return WindowedDataset(lag, std::move(inputs), std::move(targets));
}

WindowedDataset make_windows(const TimeSeries& series, std::size_t lag) {
  return make_windows(series.values(), lag);
}

WindowedDataset make_windows_with_context(std::span<const double> context, std::span<const double> segment,
                                          std::size_t lag) {
  if (lag == 0) throw ConfigError("windows: lag must be positive");
  if (context.size() < lag)
    throw ConfigError("windows: need at least " + std::to_string(lag) + " context observations, got " +
                      std::to_string(context.size()));
  if (segment.empty()) return WindowedDataset(lag, {}, {});
  std::vector<double> joined(context.end() - static_cast<std::ptrdiff_t>(lag), context.end());
  joined.insert(joined.end(), segment.begin(), segment.end());
  return make_windows(joined, lag);
}

Scaler::Scaler(double center, double spread) : center_(center), spread_(spread) {
  if (!std::isfinite(center) || !std::isfinite(spread) || !(spread > 0.0))
    throw ConfigError("scaler: spread must be finite and positive");
}

std::vector<double> Scaler::apply(std::span<const double> values) const {
  std::vector<double> out(values.size());
  std::transform(values.begin(), values.end(), out.begin(), [this](double v) { return apply(v); });
  return out;
}

std::vector<double> Scaler::invert(std::span<const double> values) const {
  std::vector<double> out(values.size());
  std::transform(values.begin(), values.end(), out.begin(), [this](double v) { return invert(v); });
  return out;
}

TimeSeries Scaler::apply(const TimeSeries& series) const {
  return TimeSeries(series.name(), {series.timestamps().begin(), series.timestamps().end()},
                    apply(series.values()));
}

Scaler fit_scaler(std::span<const double> train) {
  if (train.empty()) throw ConfigError("scaler: empty training series");
  const auto [lo, hi] = std::minmax_element(train.begin(), train.end());
  if (*lo == *hi) throw ConfigError("scaler: constant training series has zero spread");
  const double n = static_cast<double>(train.size());
  const double mean = std::accumulate(train.begin(), train.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : train) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / n);
  if (!(sd > 0.0)) throw ConfigError("scaler: constant training series has zero spread");
  return Scaler(mean, sd);
}

Scaler fit_scaler(const TimeSeries& train) { return fit_scaler(train.values()); }

}  // namespace tubecast
