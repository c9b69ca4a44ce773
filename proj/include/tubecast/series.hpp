#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace tubecast {

// A point on the time axis. `key` orders observations (seconds since the Unix
// epoch for ISO-8601 stamps, or the row index when the file has no time
// column); `text` is what gets written back out.
struct Timestamp {
  std::int64_t key = 0;
  std::string text;

  friend bool operator==(const Timestamp&, const Timestamp&) = default;
};

// Parses "YYYY-MM-DD", "YYYY-MM-DDTHH:MM", "YYYY-MM-DDTHH:MM:SS[.fff]" with an
// optional "Z" or "+hh:mm"/"-hh:mm" suffix. A space may replace the 'T'.
// Returns seconds since the epoch (UTC), or nullopt when the text is not ISO-8601.
std::optional<std::int64_t> parse_iso8601(std::string_view text);

// Inverse of parse_iso8601 for whole seconds, "YYYY-MM-DDTHH:MM:SS".
std::string format_iso8601(std::int64_t epoch_seconds);

class TimeSeries {
 public:
  TimeSeries() = default;

  // Validates strictly increasing keys and finite values.
  TimeSeries(std::string name, std::vector<Timestamp> timestamps, std::vector<double> values);

  // Row-index time axis.
  static TimeSeries from_values(std::string name, std::vector<double> values);

  const std::string& name() const noexcept { return name_; }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }
  std::span<const double> values() const noexcept { return values_; }
  std::span<const Timestamp> timestamps() const noexcept { return timestamps_; }
  double operator[](std::size_t i) const { return values_[i]; }

  // Contiguous sub-series [begin, end).
  TimeSeries slice(std::size_t begin, std::size_t end) const;

 private:
  std::string name_;
  std::vector<Timestamp> timestamps_;
  std::vector<double> values_;
};

struct ColumnConfig {
  // Empty: the file has no time column and the row index is used.
  std::string timestamp_column = "timestamp";
  std::string value_column = "value";
  // When true, a missing timestamp column is tolerated (index axis).
  bool timestamp_optional = true;
};

TimeSeries parse_csv(std::istream& source, const ColumnConfig& columns, std::string name = "series");
TimeSeries read_csv_file(const std::string& path, const ColumnConfig& columns);

struct SplitSpec {
  double test_fraction = 0.30;
  double validation_fraction_of_train = 0.10;

  void validate() const;
};

struct SplitSizes {
  std::size_t train = 0;
  std::size_t validation = 0;
  std::size_t test = 0;
};

// |test| = round(test_fraction * n); |validation| = round(fraction * (n - |test|)).
SplitSizes split_sizes(std::size_t n, const SplitSpec& spec);

struct ChronoSplit {
  TimeSeries train;
  TimeSeries validation;
  TimeSeries test;
  SplitSizes sizes;
};

// Contiguous train -> validation -> test partition; never shuffled.
ChronoSplit chrono_split(const TimeSeries& series, const SplitSpec& spec);

// Lag-window inputs paired with their next-step targets. Inputs are stored
// row-major: input k occupies inputs[k*lag .. k*lag+lag).
class WindowedDataset {
 public:
  WindowedDataset() = default;
  WindowedDataset(std::size_t lag, std::vector<double> inputs, std::vector<double> targets);

  std::size_t lag() const noexcept { return lag_; }
  std::size_t count() const noexcept { return targets_.size(); }
  bool empty() const noexcept { return targets_.empty(); }
  std::span<const double> input(std::size_t k) const { return {inputs_.data() + k * lag_, lag_}; }
  double target(std::size_t k) const { return targets_[k]; }
  std::span<const double> inputs() const noexcept { return inputs_; }
  std::span<const double> targets() const noexcept { return targets_; }

 private:
  std::size_t lag_ = 0;
  std::vector<double> inputs_;
  std::vector<double> targets_;
};

// Exactly size()-lag pairs; pair k has input values[k..k+lag) and target values[k+lag].
WindowedDataset make_windows(const TimeSeries& series, std::size_t lag);
WindowedDataset make_windows(std::span<const double> values, std::size_t lag);

// One pair per value of `segment`, with the first windows drawing their
// history from the tail of `context` (the observations that precede the
// segment in time). Used for teacher-forced validation and test evaluation.
WindowedDataset make_windows_with_context(std::span<const double> context,
                                          std::span<const double> segment, std::size_t lag);

// Standardization fitted on the training segment only.
class Scaler {
 public:
  Scaler() = default;
  Scaler(double center, double spread);

  static Scaler identity() { return Scaler{0.0, 1.0}; }

  double center() const noexcept { return center_; }
  double spread() const noexcept { return spread_; }

  double apply(double v) const noexcept { return (v - center_) / spread_; }
  double invert(double v) const noexcept { return v * spread_ + center_; }
  std::vector<double> apply(std::span<const double> values) const;
  std::vector<double> invert(std::span<const double> values) const;
  TimeSeries apply(const TimeSeries& series) const;

 private:
  double center_ = 0.0;
  double spread_ = 1.0;
};

// Population mean / standard deviation. Throws ConfigError for a constant series.
Scaler fit_scaler(const TimeSeries& train);
Scaler fit_scaler(std::span<const double> train);

}  // namespace tubecast
