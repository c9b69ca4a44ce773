#pragma once

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <string>

#include "tubecast/series.hpp"

namespace tubecast {

enum class SyntheticKind { sine_hetero, ar1, lognormal_skew };

std::string to_string(SyntheticKind k);
SyntheticKind parse_synthetic_kind(const std::string& s);

// Hourly synthetic wind-speed-like series starting 2020-01-01T00:00:00.
//   sine_hetero:    5 + 2 sin(2 pi i/24) + N(0, (base + amp |sin(2 pi i/24)|)^2)
//   ar1:            phi x_{i-1} + N(0, sigma^2)
//   lognormal_skew: 5 + 2 sin(2 pi i/24) + exp(N(0, lognormal_sigma^2)) - 1
struct SyntheticSpec {
  SyntheticKind kind = SyntheticKind::sine_hetero;
  std::size_t n = 5000;
  std::uint64_t seed = 0;
  double noise_base = 0.3;
  double noise_amp = 0.2;
  double ar_phi = 0.8;
  double ar_sigma = 1.0;
  double lognormal_sigma = 0.5;

  void validate() const;
};

TimeSeries generate(const SyntheticSpec& spec);

// "timestamp,value" CSV.
void write_series_csv(std::ostream& os, const TimeSeries& series);

}  // namespace tubecast
