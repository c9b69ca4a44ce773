#include "tubecast/synth.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

#include "tubecast/error.hpp"

namespace tubecast {

std::string to_string(SyntheticKind k) {
  switch (k) {
    case SyntheticKind::sine_hetero: return "sine_hetero";
    case SyntheticKind::ar1: return "ar1";
    case SyntheticKind::lognormal_skew: return "lognormal_skew";
  }
  return "?";
}

SyntheticKind parse_synthetic_kind(const std::string& s) {
  if (s == "sine_hetero") return SyntheticKind::sine_hetero;
  if (s == "ar1") return SyntheticKind::ar1;
  if (s == "lognormal_skew") return SyntheticKind::lognormal_skew;
  throw ConfigError("synth: unknown kind '" + s + "' (expected sine_hetero, ar1 or lognormal_skew)");
}

void SyntheticSpec::validate() const {
  if (n < 2) throw ConfigError("synth: n must be at least 2");
  if (!(noise_base >= 0.0 && noise_amp >= 0.0)) throw ConfigError("synth: noise scales must be >= 0");
  if (!(ar_sigma > 0.0) || !(lognormal_sigma > 0.0)) throw ConfigError("synth: noise sigmas must be positive");
  if (!(std::abs(ar_phi) < 1.0)) throw ConfigError("synth: |ar_phi| must be < 1");
}

TimeSeries generate(const SyntheticSpec& spec) {
  spec.validate();
  constexpr std::int64_t kStart = 1577836800;  // 2020-01-01T00:00:00Z
  std::mt19937_64 gen(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  std::vector<Timestamp> stamps(spec.n);
  std::vector<double> values(spec.n);
  double prev = 0.0;
  for (std::size_t i = 0; i < spec.n; ++i) {
    const std::int64_t key = kStart + static_cast<std::int64_t>(i) * 3600;
    stamps[i] = {key, format_iso8601(key)};
    const double phase = std::sin(2.0 * std::numbers::pi * static_cast<double>(i) / 24.0);
    const double e = normal(gen);
    switch (spec.kind) {
      case SyntheticKind::sine_hetero:
        values[i] = 5.0 + 2.0 * phase + (spec.noise_base + spec.noise_amp * std::abs(phase)) * e;
        break;
      case SyntheticKind::ar1:
        prev = spec.ar_phi * prev + spec.ar_sigma * e;
        values[i] = prev;
        break;
      case SyntheticKind::lognormal_skew:
        values[i] = 5.0 + 2.0 * phase + std::exp(spec.lognormal_sigma * e) - 1.0;
        break;
    }
  }
  return TimeSeries(to_string(spec.kind), std::move(stamps), std::move(values));
}

void write_series_csv(std::ostream& os, const TimeSeries& series) {
  os << "timestamp,value\n";
  char buf[64];
  for (std::size_t i = 0; i < series.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.12g", series[i]);
    os << series.timestamps()[i].text << ',' << buf << '\n';
  }
}

}  // namespace tubecast
