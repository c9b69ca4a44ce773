#pragma once

// Published (PICP, MPIW) figures and improvement rows used as fixed inputs.

#include <string>
#include <vector>

namespace tubecast::testing {

struct PublishedRow {
  std::string name;
  double picp;
  double mpiw;
};

// Jaisalmer test results.
inline const std::vector<PublishedRow>& jaisalmer_rows() {
  static const std::vector<PublishedRow> rows{
      {"LSTM+Tube", 0.9589, 3.697}, {"LSTM+QD", 0.9689, 4.47},      {"LSTM+Quantile", 0.979, 4.937},
      {"GRU+Tube", 0.955, 3.392},   {"GRU+QD", 0.9666, 3.966},      {"GRU+Quantile", 0.9891, 5.365},
      {"TCN+Tube", 0.9581, 3.453},  {"TCN+QD", 0.9589, 3.511},      {"TCN+Quantile", 0.9674, 4.094},
      {"MDN", 0.955, 4.626},        {"TimeGPT", 0.9417, 10.608},    {"DeepAR", 0.9969, 6.3553},
  };
  return rows;
}

// Ranking of the rows above, best first.
inline const std::vector<std::string>& jaisalmer_ranking() {
  static const std::vector<std::string> order{"GRU+Tube",     "TCN+Tube", "TCN+QD",        "LSTM+Tube",
                                              "GRU+QD",       "TCN+Quantile", "LSTM+QD",   "MDN",
                                              "LSTM+Quantile", "GRU+Quantile", "DeepAR",   "TimeGPT"};
  return order;
}

struct ImprovementCase {
  std::string label;
  double baseline_mpiw;
  double tube_mpiw;
  double pct;
};

// Rows whose published percentage follows from the published averages.
inline const std::vector<ImprovementCase>& improvement_rows() {
  static const std::vector<ImprovementCase> rows{
      {"San Francisco QD", 5.947, 4.681, 21.29},
      {"San Francisco Quantile", 5.181, 4.681, 9.65},
      {"San Francisco DeepAR", 6.2023, 4.681, 24.53},
      {"Jaisalmer QD", 3.982, 3.514, 11.75},
      {"Jaisalmer Quantile", 4.798, 3.514, 26.76},
      {"Jaisalmer DeepAR", 6.3553, 3.514, 44.71},
      {"Jaisalmer MDN", 4.626, 3.514, 24.04},
      {"Los Angeles Quantile", 3.809, 3.627, 4.78},
      {"Los Angeles DeepAR", 4.5008, 3.627, 19.41},
      {"Los Angeles TimeGPT", 6.519, 3.627, 44.36},
      {"Los Angeles MDN", 3.487, 3.627, -4.014},
  };
  return rows;
}

}  // namespace tubecast::testing
