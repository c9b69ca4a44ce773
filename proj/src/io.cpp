#include "tubecast/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "tubecast/error.hpp"

namespace tubecast::io {

using nlohmann::json;

namespace {

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::string fmt12(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

double parse_double(std::string_view s, std::size_t line, const char* what) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v))
    throw ParseError(std::string("bad ") + what + " '" + std::string(s) + "'", line);
  return v;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) {
    while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) field.pop_back();
    out.push_back(field);
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

json member_to_json(const PiModel& m) {
  return {{"spec", to_json(m.spec)},
          {"scaler", {{"center", m.scaler.center()}, {"spread", m.scaler.spread()}}},
          {"params", m.params.values}};
}

PiModel member_from_json(const json& j) {
  PiModel m;
  m.spec = model_spec_from_json(j.at("spec"));
  m.scaler = Scaler(j.at("scaler").at("center").get<double>(), j.at("scaler").at("spread").get<double>());
  const Network net(m.spec);
  m.params.values = j.at("params").get<std::vector<double>>();
  m.params.layers = net.shapes();
  if (m.params.values.size() != net.param_count())
    throw InputError("model file: " + std::to_string(m.params.values.size()) + " parameters, spec needs " +
                     std::to_string(net.param_count()));
  for (double v : m.params.values)
    if (!std::isfinite(v)) throw InputError("model file: non-finite parameter");
  return m;
}

}  // namespace

json to_json(const ModelSpec& spec) {
  return {{"architecture", to_string(spec.architecture)},
          {"hidden_sizes", spec.hidden_sizes},
          {"lag", spec.lag},
          {"head", to_string(spec.head)},
          {"tcn_dilations", spec.tcn_dilations},
          {"kernel_width", spec.kernel_width},
          {"seed", spec.seed}};
}

ModelSpec model_spec_from_json(const json& j) {
  ModelSpec s;
  s.architecture = parse_architecture(j.at("architecture").get<std::string>());
  s.hidden_sizes = j.at("hidden_sizes").get<std::vector<int>>();
  s.lag = j.at("lag").get<int>();
  s.head = parse_head(j.at("head").get<std::string>());
  s.tcn_dilations = j.at("tcn_dilations").get<std::vector<int>>();
  s.kernel_width = j.at("kernel_width").get<int>();
  s.seed = j.at("seed").get<std::uint64_t>();
  s.validate();
  return s;
}

json to_json(const EvalSummary& s) {
  return {{"picp", s.picp},
          {"mpiw", s.mpiw},
          {"n", s.n},
          {"mpiw_over_picp", finite_or_null(s.mpiw_over_picp)},
          {"regions", {{"m1", s.regions[0]}, {"m2", s.regions[1]}, {"m3", s.regions[2]}, {"m4", s.regions[3]}}},
          {"crossings", s.crossing_count}};
}

EvalSummary eval_summary_from_json(const json& j) {
  EvalSummary s;
  s.picp = j.at("picp").get<double>();
  s.mpiw = j.at("mpiw").get<double>();
  s.n = j.at("n").get<std::size_t>();
  s.mpiw_over_picp = j.at("mpiw_over_picp").is_null() ? INFINITY : j.at("mpiw_over_picp").get<double>();
  const auto& r = j.at("regions");
  s.regions = {r.at("m1").get<std::size_t>(), r.at("m2").get<std::size_t>(), r.at("m3").get<std::size_t>(),
               r.at("m4").get<std::size_t>()};
  s.crossing_count = j.at("crossings").get<std::size_t>();
  return s;
}

void write_train_report(std::ostream& os, const TrainReport& report) {
  json header = {{"record", "summary"},
                 {"seed", report.seed},
                 {"shuffle_seed", report.shuffle_seed},
                 {"epochs_run", report.epochs_run},
                 {"best_epoch", report.best_epoch},
                 {"best_validation_objective", finite_or_null(report.best_validation_objective)}};
  header["validation_picp"] = report.validation_picp ? json(*report.validation_picp) : json(nullptr);
  header["validation_mpiw"] = report.validation_mpiw ? json(*report.validation_mpiw) : json(nullptr);
  os << header.dump() << '\n';
  for (const auto& e : report.epochs)
    os << json{{"record", "epoch"},
               {"epoch", e.epoch},
               {"train_objective", e.train_objective},
               {"validation_objective", e.validation_objective}}
              .dump()
       << '\n';
}

json to_json(const RecalReport& report) {
  json rounds = json::array();
  for (const auto& r : report.rounds)
    rounds.push_back({{"round", r.index},
                      {"delta", r.delta},
                      {"validation_picp", r.validation_picp},
                      {"validation_mpiw", r.validation_mpiw}});
  json j = {{"rounds", rounds},
            {"chosen_round", report.chosen_round},
            {"chosen_delta", report.rounds.empty() ? 0.0 : report.rounds[report.chosen_round].delta},
            {"stop_reason", to_string(report.stop_reason)}};
  if (!report.warning.empty()) j["warning"] = report.warning;
  return j;
}

void save_model(std::ostream& os, const Forecaster& model) {
  json members = json::array();
  for (const auto& m : model.members()) members.push_back(member_to_json(m));
  const json doc = {{"format", "tubecast-model"},
                    {"format_version", kModelFormatVersion},
                    {"kind", model.is_pair() ? "quantile_pair" : "interval"},
                    {"members", members}};
  os << doc.dump(1) << '\n';
}

Forecaster load_model(std::istream& is) {
  json doc;
  try {
    doc = json::parse(is);
  } catch (const json::exception& e) {
    throw InputError(std::string("model file: ") + e.what());
  }
  try {
    if (doc.at("format") != "tubecast-model") throw InputError("model file: unrecognized format tag");
    if (doc.at("format_version").get<int>() != kModelFormatVersion)
      throw InputError("model file: unsupported format_version " + doc.at("format_version").dump());
    const auto& members = doc.at("members");
    const std::string kind = doc.at("kind").get<std::string>();
    if (kind == "interval" && members.size() == 1) return Forecaster(member_from_json(members[0]));
    if (kind == "quantile_pair" && members.size() == 2)
      return Forecaster(member_from_json(members[0]), member_from_json(members[1]));
    throw InputError("model file: kind '" + kind + "' with " + std::to_string(members.size()) + " members");
  } catch (const json::exception& e) {
    throw InputError(std::string("model file: ") + e.what());
  }
}

void save_model_file(const std::string& path, const Forecaster& model) {
  std::ostringstream os;
  save_model(os, model);
  write_text_file(path, os.str());
}

Forecaster load_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open model file '" + path + "'");
  return load_model(in);
}

void write_forecast_csv(std::ostream& os, const IntervalForecast& forecast) {
  bool with_actual = false;
  for (const auto& s : forecast.steps) with_actual = with_actual || s.actual.has_value();
  os << "timestamp,lower,upper" << (with_actual ? ",actual" : "") << '\n';
  for (const auto& s : forecast.steps) {
    os << s.timestamp << ',' << fmt12(s.lower) << ',' << fmt12(s.upper);
    if (with_actual) os << ',' << (s.actual ? fmt12(*s.actual) : "");
    os << '\n';
  }
}

IntervalForecast read_forecast_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw InputError("forecast csv: missing header");
  const auto header = split_csv(line);
  auto col = [&](const std::string& name) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    return std::nullopt;
  };
  const auto ts = col("timestamp"), lo = col("lower"), hi = col("upper"), act = col("actual");
  if (!lo || !hi) throw ParseError("forecast csv: header needs lower and upper columns", 1);

  IntervalForecast out;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv(line);
    if (f.size() != header.size()) throw ParseError("malformed row", line_no);
    ForecastStep s;
    s.timestamp = ts ? f[*ts] : std::to_string(out.steps.size());
    s.lower = parse_double(f[*lo], line_no, "lower bound");
    s.upper = parse_double(f[*hi], line_no, "upper bound");
    if (s.lower > s.upper) throw ParseError("lower bound exceeds upper bound", line_no);
    if (act && !f[*act].empty()) s.actual = parse_double(f[*act], line_no, "actual");
    out.steps.push_back(std::move(s));
  }
  return out;
}

void write_text_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write '" + path + "'");
  out << contents;
  if (!out) throw InputError("failed writing '" + path + "'");
}

}  // namespace tubecast::io
