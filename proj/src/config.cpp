#include "tubecast/config.hpp"

#include <fstream>
#include <initializer_list>
#include <limits>

#include "tubecast/error.hpp"

namespace tubecast {

using nlohmann::json;

std::string to_string(Method m) {
  switch (m) {
    case Method::tube: return "tube";
    case Method::qd: return "qd";
    case Method::quantile: return "quantile";
  }
  return "?";
}

Method parse_method(const std::string& s) {
  if (s == "tube") return Method::tube;
  if (s == "qd") return Method::qd;
  if (s == "quantile") return Method::quantile;
  throw ConfigError("config: unknown method '" + s + "' (expected tube, qd or quantile)");
}

namespace {

std::uint64_t mix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Reads one JSON object, remembering which keys were consumed so that
// leftovers can be reported as unknown.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError("config: '" + path_ + "' must be an object");
  }

  template <class T>
  void read(const char* key, T& out) {
    if (const json* v = take(key)) out = convert<T>(*v, key);
  }

  template <class T>
  void read(const char* key, std::optional<T>& out) {
    if (const json* v = take(key)) {
      if (v->is_null())
        out.reset();
      else
        out = convert<T>(*v, key);
    }
  }

  const json* take(const char* key) {
    seen_.emplace_back(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::string child(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      bool known = false;
      for (const auto& s : seen_) known = known || s == k;
      if (!known) throw ConfigError("config: unknown field '" + child(k.c_str()) + "'");
    }
  }

 private:
  template <class T>
  T convert(const json& v, const char* key) const {
    try {
      if constexpr (std::is_same_v<T, std::uint64_t> || std::is_same_v<T, std::size_t>) {
        if (!v.is_number_unsigned()) throw ConfigError("");
      } else if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
        if (!v.is_number_integer()) throw ConfigError("");
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!v.is_number()) throw ConfigError("");
      }
      return v.get<T>();
    } catch (const std::exception&) {
      throw ConfigError("config: field '" + child(key) + "' has the wrong type (" + v.dump() + ")");
    }
  }

  const json& j_;
  std::string path_;
  std::vector<std::string> seen_;
};

SyntheticSpec synthetic_from_json(const json& j, const std::string& path) {
  SyntheticSpec s;
  Section sec(j, path);
  std::string kind = to_string(s.kind);
  sec.read("kind", kind);
  s.kind = parse_synthetic_kind(kind);
  sec.read("n", s.n);
  sec.read("seed", s.seed);
  sec.read("noise_base", s.noise_base);
  sec.read("noise_amp", s.noise_amp);
  sec.read("ar_phi", s.ar_phi);
  sec.read("ar_sigma", s.ar_sigma);
  sec.read("lognormal_sigma", s.lognormal_sigma);
  sec.finish();
  return s;
}

json to_json(const SyntheticSpec& s) {
  return {{"kind", to_string(s.kind)},          {"n", s.n},
          {"seed", s.seed},                     {"noise_base", s.noise_base},
          {"noise_amp", s.noise_amp},           {"ar_phi", s.ar_phi},
          {"ar_sigma", s.ar_sigma},             {"lognormal_sigma", s.lognormal_sigma}};
}

json optional_json(const auto& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

RunConfig run_config_from_json(const json& j) {
  RunConfig c;
  Section root(j, "");
  root.read("seed", c.seed);
  root.read("output_dir", c.output_dir);

  if (const json* d = root.take("data")) {
    Section sec(*d, "data");
    sec.read("path", c.data.path);
    sec.read("timestamp_column", c.data.columns.timestamp_column);
    sec.read("value_column", c.data.columns.value_column);
    if (const json* s = sec.take("synthetic"))
      c.data.synthetic = s->is_null() ? std::nullopt : std::optional(synthetic_from_json(*s, "data.synthetic"));
    else if (c.data.path)
      c.data.synthetic.reset();
    sec.finish();
  }

  if (const json* s = root.take("split")) {
    Section sec(*s, "split");
    sec.read("test_fraction", c.split.test_fraction);
    sec.read("validation_fraction", c.split.validation_fraction_of_train);
    sec.finish();
  }

  if (const json* l = root.take("lag")) {
    if (l->is_string() && l->get<std::string>() == "auto")
      c.lag.reset();
    else if (l->is_number_integer())
      c.lag = l->get<int>();
    else
      throw ConfigError("config: 'lag' must be a positive integer or \"auto\"");
  }
  root.read("lag_grid", c.lag_grid);

  if (const json* m = root.take("model")) {
    Section sec(*m, "model");
    std::string arch = to_string(c.model.architecture);
    sec.read("architecture", arch);
    c.model.architecture = parse_architecture(arch);
    sec.read("hidden_sizes", c.model.hidden_sizes);
    sec.read("tcn_dilations", c.model.tcn_dilations);
    sec.read("kernel_width", c.model.kernel_width);
    sec.finish();
  }

  if (const json* l = root.take("loss")) {
    Section sec(*l, "loss");
    std::string method = to_string(c.loss.method);
    sec.read("method", method);
    c.loss.method = parse_method(method);
    sec.read("alpha", c.loss.alpha);
    sec.read("r", c.loss.r);
    sec.read("delta", c.loss.delta);
    sec.read("r_grid", c.loss.r_grid);
    sec.read("qd_lambda", c.loss.qd_lambda);
    sec.read("qd_softness", c.loss.qd_softness);
    sec.read("quantile_low", c.loss.quantile_low);
    sec.read("quantile_high", c.loss.quantile_high);
    sec.finish();
  }

  if (const json* t = root.take("train")) {
    Section sec(*t, "train");
    sec.read("epochs", c.train.epochs);
    sec.read("batch_size", c.train.batch_size);
    sec.read("optimizer", c.train.optimizer);
    sec.read("step", c.train.step);
    sec.read("beta1", c.train.beta1);
    sec.read("beta2", c.train.beta2);
    sec.read("epsilon", c.train.epsilon);
    sec.read("momentum", c.train.momentum);
    sec.read("patience", c.train.patience);
    sec.read("threads", c.train.threads);
    std::string exec = c.train.execution == Execution::serial ? "serial" : "parallel";
    sec.read("execution", exec);
    if (exec != "serial" && exec != "parallel")
      throw ConfigError("config: train.execution must be \"serial\" or \"parallel\"");
    c.train.execution = exec == "serial" ? Execution::serial : Execution::parallel;
    sec.read("shard_size", c.train.shard_size);
    sec.finish();
  }

  if (const json* r = root.take("recalibration")) {
    Section sec(*r, "recalibration");
    sec.read("enabled", c.recalibration.enabled);
    sec.read("target", c.recalibration.target);
    sec.read("delta_step", c.recalibration.delta_step);
    sec.read("margin", c.recalibration.margin);
    sec.read("max_rounds", c.recalibration.max_rounds);
    sec.finish();
  }

  if (const json* b = root.take("benchmark")) {
    Section sec(*b, "benchmark");
    std::vector<std::string> methods, archs;
    for (auto m : c.benchmark.methods) methods.push_back(to_string(m));
    for (auto a : c.benchmark.architectures) archs.push_back(to_string(a));
    sec.read("methods", methods);
    sec.read("architectures", archs);
    c.benchmark.methods.clear();
    c.benchmark.architectures.clear();
    for (const auto& m : methods) c.benchmark.methods.push_back(parse_method(m));
    for (const auto& a : archs) c.benchmark.architectures.push_back(parse_architecture(a));
    sec.finish();
  }
  root.finish();
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file '" + path + "'");
  json j;
  try {
    j = json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError("config: " + path + ": " + e.what());
  }
  return run_config_from_json(j);
}

json to_json(const RunConfig& c) {
  json data = {{"path", optional_json(c.data.path)},
               {"timestamp_column", c.data.columns.timestamp_column},
               {"value_column", c.data.columns.value_column},
               {"synthetic", c.data.synthetic ? to_json(*c.data.synthetic) : json(nullptr)}};
  std::vector<std::string> methods, archs;
  for (auto m : c.benchmark.methods) methods.push_back(to_string(m));
  for (auto a : c.benchmark.architectures) archs.push_back(to_string(a));
  const std::vector<int> hidden =
      c.model.hidden_sizes.value_or(ModelSpec::defaults_for(c.model.architecture, 24).hidden_sizes);
  return {
      {"seed", c.seed},
      {"output_dir", c.output_dir},
      {"data", data},
      {"split", {{"test_fraction", c.split.test_fraction},
                 {"validation_fraction", c.split.validation_fraction_of_train}}},
      {"lag", c.lag ? json(*c.lag) : json("auto")},
      {"lag_grid", c.lag_grid},
      {"model", {{"architecture", to_string(c.model.architecture)},
                 {"hidden_sizes", hidden},
                 {"tcn_dilations", c.model.tcn_dilations},
                 {"kernel_width", c.model.kernel_width}}},
      {"loss", {{"method", to_string(c.loss.method)},
                {"alpha", c.loss.alpha},
                {"r", c.loss.r},
                {"delta", c.loss.delta},
                {"r_grid", c.loss.r_grid},
                {"qd_lambda", c.loss.qd_lambda},
                {"qd_softness", c.loss.qd_softness},
                {"quantile_low", optional_json(c.loss.quantile_low)},
                {"quantile_high", optional_json(c.loss.quantile_high)}}},
      {"train", {{"epochs", c.train.epochs},
                 {"batch_size", c.train.batch_size},
                 {"optimizer", c.train.optimizer},
                 {"step", optional_json(c.train.step)},
                 {"beta1", c.train.beta1},
                 {"beta2", c.train.beta2},
                 {"epsilon", c.train.epsilon},
                 {"momentum", c.train.momentum},
                 {"patience", c.train.patience},
                 {"threads", c.train.threads},
                 {"execution", c.train.execution == Execution::serial ? "serial" : "parallel"},
                 {"shard_size", c.train.shard_size}}},
      {"recalibration", {{"enabled", c.recalibration.enabled},
                         {"target", optional_json(c.recalibration.target)},
                         {"delta_step", c.recalibration.delta_step},
                         {"margin", c.recalibration.margin},
                         {"max_rounds", c.recalibration.max_rounds}}},
      {"benchmark", {{"methods", methods}, {"architectures", archs}}},
  };
}

ModelSpec RunConfig::model_spec(Architecture arch, int lag_value, std::uint64_t model_seed) const {
  const HeadKind head = HeadKind::interval;
  ModelSpec spec = ModelSpec::defaults_for(arch, lag_value, head);
  if (model.hidden_sizes && arch == model.architecture) spec.hidden_sizes = *model.hidden_sizes;
  spec.tcn_dilations = model.tcn_dilations;
  spec.kernel_width = model.kernel_width;
  spec.seed = model_seed;
  return spec;
}

TrainConfig RunConfig::train_config(Method method, std::uint64_t run_seed) const {
  TrainConfig t;
  t.epochs = train.epochs;
  t.batch_size = train.batch_size;
  if (train.optimizer == "adam") {
    AdamConfig a;
    a.step = train.step.value_or(a.step);
    a.beta1 = train.beta1;
    a.beta2 = train.beta2;
    a.epsilon = train.epsilon;
    t.optimizer = a;
  } else if (train.optimizer == "sgd") {
    SgdConfig s;
    s.step = train.step.value_or(s.step);
    s.momentum = train.momentum;
    t.optimizer = s;
  } else {
    throw ConfigError("config: train.optimizer must be \"adam\" or \"sgd\"");
  }
  t.early_stop_patience = train.patience;
  t.shuffle_seed = mix(run_seed);
  t.kernels = {train.execution, train.shard_size};
  switch (method) {
    case Method::tube: t.loss = LossSpec::make_tube({loss.alpha, loss.r, loss.delta}); break;
    case Method::qd: t.loss = LossSpec::make_qd({loss.alpha, loss.qd_lambda, loss.qd_softness}); break;
    case Method::quantile: t.loss = LossSpec::make_pinball(0.5); break;
  }
  return t;
}

RecalConfig RunConfig::recal_config() const {
  return {coverage_target(), recalibration.delta_step, recalibration.margin, recalibration.max_rounds};
}

void RunConfig::validate() const {
  if (data.path && data.synthetic) throw ConfigError("config: data.path and data.synthetic are mutually exclusive");
  if (!data.path && !data.synthetic) throw ConfigError("config: data needs either a path or a synthetic spec");
  if (data.path && data.path->empty()) throw ConfigError("config: data.path is empty");
  if (data.columns.value_column.empty()) throw ConfigError("config: data.value_column is empty");
  if (data.synthetic) data.synthetic->validate();
  split.validate();
  if (output_dir.empty()) throw ConfigError("config: output_dir is empty");

  if (lag && *lag < 1) throw ConfigError("config: lag must be a positive integer");
  if (!lag) {
    if (lag_grid.empty()) throw ConfigError("config: lag \"auto\" needs a non-empty lag_grid");
    for (int l : lag_grid)
      if (l < 1) throw ConfigError("config: lag_grid entries must be positive");
  }
  if (model.hidden_sizes && model.hidden_sizes->empty())
    throw ConfigError("config: model.hidden_sizes must not be empty");

  if (!(loss.alpha > 0.0 && loss.alpha < 1.0)) throw ConfigError("config: loss.alpha must lie in (0,1)");
  for (double r : loss.r_grid)
    if (!(r > 0.0 && r < 1.0)) throw ConfigError("config: loss.r_grid entries must lie in (0,1)");
  if (!loss.r_grid.empty() && !recalibration.enabled)
    throw ConfigError("config: loss.r_grid requires recalibration.enabled");
  const double q_lo = loss.quantile_low.value_or(loss.alpha / 2.0);
  const double q_hi = loss.quantile_high.value_or(1.0 - loss.alpha / 2.0);
  if (!(q_lo > 0.0 && q_lo < q_hi && q_hi < 1.0))
    throw ConfigError("config: need 0 < quantile_low < quantile_high < 1");
  if (train.threads < 0) throw ConfigError("config: train.threads must be >= 0");
  if (recalibration.enabled && loss.method != Method::tube)
    throw ConfigError("config: recalibration applies to the tube method only");
  if (benchmark.methods.empty() || benchmark.architectures.empty())
    throw ConfigError("config: benchmark needs at least one method and one architecture");

  // Delegate the remaining checks to the modules that own them.
  const std::vector<int> lags = lag ? std::vector<int>{*lag} : lag_grid;
  std::vector<Architecture> archs = benchmark.architectures;
  archs.push_back(model.architecture);
  std::vector<Method> methods = benchmark.methods;
  methods.push_back(loss.method);
  for (int l : lags)
    for (Architecture a : archs) model_spec(a, l, seed).validate();
  for (Method m : methods) train_config(m, seed).validate();
  if (recalibration.enabled) recal_config().validate();
}

}  // namespace tubecast
