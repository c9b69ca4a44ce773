#include "tubecast/net.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "layers.hpp"
#include "tubecast/error.hpp"

namespace tubecast {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

std::string to_string(Architecture a) {
  switch (a) {
    case Architecture::mlp: return "mlp";
    case Architecture::gru: return "gru";
    case Architecture::lstm: return "lstm";
    case Architecture::tcn: return "tcn";
  }
  return "?";
}

std::string to_string(HeadKind h) { return h == HeadKind::interval ? "interval" : "scalar"; }

Architecture parse_architecture(const std::string& s) {
  if (s == "mlp") return Architecture::mlp;
  if (s == "gru") return Architecture::gru;
  if (s == "lstm") return Architecture::lstm;
  if (s == "tcn") return Architecture::tcn;
  throw ConfigError("model: unknown architecture '" + s + "' (expected mlp, gru, lstm or tcn)");
}

HeadKind parse_head(const std::string& s) {
  if (s == "interval") return HeadKind::interval;
  if (s == "scalar") return HeadKind::scalar;
  throw ConfigError("model: unknown head '" + s + "' (expected interval or scalar)");
}

ModelSpec ModelSpec::defaults_for(Architecture arch, int lag, HeadKind head) {
  ModelSpec s;
  s.architecture = arch;
  s.lag = lag;
  s.head = head;
  s.hidden_sizes = arch == Architecture::mlp ? std::vector<int>{64, 64} : std::vector<int>{32};
  return s;
}

int ModelSpec::receptive_field() const {
  if (architecture != Architecture::tcn) return lag;
  return 1 + (kernel_width - 1) * std::accumulate(tcn_dilations.begin(), tcn_dilations.end(), 0);
}

void ModelSpec::validate() const {
  if (lag < 1) throw ConfigError("model: lag must be positive");
  if (hidden_sizes.empty()) throw ConfigError("model: hidden_sizes must not be empty");
  for (int h : hidden_sizes)
    if (h < 1) throw ConfigError("model: hidden sizes must be positive");
  if (architecture == Architecture::tcn) {
    if (tcn_dilations.empty()) throw ConfigError("model: tcn needs at least one dilation");
    for (int d : tcn_dilations)
      if (d < 1) throw ConfigError("model: tcn dilations must be positive");
    if (kernel_width < 1) throw ConfigError("model: kernel_width must be positive");
    if (receptive_field() <= 1) throw ConfigError("model: tcn receptive field must exceed 1");
  }
}

Network::Network(const ModelSpec& spec) : spec_(spec) {
  spec_.validate();
  using namespace layers;
  int width = 0;
  switch (spec_.architecture) {
    case Architecture::mlp:
      width = spec_.lag;
      for (int h : spec_.hidden_sizes) {
        layers_.push_back(std::make_unique<Dense>(width, h, Activation::relu));
        width = h;
      }
      break;
    case Architecture::gru:
    case Architecture::lstm:
      width = 1;
      for (int h : spec_.hidden_sizes) {
        if (spec_.architecture == Architecture::gru)
          layers_.push_back(std::make_unique<Gru>(width, h));
        else
          layers_.push_back(std::make_unique<Lstm>(width, h));
        width = h;
      }
      layers_.push_back(std::make_unique<LastStep>());
      break;
    case Architecture::tcn:
      width = 1;
      for (std::size_t j = 0; j < spec_.tcn_dilations.size(); ++j) {
        const int out = spec_.hidden_sizes[std::min(j, spec_.hidden_sizes.size() - 1)];
        layers_.push_back(std::make_unique<CausalConvBlock>(width, out, spec_.kernel_width, spec_.tcn_dilations[j]));
        width = out;
      }
      layers_.push_back(std::make_unique<LastStep>());
      break;
  }
  layers_.push_back(std::make_unique<Dense>(width, spec_.output_size(), Activation::identity));

  for (const auto& layer : layers_) {
    shapes_.push_back({layer->name(), param_count_, layer->param_count()});
    param_count_ += layer->param_count();
  }
}

ParamSet Network::init_params(std::uint64_t seed) const {
  ParamSet ps;
  ps.values.assign(param_count_, 0.0);
  ps.layers = shapes_;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& s = shapes_[i];
    layers_[i]->init(std::span<double>(ps.values).subspan(s.offset, s.size), splitmix64(seed ^ splitmix64(i + 1)));
  }
  // Start the interval ordered and narrower than any useful target, so both
  // bounds receive gradient from the first step.
  if (spec_.head == HeadKind::interval) {
    ps.values[param_count_ - 2] = -0.5;
    ps.values[param_count_ - 1] = 0.5;
  }
  return ps;
}

ParamSet init_params(const ModelSpec& spec, std::uint64_t seed) { return Network(spec).init_params(seed); }

Sequence Network::to_sequence(const Eigen::MatrixXd& windows) const {
  if (spec_.architecture == Architecture::mlp) return {windows};
  Sequence seq(static_cast<std::size_t>(windows.rows()));
  for (Eigen::Index t = 0; t < windows.rows(); ++t) seq[static_cast<std::size_t>(t)] = windows.row(t);
  return seq;
}

Eigen::MatrixXd Network::forward(std::span<const double> params, const Eigen::MatrixXd& windows,
                                 ForwardCache* cache) const {
  if (windows.rows() != spec_.lag)
    throw ConfigError("forward: window length " + std::to_string(windows.rows()) + " does not match lag " +
                      std::to_string(spec_.lag));
  if (params.size() != param_count_)
    throw ConfigError("forward: parameter vector has " + std::to_string(params.size()) + " entries, expected " +
                      std::to_string(param_count_));

  Sequence x = to_sequence(windows);
  if (cache) {
    cache->layers.clear();
    cache->layers.resize(layers_.size());
    cache->batch = static_cast<std::size_t>(windows.cols());
    cache->param_count = param_count_;
  }
  std::unique_ptr<LayerCache> scratch;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& s = shapes_[i];
    x = layers_[i]->forward(params.subspan(s.offset, s.size), x, cache ? cache->layers[i] : scratch);
    for (const auto& step : x)
      if (!step.allFinite())
        throw NumericError("forward: non-finite activation in layer " + std::to_string(i) + " (" + s.name + ")");
  }
  return std::move(x.front());
}

void Network::backward(std::span<const double> params, const ForwardCache& cache, const Eigen::MatrixXd& d_outputs,
                       std::span<double> grad) const {
  if (cache.layers.size() != layers_.size() || cache.param_count != param_count_)
    throw ConfigError("backward: cache does not belong to this network");
  if (static_cast<std::size_t>(d_outputs.cols()) != cache.batch || d_outputs.rows() != spec_.output_size())
    throw ConfigError("backward: output gradient shape does not match the cached forward pass");
  if (grad.size() != param_count_) throw ConfigError("backward: gradient buffer has the wrong size");

  Sequence dy{d_outputs};
  for (std::size_t i = layers_.size(); i-- > 0;) {
    const auto& s = shapes_[i];
    dy = layers_[i]->backward(params.subspan(s.offset, s.size), *cache.layers[i], dy, grad.subspan(s.offset, s.size));
  }
}

Eigen::MatrixXd PiModel::predict_scaled(const Eigen::MatrixXd& scaled_windows) const {
  return Network(spec).forward(params.values, scaled_windows);
}

GradCheckResult grad_check(const Network& net, std::span<const double> params, const Eigen::MatrixXd& windows,
                           const Eigen::MatrixXd& output_weights, double h, double floor) {
  ForwardCache cache;
  net.forward(params, windows, &cache);
  std::vector<double> analytic(net.param_count(), 0.0);
  net.backward(params, cache, output_weights, analytic);

  std::vector<double> probe(params.begin(), params.end());
  auto objective = [&] { return net.forward(probe, windows).cwiseProduct(output_weights).sum(); };

  GradCheckResult res;
  for (std::size_t k = 0; k < probe.size(); ++k) {
    const double saved = probe[k];
    probe[k] = saved + h;
    const double plus = objective();
    probe[k] = saved - h;
    const double minus = objective();
    probe[k] = saved;
    const double numeric = (plus - minus) / (2.0 * h);
    const double err =
        std::abs(analytic[k] - numeric) / std::max({std::abs(analytic[k]), std::abs(numeric), floor});
    if (k == 0 || err > res.max_rel_error) res = {err, k, analytic[k], numeric};
  }
  return res;
}

}  // namespace tubecast
