#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "tubecast/series.hpp"

namespace tubecast {

enum class Architecture { mlp, gru, lstm, tcn };
enum class HeadKind { interval, scalar };

std::string to_string(Architecture a);
std::string to_string(HeadKind h);
Architecture parse_architecture(const std::string& s);
HeadKind parse_head(const std::string& s);

struct ModelSpec {
  Architecture architecture = Architecture::mlp;
  std::vector<int> hidden_sizes{64, 64};
  int lag = 24;
  HeadKind head = HeadKind::interval;
  std::vector<int> tcn_dilations{1, 2, 4};
  int kernel_width = 3;
  std::uint64_t seed = 0;

  // Sizes used when the caller picks an architecture without sizes.
  static ModelSpec defaults_for(Architecture arch, int lag, HeadKind head = HeadKind::interval);

  void validate() const;
  int output_size() const noexcept { return head == HeadKind::interval ? 2 : 1; }
  int receptive_field() const;

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

// Time-major activations: one (features x batch) matrix per step.
using Sequence = std::vector<Eigen::MatrixXd>;

struct LayerCache {
  virtual ~LayerCache() = default;
};

class Layer {
 public:
  virtual ~Layer() = default;

  virtual std::string name() const = 0;
  virtual std::size_t param_count() const = 0;
  virtual void init(std::span<double> params, std::uint64_t seed) const = 0;
  virtual Sequence forward(std::span<const double> params, const Sequence& x,
                           std::unique_ptr<LayerCache>& cache) const = 0;
  // Accumulates dL/dparams into `grad` and returns dL/dx.
  virtual Sequence backward(std::span<const double> params, const LayerCache& cache, const Sequence& dy,
                            std::span<double> grad) const = 0;
};

struct LayerShape {
  std::string name;
  std::size_t offset = 0;
  std::size_t size = 0;
};

// All weights and biases of a network in one flat vector.
struct ParamSet {
  std::vector<double> values;
  std::vector<LayerShape> layers;

  std::size_t size() const noexcept { return values.size(); }
};

struct ForwardCache {
  std::vector<std::unique_ptr<LayerCache>> layers;
  std::size_t batch = 0;
  std::size_t param_count = 0;
};

// Layer stack built from a ModelSpec:
//   mlp:      dense(relu)... -> head
//   gru/lstm: recurrent... over the lag window (one scalar per step) -> last step -> head
//   tcn:      residual dilated causal conv blocks (relu) -> last step -> head
// The head is affine with no output activation.
class Network {
 public:
  explicit Network(const ModelSpec& spec);
  Network(const Network&) = delete;
  Network& operator=(const Network&) = delete;
  Network(Network&&) noexcept = default;
  Network& operator=(Network&&) noexcept = default;

  const ModelSpec& spec() const noexcept { return spec_; }
  std::size_t param_count() const noexcept { return param_count_; }
  const std::vector<LayerShape>& shapes() const noexcept { return shapes_; }

  ParamSet init_params(std::uint64_t seed) const;

  // `windows` is lag x batch (one window per column). Returns outputs x batch.
  Eigen::MatrixXd forward(std::span<const double> params, const Eigen::MatrixXd& windows,
                          ForwardCache* cache = nullptr) const;

  // Accumulates into `grad` (size param_count()) the gradient of
  // sum(d_outputs .* outputs) w.r.t. the parameters.
  void backward(std::span<const double> params, const ForwardCache& cache, const Eigen::MatrixXd& d_outputs,
                std::span<double> grad) const;

 private:
  Sequence to_sequence(const Eigen::MatrixXd& windows) const;

  ModelSpec spec_;
  std::vector<std::unique_ptr<Layer>> layers_;
  std::vector<LayerShape> shapes_;
  std::size_t param_count_ = 0;
};

ParamSet init_params(const ModelSpec& spec, std::uint64_t seed);

// A trained network together with the scaler its inputs and outputs live under.
struct PiModel {
  ModelSpec spec;
  ParamSet params;
  Scaler scaler;

  // Raw head outputs in scaled units, outputs x batch.
  Eigen::MatrixXd predict_scaled(const Eigen::MatrixXd& scaled_windows) const;
};

// Central-difference check of Network::backward against the scalar
// objective sum(weights .* outputs). Returns the maximum over parameters of
// |analytic - numeric| / max(|analytic|, |numeric|, floor).
struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

GradCheckResult grad_check(const Network& net, std::span<const double> params, const Eigen::MatrixXd& windows,
                           const Eigen::MatrixXd& output_weights, double h, double floor = 1e-6);

}  // namespace tubecast
