#pragma once

#include "tubecast/net.hpp"

namespace tubecast::layers {

enum class Activation { identity, relu };

// Affine map applied independently at every time step.
class Dense final : public Layer {
 public:
  Dense(int in, int out, Activation act);

  std::string name() const override;
  std::size_t param_count() const override;
  void init(std::span<double> params, std::uint64_t seed) const override;
  Sequence forward(std::span<const double> params, const Sequence& x,
                   std::unique_ptr<LayerCache>& cache) const override;
  Sequence backward(std::span<const double> params, const LayerCache& cache, const Sequence& dy,
                    std::span<double> grad) const override;

 private:
  int in_, out_;
  Activation act_;
};

// Gates r, z, n with separate input and hidden biases:
//   n = tanh(Wx_n x + bx_n + r * (Wh_n h + bh_n)),  h' = (1 - z) * n + z * h.
class Gru final : public Layer {
 public:
  Gru(int in, int hidden);

  std::string name() const override;
  std::size_t param_count() const override;
  void init(std::span<double> params, std::uint64_t seed) const override;
  Sequence forward(std::span<const double> params, const Sequence& x,
                   std::unique_ptr<LayerCache>& cache) const override;
  Sequence backward(std::span<const double> params, const LayerCache& cache, const Sequence& dy,
                    std::span<double> grad) const override;

 private:
  int in_, hidden_;
};

// Gates i, f, g, o; forget-gate bias starts at 1.
class Lstm final : public Layer {
 public:
  Lstm(int in, int hidden);

  std::string name() const override;
  std::size_t param_count() const override;
  void init(std::span<double> params, std::uint64_t seed) const override;
  Sequence forward(std::span<const double> params, const Sequence& x,
                   std::unique_ptr<LayerCache>& cache) const override;
  Sequence backward(std::span<const double> params, const LayerCache& cache, const Sequence& dy,
                    std::span<double> grad) const override;

 private:
  int in_, hidden_;
};

// y_t = relu(b + sum_j W_j x_{t - j*dilation}) + skip(x_t), with x_{<0} = 0.
// skip is the identity when in == out, otherwise a learned 1x1 projection.
class CausalConvBlock final : public Layer {
 public:
  CausalConvBlock(int in, int out, int kernel_width, int dilation);

  std::string name() const override;
  std::size_t param_count() const override;
  void init(std::span<double> params, std::uint64_t seed) const override;
  Sequence forward(std::span<const double> params, const Sequence& x,
                   std::unique_ptr<LayerCache>& cache) const override;
  Sequence backward(std::span<const double> params, const LayerCache& cache, const Sequence& dy,
                    std::span<double> grad) const override;

 private:
  bool projected() const noexcept { return in_ != out_; }

  int in_, out_, kernel_, dilation_;
};

// Keeps only the final time step.
class LastStep final : public Layer {
 public:
  std::string name() const override { return "last_step"; }
  std::size_t param_count() const override { return 0; }
  void init(std::span<double>, std::uint64_t) const override {}
  Sequence forward(std::span<const double> params, const Sequence& x,
                   std::unique_ptr<LayerCache>& cache) const override;
  Sequence backward(std::span<const double> params, const LayerCache& cache, const Sequence& dy,
                    std::span<double> grad) const override;
};

}  // namespace tubecast::layers
