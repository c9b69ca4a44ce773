#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "tubecast/net.hpp"

namespace tubecast {

// serial:   the whole batch in one forward/backward pass (reference path).
// parallel: the batch is cut into fixed-size column shards processed by an
//           OpenMP loop; shard gradients are reduced in shard order, so the
//           result is bit-identical for any thread count.
enum class Execution { serial, parallel };

struct KernelOptions {
  Execution execution = Execution::parallel;
  std::size_t shard_size = 16;
};

// Batch loss: fills d_outputs (same shape as outputs) and returns the value.
using OutputLoss =
    std::function<double(const Eigen::MatrixXd& outputs, std::span<const double> targets, Eigen::MatrixXd& d_outputs)>;

struct BatchGradient {
  double value = 0.0;
  std::vector<double> grad;
  Eigen::MatrixXd outputs;
};

BatchGradient batch_gradient(const Network& net, std::span<const double> params, const Eigen::MatrixXd& windows,
                             std::span<const double> targets, const OutputLoss& loss, const KernelOptions& opts = {});

Eigen::MatrixXd batch_predict(const Network& net, std::span<const double> params, const Eigen::MatrixXd& windows,
                              const KernelOptions& opts = {});

// Sets the OpenMP team size for subsequent parallel kernels; 0 keeps the runtime default.
void set_kernel_threads(int threads);
int kernel_threads();

}  // namespace tubecast
