#include "tubecast/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <exception>

#include "tubecast/error.hpp"

namespace tubecast {

namespace {

struct Shard {
  Eigen::Index begin = 0;
  Eigen::Index cols = 0;
};

std::vector<Shard> make_shards(Eigen::Index batch, std::size_t shard_size) {
  const auto size = static_cast<Eigen::Index>(std::max<std::size_t>(1, shard_size));
  std::vector<Shard> shards;
  for (Eigen::Index b = 0; b < batch; b += size) shards.push_back({b, std::min(size, batch - b)});
  return shards;
}

// Runs body(k) for every shard on the OpenMP team and rethrows the first
// exception raised by any iteration.
template <class Body>
void parallel_shards(std::size_t count, Body&& body) {
  std::exception_ptr error;
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(count); ++k) {
    try {
      body(static_cast<std::size_t>(k));
    } catch (...) {
#pragma omp critical(tubecast_kernel_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace

void set_kernel_threads(int threads) {
  if (threads > 0) omp_set_num_threads(threads);
}

int kernel_threads() { return omp_get_max_threads(); }

BatchGradient batch_gradient(const Network& net, std::span<const double> params, const Eigen::MatrixXd& windows,
                             std::span<const double> targets, const OutputLoss& loss, const KernelOptions& opts) {
  if (static_cast<std::size_t>(windows.cols()) != targets.size())
    throw ConfigError("batch gradient: windows/targets length mismatch");
  if (windows.cols() == 0) throw ConfigError("batch gradient: empty batch");

  BatchGradient out;
  out.grad.assign(net.param_count(), 0.0);
  Eigen::MatrixXd d_outputs;

  if (opts.execution == Execution::serial) {
    ForwardCache cache;
    out.outputs = net.forward(params, windows, &cache);
    out.value = loss(out.outputs, targets, d_outputs);
    net.backward(params, cache, d_outputs, out.grad);
    return out;
  }

  const auto shards = make_shards(windows.cols(), opts.shard_size);
  std::vector<ForwardCache> caches(shards.size());
  out.outputs.resize(net.spec().output_size(), windows.cols());
  parallel_shards(shards.size(), [&](std::size_t k) {
    const auto& s = shards[k];
    out.outputs.middleCols(s.begin, s.cols) = net.forward(params, windows.middleCols(s.begin, s.cols), &caches[k]);
  });

  out.value = loss(out.outputs, targets, d_outputs);

  std::vector<std::vector<double>> partial(shards.size(), std::vector<double>(net.param_count(), 0.0));
  parallel_shards(shards.size(), [&](std::size_t k) {
    const auto& s = shards[k];
    net.backward(params, caches[k], d_outputs.middleCols(s.begin, s.cols), partial[k]);
  });
  for (const auto& g : partial)
    for (std::size_t i = 0; i < g.size(); ++i) out.grad[i] += g[i];
  return out;
}

Eigen::MatrixXd batch_predict(const Network& net, std::span<const double> params, const Eigen::MatrixXd& windows,
                              const KernelOptions& opts) {
  if (opts.execution == Execution::serial || windows.cols() == 0) return net.forward(params, windows);
  const auto shards = make_shards(windows.cols(), opts.shard_size);
  Eigen::MatrixXd out(net.spec().output_size(), windows.cols());
  parallel_shards(shards.size(), [&](std::size_t k) {
    const auto& s = shards[k];
    out.middleCols(s.begin, s.cols) = net.forward(params, windows.middleCols(s.begin, s.cols));
  });
  return out;
}

}  // namespace tubecast
