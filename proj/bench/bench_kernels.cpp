// Serial reference vs sharded OpenMP batch gradient, per architecture.
// Example: bench_kernels --benchmark_filter=gru

#include <benchmark/benchmark.h>

#include <random>

#include "tubecast/kernels.hpp"
#include "tubecast/trainer.hpp"

using namespace tubecast;

namespace {

constexpr int kLag = 24;

void run(benchmark::State& state, Architecture arch, Execution exec) {
  const int batch = static_cast<int>(state.range(0));
  const Network net(ModelSpec::defaults_for(arch, kLag));
  const auto params = net.init_params(1);
  std::mt19937_64 gen(2);
  std::normal_distribution<double> nd;
  Eigen::MatrixXd windows(kLag, batch);
  for (Eigen::Index i = 0; i < windows.size(); ++i) windows.data()[i] = nd(gen);
  std::vector<double> targets(static_cast<std::size_t>(batch));
  for (auto& t : targets) t = nd(gen);

  const LossSpec spec = LossSpec::make_tube({0.05, 0.5, 0.0});
  const OutputLoss loss = [&spec](const Eigen::MatrixXd& out, std::span<const double> y, Eigen::MatrixXd& d) {
    return batch_objective(spec, out, y, &d);
  };
  const KernelOptions opts{exec, 16};
  for (auto _ : state) {
    auto g = batch_gradient(net, params.values, windows, targets, loss, opts);
    benchmark::DoNotOptimize(g.value);
  }
  state.SetItemsProcessed(state.iterations() * batch);
  state.counters["threads"] = exec == Execution::parallel ? kernel_threads() : 1;
}

#define TUBECAST_BENCH(arch)                                                              \
  BENCHMARK_CAPTURE(run, arch##_serial, Architecture::arch, Execution::serial)             \
      ->Arg(64)->Arg(512)->Unit(benchmark::kMicrosecond);                                  \
  BENCHMARK_CAPTURE(run, arch##_parallel, Architecture::arch, Execution::parallel)         \
      ->Arg(64)->Arg(512)->Unit(benchmark::kMicrosecond)

TUBECAST_BENCH(mlp);
TUBECAST_BENCH(gru);
TUBECAST_BENCH(lstm);
TUBECAST_BENCH(tcn);

}  // namespace

BENCHMARK_MAIN();
