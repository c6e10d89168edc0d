// Serial reference kernels against their OpenMP versions.

#include <benchmark/benchmark.h>

#include <vector>

#include "mdts/kernels.hpp"
#include "mdts/rng.hpp"

namespace {

using namespace mdts;

constexpr int kClasses = 10;

struct LogitData {
  std::vector<double> logits;
  std::vector<int> labels;
};

LogitData MakeLogits(std::size_t n) {
  Rng rng(1);
  LogitData d;
  d.logits.resize(n * kClasses);
  d.labels.resize(n);
  for (auto& v : d.logits) v = rng.normal(0.0, 2.0);
  for (auto& y : d.labels) y = static_cast<int>(rng.uniform_int(kClasses));
  return d;
}

RowMatrix MakeMatrix(Eigen::Index n, Eigen::Index p, std::uint64_t seed) {
  Rng rng(seed);
  RowMatrix m(n, p);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  return m;
}

template <bool Parallel>
void BM_NllSum(benchmark::State& state) {
  const auto d = MakeLogits(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    const double v = Parallel ? kernels::parallel::NllSum(d.logits, kClasses, d.labels, 1.3)
                              : kernels::serial::NllSum(d.logits, kClasses, d.labels, 1.3);
    benchmark::DoNotOptimize(v);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <bool Parallel>
void BM_Confidences(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto d = MakeLogits(n);
  std::vector<double> temps(n, 1.7), out(n);
  for (auto _ : state) {
    if (Parallel) {
      kernels::parallel::Confidences(d.logits, kClasses, temps, out);
    } else {
      kernels::serial::Confidences(d.logits, kClasses, temps, out);
    }
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <bool Parallel>
void BM_PairThresholdCounts(benchmark::State& state) {
  const std::size_t g = 11, r = 21;
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(2);
  std::vector<double> values(g * n);
  for (auto& v : values) v = rng.uniform01();
  std::vector<double> thresholds(r);
  for (std::size_t i = 0; i < r; ++i) thresholds[i] = static_cast<double>(i) / (r - 1);
  std::vector<std::int64_t> out(g * g * r);
  for (auto _ : state) {
    if (Parallel) {
      kernels::parallel::PairThresholdCounts(values, g, thresholds, out);
    } else {
      kernels::serial::PairThresholdCounts(values, g, thresholds, out);
    }
    benchmark::DoNotOptimize(out.data());
  }
}

template <bool Parallel>
void BM_RbfGram(benchmark::State& state) {
  const auto n = static_cast<Eigen::Index>(state.range(0));
  const auto a = MakeMatrix(n, 11, 3);
  const auto b = MakeMatrix(n, 11, 4);
  RowMatrix out(n, n);
  for (auto _ : state) {
    if (Parallel) {
      kernels::parallel::RbfGram(a, b, 0.1, out);
    } else {
      kernels::serial::RbfGram(a, b, 0.1, out);
    }
    benchmark::DoNotOptimize(out.data());
  }
}

}  // namespace

BENCHMARK(BM_NllSum<false>)->Name("NllSum/serial")->Arg(1 << 14)->Arg(1 << 18);
BENCHMARK(BM_NllSum<true>)->Name("NllSum/parallel")->Arg(1 << 14)->Arg(1 << 18);
BENCHMARK(BM_Confidences<false>)->Name("Confidences/serial")->Arg(1 << 14)->Arg(1 << 18);
BENCHMARK(BM_Confidences<true>)->Name("Confidences/parallel")->Arg(1 << 14)->Arg(1 << 18);
BENCHMARK(BM_PairThresholdCounts<false>)->Name("PairThresholdCounts/serial")->Arg(500)->Arg(5000);
BENCHMARK(BM_PairThresholdCounts<true>)->Name("PairThresholdCounts/parallel")->Arg(500)->Arg(5000);
BENCHMARK(BM_RbfGram<false>)->Name("RbfGram/serial")->Arg(256)->Arg(1000);
BENCHMARK(BM_RbfGram<true>)->Name("RbfGram/parallel")->Arg(256)->Arg(1000);
BENCHMARK_MAIN();
