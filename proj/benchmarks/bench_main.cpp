#include <random>

#include <benchmark/benchmark.h>

#include "dpaf/net/model.hpp"
#include "dpaf/nn/ops.hpp"
#include "dpaf/objective/ssim.hpp"

namespace {

using dpaf::Tensor;

template <typename T>
Tensor<T> uniform(dpaf::Shape shape, unsigned seed) {
  Tensor<T> t(std::move(shape));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  for (auto& v : t.values()) v = static_cast<T>(dist(rng));
  return t;
}

void BM_Conv2dForward(benchmark::State& state) {
  const auto c = static_cast<std::size_t>(state.range(0));
  const auto x = uniform<float>({1, c, 64, 64}, 1);
  const auto w = uniform<float>({c, c, 3, 3}, 2);
  const auto b = uniform<float>({c}, 3);
  for (auto _ : state) benchmark::DoNotOptimize(dpaf::nn::conv2d(x, w, b, {1, 1}));
}
BENCHMARK(BM_Conv2dForward)->Arg(16)->Arg(32)->Arg(64);

void BM_Conv2dBackward(benchmark::State& state) {
  const auto c = static_cast<std::size_t>(state.range(0));
  const auto x = uniform<float>({1, c, 64, 64}, 1);
  const auto w = uniform<float>({c, c, 3, 3}, 2);
  const auto dy = uniform<float>({1, c, 64, 64}, 3);
  Tensor<float> dx, dw(w.shape()), db({c});
  for (auto _ : state) {
    dpaf::nn::conv2d_backward(x, w, dy, {1, 1}, &dx, &dw, &db);
    benchmark::DoNotOptimize(dx);
  }
}
BENCHMARK(BM_Conv2dBackward)->Arg(16)->Arg(32)->Arg(64);

void BM_Attention(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto q = uniform<float>({n, 32}, 1), k = uniform<float>({n, 32}, 2),
             v = uniform<float>({n, 32}, 3);
  for (auto _ : state) benchmark::DoNotOptimize(dpaf::nn::scaled_dot_attention<float>(q, k, v, nullptr));
}
BENCHMARK(BM_Attention)->Arg(64)->Arg(256);

void BM_Ssim(benchmark::State& state) {
  const auto s = static_cast<std::size_t>(state.range(0));
  const auto x = uniform<double>({3, s, s}, 1), y = uniform<double>({3, s, s}, 2);
  for (auto _ : state) benchmark::DoNotOptimize(dpaf::objective::ssim(x, y));
}
BENCHMARK(BM_Ssim)->Arg(64)->Arg(256);

void BM_ModelForward(benchmark::State& state) {
  const auto s = static_cast<std::size_t>(state.range(0));
  const dpaf::net::Model<float> model(dpaf::net::ModelConfig{}, 1);
  const auto x = uniform<float>({1, 3, s, s}, 2);
  for (auto _ : state) benchmark::DoNotOptimize(model.infer(x));
}
BENCHMARK(BM_ModelForward)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_ModelForwardBackward(benchmark::State& state) {
  const auto s = static_cast<std::size_t>(state.range(0));
  dpaf::net::Model<float> model(dpaf::net::ModelConfig{}, 1);
  const auto x = uniform<float>({1, 3, s, s}, 2);
  const auto g = uniform<float>({1, 3, s, s}, 3);
  for (auto _ : state) {
    dpaf::net::Model<float>::Cache cache;
    model.forward(x, &cache);
    benchmark::DoNotOptimize(model.backward(cache, g));
  }
}
BENCHMARK(BM_ModelForwardBackward)->Arg(64)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
