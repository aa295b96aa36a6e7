#include <benchmark/benchmark.h>

#include "cortex/data/image.hpp"
#include "cortex/nn/conv2d.hpp"
#include "cortex/nn/maxpool2d.hpp"
#include "cortex/rng.hpp"
#include "cortex/tensor.hpp"

using namespace cortex;

namespace {

TensorF random_tensor(const Shape& s, std::uint64_t seed) {
  Rng rng(seed);
  TensorF t(s);
  for (auto& v : t.data()) v = static_cast<float>(rng.uniform(-1.0, 1.0));
  return t;
}

void BM_Matmul(benchmark::State& state) {
  const std::int64_t n = state.range(0);
  TensorF a = random_tensor(Shape{n, n}, 1);
  TensorF b = random_tensor(Shape{n, n}, 2);
  for (auto _ : state) {
    TensorF c = matmul(a, b);
    benchmark::DoNotOptimize(c.data().data());
  }
  state.SetItemsProcessed(state.iterations() * 2 * n * n * n);
}
BENCHMARK(BM_Matmul)->Arg(64)->Arg(256)->Arg(512);

void BM_ConvForward(benchmark::State& state) {
  const bool im2col = state.range(0) != 0;
  TensorF x = random_tensor(Shape{1, 3, 200, 200}, 3);
  Rng rng(4);
  auto layer = nn::Conv2d<float>::glorot(3, 32, true, rng);
  for (auto _ : state) {
    TensorF y = nn::conv2d_forward(x, layer, im2col ? nn::ConvAlgo::im2col : nn::ConvAlgo::direct);
    benchmark::DoNotOptimize(y.data().data());
  }
  state.SetItemsProcessed(state.iterations() * 2 * 32 * 3 * 9 * 198 * 198);
}
BENCHMARK(BM_ConvForward)->Arg(0)->Arg(1);  // 0 = direct, 1 = im2col

void BM_ConvBackward(benchmark::State& state) {
  TensorF x = random_tensor(Shape{1, 32, 99, 99}, 5);
  Rng rng(6);
  auto layer = nn::Conv2d<float>::glorot(32, 64, true, rng);
  TensorF up = random_tensor(Shape{1, 64, 97, 97}, 7);
  for (auto _ : state) {
    auto g = nn::conv2d_backward(x, layer, up);
    benchmark::DoNotOptimize(g.d_weights.data().data());
  }
  state.SetItemsProcessed(state.iterations() * 2 * 2 * 64 * 32 * 9 * 97 * 97);
}
BENCHMARK(BM_ConvBackward);

void BM_MaxPool(benchmark::State& state) {
  TensorF x = random_tensor(Shape{1, 32, 198, 198}, 8);
  for (auto _ : state) {
    auto r = nn::maxpool2d_forward(x);
    benchmark::DoNotOptimize(r.output.data().data());
  }
}
BENCHMARK(BM_MaxPool);

void BM_ResizeBilinear(benchmark::State& state) {
  data::ImageU8 img;
  img.height = 512;
  img.width = 512;
  img.rgb.resize(512 * 512 * 3);
  Rng rng(9);
  for (auto& v : img.rgb) v = static_cast<std::uint8_t>(rng.below(256));
  for (auto _ : state) {
    data::ImageU8 out = data::resize_bilinear(img, 200, 200);
    benchmark::DoNotOptimize(out.rgb.data());
  }
}
BENCHMARK(BM_ResizeBilinear);

}  // namespace

BENCHMARK_MAIN();
