#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "mmhar/model/kernels.hpp"
#include "mmhar/model/network.hpp"

using namespace mmhar;

namespace {

struct Operands {
  std::vector<double> a, b, c;
  kernels::Gemm g{};
  Operands(int n, int k, int m) : a(static_cast<std::size_t>(n) * k), b(static_cast<std::size_t>(k) * m), c(static_cast<std::size_t>(n) * m) {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> d;
    for (auto& x : a) x = d(rng);
    for (auto& x : b) x = d(rng);
    g = {n, k, m, a.data(), k, b.data(), m, c.data(), m, false};
  }
};

template <void (*F)(const kernels::Gemm&)>
void BM_gemm(benchmark::State& st) {
  const int n = static_cast<int>(st.range(0));
  Operands o(n, n, n);
  for (auto _ : st) {
    F(o.g);
    benchmark::DoNotOptimize(o.c.data());
  }
  st.SetItemsProcessed(st.iterations() * 2LL * n * n * n);
}

template <void (*F)(double*, int, int, int)>
void BM_softmax(benchmark::State& st) {
  const int n = static_cast<int>(st.range(0));
  std::vector<double> x(static_cast<std::size_t>(n) * n, 0.5);
  for (auto _ : st) {
    F(x.data(), n, n, n);
    benchmark::DoNotOptimize(x.data());
  }
}

void BM_predict(benchmark::State& st) {
  model::FusionNet net(model::FusionConfig{});
  auto p = net.init_params();
  pipeline::ModelInput in;
  in.frames = 90;
  in.side = 32;
  in.top.assign(90 * 32 * 32, 0.1f);
  in.bottom.assign(90 * 32 * 32, -0.1f);
  in.imu.assign(90 * kImuBlockWidth, 0.05f);
  for (auto _ : st) benchmark::DoNotOptimize(net.predict(in, p));
  st.SetItemsProcessed(st.iterations());
}

}  // namespace

BENCHMARK(BM_gemm<kernels::serial::gemm_nn>)->Name("gemm_nn/serial")->Arg(32)->Arg(144)->Arg(256);
BENCHMARK(BM_gemm<kernels::parallel::gemm_nn>)->Name("gemm_nn/parallel")->Arg(32)->Arg(144)->Arg(256);
BENCHMARK(BM_gemm<kernels::serial::gemm_nt>)->Name("gemm_nt/serial")->Arg(32)->Arg(144)->Arg(256);
BENCHMARK(BM_gemm<kernels::parallel::gemm_nt>)->Name("gemm_nt/parallel")->Arg(32)->Arg(144)->Arg(256);
BENCHMARK(BM_gemm<kernels::serial::gemm_tn>)->Name("gemm_tn/serial")->Arg(32)->Arg(144)->Arg(256);
BENCHMARK(BM_gemm<kernels::parallel::gemm_tn>)->Name("gemm_tn/parallel")->Arg(32)->Arg(144)->Arg(256);
BENCHMARK(BM_softmax<kernels::serial::softmax_rows>)->Name("softmax/serial")->Arg(144);
BENCHMARK(BM_softmax<kernels::parallel::softmax_rows>)->Name("softmax/parallel")->Arg(144);
BENCHMARK(BM_predict)->Name("predict_window/toy")->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
