#include <benchmark/benchmark.h>

#include <random>

#include "tanet/assignment.hpp"
#include "tanet/clustering.hpp"
#include "tanet/encoder.hpp"
#include "tanet/losses.hpp"
#include "tanet/synthetic.hpp"

using namespace tanet;

namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Matrix m(rows, cols);
  for (double& v : m.values()) v = g(rng);
  return m;
}

void BM_KMeansAcceptance(benchmark::State& state) {
  const auto b = make_synthetic(SyntheticConfig::acceptance());
  const Matrix x = b.dataset.embeddings(b.dataset.indices(Split::kUnlabeled));
  KMeansOptions opts;
  opts.threads = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(kmeans(x, 20, 1, opts).inertia);
}
BENCHMARK(BM_KMeansAcceptance)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_Assignment(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix cost = random_matrix(n, n + n / 5, 3);
  for (auto _ : state) benchmark::DoNotOptimize(solve_assignment(cost).total_cost);
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Assignment)->RangeMultiplier(2)->Range(8, 256)->Complexity();

void BM_InfoNce(benchmark::State& state) {
  const auto b = static_cast<std::size_t>(state.range(0));
  const Matrix a = normalize_rows(random_matrix(b, 32, 1)).rows;
  const Matrix c = normalize_rows(random_matrix(b, 32, 2)).rows;
  for (auto _ : state) benchmark::DoNotOptimize(loss_i2i(a, c, 0.07).value);
}
BENCHMARK(BM_InfoNce)->Arg(64)->Arg(256);

void BM_EncoderForwardBackward(benchmark::State& state) {
  const auto head = EncoderHead::create({16, {64}, 32, 20, 0.1}, 0);
  const Matrix x = random_matrix(64, 16, 4);
  const Matrix dz = random_matrix(64, 32, 5);
  for (auto _ : state) {
    const auto fp = forward(head, x, Mode::kTrain, 7);
    auto grads = HeadGradients::zeros_like(head);
    benchmark::DoNotOptimize(backward(head, fp.tape, dz, grads));
  }
}
BENCHMARK(BM_EncoderForwardBackward);

}  // namespace
BENCHMARK_MAIN();
