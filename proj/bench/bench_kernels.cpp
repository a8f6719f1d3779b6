// Serial reference against the OpenMP kernels on synthetic inputs.

#include <benchmark/benchmark.h>

#include <random>

#include "docqa/kernels.hpp"

namespace {

using docqa::GmmModel;
using docqa::Vector;

std::vector<Vector> samples(std::size_t n, std::size_t d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::vector<Vector> out(n, Vector(d));
  for (auto& x : out) {
    for (double& v : x) v = g(rng);
  }
  return out;
}

GmmModel model(std::size_t k, std::size_t d) {
  GmmModel m;
  m.weights.assign(k, 1.0 / static_cast<double>(k));
  m.means = samples(k, d, 7);
  m.variances.assign(k, Vector(d, 1.0));
  return m;
}

template <bool Serial>
void BM_cosine_scores(benchmark::State& state) {
  const std::size_t docs = static_cast<std::size_t>(state.range(0)), dim = 540;
  std::vector<float> rows(docs * dim);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  for (float& v : rows) v = u(rng);
  const Vector query = samples(1, dim, 2)[0];
  std::vector<double> out(docs);
  for (auto _ : state) {
    if constexpr (Serial) {
      docqa::kernels::cosine_scores_serial(rows, dim, query, out);
    } else {
      docqa::kernels::cosine_scores(rows, dim, query, out);
    }
    benchmark::DoNotOptimize(out.data());
  }
}

template <bool Serial>
void BM_responsibilities(benchmark::State& state) {
  const std::size_t k = static_cast<std::size_t>(state.range(0)), d = 32;
  const GmmModel m = model(k, d);
  const auto xs = samples(5000, d, 3);
  std::vector<double> resp(xs.size() * k), logp(xs.size());
  for (auto _ : state) {
    if constexpr (Serial) {
      docqa::kernels::responsibilities_serial(m, xs, resp, logp);
    } else {
      docqa::kernels::responsibilities(m, xs, resp, logp);
    }
    benchmark::DoNotOptimize(resp.data());
  }
}

template <bool Serial>
void BM_m_step(benchmark::State& state) {
  const std::size_t k = static_cast<std::size_t>(state.range(0)), d = 32;
  const GmmModel m = model(k, d);
  const auto xs = samples(5000, d, 4);
  std::vector<double> resp(xs.size() * k), logp(xs.size());
  docqa::kernels::responsibilities_serial(m, xs, resp, logp);
  for (auto _ : state) {
    auto r = Serial ? docqa::kernels::m_step_serial(xs, resp, m, 1e-6) : docqa::kernels::m_step(xs, resp, m, 1e-6);
    benchmark::DoNotOptimize(r.weights.data());
  }
}

template <bool Serial>
void BM_fisher_gradients(benchmark::State& state) {
  const std::size_t k = static_cast<std::size_t>(state.range(0)), d = 64;
  const GmmModel m = model(k, d);
  const auto xs = samples(120, d, 5);
  for (auto _ : state) {
    auto v = Serial ? docqa::kernels::fisher_gradients_serial(m, xs, true)
                    : docqa::kernels::fisher_gradients(m, xs, true);
    benchmark::DoNotOptimize(v.data());
  }
}

}  // namespace

BENCHMARK(BM_cosine_scores<true>)->Arg(1000)->Arg(20000);
BENCHMARK(BM_cosine_scores<false>)->Arg(1000)->Arg(20000);
BENCHMARK(BM_responsibilities<true>)->Arg(16)->Arg(128);
BENCHMARK(BM_responsibilities<false>)->Arg(16)->Arg(128);
BENCHMARK(BM_m_step<true>)->Arg(16)->Arg(128);
BENCHMARK(BM_m_step<false>)->Arg(16)->Arg(128);
BENCHMARK(BM_fisher_gradients<true>)->Arg(16)->Arg(256);
BENCHMARK(BM_fisher_gradients<false>)->Arg(16)->Arg(256);

BENCHMARK_MAIN();
