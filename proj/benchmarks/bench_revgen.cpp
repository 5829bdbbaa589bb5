// Microbenchmarks for the hot paths: the dense kernels, one LSTM cell update,
// a full training step and the readability scorer.

#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "revgen/corpus.hpp"
#include "revgen/harness.hpp"
#include "revgen/model.hpp"
#include "revgen/numeric.hpp"
#include "revgen/prng.hpp"
#include "revgen/readability.hpp"

namespace {

using namespace revgen;

model::ModelParams bench_params(std::size_t hidden, std::size_t layers) {
  Prng rng(1);
  return model::init_params(
      corpus::Vocabulary("abcdefghijklmnopqrstuvwxyz .,!?0123456789"), hidden,
      layers, rng);
}

std::vector<num::Vector> bench_inputs(const model::ModelParams& p,
                                      std::size_t steps) {
  Prng rng(2);
  const auto aux =
      corpus::RatingVector::from_values({0.9, 0.8, 0.7, 0.85, 0.9});
  std::vector<num::Vector> inputs;
  inputs.reserve(steps);
  for (std::size_t t = 0; t < steps; ++t) {
    inputs.push_back(model::context_encode(
        static_cast<std::size_t>(rng.next_u64() % p.vocab.size()), aux,
        p.vocab.size()));
  }
  return inputs;
}

void BM_matvec(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  num::Matrix m(n, n);
  num::Vector x(n);
  Prng rng(3);
  for (double& v : m.data) v = rng.next_uniform(-1, 1);
  for (double& v : x) v = rng.next_uniform(-1, 1);
  for (auto _ : state) {
    auto y = num::matvec(m, x);
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(static_cast<int64_t>(state.iterations()) *
                          static_cast<int64_t>(n * n));
}
BENCHMARK(BM_matvec)->Arg(64)->Arg(128)->Arg(256);

void BM_cell_step(benchmark::State& state) {
  const auto hidden = static_cast<std::size_t>(state.range(0));
  const auto params = bench_params(hidden, 1);
  const auto inputs = bench_inputs(params, 1);
  const num::Vector c(hidden, 0.1), h(hidden, -0.1);
  for (auto _ : state) {
    auto out = model::lstm_cell_step(params.layers[0], inputs[0], c, h);
    benchmark::DoNotOptimize(out.h.data());
  }
}
BENCHMARK(BM_cell_step)->Arg(64)->Arg(128)->Arg(256);

// One optimizer-free training step over a 64-char window; items/s is chars/s.
void BM_forward_backward(benchmark::State& state) {
  const auto hidden = static_cast<std::size_t>(state.range(0));
  auto params = bench_params(hidden, 2);
  const std::size_t steps = 64;
  const auto inputs = bench_inputs(params, steps);
  std::vector<std::uint32_t> targets;
  Prng rng(4);
  for (std::size_t t = 0; t < steps; ++t) {
    targets.push_back(
        static_cast<std::uint32_t>(rng.next_u64() % params.vocab.size()));
  }
  for (auto _ : state) {
    const auto fwd =
        model::forward_sequence(params, inputs, model::zero_state(params));
    auto grads = model::backward_bptt(params, fwd.cache, targets);
    benchmark::DoNotOptimize(grads.w_y.data.data());
  }
  state.SetItemsProcessed(static_cast<int64_t>(state.iterations()) *
                          static_cast<int64_t>(steps));
}
BENCHMARK(BM_forward_backward)->Arg(64)->Arg(128);

void BM_softmax(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  num::Vector logits(n);
  Prng rng(5);
  for (double& v : logits) v = rng.next_uniform(-4, 4);
  for (auto _ : state) {
    auto p = num::softmax(logits);
    benchmark::DoNotOptimize(p.data());
  }
}
BENCHMARK(BM_softmax)->Arg(43)->Arg(128);

void BM_readability_report(benchmark::State& state) {
  const auto recs = harness::make_planted_reviews(6, 64);
  std::vector<std::string> texts;
  for (const auto& r : recs) texts.push_back(r.text);
  for (auto _ : state) {
    auto rep = read::corpus_report(texts);
    benchmark::DoNotOptimize(rep.mean.ari);
  }
  state.SetItemsProcessed(static_cast<int64_t>(state.iterations()) *
                          static_cast<int64_t>(texts.size()));
}
BENCHMARK(BM_readability_report);

}  // namespace

BENCHMARK_MAIN();
