#include <benchmark/benchmark.h>

#include "epa/embedding_space.hpp"
#include "epa/encoder.hpp"
#include "epa/random.hpp"
#include "epa/stats.hpp"
#include "epa/synth.hpp"

namespace {

std::vector<epa::TokenId> sequence(std::size_t vocab, std::size_t n, std::uint64_t seed) {
  epa::Rng rng(seed);
  std::vector<epa::TokenId> x{2};
  while (x.size() + 1 < n) x.push_back(static_cast<epa::TokenId>(5 + rng.below(vocab - 5)));
  x.push_back(3);
  return x;
}

void BM_NearestToken(benchmark::State& state) {
  const auto vocab = static_cast<std::size_t>(state.range(0));
  const auto synth = epa::synthesize_model(1, {vocab, 64, 1, 1, 4, 8});
  const epa::EmbeddingTable table(synth.model.tok_emb);
  const auto mask = epa::TokenMask::non_special(synth.vocab);
  epa::TokenId tok = 5;
  for (auto _ : state) {
    benchmark::DoNotOptimize(epa::nearest_token(tok, table, mask));
    tok = tok + 1 < vocab ? tok + 1 : 5;
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(vocab));
}
BENCHMARK(BM_NearestToken)->Arg(1000)->Arg(30522);

void BM_MinimalSubstitutions(benchmark::State& state) {
  const auto synth = epa::synthesize_model(2, {5000, 64, 1, 1, 4, 64});
  const epa::EmbeddingTable table(synth.model.tok_emb);
  const auto policy = epa::default_policy(synth.vocab);
  const auto x = sequence(5000, static_cast<std::size_t>(state.range(0)), 3);
  for (auto _ : state)
    benchmark::DoNotOptimize(epa::minimal_substitutions(x, table, 5, epa::Norm::l2, policy));
}
BENCHMARK(BM_MinimalSubstitutions)->Arg(16)->Arg(64);

void BM_Forward(benchmark::State& state) {
  const std::size_t d = static_cast<std::size_t>(state.range(0));
  const auto synth = epa::synthesize_model(4, {1000, d, 4, 4, 4 * d, 128});
  const auto x = sequence(1000, static_cast<std::size_t>(state.range(1)), 5);
  for (auto _ : state) benchmark::DoNotOptimize(epa::forward(x, synth.model));
}
BENCHMARK(BM_Forward)->Args({64, 32})->Args({128, 128});

void BM_TQuantile(benchmark::State& state) {
  double dof = 1.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(epa::t_quantile(0.975, dof));
    dof = dof < 500 ? dof + 1 : 1;
  }
}
BENCHMARK(BM_TQuantile);

}  // namespace
BENCHMARK_MAIN();
