#include <benchmark/benchmark.h>

#include <cstdint>
#include <vector>

#include "ibgp/adversary.hpp"
#include "ibgp/multi_target.hpp"
#include "ibgp/params.hpp"
#include "ibgp/protocol.hpp"
#include "ibgp/rng.hpp"
#include "ibgp/verifier.hpp"

namespace {

using namespace ibgp;

ProtocolParams params_for(int n, int t, int k, int lambda, int r_max) {
  ProtocolParams p;
  p.n = n;
  p.t = t;
  p.k = k;
  p.lambda = lambda;
  p.rounds = RoundDistribution::uniform(r_max);
  return p;
}

void BM_protocol_run(benchmark::State& state) {
  int n = static_cast<int>(state.range(0));
  auto params = params_for(n, 2, 4, 2, 5);
  std::vector<std::uint8_t> obs(n, 0);
  for (int i = 0; i < 4 + 2; ++i) obs[i] = 1;
  auto attacker = make_random_p(0.5);
  std::uint64_t seed = 0;
  for (auto _ : state) {
    auto transcript = run_protocol(params, obs, *attacker, seed++);
    benchmark::DoNotOptimize(transcript.decisions);
  }
}
BENCHMARK(BM_protocol_run)->Arg(8)->Arg(16)->Arg(32);

void BM_exact_verify_reduced(benchmark::State& state) {
  int n = static_cast<int>(state.range(0));
  auto params = params_for(n, 2, n - 2, 2, 3);
  for (auto _ : state) {
    auto report = exhaustive_verify(params);
    benchmark::DoNotOptimize(report.worst_mis);
  }
}
BENCHMARK(BM_exact_verify_reduced)->Arg(5)->Arg(6)->Arg(8);

void BM_exact_verify_raw(benchmark::State& state) {
  auto params = params_for(4, 1, 2, 1, 2);
  VerifyOptions options;
  options.mode = VerifyOptions::Mode::Raw;
  for (auto _ : state) {
    auto report = exhaustive_verify(params, options);
    benchmark::DoNotOptimize(report.worst_mis);
  }
}
BENCHMARK(BM_exact_verify_raw);

void BM_monte_carlo(benchmark::State& state) {
  auto params = params_for(5, 1, 3, 1, 3);
  std::vector<std::uint8_t> obs = {1, 1, 1, 0, 0};
  auto attacker = make_all_one_all_zero();
  for (auto _ : state) {
    auto result = monte_carlo_estimate(params, obs, *attacker, 2000, 7);
    benchmark::DoNotOptimize(result.counts);
  }
}
BENCHMARK(BM_monte_carlo);

void BM_greedy_select(benchmark::State& state) {
  SplitMix64 rng(42);
  auto instance = random_selection_instance(24, 16, 3, rng);
  for (auto _ : state) {
    auto result = greedy_select(instance);
    benchmark::DoNotOptimize(result.total_reward);
  }
}
BENCHMARK(BM_greedy_select);

void BM_brute_force_select(benchmark::State& state) {
  SplitMix64 rng(42);
  int m = static_cast<int>(state.range(0));
  auto instance = random_selection_instance(12, m, 3, rng);
  for (auto _ : state) {
    auto result = brute_force_select(instance);
    benchmark::DoNotOptimize(result.total_reward);
  }
}
BENCHMARK(BM_brute_force_select)->Arg(8)->Arg(12)->Arg(16);

void BM_disperse_claims(benchmark::State& state) {
  SplitMix64 rng(9);
  int participants = 26;
  auto pack = PermutationPack::sample(participants, 31, rng);
  std::vector<int> row(participants);
  for (auto& v : row) v = static_cast<int>(rng.range(-1, 11));
  for (auto _ : state) {
    auto out = disperse_claims(row, pack);
    benchmark::DoNotOptimize(out);
  }
}
BENCHMARK(BM_disperse_claims);

}  // namespace

BENCHMARK_MAIN();
