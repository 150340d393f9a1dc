#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cstdint>
#include <map>
#include <vector>

#include "ibgp/adversary.hpp"
#include "ibgp/errors.hpp"
#include "ibgp/multi_target.hpp"
#include "ibgp/params.hpp"
#include "ibgp/protocol.hpp"
#include "ibgp/rng.hpp"

using namespace ibgp;

namespace {

MultiTargetInstance base_instance() {
  MultiTargetInstance inst;
  inst.n = 6;
  inst.t = 1;
  inst.lambda = 1;
  inst.rounds = RoundDistribution::uniform(3);
  return inst;
}

TargetSpec target(int k, double reward, std::vector<int> observers) {
  TargetSpec t;
  t.k = k;
  t.reward = reward;
  t.observers = std::move(observers);
  return t;
}

// Strict-majority recount of one receiver's audited slots, kept deliberately
// dumb as an oracle for disperse_claims.
int recount(const std::vector<int>& row, const PermutationPack& pack,
            int receiver) {
  std::map<int, int> votes;
  for (const auto& perm : pack.perms) ++votes[row[perm[receiver]]];
  for (const auto& [value, count] : votes) {
    if (2 * count > pack.size()) return value;
  }
  return kNoClaim;
}

}  // namespace

TEST_CASE("instance plumbing exposes per-target parameters and observations") {
  auto inst = base_instance();
  inst.targets = {target(2, 0.5, {0, 1, 2}), target(3, 0.25, {3})};
  inst.validate();

  auto p0 = inst.params_for(0);
  CHECK(p0.n == 6);
  CHECK(p0.t == 1);
  CHECK(p0.k == 2);
  CHECK(p0.lambda == 1);
  CHECK(inst.observations_for(0) ==
        std::vector<std::uint8_t>{1, 1, 1, 0, 0, 0});
  CHECK(inst.observations_for(1) ==
        std::vector<std::uint8_t>{0, 0, 0, 1, 0, 0});
}

TEST_CASE("instance validation rejects malformed target specs") {
  auto inst = base_instance();
  inst.targets = {target(2, 0.5, {0, 1, 2})};
  CHECK_NOTHROW(inst.validate());

  auto reordered = inst;
  reordered.targets[0].observers = {2, 1, 0};
  CHECK_NOTHROW(reordered.validate());
  CHECK(reordered.observations_for(0) == inst.observations_for(0));

  auto bad = inst;
  bad.targets[0].observers = {1, 1};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = inst;
  bad.targets[0].observers = {0, 6};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = inst;
  bad.targets[0].k = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = inst;
  bad.targets.clear();
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("a one-target run reproduces the plain protocol exactly") {
  SplitMix64 meta(404);
  for (int trial = 0; trial < 200; ++trial) {
    auto inst = base_instance();
    inst.n = static_cast<int>(meta.range(4, 8));
    int k = static_cast<int>(meta.range(1, 3));
    int observers = static_cast<int>(meta.range(0, inst.n));
    auto obs_set = meta.sample_indices(inst.n, observers);
    std::sort(obs_set.begin(), obs_set.end());
    inst.targets = {target(k, 1.0, obs_set)};
    if (inst.n < k + inst.lambda) continue;

    std::uint64_t seed = meta.next();
    auto atk1 = make_random_p(0.5);
    auto multi = run_multi_target(inst, *atk1, seed);

    auto atk2 = make_random_p(0.5);
    auto plain = run_protocol(inst.params_for(0), inst.observations_for(0),
                              *atk2, derive_seed(seed, 0));
    CHECK(multi.r_tot == plain.r_tot);
    CHECK(multi.outcomes[0].kind == plain.outcome.kind);
    CHECK(multi.outcomes[0].acting_observers == plain.outcome.acting_observers);
  }
}

TEST_CASE("definition score and reward count ideal outcomes only") {
  auto inst = base_instance();
  inst.targets = {target(2, 0.75, {0, 1, 2}), target(2, 0.5, {3})};
  auto atk = make_all_one();
  auto res = run_multi_target(inst, *atk, 12);

  CHECK(res.outcomes[0].kind == OutcomeKind::Coordinated);
  CHECK(res.outcomes[1].kind == OutcomeKind::AllAbstain);
  CHECK(res.definition_score == 2);
  CHECK(res.reward_collected == doctest::Approx(0.75));
}

TEST_CASE("shared round draws make target outcomes comparable across targets") {
  auto inst = base_instance();
  inst.targets = {target(2, 1.0, {0, 1, 2}), target(2, 1.0, {3, 4, 5})};
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    auto atk = make_all_zero();
    auto res = run_multi_target(inst, *atk, seed);
    CHECK(res.r_tot >= 1);
    CHECK(res.r_tot <= 3);
    REQUIRE(res.outcomes.size() == 2);
    // Symmetric observer sets against a deterministic anonymous attacker:
    // both instances see identical dynamics.
    CHECK(res.outcomes[0].kind == res.outcomes[1].kind);
  }
}

TEST_CASE("permutation packs are valid permutations and seed-deterministic") {
  SplitMix64 rng1(8), rng2(8);
  auto pack = PermutationPack::sample(7, 5, rng1);
  auto again = PermutationPack::sample(7, 5, rng2);
  CHECK(pack.size() == 5);
  CHECK(pack.perms == again.perms);
  for (const auto& perm : pack.perms) {
    auto sorted = perm;
    std::sort(sorted.begin(), sorted.end());
    for (int i = 0; i < 7; ++i) CHECK(sorted[i] == i);
  }
}

TEST_CASE("dispersion preserves every constant row exactly") {
  SplitMix64 rng(19);
  for (int trial = 0; trial < 200; ++trial) {
    int participants = static_cast<int>(rng.range(2, 12));
    int q = static_cast<int>(rng.range(1, 41));
    auto pack = PermutationPack::sample(participants, q, rng);
    int value = static_cast<int>(rng.range(-1, 6));
    std::vector<int> row(participants, value);
    CHECK(disperse_claims(row, pack) == row);
  }
}

TEST_CASE("dispersion equals a direct strict-majority recount") {
  SplitMix64 rng(20);
  for (int trial = 0; trial < 500; ++trial) {
    int participants = static_cast<int>(rng.range(2, 10));
    int q = static_cast<int>(rng.range(1, 12));
    auto pack = PermutationPack::sample(participants, q, rng);
    std::vector<int> row(participants);
    for (auto& v : row) v = static_cast<int>(rng.range(-1, 3));
    auto dispersed = disperse_claims(row, pack);
    REQUIRE(static_cast<int>(dispersed.size()) == participants);
    for (int i = 0; i < participants; ++i) {
      CHECK(dispersed[i] == recount(row, pack, i));
    }
  }
}

TEST_CASE("an exact tie yields no claim") {
  PermutationPack pack;
  pack.perms = {{0, 1, 2, 3}, {0, 1, 2, 3}, {1, 0, 3, 2}, {1, 0, 3, 2}};
  std::vector<int> row{0, 1, 0, 1};
  auto out = disperse_claims(row, pack);
  CHECK(out == std::vector<int>(4, kNoClaim));
}

TEST_CASE("dispersed runs are reproducible and name their attacker") {
  auto heavy = make_heavy_concentration();
  CHECK(heavy->name() == "heavy_concentration");
  CHECK_THROWS_AS(make_value_attacker("unknown"), ConfigError);

  MultiTargetInstance inst;
  inst.n = 8;
  inst.t = 2;
  inst.lambda = 1;
  inst.rounds = RoundDistribution::point_mass(1);
  inst.targets = {target(2, 1.0, {0, 1}), target(2, 1.0, {2, 3}),
                  target(2, 1.0, {4, 5}), target(2, 1.0, {6, 7})};

  DispersionOptions opts;
  opts.q = 7;
  auto h1 = make_heavy_concentration();
  auto h2 = make_heavy_concentration();
  auto r1 = run_multi_target_dispersed(inst, *h1, opts, 99);
  auto r2 = run_multi_target_dispersed(inst, *h2, opts, 99);
  CHECK(r1.r_tot == r2.r_tot);
  REQUIRE(r1.outcomes.size() == r2.outcomes.size());
  for (std::size_t i = 0; i < r1.outcomes.size(); ++i) {
    CHECK(r1.outcomes[i].kind == r2.outcomes[i].kind);
  }
}

TEST_CASE("the concentration experiment reports its envelope and measurements") {
  CountBoundConfig config;
  auto stats = count_bound_check(config, 300, 17, 2);
  CHECK(stats.trials == 300);
  CHECK(stats.failing_threshold == 6);  // 3t over lambda
  CHECK(stats.envelope > 0.0);
  CHECK(stats.violation_fraction >= 0.0);
  CHECK(stats.violation_fraction <= 1.0);
  CHECK(stats.mean_failing_targets >= 0.0);
  CHECK(stats.mean_failing_targets <= config.m);
  CHECK(stats.violation_fraction <= 2.0 * stats.envelope);

  auto repeat = count_bound_check(config, 300, 17, 1);
  CHECK(repeat.violating_runs == stats.violating_runs);
  CHECK(repeat.mean_failing_targets == stats.mean_failing_targets);
}

TEST_CASE("greedy selection prefers reward then the lower index") {
  SelectionInstance inst;
  inst.n = 4;
  inst.targets = {target(1, 0.5, {0, 1}), target(1, 0.5, {0})};
  auto greedy = greedy_select(inst);
  CHECK(greedy.selected == std::vector<int>{0});
  CHECK(greedy.assignment == std::vector<std::vector<int>>{{0}});
  CHECK(greedy.total_reward == doctest::Approx(0.5));
  CHECK(selection_is_valid(inst, greedy));

  auto best = brute_force_select(inst);
  CHECK(best.selected == std::vector<int>{0, 1});
  CHECK(best.total_reward == doctest::Approx(1.0));
  CHECK(selection_is_valid(inst, best));
}

TEST_CASE("greedy can lose almost half the reward even with unit quorums") {
  // Counterexample to the tempting claim that greedy collects at least
  // optimal divided by the largest quorum: with k = 1 that factor would mean
  // greedy is optimal, but consuming agent 0 for the heavier target blocks
  // the lighter one entirely.
  SelectionInstance inst;
  inst.n = 2;
  inst.targets = {target(1, 1.0, {0, 1}), target(1, 0.9, {0})};
  auto greedy = greedy_select(inst);
  auto best = brute_force_select(inst);
  CHECK(greedy.total_reward == doctest::Approx(1.0));
  CHECK(best.total_reward == doctest::Approx(1.9));
  CHECK(greedy.total_reward < best.total_reward);
  // The factor that does hold: optimal over (largest quorum + 1).
  CHECK(greedy.total_reward + 1e-9 >= best.total_reward / 2.0);
}

TEST_CASE("greedy always clears optimal over largest-quorum-plus-one") {
  SplitMix64 meta(606);
  int checked = 0;
  for (int trial = 0; trial < 1500; ++trial) {
    int n = static_cast<int>(meta.range(1, 10));
    int m = static_cast<int>(meta.range(1, 7));
    auto inst = random_selection_instance(n, m, 3, meta);
    auto greedy = greedy_select(inst);
    auto best = brute_force_select(inst);
    CHECK(selection_is_valid(inst, greedy));
    CHECK(selection_is_valid(inst, best));
    CHECK(best.total_reward + 1e-9 >= greedy.total_reward);

    int k_max = 0;
    for (const auto& t : inst.targets) k_max = std::max(k_max, t.k);
    CHECK_MESSAGE(
        greedy.total_reward + 1e-9 >= best.total_reward / (k_max + 1),
        "trial ", trial);
    ++checked;
  }
  CHECK(checked == 1500);
}

TEST_CASE("a pinned random instance beats greedy by more than the quorum factor") {
  // Frozen from the selection experiment's own stream (seed 1, draw 56):
  // greedy's lowest-index consumption starves two mid-reward targets, so the
  // optimal-over-largest-quorum factor fails. Kept as a regression anchor for
  // the documented limitation of the greedy guarantee.
  SplitMix64 rng(derive_seed(1, {5001, 56}));
  int n = static_cast<int>(rng.range(1, 12));
  int m = static_cast<int>(rng.range(1, 8));
  CHECK(n == 11);
  CHECK(m == 4);
  auto inst = random_selection_instance(n, m, 3, rng);

  auto greedy = greedy_select(inst);
  auto best = brute_force_select(inst);
  CHECK(greedy.total_reward == doctest::Approx(1.161787).epsilon(1e-5));
  CHECK(best.total_reward == doctest::Approx(2.641641).epsilon(1e-5));

  int k_max = 0;
  for (const auto& t : inst.targets) k_max = std::max(k_max, t.k);
  CHECK(k_max == 2);
  CHECK(greedy.total_reward < best.total_reward / k_max);
  CHECK(greedy.total_reward + 1e-9 >= best.total_reward / (k_max + 1));
}

TEST_CASE("selection audits catch tampered results") {
  SelectionInstance inst;
  inst.n = 4;
  inst.targets = {target(1, 0.5, {0, 1}), target(1, 0.4, {2, 3})};
  auto good = brute_force_select(inst);
  CHECK(selection_is_valid(inst, good));

  auto reordered = good;
  std::reverse(reordered.selected.begin(), reordered.selected.end());
  std::reverse(reordered.assignment.begin(), reordered.assignment.end());
  CHECK_FALSE(selection_is_valid(inst, reordered));

  auto reused = good;
  reused.assignment = {{0}, {0}};
  CHECK_FALSE(selection_is_valid(inst, reused));

  auto outsider = good;
  outsider.assignment = {{2}, {3}};
  CHECK_FALSE(selection_is_valid(inst, outsider));

  auto inflated = good;
  inflated.total_reward += 1.0;
  CHECK_FALSE(selection_is_valid(inst, inflated));
}

TEST_CASE("the brute-force selector refuses oversized instances") {
  SelectionInstance inst;
  inst.n = 25;
  for (int j = 0; j < 25; ++j) inst.targets.push_back(target(1, 0.1, {j}));
  CHECK_THROWS_AS(brute_force_select(inst), BudgetError);
  CHECK_NOTHROW(brute_force_select(inst, 1ull << 26));
}

TEST_CASE("random selection instances satisfy their own contract") {
  SplitMix64 rng(33);
  for (int trial = 0; trial < 300; ++trial) {
    int n = static_cast<int>(rng.range(1, 12));
    int m = static_cast<int>(rng.range(1, 8));
    auto inst = random_selection_instance(n, m, 3, rng);
    CHECK(inst.n == n);
    CHECK(static_cast<int>(inst.targets.size()) == m);
    inst.validate();
    for (const auto& t : inst.targets) {
      CHECK(t.k >= 1);
      CHECK(t.k <= std::min(3, n));
      CHECK(static_cast<int>(t.observers.size()) >= t.k);
      CHECK(t.reward >= 0.0);
      CHECK(t.reward < 1.0);
    }
  }
}
