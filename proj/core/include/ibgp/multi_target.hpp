#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ibgp/adversary.hpp"
#include "ibgp/messages.hpp"
#include "ibgp/params.hpp"
#include "ibgp/rng.hpp"

namespace ibgp {

// One coordination target: its action quorum, its payoff, and the agents
// that observe it.
struct TargetSpec {
  int k = 1;
  double reward = 0.0;
  std::vector<int> observers;
};

// m parallel protocol instances sharing one agent population, one adversary
// team and one round count draw.
struct MultiTargetInstance {
  int n = 0;
  int t = 0;
  int lambda = 0;
  RoundDistribution rounds;
  std::vector<TargetSpec> targets;

  int target_count() const { return static_cast<int>(targets.size()); }
  ProtocolParams params_for(int target) const;
  std::vector<std::uint8_t> observations_for(int target) const;
  void validate() const;
};

struct MultiTargetResult {
  int r_tot = 0;
  std::vector<Outcome> outcomes;  // one per target
  // Number of targets whose realized outcome matches the ideal one:
  // Coordinated where the observers could fill the quorum, AllAbstain where
  // they could not.
  int definition_score = 0;
  double reward_collected = 0.0;  // sum of rewards over Coordinated targets
};

// Runs all instances with a shared r_tot draw; each target gets its own
// derived randomness stream, and target 0's stream equals the stream
// run_protocol would use with seed derive_seed(seed, 0), so a one-target
// instance reproduces a plain protocol run exactly.
MultiTargetResult run_multi_target(const MultiTargetInstance& instance,
                                   AttackerStrategy& attacker,
                                   std::uint64_t seed);

// ---- Proposing-round value model and the dispersion defense ----

// In the proposing round each attacker physically sends one value per
// receiver: the index of the target it claims to support, or kNoClaim.
inline constexpr int kNoClaim = -1;

// q independent permutations of the participant slots. Receiver i audits a
// sender's proposing-round row at positions perm[0][i], .., perm[q-1][i]
// instead of trusting its own slot.
struct PermutationPack {
  std::vector<std::vector<int>> perms;

  static PermutationPack sample(int participants, int q, SplitMix64& rng);
  int size() const { return static_cast<int>(perms.size()); }
};

// Strict-majority aggregation of one sender row under the pack: receiver i
// gets the value claimed in more than half of its audited slots, or kNoClaim
// if no value reaches a strict majority. A constant row is preserved exactly.
std::vector<int> disperse_claims(const std::vector<int>& row,
                                 const PermutationPack& pack);

// Adversary for dispersed runs: proposing-round value claims (one row of
// n + t entries per attacker, flattened attacker-major) plus per-instance
// bit rows for the later rounds.
class ValueRoundAttacker {
 public:
  virtual ~ValueRoundAttacker() = default;
  virtual std::string name() const = 0;
  virtual std::vector<int> claims(const MultiTargetInstance& instance,
                                  SplitMix64& rng) = 0;
  virtual std::vector<std::uint8_t> later_rows(int target,
                                               const AttackContext& ctx,
                                               SplitMix64& rng) = 0;
};

// Each attacker spreads its proposing-round claims round-robin over three
// target values (a maximally concentrated row family) and fully supports
// every instance afterwards.
std::unique_ptr<ValueRoundAttacker> make_heavy_concentration();
std::unique_ptr<ValueRoundAttacker> make_value_attacker(const std::string& name);

struct DispersionOptions {
  int q = 31;
};

// Dispersed run: claims are committed first, the permutation pack is drawn
// afterwards, and every receiver applies the same pack to every sender's
// proposing row. Later rounds run undefended.
MultiTargetResult run_multi_target_dispersed(const MultiTargetInstance& instance,
                                             ValueRoundAttacker& attacker,
                                             const DispersionOptions& dispersion,
                                             std::uint64_t seed);

// ---- Concentration-bound experiment ----

struct CountBoundConfig {
  int m = 12;      // targets
  int n = 24;      // benign agents, two observers per target
  int t = 2;
  int k = 2;       // per-target quorum
  int lambda = 1;
  int q = 31;
  RoundDistribution rounds = RoundDistribution::point_mass(1);
};

struct CountBoundStats {
  double envelope = 0.0;      // analytic ceiling on E[failing targets] factor
  int failing_threshold = 0;  // 3t / lambda
  std::uint64_t trials = 0;
  std::uint64_t violating_runs = 0;  // runs with more failing targets
  double violation_fraction = 0.0;
  double mean_failing_targets = 0.0;
};

// Repeated dispersed runs against the heavy-concentration family, counting
// targets that end in MisCoordination or FalseCoordination. The analytic
// envelope is reported alongside the measured violation fraction.
CountBoundStats count_bound_check(const CountBoundConfig& config,
                                  std::uint64_t trials, std::uint64_t seed,
                                  int jobs = 1);

// ---- Target selection ----

struct SelectionInstance {
  int n = 0;
  std::vector<TargetSpec> targets;
  void validate() const;
};

struct SelectionResult {
  std::vector<int> selected;                  // target indices, ascending
  std::vector<std::vector<int>> assignment;   // agents per selected target
  double total_reward = 0.0;
};

// Reward-greedy selection: targets in decreasing reward order (ties to the
// lower index) are selected when enough unused observers remain to fill
// their quorum, consuming the lowest-indexed ones.
SelectionResult greedy_select(const SelectionInstance& instance);

// Exact optimum by subset enumeration with bipartite matching feasibility.
// Budget counts the enumerated subsets.
SelectionResult brute_force_select(const SelectionInstance& instance,
                                   std::uint64_t budget = 1ull << 22);

// Audits a selection against its instance: selected indices ascending, each
// quorum filled exactly from the target's own observers, no agent reused,
// total reward consistent.
bool selection_is_valid(const SelectionInstance& instance,
                        const SelectionResult& result);

// Random instance for selection experiments: m targets over n agents,
// quorums uniform in [1, min(k_max, n)], observer sets of uniform random
// size and membership large enough to fill their quorum, rewards uniform
// in [0, 1).
SelectionInstance random_selection_instance(int n, int m, int k_max,
                                            SplitMix64& rng);

}  // namespace ibgp
