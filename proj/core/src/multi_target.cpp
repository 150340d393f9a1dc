#include "ibgp/multi_target.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <thread>

#include "ibgp/errors.hpp"
#include "ibgp/protocol.hpp"

namespace ibgp {

ProtocolParams MultiTargetInstance::params_for(int target) const {
  ProtocolParams p;
  p.n = n;
  p.t = t;
  p.k = targets[target].k;
  p.lambda = lambda;
  p.rounds = rounds;
  return p;
}

std::vector<std::uint8_t> MultiTargetInstance::observations_for(int target) const {
  std::vector<std::uint8_t> obs(n, 0);
  for (int agent : targets[target].observers) obs[agent] = 1;
  return obs;
}

void MultiTargetInstance::validate() const {
  if (n < 1) throw ConfigError("instance needs n >= 1");
  if (t < 0) throw ConfigError("instance needs t >= 0");
  if (lambda < 0) throw ConfigError("instance needs lambda >= 0");
  if (targets.empty()) throw ConfigError("instance needs at least one target");
  if (rounds.pmf().empty()) throw ConfigError("instance needs a round distribution");
  for (std::size_t j = 0; j < targets.size(); ++j) {
    const auto& tg = targets[j];
    if (tg.k < 1 || tg.k > n) {
      throw ConfigError("target " + std::to_string(j) + " needs k in [1, n]");
    }
    std::vector<bool> seen(n, false);
    for (int agent : tg.observers) {
      if (agent < 0 || agent >= n) {
        throw ConfigError("target " + std::to_string(j) +
                          " has an observer outside [0, n)");
      }
      if (seen[agent]) {
        throw ConfigError("target " + std::to_string(j) +
                          " lists an observer twice");
      }
      seen[agent] = true;
    }
  }
}

namespace {

bool ideal_outcome_met(const TargetSpec& target, const Outcome& outcome) {
  bool reachable = static_cast<int>(target.observers.size()) >= target.k;
  if (reachable) return outcome.kind == OutcomeKind::Coordinated;
  return outcome.kind == OutcomeKind::AllAbstain;
}

void finalize_result(const MultiTargetInstance& instance, MultiTargetResult& res) {
  res.definition_score = 0;
  res.reward_collected = 0.0;
  for (int j = 0; j < instance.target_count(); ++j) {
    if (ideal_outcome_met(instance.targets[j], res.outcomes[j])) {
      ++res.definition_score;
    }
    if (res.outcomes[j].kind == OutcomeKind::Coordinated) {
      res.reward_collected += instance.targets[j].reward;
    }
  }
}

}  // namespace

MultiTargetResult run_multi_target(const MultiTargetInstance& instance,
                                   AttackerStrategy& attacker,
                                   std::uint64_t seed) {
  instance.validate();
  MultiTargetResult res;
  res.outcomes.resize(instance.target_count());

  // Target 0 consumes the stream exactly like a plain protocol run seeded
  // with derive_seed(seed, 0); the shared round draw comes from that stream.
  SplitMix64 rng0(derive_seed(seed, 0));
  res.r_tot = instance.rounds.sample(rng0);

  for (int j = 0; j < instance.target_count(); ++j) {
    ProtocolParams params = instance.params_for(j);
    params.validate();
    auto obs = instance.observations_for(j);
    if (j == 0) {
      auto tr = run_protocol_fixed_rounds(params, obs, attacker, res.r_tot, rng0);
      res.outcomes[j] = tr.outcome;
    } else {
      SplitMix64 rng(derive_seed(seed, static_cast<std::uint64_t>(j)));
      auto tr = run_protocol_fixed_rounds(params, obs, attacker, res.r_tot, rng);
      res.outcomes[j] = tr.outcome;
    }
  }
  finalize_result(instance, res);
  return res;
}

PermutationPack PermutationPack::sample(int participants, int q,
                                        SplitMix64& rng) {
  if (participants < 1) throw ConfigError("permutation pack needs participants >= 1");
  if (q < 1) throw ConfigError("permutation pack needs q >= 1");
  PermutationPack pack;
  pack.perms.resize(q);
  for (auto& perm : pack.perms) {
    perm.resize(participants);
    for (int i = 0; i < participants; ++i) perm[i] = i;
    rng.shuffle(perm);
  }
  return pack;
}

std::vector<int> disperse_claims(const std::vector<int>& row,
                                 const PermutationPack& pack) {
  if (pack.perms.empty()) throw ConfigError("empty permutation pack");
  int participants = static_cast<int>(row.size());
  for (const auto& perm : pack.perms) {
    if (static_cast<int>(perm.size()) != participants) {
      throw ConfigError("permutation pack size does not match the row");
    }
  }
  int q = pack.size();
  std::vector<int> effective(participants, kNoClaim);
  std::map<int, int> votes;
  for (int i = 0; i < participants; ++i) {
    votes.clear();
    for (const auto& perm : pack.perms) {
      int v = row[perm[i]];
      if (v != kNoClaim) ++votes[v];
    }
    for (const auto& [value, count] : votes) {
      if (2 * count > q) {
        effective[i] = value;
        break;
      }
    }
  }
  return effective;
}

namespace {

class HeavyConcentration : public ValueRoundAttacker {
 public:
  std::string name() const override { return "heavy_concentration"; }

  std::vector<int> claims(const MultiTargetInstance& instance,
                          SplitMix64&) override {
    int total = instance.n + instance.t;
    int m = instance.target_count();
    std::vector<int> out(static_cast<std::size_t>(instance.t) * total, kNoClaim);
    for (int a = 0; a < instance.t; ++a) {
      // Three target values per attacker, slots assigned round-robin, which
      // concentrates at least ceil(total / 3) slots on one value.
      for (int i = 0; i < total; ++i) {
        int value = (3 * a + i % 3) % m;
        out[static_cast<std::size_t>(a) * total + i] = value;
      }
    }
    return out;
  }

  std::vector<std::uint8_t> later_rows(int, const AttackContext& ctx,
                                       SplitMix64&) override {
    return std::vector<std::uint8_t>(
        static_cast<std::size_t>(ctx.params.t) * ctx.params.total(), 1);
  }
};

}  // namespace

std::unique_ptr<ValueRoundAttacker> make_heavy_concentration() {
  return std::make_unique<HeavyConcentration>();
}

std::unique_ptr<ValueRoundAttacker> make_value_attacker(const std::string& name) {
  if (name == "heavy_concentration") return make_heavy_concentration();
  throw ConfigError("unknown value attacker: " + name);
}

MultiTargetResult run_multi_target_dispersed(const MultiTargetInstance& instance,
                                             ValueRoundAttacker& attacker,
                                             const DispersionOptions& dispersion,
                                             std::uint64_t seed) {
  instance.validate();
  if (dispersion.q < 1) throw ConfigError("dispersion needs q >= 1");
  int total = instance.n + instance.t;

  MultiTargetResult res;
  res.outcomes.resize(instance.target_count());

  SplitMix64 rounds_rng(derive_seed(seed, {0}));
  res.r_tot = instance.rounds.sample(rounds_rng);

  // Claims are committed before the audit permutations exist.
  SplitMix64 claims_rng(derive_seed(seed, {1}));
  auto claims = attacker.claims(instance, claims_rng);
  if (claims.size() != static_cast<std::size_t>(instance.t) * total) {
    throw ConfigError("value claims must have t * (n + t) entries");
  }
  SplitMix64 pack_rng(derive_seed(seed, {2}));
  auto pack = PermutationPack::sample(total, dispersion.q, pack_rng);

  // Effective proposing-round claims per attacker after auditing.
  std::vector<std::vector<int>> effective(instance.t);
  for (int a = 0; a < instance.t; ++a) {
    std::vector<int> row(claims.begin() + static_cast<std::size_t>(a) * total,
                         claims.begin() + static_cast<std::size_t>(a + 1) * total);
    effective[a] = disperse_claims(row, pack);
  }

  for (int j = 0; j < instance.target_count(); ++j) {
    ProtocolParams params = instance.params_for(j);
    params.validate();
    auto obs = instance.observations_for(j);

    std::vector<std::uint8_t> round0_rows(
        static_cast<std::size_t>(instance.t) * total, 0);
    for (int a = 0; a < instance.t; ++a) {
      for (int i = 0; i < total; ++i) {
        if (effective[a][i] == j) {
          round0_rows[static_cast<std::size_t>(a) * total + i] = 1;
        }
      }
    }

    SplitMix64 rng(derive_seed(seed, {3, static_cast<std::uint64_t>(j)}));
    Transcript tr;
    tr.params = params;
    tr.observations = obs;
    tr.r_tot = res.r_tot;
    tr.states.push_back(initial_state(params, obs));
    tr.rounds.push_back(initial_broadcast(params, obs, round0_rows));
    for (int r = 1; r <= res.r_tot; ++r) {
      AttackContext ctx{params, r, tr.rounds, obs};
      auto rows = attacker.later_rows(j, ctx, rng);
      auto [state, matrix] = step_round(params, tr.states.back(), tr.rounds.back(), rows);
      tr.states.push_back(std::move(state));
      tr.rounds.push_back(std::move(matrix));
    }
    tr.decisions = decide(params, tr.states.back(), tr.rounds.back());
    tr.outcome = classify_outcome(params, obs, tr.decisions);
    res.outcomes[j] = tr.outcome;
  }
  finalize_result(instance, res);
  return res;
}

CountBoundStats count_bound_check(const CountBoundConfig& config,
                                  std::uint64_t trials, std::uint64_t seed,
                                  int jobs) {
  if (config.m < 1) throw ConfigError("count bound check needs m >= 1");
  if (config.n != 2 * config.m) {
    throw ConfigError("count bound check pairs observers: n must equal 2m");
  }
  if (config.lambda < 1) throw ConfigError("count bound check needs lambda >= 1");
  if (trials == 0) throw ConfigError("count bound check needs trials > 0");
  if (jobs < 1) jobs = 1;

  MultiTargetInstance instance;
  instance.n = config.n;
  instance.t = config.t;
  instance.lambda = config.lambda;
  instance.rounds = config.rounds;
  instance.targets.resize(config.m);
  for (int j = 0; j < config.m; ++j) {
    instance.targets[j].k = config.k;
    instance.targets[j].reward = 1.0;
    instance.targets[j].observers = {2 * j, 2 * j + 1};
  }
  instance.validate();

  CountBoundStats stats;
  stats.trials = trials;
  stats.failing_threshold = (3 * config.t) / config.lambda;
  {
    double total = config.n + config.t;
    double gap = 1.0 / 6.0 - static_cast<double>(config.t) / total;
    double k_max = config.k;
    stats.envelope = (config.m - 3) * config.t * k_max *
                     std::exp(-2.0 * config.q * gap * gap);
  }

  DispersionOptions dispersion;
  dispersion.q = config.q;

  std::vector<std::uint64_t> violations(static_cast<std::size_t>(jobs), 0);
  std::vector<std::uint64_t> failing_total(static_cast<std::size_t>(jobs), 0);

  auto worker = [&](int job) {
    auto attacker = make_heavy_concentration();
    for (std::uint64_t i = job; i < trials; i += static_cast<std::uint64_t>(jobs)) {
      auto res = run_multi_target_dispersed(instance, *attacker, dispersion,
                                            derive_seed(seed, i));
      int failing = 0;
      for (const auto& outcome : res.outcomes) {
        if (outcome.kind == OutcomeKind::MisCoordination ||
            outcome.kind == OutcomeKind::FalseCoordination) {
          ++failing;
        }
      }
      failing_total[job] += static_cast<std::uint64_t>(failing);
      if (failing > stats.failing_threshold) ++violations[job];
    }
  };

  if (jobs == 1) {
    worker(0);
  } else {
    std::vector<std::thread> threads;
    for (int j = 0; j < jobs; ++j) threads.emplace_back(worker, j);
    for (auto& t : threads) t.join();
  }

  std::uint64_t violating = 0, failing_sum = 0;
  for (int j = 0; j < jobs; ++j) {
    violating += violations[j];
    failing_sum += failing_total[j];
  }
  stats.violating_runs = violating;
  stats.violation_fraction = static_cast<double>(violating) / trials;
  stats.mean_failing_targets = static_cast<double>(failing_sum) / trials;
  return stats;
}

void SelectionInstance::validate() const {
  if (n < 1) throw ConfigError("selection instance needs n >= 1");
  if (targets.empty()) throw ConfigError("selection instance needs targets");
  for (std::size_t j = 0; j < targets.size(); ++j) {
    const auto& tg = targets[j];
    if (tg.k < 1) throw ConfigError("target " + std::to_string(j) + " needs k >= 1");
    std::vector<bool> seen(n, false);
    for (int agent : tg.observers) {
      if (agent < 0 || agent >= n) {
        throw ConfigError("target " + std::to_string(j) +
                          " has an observer outside [0, n)");
      }
      if (seen[agent]) {
        throw ConfigError("target " + std::to_string(j) +
                          " lists an observer twice");
      }
      seen[agent] = true;
    }
  }
}

SelectionResult greedy_select(const SelectionInstance& instance) {
  instance.validate();
  int m = static_cast<int>(instance.targets.size());
  std::vector<int> order(m);
  for (int j = 0; j < m; ++j) order[j] = j;
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return instance.targets[a].reward > instance.targets[b].reward;
  });

  SelectionResult result;
  std::vector<bool> used(instance.n, false);
  std::vector<std::vector<int>> assignment(m);
  std::vector<bool> selected(m, false);

  for (int j : order) {
    const auto& tg = instance.targets[j];
    std::vector<int> avail;
    for (int agent : tg.observers) {
      if (!used[agent]) avail.push_back(agent);
    }
    if (static_cast<int>(avail.size()) < tg.k) continue;
    std::sort(avail.begin(), avail.end());
    avail.resize(tg.k);
    for (int agent : avail) used[agent] = true;
    assignment[j] = std::move(avail);
    selected[j] = true;
    result.total_reward += tg.reward;
  }

  for (int j = 0; j < m; ++j) {
    if (selected[j]) {
      result.selected.push_back(j);
      result.assignment.push_back(assignment[j]);
    }
  }
  return result;
}

namespace {

// Feasibility of serving every target in `subset` with disjoint observer
// assignments, via augmenting paths on the slot-agent bipartite graph.
// Fills `assignment` (parallel to subset) when feasible.
bool matchable(const SelectionInstance& instance, const std::vector<int>& subset,
               std::vector<std::vector<int>>* assignment) {
  struct Slot {
    int target;
  };
  std::vector<Slot> slots;
  for (int j : subset) {
    for (int s = 0; s < instance.targets[j].k; ++s) slots.push_back({j});
  }
  if (static_cast<int>(slots.size()) > instance.n) return false;

  std::vector<int> agent_match(instance.n, -1);  // agent -> slot
  std::vector<int> slot_match(slots.size(), -1);

  std::vector<char> visited(instance.n, 0);
  std::function<bool(int)> augment = [&](int slot) -> bool {
    for (int agent : instance.targets[slots[slot].target].observers) {
      if (visited[agent]) continue;
      visited[agent] = 1;
      if (agent_match[agent] < 0 || augment(agent_match[agent])) {
        agent_match[agent] = slot;
        slot_match[slot] = agent;
        return true;
      }
    }
    return false;
  };

  for (std::size_t s = 0; s < slots.size(); ++s) {
    std::fill(visited.begin(), visited.end(), 0);
    if (!augment(static_cast<int>(s))) return false;
  }

  if (assignment) {
    assignment->assign(subset.size(), {});
    std::size_t cursor = 0;
    for (std::size_t idx = 0; idx < subset.size(); ++idx) {
      int kj = instance.targets[subset[idx]].k;
      for (int s = 0; s < kj; ++s) {
        (*assignment)[idx].push_back(slot_match[cursor + s]);
      }
      std::sort((*assignment)[idx].begin(), (*assignment)[idx].end());
      cursor += static_cast<std::size_t>(kj);
    }
  }
  return true;
}

}  // namespace

SelectionResult brute_force_select(const SelectionInstance& instance,
                                   std::uint64_t budget) {
  instance.validate();
  int m = static_cast<int>(instance.targets.size());
  if (m >= 63 || (1ull << m) > budget) {
    throw BudgetError("subset enumeration over " + std::to_string(m) +
                          " targets exceeds the budget",
                      m >= 63 ? ~0ull : (1ull << m), budget);
  }

  double best_reward = -1.0;
  std::vector<int> best_subset;
  for (std::uint64_t mask = 0; mask < (1ull << m); ++mask) {
    std::vector<int> subset;
    double reward = 0.0;
    for (int j = 0; j < m; ++j) {
      if (mask & (1ull << j)) {
        subset.push_back(j);
        reward += instance.targets[j].reward;
      }
    }
    if (reward <= best_reward) continue;
    if (matchable(instance, subset, nullptr)) {
      best_reward = reward;
      best_subset = std::move(subset);
    }
  }

  SelectionResult result;
  result.selected = best_subset;
  result.total_reward = best_reward < 0 ? 0.0 : best_reward;
  matchable(instance, best_subset, &result.assignment);
  return result;
}

bool selection_is_valid(const SelectionInstance& instance,
                        const SelectionResult& result) {
  if (result.selected.size() != result.assignment.size()) return false;
  std::vector<char> used(instance.n, 0);
  double reward = 0.0;
  int prev = -1;
  for (std::size_t j = 0; j < result.selected.size(); ++j) {
    int target = result.selected[j];
    if (target <= prev || target >= static_cast<int>(instance.targets.size())) {
      return false;
    }
    prev = target;
    const TargetSpec& spec = instance.targets[target];
    const auto& agents = result.assignment[j];
    if (static_cast<int>(agents.size()) != spec.k) return false;
    for (int agent : agents) {
      if (agent < 0 || agent >= instance.n) return false;
      if (std::find(spec.observers.begin(), spec.observers.end(), agent) ==
          spec.observers.end()) {
        return false;
      }
      if (used[agent]) return false;
      used[agent] = 1;
    }
    reward += spec.reward;
  }
  return std::abs(reward - result.total_reward) <=
         1e-9 * std::max(1.0, std::abs(reward));
}

SelectionInstance random_selection_instance(int n, int m, int k_max,
                                            SplitMix64& rng) {
  if (n < 1 || m < 1 || k_max < 1) {
    throw ConfigError("selection instance needs n, m, k_max >= 1");
  }
  SelectionInstance instance;
  instance.n = n;
  instance.targets.resize(m);
  for (auto& target : instance.targets) {
    target.k = rng.range(1, std::min(k_max, n));
    int size = rng.range(target.k, n);
    target.observers = rng.sample_indices(n, size);
    std::sort(target.observers.begin(), target.observers.end());
    target.reward = rng.uniform();
  }
  return instance;
}

}  // namespace ibgp
