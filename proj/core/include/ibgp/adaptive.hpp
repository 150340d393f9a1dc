#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ibgp/adversary.hpp"
#include "ibgp/messages.hpp"
#include "ibgp/params.hpp"
#include "ibgp/rational.hpp"
#include "ibgp/stats.hpp"

namespace ibgp {

// Per-agent persistence margins: agent i keeps its flag only when a round
// delivers at least k + values[i] ones. The decision threshold stays k.
struct LambdaProfile {
  std::vector<int> values;

  static LambdaProfile constant(int n, int lambda) {
    LambdaProfile p;
    p.values.assign(n, lambda);
    return p;
  }
  int min_value() const;
  void validate(int n) const;
};

// Protocol run with per-agent persistence thresholds. A constant profile
// reproduces run_protocol bit for bit. No feasibility gate: profiles that
// starve some agents are legitimate operating points.
Transcript run_protocol_profiled(const ProtocolParams& params,
                                 const LambdaProfile& profile,
                                 const std::vector<std::uint8_t>& observations,
                                 AttackerStrategy& attacker, std::uint64_t seed);

// Exhaustive worst case for a profiled instance: enumerates every per-agent
// delivered-count schedule (values 0..t per agent per round 0..r_max) and
// every decision round. Exponential, intended for small n; doubles as an
// oracle for the uniform-lambda verifier.
struct ProfiledFailure {
  std::uint64_t schedule = 0;  // base-(t+1) encoded delivered counts
  int r_tot = 0;
};
struct ProfiledWorstCase {
  Rational worst_mis;
  Rational worst_false;
  // Every (schedule, r_tot) pair realizing each failure kind, for
  // containment comparisons between profiles.
  std::vector<ProfiledFailure> mis_failures;
  std::vector<ProfiledFailure> false_failures;
  std::uint64_t schedules = 0;
};
ProfiledWorstCase enumerate_profiled_worst_case(
    const ProtocolParams& params, const LambdaProfile& profile,
    const std::vector<std::uint8_t>& observations,
    std::uint64_t budget = 1ull << 26);

// ---- Survival sweep environment ----
//
// Repeated coordination under attrition: each step draws an observer subset
// of the surviving agents and runs one protocol execution against the
// adversary. Coordinated ends the episode as a success; MisCoordination and
// FalseCoordination kill the acting agents and play continues with the
// survivors; AllAbstain just continues. An episode fails when the horizon is
// exhausted without a success.
struct SweepConfig {
  std::vector<int> n_values;
  int t = 2;
  int k = 4;
  std::vector<int> lambda_values;
  // Attacker grid entries: named strategies; "random_p" uses `p`.
  struct AttackerSpec {
    std::string name;
    double p = 0.5;
  };
  std::vector<AttackerSpec> attackers;
  std::uint64_t episodes = 20000;
  int horizon = 10;
  int obs_draw_max = 6;  // per-step observer draw: uniform {0..max}, capped
  RoundDistribution rounds = RoundDistribution::uniform(5);
  double death_penalty = 1.0;  // reward lost per dying agent
  int jobs = 1;
};

struct SweepCell {
  int n = 0;
  int lambda = 0;
  std::string attacker;
  std::uint64_t episodes = 0;
  double success_rate = 0.0;
  Interval success_interval;
  double mean_deaths = 0.0;
  double mean_reward = 0.0;  // +1 per success, -death_penalty per death
};

struct SweepResult {
  std::vector<SweepCell> cells;

  const SweepCell& cell(int n, int lambda, const std::string& attacker) const;
};

// Runs the full (n, lambda, attacker) grid. Environment draws are keyed by
// (episode, step) only, so every cell sees identical observer streams and
// round draws: differences between cells are pure treatment effects.
SweepResult lambda_sweep(const SweepConfig& config, std::uint64_t seed);

struct EpisodeResult {
  bool success = false;
  int steps_played = 0;
  int deaths = 0;
  double reward = 0.0;
};
EpisodeResult run_survival_episode(const SweepConfig& config, int n, int lambda,
                                   AttackerStrategy& attacker,
                                   std::uint64_t seed, std::uint64_t episode);

}  // namespace ibgp
