#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ibgp/adversary.hpp"
#include "ibgp/messages.hpp"
#include "ibgp/params.hpp"
#include "ibgp/rational.hpp"
#include "ibgp/stats.hpp"

namespace ibgp {

struct VerifyOptions {
  enum class Mode {
    // Exact dynamic program over adversary-choice equivalence classes.
    // Benign agents are exchangeable and only delivered-ones counts matter,
    // so states collapse to (round, active count) without losing exactness.
    Reduced,
    // Direct enumeration of every attacker bit assignment for every round.
    // Exponential; usable only on small instances, kept as an independent
    // oracle for the reduced mode.
    Raw,
  };
  Mode mode = Mode::Reduced;
  // Refusal threshold, counted in simulated protocol executions (raw) or
  // explored DP transitions (reduced).
  std::uint64_t budget = 1ull << 28;
};

// Strongest attack found for one observation class, materialized as a
// concrete schedule. failing_rounds lists the r_tot values at which the
// schedule produces the reported outcome kind; probability is the total
// round-distribution mass of those rounds.
struct VerificationWitness {
  int observer_count = 0;
  AttackSequence attack;
  OutcomeKind kind = OutcomeKind::MisCoordination;
  Rational probability;
  std::vector<int> failing_rounds;
};

struct ObsClassResult {
  int observer_count = 0;
  Rational mis_probability;    // best adversary P(MisCoordination)
  Rational false_probability;  // best adversary P(FalseCoordination)
};

struct VerificationReport {
  ProtocolParams params;
  Rational worst_mis;
  Rational worst_false;
  // Largest single-round mass of the round distribution: the guarantee
  // ceiling for mis-coordination when lambda = t.
  Rational bound;
  bool mis_within_bound = false;
  std::vector<ObsClassResult> per_class;
  std::optional<VerificationWitness> mis_witness;
  std::optional<VerificationWitness> false_witness;
  std::uint64_t executions = 0;
  VerifyOptions::Mode mode_used = VerifyOptions::Mode::Reduced;
};

// Computes the adversary's exact best-case probability of each failure kind
// over every observation class and every attack schedule, with witnesses.
// Witness schedules are replayed through the real protocol before being
// reported; a mismatch with the computed value is a hard internal error.
VerificationReport exhaustive_verify(const ProtocolParams& params,
                                     const VerifyOptions& options = {});

// Monte Carlo outcome frequencies for one observation pattern against one
// adversary. Deterministic for a given seed, independent of job count.
struct MonteCarloResult {
  std::uint64_t trials = 0;
  std::array<std::uint64_t, 4> counts{};  // indexed by OutcomeKind order

  std::uint64_t count(OutcomeKind k) const {
    return counts[static_cast<int>(k)];
  }
  double rate(OutcomeKind k) const {
    return trials ? static_cast<double>(count(k)) / trials : 0.0;
  }
  Interval interval(OutcomeKind k) const {
    return wilson_interval(count(k), trials);
  }
};
MonteCarloResult monte_carlo_estimate(const ProtocolParams& params,
                                      const std::vector<std::uint8_t>& observations,
                                      AttackerStrategy& attacker,
                                      std::uint64_t trials, std::uint64_t seed,
                                      int jobs = 1);

// The timing-attack family diagram: four named attack schedules against the
// boundary initialization (observer count equal to the quorum), each played
// at every possible r_tot. Requires observer_count == k, k >= 2, lambda >= 1
// and feasible parameters; each family then mis-coordinates at exactly one
// r_tot, its crossing round.
struct DiagramCell {
  int r_tot = 0;
  OutcomeKind outcome = OutcomeKind::AllAbstain;
};
struct DiagramFamily {
  std::string label;
  int crossing_round = 0;
  AttackSequence attack;
  std::vector<DiagramCell> cells;
};
struct DiagramResult {
  ProtocolParams params;
  int observer_count = 0;
  std::vector<DiagramFamily> families;
};
DiagramResult enumerate_diagram(const ProtocolParams& params, int observer_count);

}  // namespace ibgp
