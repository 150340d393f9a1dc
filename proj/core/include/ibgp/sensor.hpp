#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ibgp/messages.hpp"
#include "ibgp/rng.hpp"

namespace ibgp {

// A line of unit-interest sensors tracking a moving scalar signal. Sensors
// at the attacker indices are Byzantine; the rest are benign.
struct SensorWorld {
  int sensor_count = 20;
  double spacing = 1.0;
  double eta = 1.5;         // sensing range (strict)
  double delta = 0.5;       // discretization cell width
  double rho = 2.0;         // communication radius (inclusive)
  double noise_bound = 0.2; // measurement noise is uniform in [-b, b]
  std::vector<int> attacker_indices = {5, 15};

  double position(int sensor) const { return spacing * sensor; }
  bool is_attacker(int sensor) const;
  std::vector<int> neighborhood(int sensor) const;  // within rho, inclusive
  void validate() const;
};

struct TargetTrajectory {
  std::vector<double> positions;

  static TargetTrajectory linear(double start, double velocity, int steps);
};

// Round-to-nearest cell of width delta; exact midpoints resolve downward.
// Returned as a cell index so belief comparisons stay exact.
std::int64_t discretize_cell(double x, double delta);
double cell_value(std::int64_t cell, double delta);

// Noisy measurement if the signal is within sensing range, nothing
// otherwise.
std::optional<double> observe(const SensorWorld& world, int sensor,
                              double signal, SplitMix64& rng);

// Attacker behavior during belief exchange. Silent attackers send nothing;
// fake_offset attackers push the true discretized signal shifted by a fixed
// number of cells wherever the protocol lets them inject messages.
enum class SensorAttackMode { Silent, FakeOffset };

// Attacker interference hook for one consensus proposal. Returns delivered
// attacker ones per member slot and round (t_loc * members bits per round,
// rounds 0 and 1), flattened round-major.
struct SensorProposal {
  int proposer = 0;
  std::int64_t value_cell = 0;
  std::vector<int> members;  // participant ids, proposer's neighborhood
  int n_loc = 0;             // benign members
  int t_loc = 0;             // attacker members
};
using SensorAttackFn =
    std::function<std::vector<std::uint8_t>(const SensorProposal&, SplitMix64&)>;
SensorAttackFn sensor_silent_attack();

// One wave-propagation pass of the consensus layer for a single timestep.
// `fresh` lists benign sensors whose belief changed this step (observers
// first); each wave lets every fresh holder propose its value to its
// neighborhood through a one-shot protocol instance with quorum 2. A
// Coordinated outcome makes all benign members adopt the value; adopters
// propose in the next wave. Fake attacker proposals are injected when
// requested and are structurally blocked (no benign observer holds them).
struct ConsensusWave {
  int proposer = 0;
  std::int64_t value_cell = 0;
  OutcomeKind outcome = OutcomeKind::AllAbstain;
  std::vector<int> adopters;
};
struct PropagateResult {
  std::vector<ConsensusWave> waves;
};
// `locked` sensors (typically the step's observers) hold authoritative
// values and are never overwritten by wave adoption.
PropagateResult propagate_consensus(const SensorWorld& world,
                                    std::vector<std::optional<std::int64_t>>& beliefs,
                                    std::vector<int> fresh,
                                    std::vector<int> locked,
                                    const SensorAttackFn& attack,
                                    SplitMix64& rng,
                                    bool inject_fake = false,
                                    std::int64_t fake_cell = 0);

// Per-step simulation output. Belief statistics cover benign sensors with a
// defined belief; steps where none is defined report nan and count as
// vacuously consistent.
struct SensorStepRow {
  int step = 0;
  double true_signal = 0.0;
  double discretized_signal = 0.0;
  double belief_mean = 0.0;
  double belief_std = 0.0;
  int defined_beliefs = 0;
  int consistent = 1;  // all defined benign beliefs equal
};
struct SensorSimulation {
  std::vector<SensorStepRow> rows;
  std::vector<std::optional<std::int64_t>> final_beliefs;
  bool all_consistent = true;
};

// Consensus-based tracking: observers refresh their own belief from their
// measurement, then the wave propagation spreads it. Attacker interference
// follows `mode`.
SensorSimulation simulate_consensus(const SensorWorld& world,
                                    const TargetTrajectory& trajectory,
                                    SensorAttackMode mode, int offset_cells,
                                    std::uint64_t seed);

// Naive baseline: believers forward their value one hop per step and
// receivers adopt the first claim in sender index order, no quorum. An
// attacker placed on the propagation path can split the network's beliefs.
SensorSimulation simulate_vanilla(const SensorWorld& world,
                                  const TargetTrajectory& trajectory,
                                  SensorAttackMode mode, int offset_cells,
                                  std::uint64_t seed);

}  // namespace ibgp
