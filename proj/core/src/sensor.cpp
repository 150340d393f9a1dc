#include "ibgp/sensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "ibgp/adversary.hpp"
#include "ibgp/errors.hpp"
#include "ibgp/protocol.hpp"

namespace ibgp {

bool SensorWorld::is_attacker(int sensor) const {
  return std::find(attacker_indices.begin(), attacker_indices.end(), sensor) !=
         attacker_indices.end();
}

std::vector<int> SensorWorld::neighborhood(int sensor) const {
  std::vector<int> out;
  for (int i = 0; i < sensor_count; ++i) {
    if (std::abs(position(i) - position(sensor)) <= rho) out.push_back(i);
  }
  return out;
}

void SensorWorld::validate() const {
  if (sensor_count < 2) throw ConfigError("world needs at least two sensors");
  if (spacing <= 0 || eta <= 0 || delta <= 0 || rho <= 0) {
    throw ConfigError("world needs positive spacing, eta, delta and rho");
  }
  if (noise_bound < 0 || noise_bound >= delta / 2) {
    throw ConfigError("noise bound must be in [0, delta / 2)");
  }
  std::set<int> seen;
  for (int a : attacker_indices) {
    if (a < 0 || a >= sensor_count) {
      throw ConfigError("attacker index outside the sensor line");
    }
    if (!seen.insert(a).second) throw ConfigError("duplicate attacker index");
  }
  if (static_cast<int>(attacker_indices.size()) >= sensor_count) {
    throw ConfigError("need at least one benign sensor");
  }
}

TargetTrajectory TargetTrajectory::linear(double start, double velocity,
                                          int steps) {
  if (steps < 1) throw ConfigError("trajectory needs at least one step");
  TargetTrajectory t;
  t.positions.resize(steps);
  for (int i = 0; i < steps; ++i) t.positions[i] = start + velocity * i;
  return t;
}

std::int64_t discretize_cell(double x, double delta) {
  if (delta <= 0) throw ConfigError("delta must be positive");
  return static_cast<std::int64_t>(std::ceil(x / delta - 0.5));
}

double cell_value(std::int64_t cell, double delta) {
  return static_cast<double>(cell) * delta;
}

std::optional<double> observe(const SensorWorld& world, int sensor,
                              double signal, SplitMix64& rng) {
  if (std::abs(signal - world.position(sensor)) >= world.eta) return std::nullopt;
  double noise = world.noise_bound * (2.0 * rng.uniform() - 1.0);
  return signal + noise;
}

SensorAttackFn sensor_silent_attack() {
  return [](const SensorProposal& proposal, SplitMix64&) {
    return std::vector<std::uint8_t>(
        static_cast<std::size_t>(proposal.t_loc) *
            (proposal.n_loc + proposal.t_loc) * 2,
        0);
  };
}

namespace {

SensorAttackFn sensor_all_ones_attack() {
  return [](const SensorProposal& proposal, SplitMix64&) {
    return std::vector<std::uint8_t>(
        static_cast<std::size_t>(proposal.t_loc) *
            (proposal.n_loc + proposal.t_loc) * 2,
        1);
  };
}

// Runs one proposal instance: the proposer's neighborhood votes on whether
// the proposer's value is held, quorum 2, one iteration round. Returns the
// outcome; benign member slots are ordered before attacker slots, both by
// sensor id.
OutcomeKind run_proposal(const SensorWorld& world,
                         const std::vector<std::optional<std::int64_t>>& beliefs,
                         const SensorProposal& proposal,
                         const SensorAttackFn& attack, SplitMix64& rng,
                         std::vector<int>* benign_members_out) {
  std::vector<int> benign, attackers;
  for (int id : proposal.members) {
    if (world.is_attacker(id)) {
      attackers.push_back(id);
    } else {
      benign.push_back(id);
    }
  }
  if (benign_members_out) *benign_members_out = benign;

  int n_loc = static_cast<int>(benign.size());
  int t_loc = static_cast<int>(attackers.size());
  int total = n_loc + t_loc;

  ProtocolParams params;
  params.n = n_loc;
  params.t = t_loc;
  params.k = 2;
  params.lambda = 0;
  params.rounds = RoundDistribution::point_mass(1);

  std::vector<std::uint8_t> obs(n_loc, 0);
  for (int i = 0; i < n_loc; ++i) {
    if (beliefs[benign[i]].has_value() &&
        *beliefs[benign[i]] == proposal.value_cell) {
      obs[i] = 1;
    }
  }

  auto bits = attack(proposal, rng);
  if (bits.size() != static_cast<std::size_t>(t_loc) * total * 2) {
    throw ConfigError("sensor attack bits must cover t_loc * members * 2");
  }

  AttackSequence seq;
  seq.participants = total;
  seq.attackers = t_loc;
  seq.rows.resize(2);
  for (int r = 0; r < 2; ++r) {
    seq.rows[r].assign(static_cast<std::size_t>(t_loc) * total, 0);
    for (std::size_t b = 0; b < seq.rows[r].size(); ++b) {
      seq.rows[r][b] = bits[static_cast<std::size_t>(r) * t_loc * total + b];
    }
  }

  auto attacker = make_fixed_sequence(seq);
  SplitMix64 proto_rng(0);
  auto tr = run_protocol_fixed_rounds(params, obs, *attacker, 1, proto_rng);
  return tr.outcome.kind;
}

}  // namespace

PropagateResult propagate_consensus(const SensorWorld& world,
                                    std::vector<std::optional<std::int64_t>>& beliefs,
                                    std::vector<int> fresh,
                                    std::vector<int> locked,
                                    const SensorAttackFn& attack,
                                    SplitMix64& rng, bool inject_fake,
                                    std::int64_t fake_cell) {
  world.validate();
  if (beliefs.size() != static_cast<std::size_t>(world.sensor_count)) {
    throw ConfigError("belief vector must cover every sensor");
  }

  PropagateResult result;
  std::set<int> adopted(locked.begin(), locked.end());
  std::sort(fresh.begin(), fresh.end());
  fresh.erase(std::unique(fresh.begin(), fresh.end()), fresh.end());

  std::vector<int> frontier = std::move(fresh);
  for (int wave = 0; wave <= world.sensor_count && !frontier.empty(); ++wave) {
    std::vector<int> next_frontier;

    // The adversary races the honest waves with its own proposals. No benign
    // sensor holds the fake value as an observation, so these instances
    // cannot reach the quorum; they are run, not assumed away.
    if (inject_fake) {
      for (int a : world.attacker_indices) {
        SensorProposal proposal;
        proposal.proposer = a;
        proposal.value_cell = fake_cell;
        proposal.members = world.neighborhood(a);
        int t_loc = 0;
        for (int id : proposal.members) t_loc += world.is_attacker(id) ? 1 : 0;
        proposal.t_loc = t_loc;
        proposal.n_loc = static_cast<int>(proposal.members.size()) - t_loc;
        if (proposal.n_loc == 0) continue;

        std::vector<int> benign_members;
        OutcomeKind outcome = run_proposal(world, beliefs, proposal,
                                           sensor_all_ones_attack(), rng,
                                           &benign_members);
        ConsensusWave w;
        w.proposer = a;
        w.value_cell = fake_cell;
        w.outcome = outcome;
        if (outcome == OutcomeKind::Coordinated) {
          // Unreachable by construction; adoption recorded for honesty.
          for (int id : benign_members) {
            if (!adopted.count(id) &&
                (!beliefs[id].has_value() || *beliefs[id] != fake_cell)) {
              beliefs[id] = fake_cell;
              adopted.insert(id);
              w.adopters.push_back(id);
              next_frontier.push_back(id);
            }
          }
        }
        result.waves.push_back(std::move(w));
      }
    }

    for (int p : frontier) {
      if (world.is_attacker(p) || !beliefs[p].has_value()) continue;
      SensorProposal proposal;
      proposal.proposer = p;
      proposal.value_cell = *beliefs[p];
      proposal.members = world.neighborhood(p);
      int t_loc = 0;
      for (int id : proposal.members) t_loc += world.is_attacker(id) ? 1 : 0;
      proposal.t_loc = t_loc;
      proposal.n_loc = static_cast<int>(proposal.members.size()) - t_loc;

      std::vector<int> benign_members;
      OutcomeKind outcome =
          run_proposal(world, beliefs, proposal, attack, rng, &benign_members);

      ConsensusWave w;
      w.proposer = p;
      w.value_cell = proposal.value_cell;
      w.outcome = outcome;
      if (outcome == OutcomeKind::Coordinated) {
        for (int id : benign_members) {
          if (adopted.count(id)) continue;
          if (beliefs[id].has_value() && *beliefs[id] == proposal.value_cell) {
            continue;  // already holds it; nothing changed, nothing to forward
          }
          beliefs[id] = proposal.value_cell;
          adopted.insert(id);
          w.adopters.push_back(id);
          next_frontier.push_back(id);
        }
      }
      result.waves.push_back(std::move(w));
    }

    std::sort(next_frontier.begin(), next_frontier.end());
    next_frontier.erase(std::unique(next_frontier.begin(), next_frontier.end()),
                        next_frontier.end());
    frontier = std::move(next_frontier);
  }
  return result;
}

namespace {

SensorStepRow make_row(const SensorWorld& world,
                       const std::vector<std::optional<std::int64_t>>& beliefs,
                       int step, double signal) {
  SensorStepRow row;
  row.step = step;
  row.true_signal = signal;
  row.discretized_signal = cell_value(discretize_cell(signal, world.delta),
                                      world.delta);

  double sum = 0.0;
  int count = 0;
  bool consistent = true;
  std::optional<std::int64_t> first;
  for (int i = 0; i < world.sensor_count; ++i) {
    if (world.is_attacker(i) || !beliefs[i].has_value()) continue;
    double v = cell_value(*beliefs[i], world.delta);
    sum += v;
    ++count;
    if (!first.has_value()) {
      first = *beliefs[i];
    } else if (*first != *beliefs[i]) {
      consistent = false;
    }
  }
  row.defined_beliefs = count;
  if (count == 0) {
    row.belief_mean = std::numeric_limits<double>::quiet_NaN();
    row.belief_std = std::numeric_limits<double>::quiet_NaN();
    row.consistent = 1;
    return row;
  }
  row.belief_mean = sum / count;
  double var = 0.0;
  for (int i = 0; i < world.sensor_count; ++i) {
    if (world.is_attacker(i) || !beliefs[i].has_value()) continue;
    double d = cell_value(*beliefs[i], world.delta) - row.belief_mean;
    var += d * d;
  }
  row.belief_std = std::sqrt(var / count);
  row.consistent = consistent ? 1 : 0;
  return row;
}

}  // namespace

SensorSimulation simulate_consensus(const SensorWorld& world,
                                    const TargetTrajectory& trajectory,
                                    SensorAttackMode mode, int offset_cells,
                                    std::uint64_t seed) {
  world.validate();
  if (trajectory.positions.empty()) throw ConfigError("empty trajectory");

  SensorSimulation sim;
  sim.final_beliefs.assign(world.sensor_count, std::nullopt);
  auto& beliefs = sim.final_beliefs;

  SensorAttackFn attack = mode == SensorAttackMode::FakeOffset
                              ? sensor_all_ones_attack()
                              : sensor_silent_attack();

  for (int step = 0; step < static_cast<int>(trajectory.positions.size());
       ++step) {
    double s = trajectory.positions[step];
    SplitMix64 rng(derive_seed(seed, {1, static_cast<std::uint64_t>(step)}));

    std::vector<int> fresh, observers;
    for (int i = 0; i < world.sensor_count; ++i) {
      if (world.is_attacker(i)) continue;
      auto meas = observe(world, i, s, rng);
      if (!meas.has_value()) continue;
      observers.push_back(i);
      std::int64_t cell = discretize_cell(*meas, world.delta);
      if (!beliefs[i].has_value() || *beliefs[i] != cell) {
        beliefs[i] = cell;
        fresh.push_back(i);
      }
    }

    std::int64_t fake_cell =
        discretize_cell(s, world.delta) + static_cast<std::int64_t>(offset_cells);
    propagate_consensus(world, beliefs, fresh, observers, attack, rng,
                        mode == SensorAttackMode::FakeOffset, fake_cell);

    auto row = make_row(world, beliefs, step, s);
    if (!row.consistent) sim.all_consistent = false;
    sim.rows.push_back(row);
  }
  return sim;
}

SensorSimulation simulate_vanilla(const SensorWorld& world,
                                  const TargetTrajectory& trajectory,
                                  SensorAttackMode mode, int offset_cells,
                                  std::uint64_t seed) {
  world.validate();
  if (trajectory.positions.empty()) throw ConfigError("empty trajectory");

  SensorSimulation sim;
  sim.final_beliefs.assign(world.sensor_count, std::nullopt);
  auto& beliefs = sim.final_beliefs;

  for (int step = 0; step < static_cast<int>(trajectory.positions.size());
       ++step) {
    double s = trajectory.positions[step];
    SplitMix64 rng(derive_seed(seed, {2, static_cast<std::uint64_t>(step)}));

    for (int i = 0; i < world.sensor_count; ++i) {
      if (world.is_attacker(i)) continue;
      auto meas = observe(world, i, s, rng);
      if (meas.has_value()) beliefs[i] = discretize_cell(*meas, world.delta);
    }

    // One forwarding hop per step over a snapshot of current beliefs.
    // Receivers adopt the first claim in sender index order; claims stick.
    std::int64_t fake_cell =
        discretize_cell(s, world.delta) + static_cast<std::int64_t>(offset_cells);
    std::vector<std::optional<std::int64_t>> claims(world.sensor_count,
                                                    std::nullopt);
    for (int i = 0; i < world.sensor_count; ++i) {
      if (world.is_attacker(i)) {
        if (mode != SensorAttackMode::FakeOffset) continue;
        bool heard = false;
        for (int j = 0; j < world.sensor_count; ++j) {
          if (j == i || world.is_attacker(j)) continue;
          if (std::abs(world.position(j) - world.position(i)) <= world.rho &&
              beliefs[j].has_value()) {
            heard = true;
            break;
          }
        }
        if (heard) claims[i] = fake_cell;
      } else if (beliefs[i].has_value()) {
        claims[i] = *beliefs[i];
      }
    }

    std::vector<std::optional<std::int64_t>> adopt(world.sensor_count,
                                                   std::nullopt);
    for (int i = 0; i < world.sensor_count; ++i) {
      if (world.is_attacker(i) || beliefs[i].has_value()) continue;
      for (int j = 0; j < world.sensor_count; ++j) {
        if (j == i || !claims[j].has_value()) continue;
        if (std::abs(world.position(j) - world.position(i)) <= world.rho) {
          adopt[i] = *claims[j];
          break;
        }
      }
    }
    for (int i = 0; i < world.sensor_count; ++i) {
      if (adopt[i].has_value()) beliefs[i] = *adopt[i];
    }

    auto row = make_row(world, beliefs, step, s);
    if (!row.consistent) sim.all_consistent = false;
    sim.rows.push_back(row);
  }
  return sim;
}

}  // namespace ibgp
