#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "ibgp/messages.hpp"
#include "ibgp/params.hpp"
#include "ibgp/rng.hpp"
#include "ibgp/stats.hpp"

namespace ibgp {

// Everything an adversary is allowed to see when choosing its broadcasts for
// a round: the parameters, the current round index, the delivered matrices
// of all previous rounds, and the true observation pattern (Byzantine
// participants are assumed omniscient).
struct AttackContext {
  const ProtocolParams& params;
  int round = 0;
  const std::vector<RoundMessages>& history;
  const std::vector<std::uint8_t>& observations;
};

// A fixed schedule of attacker broadcasts: rows[r] holds t * (n + t) bits,
// attacker-major (attacker a's bit to receiver i sits at a * (n + t) + i).
// Rounds beyond the schedule fall back to silence.
struct AttackSequence {
  int participants = 0;
  int attackers = 0;
  std::vector<std::vector<std::uint8_t>> rows;

  std::vector<std::uint8_t> rows_for(int round) const {
    if (round < static_cast<int>(rows.size())) return rows[round];
    return std::vector<std::uint8_t>(
        static_cast<std::size_t>(attackers) * participants, 0);
  }
};

// Adversary behavior: produces all t attacker rows for the given round.
// Deterministic strategies ignore the rng; randomized ones must draw from it
// exclusively so runs stay reproducible.
class AttackerStrategy {
 public:
  virtual ~AttackerStrategy() = default;
  virtual std::string name() const = 0;
  virtual std::vector<std::uint8_t> rows(const AttackContext& ctx,
                                         SplitMix64& rng) = 0;
};

// Every attacker delivers 1 to every receiver, every round.
std::unique_ptr<AttackerStrategy> make_all_one();
// Every attacker stays silent.
std::unique_ptr<AttackerStrategy> make_all_zero();
// Receiver split: the lower-indexed half of the participants hears ones,
// the upper half hears zeros, every round.
std::unique_ptr<AttackerStrategy> make_all_one_all_zero();
// Temporal alternation: all ones on even rounds, silence on odd rounds.
std::unique_ptr<AttackerStrategy> make_all_one_all_zero_alternating();
// Each delivered bit is an independent Bernoulli(p) draw.
std::unique_ptr<AttackerStrategy> make_random_p(double p);
// Replays a fixed schedule.
std::unique_ptr<AttackerStrategy> make_fixed_sequence(AttackSequence seq);

// Factory over the names accepted in scenario files. random_p takes its
// probability as `param`; the others ignore it.
std::unique_ptr<AttackerStrategy> make_attacker(const std::string& name,
                                                double param = 0.5);
bool is_known_attacker(const std::string& name);

struct CandidateEstimate {
  double failure_rate = 0.0;
  Interval interval;
};

struct BestResponseResult {
  int best_index = -1;
  double best_rate = 0.0;
  Interval best_interval;
  std::vector<CandidateEstimate> estimates;
};

// Monte Carlo search for the strongest fixed attack schedule against one
// observation pattern: estimates, for every candidate, the probability that
// the protocol ends in MisCoordination or FalseCoordination, and returns the
// argmax (ties break toward the lower index).
BestResponseResult best_response_search(
    const ProtocolParams& params, const std::vector<std::uint8_t>& observations,
    const std::vector<AttackSequence>& candidates, std::uint64_t trials,
    std::uint64_t seed, int jobs = 1);

// Generates the band-split candidate family for an instance: schedules that
// sustain all observers for a prefix of rounds, then keep only a chosen
// number active, plus the constant all-ones and all-zeros schedules. Covers
// the attacks that matter for a single observation class.
std::vector<AttackSequence> band_split_candidates(
    const ProtocolParams& params, int observer_count, int max_round);

// Smallest difference, over a shared family of environments, in how many
// ones the two strategies deliver to some benign receiver in some round.
// Environments are the given observation patterns played forward with the
// strategy under measurement (deterministic strategies only).
int attack_distance(AttackerStrategy& a, AttackerStrategy& b,
                    const ProtocolParams& params,
                    const std::vector<std::vector<std::uint8_t>>& observation_patterns,
                    int max_round);

}  // namespace ibgp
