#pragma once

#include <cstdint>
#include <vector>

#include "ibgp/adversary.hpp"
#include "ibgp/messages.hpp"
#include "ibgp/params.hpp"

namespace ibgp {

// Benign flags before any communication: agent i is active iff it observed
// the event.
AgentState initial_state(const ProtocolParams& params,
                         const std::vector<std::uint8_t>& observations);

// Round 0 delivered matrix: benign agent i broadcasts its observation bit to
// everyone; attacker rows are taken verbatim (t * (n + t) bits,
// attacker-major).
RoundMessages initial_broadcast(const ProtocolParams& params,
                                const std::vector<std::uint8_t>& observations,
                                const std::vector<std::uint8_t>& attacker_rows);

// One protocol round. Each benign agent keeps its flag iff it was active and
// the previous round delivered at least k + lambda ones to it, then
// broadcasts the updated flag. Returns the new state and this round's
// delivered matrix (benign rows constant per sender, attacker rows verbatim).
std::pair<AgentState, RoundMessages> step_round(
    const ProtocolParams& params, const AgentState& state,
    const RoundMessages& previous, const std::vector<std::uint8_t>& attacker_rows);

// Final decision: an agent acts iff it is still active and the last round
// delivered at least k ones to it.
std::vector<std::uint8_t> decide(const ProtocolParams& params,
                                 const AgentState& state,
                                 const RoundMessages& last_round);

// Runs the protocol for a fixed number of rounds r_tot >= 1 against the
// given adversary, which is consulted once per round with the full history.
Transcript run_protocol_fixed_rounds(const ProtocolParams& params,
                                     const std::vector<std::uint8_t>& observations,
                                     AttackerStrategy& attacker, int r_tot,
                                     SplitMix64& rng);

// Full execution: draws r_tot from the round distribution, then runs the
// fixed-round protocol. All randomness (round draw, randomized adversaries)
// comes from the single seed. Requires feasible parameters (n >= k + lambda).
Transcript run_protocol(const ProtocolParams& params,
                        const std::vector<std::uint8_t>& observations,
                        AttackerStrategy& attacker, std::uint64_t seed);

// One-shot baseline without self-observation gating: every benign agent acts
// iff round 0 delivered at least `threshold` ones to it.
struct SingleRoundResult {
  RoundMessages round0;
  std::vector<std::uint8_t> decisions;
  Outcome outcome;
};
SingleRoundResult single_round_rule(const ProtocolParams& params,
                                    const std::vector<std::uint8_t>& observations,
                                    const std::vector<std::uint8_t>& attacker_rows,
                                    int threshold);

}  // namespace ibgp
