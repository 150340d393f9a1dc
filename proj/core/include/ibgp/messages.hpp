#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ibgp/params.hpp"

namespace ibgp {

// One round's delivered broadcast matrix over all n + t participants.
// Senders 0..n-1 are benign agents, senders n..n+t-1 are attackers.
// bit(s, r) is what receiver r heard from sender s this round; attackers
// may deliver different bits to different receivers.
class RoundMessages {
 public:
  RoundMessages() : participants_(0) {}
  explicit RoundMessages(int participants)
      : participants_(participants),
        bits_(static_cast<std::size_t>(participants) * participants, 0) {}

  int participants() const { return participants_; }

  std::uint8_t at(int sender, int receiver) const {
    return bits_[static_cast<std::size_t>(sender) * participants_ + receiver];
  }
  void set(int sender, int receiver, std::uint8_t v) {
    bits_[static_cast<std::size_t>(sender) * participants_ + receiver] = v;
  }
  void set_row(int sender, std::uint8_t v) {
    for (int r = 0; r < participants_; ++r) set(sender, r, v);
  }

  // Number of ones delivered to `receiver`, own broadcast included.
  int ones_to(int receiver) const {
    int c = 0;
    for (int s = 0; s < participants_; ++s) c += at(s, receiver);
    return c;
  }

  const std::vector<std::uint8_t>& raw() const { return bits_; }

  friend bool operator==(const RoundMessages& a, const RoundMessages& b) {
    return a.participants_ == b.participants_ && a.bits_ == b.bits_;
  }

 private:
  int participants_;
  std::vector<std::uint8_t> bits_;
};

// Persistence flags of the benign agents after a given round's gating.
struct AgentState {
  std::vector<std::uint8_t> active;

  int count() const {
    int c = 0;
    for (std::uint8_t a : active) c += a;
    return c;
  }
};

enum class OutcomeKind {
  Coordinated,
  MisCoordination,
  FalseCoordination,
  AllAbstain,
};

const char* to_string(OutcomeKind kind);
OutcomeKind outcome_kind_from_string(const std::string& name);

struct Outcome {
  OutcomeKind kind = OutcomeKind::AllAbstain;
  // Actors that observed the event, actors that did not, and the observer
  // count the quorum is judged against.
  int acting_observers = 0;
  int acting_non_observers = 0;
  int observer_count = 0;

  int total_acting() const { return acting_observers + acting_non_observers; }
};

// Classifies a decision vector against the observation pattern.
//
//   - nobody acts                                  -> AllAbstain
//   - anyone acts while observers cannot fill a
//     k-quorum, or any non-observer acts           -> FalseCoordination
//   - a partial quorum of observers acts           -> MisCoordination
//   - at least k observers act, all actors legal   -> Coordinated
//
// Non-observer actors are impossible under the multi-round protocol (their
// flag starts 0 and can never rise) but reachable under the single-round
// rule, which has no self-observation gate.
Outcome classify_outcome(const ProtocolParams& params,
                         const std::vector<std::uint8_t>& observations,
                         const std::vector<std::uint8_t>& decisions);

// Full record of one protocol execution: delivered matrices for rounds
// 0..r_tot, benign flag states after each round's gating, and the decision.
struct Transcript {
  ProtocolParams params;
  std::vector<std::uint8_t> observations;
  int r_tot = 0;
  std::vector<RoundMessages> rounds;  // size r_tot + 1, index = round
  std::vector<AgentState> states;     // states[r] = flags entering round r
  std::vector<std::uint8_t> decisions;
  Outcome outcome;
};

}  // namespace ibgp
