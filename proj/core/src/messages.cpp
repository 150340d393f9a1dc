#include "ibgp/messages.hpp"

#include "ibgp/errors.hpp"

namespace ibgp {

const char* to_string(OutcomeKind kind) {
  switch (kind) {
    case OutcomeKind::Coordinated:
      return "Coordinated";
    case OutcomeKind::MisCoordination:
      return "MisCoordination";
    case OutcomeKind::FalseCoordination:
      return "FalseCoordination";
    case OutcomeKind::AllAbstain:
      return "AllAbstain";
  }
  return "?";
}

OutcomeKind outcome_kind_from_string(const std::string& name) {
  if (name == "Coordinated") return OutcomeKind::Coordinated;
  if (name == "MisCoordination") return OutcomeKind::MisCoordination;
  if (name == "FalseCoordination") return OutcomeKind::FalseCoordination;
  if (name == "AllAbstain") return OutcomeKind::AllAbstain;
  throw ConfigError("unknown outcome kind: " + name);
}

Outcome classify_outcome(const ProtocolParams& params,
                         const std::vector<std::uint8_t>& observations,
                         const std::vector<std::uint8_t>& decisions) {
  if (observations.size() != static_cast<std::size_t>(params.n) ||
      decisions.size() != static_cast<std::size_t>(params.n)) {
    throw ConfigError("observation/decision vectors must have length n");
  }
  Outcome out;
  for (int i = 0; i < params.n; ++i) {
    out.observer_count += observations[i] ? 1 : 0;
    if (decisions[i]) {
      if (observations[i]) {
        ++out.acting_observers;
      } else {
        ++out.acting_non_observers;
      }
    }
  }

  if (out.total_acting() == 0) {
    out.kind = OutcomeKind::AllAbstain;
  } else if (out.observer_count < params.k) {
    // Action happened although the observers alone can never fill a
    // k-quorum: the adversary manufactured the appearance of an event.
    out.kind = OutcomeKind::FalseCoordination;
  } else if (out.acting_non_observers > 0) {
    // A real event exists, but agents that never observed it were dragged
    // into acting; the acting set misrepresents the evidence.
    out.kind = OutcomeKind::FalseCoordination;
  } else if (out.acting_observers < params.k) {
    out.kind = OutcomeKind::MisCoordination;
  } else {
    out.kind = OutcomeKind::Coordinated;
  }
  return out;
}

}  // namespace ibgp
