#include "ibgp/protocol.hpp"

#include "ibgp/errors.hpp"

namespace ibgp {

namespace {

void check_observations(const ProtocolParams& params,
                        const std::vector<std::uint8_t>& observations) {
  if (observations.size() != static_cast<std::size_t>(params.n)) {
    throw ConfigError("observation vector must have length n");
  }
}

void check_attacker_rows(const ProtocolParams& params,
                         const std::vector<std::uint8_t>& rows) {
  if (rows.size() !=
      static_cast<std::size_t>(params.t) * static_cast<std::size_t>(params.total())) {
    throw ConfigError("attacker rows must have t * (n + t) bits");
  }
}

void fill_attacker_rows(const ProtocolParams& params, RoundMessages& m,
                        const std::vector<std::uint8_t>& rows) {
  int total = params.total();
  for (int a = 0; a < params.t; ++a) {
    for (int r = 0; r < total; ++r) {
      m.set(params.n + a, r, rows[static_cast<std::size_t>(a) * total + r] ? 1 : 0);
    }
  }
}

}  // namespace

AgentState initial_state(const ProtocolParams& params,
                         const std::vector<std::uint8_t>& observations) {
  check_observations(params, observations);
  AgentState s;
  s.active.assign(observations.begin(), observations.end());
  for (auto& a : s.active) a = a ? 1 : 0;
  return s;
}

RoundMessages initial_broadcast(const ProtocolParams& params,
                                const std::vector<std::uint8_t>& observations,
                                const std::vector<std::uint8_t>& attacker_rows) {
  check_observations(params, observations);
  check_attacker_rows(params, attacker_rows);
  RoundMessages m(params.total());
  for (int i = 0; i < params.n; ++i) {
    if (observations[i]) m.set_row(i, 1);
  }
  fill_attacker_rows(params, m, attacker_rows);
  return m;
}

std::pair<AgentState, RoundMessages> step_round(
    const ProtocolParams& params, const AgentState& state,
    const RoundMessages& previous, const std::vector<std::uint8_t>& attacker_rows) {
  if (state.active.size() != static_cast<std::size_t>(params.n)) {
    throw ConfigError("agent state must have length n");
  }
  if (previous.participants() != params.total()) {
    throw ConfigError("round matrix participant count mismatch");
  }
  check_attacker_rows(params, attacker_rows);

  AgentState next;
  next.active.assign(params.n, 0);
  for (int i = 0; i < params.n; ++i) {
    if (state.active[i] && previous.ones_to(i) >= params.k + params.lambda) {
      next.active[i] = 1;
    }
  }

  RoundMessages m(params.total());
  for (int i = 0; i < params.n; ++i) {
    if (next.active[i]) m.set_row(i, 1);
  }
  fill_attacker_rows(params, m, attacker_rows);
  return {std::move(next), std::move(m)};
}

std::vector<std::uint8_t> decide(const ProtocolParams& params,
                                 const AgentState& state,
                                 const RoundMessages& last_round) {
  std::vector<std::uint8_t> decisions(params.n, 0);
  for (int i = 0; i < params.n; ++i) {
    if (state.active[i] && last_round.ones_to(i) >= params.k) {
      decisions[i] = 1;
    }
  }
  return decisions;
}

Transcript run_protocol_fixed_rounds(const ProtocolParams& params,
                                     const std::vector<std::uint8_t>& observations,
                                     AttackerStrategy& attacker, int r_tot,
                                     SplitMix64& rng) {
  // Shape checks only: callers may legitimately run populations too small
  // for the configured quorum (the quorum is then simply unreachable).
  if (params.n < 1 || params.t < 0 || params.k < 1 || params.lambda < 0) {
    throw ConfigError("invalid protocol parameters");
  }
  check_observations(params, observations);
  if (r_tot < 1) throw ConfigError("r_tot must be >= 1");

  Transcript tr;
  tr.params = params;
  tr.observations = observations;
  tr.r_tot = r_tot;

  tr.states.push_back(initial_state(params, observations));
  {
    AttackContext ctx{params, 0, tr.rounds, observations};
    tr.rounds.push_back(
        initial_broadcast(params, observations, attacker.rows(ctx, rng)));
  }

  for (int r = 1; r <= r_tot; ++r) {
    AttackContext ctx{params, r, tr.rounds, observations};
    auto rows = attacker.rows(ctx, rng);
    auto [state, matrix] = step_round(params, tr.states.back(), tr.rounds.back(), rows);
    tr.states.push_back(std::move(state));
    tr.rounds.push_back(std::move(matrix));
  }

  tr.decisions = decide(params, tr.states.back(), tr.rounds.back());
  tr.outcome = classify_outcome(params, observations, tr.decisions);
  return tr;
}

Transcript run_protocol(const ProtocolParams& params,
                        const std::vector<std::uint8_t>& observations,
                        AttackerStrategy& attacker, std::uint64_t seed) {
  params.validate();
  if (!params.feasible()) {
    throw ConfigError("infeasible parameters: need n >= k + lambda");
  }
  SplitMix64 rng(seed);
  int r_tot = params.rounds.sample(rng);
  return run_protocol_fixed_rounds(params, observations, attacker, r_tot, rng);
}

SingleRoundResult single_round_rule(const ProtocolParams& params,
                                    const std::vector<std::uint8_t>& observations,
                                    const std::vector<std::uint8_t>& attacker_rows,
                                    int threshold) {
  if (threshold < 1) throw ConfigError("single round threshold must be >= 1");
  SingleRoundResult res;
  res.round0 = initial_broadcast(params, observations, attacker_rows);
  res.decisions.assign(params.n, 0);
  for (int i = 0; i < params.n; ++i) {
    if (res.round0.ones_to(i) >= threshold) res.decisions[i] = 1;
  }
  res.outcome = classify_outcome(params, observations, res.decisions);
  return res;
}

}  // namespace ibgp
