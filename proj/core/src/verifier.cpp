#include "ibgp/verifier.hpp"

#include <algorithm>
#include <stdexcept>
#include <thread>

#include "ibgp/errors.hpp"
#include "ibgp/protocol.hpp"

namespace ibgp {

namespace {

// Outcome of a decision where `a` of the observers act (multi-round decisions
// can only come from active observers).
OutcomeKind count_outcome(const ProtocolParams& params, int c, int a) {
  if (a == 0) return OutcomeKind::AllAbstain;
  if (c < params.k) return OutcomeKind::FalseCoordination;
  if (a < params.k) return OutcomeKind::MisCoordination;
  return OutcomeKind::Coordinated;
}

bool objective_hit(OutcomeKind kind, OutcomeKind objective) {
  return kind == objective;
}

std::vector<std::uint8_t> prefix_observations(int n, int c) {
  std::vector<std::uint8_t> obs(n, 0);
  for (int i = 0; i < c; ++i) obs[i] = 1;
  return obs;
}

// Feasible adversary choices at a state with m active agents. The adversary
// only controls, per active agent, how many attacker ones it receives
// (0..t); that fixes two counts: a = agents that would act if this round is
// the decision round, s = agents whose flag survives into the next round.
struct ChoiceSet {
  int a_lo, a_hi;  // inclusive
  int s_lo, s_hi;
  bool tied;  // act and survive thresholds coincide; forces a == s
};

ChoiceSet choices_at(const ProtocolParams& params, int m) {
  int ta = params.k - m;
  int ts = params.k + params.lambda - m;
  ChoiceSet cs{};
  if (ta <= 0) {
    cs.a_lo = cs.a_hi = m;
  } else if (ta > params.t) {
    cs.a_lo = cs.a_hi = 0;
  } else {
    cs.a_lo = 0;
    cs.a_hi = m;
  }
  if (ts <= 0) {
    cs.s_lo = cs.s_hi = m;
  } else if (ts > params.t) {
    cs.s_lo = cs.s_hi = 0;
  } else {
    cs.s_lo = 0;
    cs.s_hi = m;
  }
  cs.tied = (ta == ts);
  return cs;
}

struct DpChoice {
  int a = 0;
  int s = 0;
};

struct ClassPlan {
  Rational value;
  int s0 = 0;                    // survivors chosen by the round-0 broadcast
  std::vector<DpChoice> steps;   // choices for rounds 1..r_max along the path
  std::vector<int> path;         // active counts m_0..m_{r_max}
};

// Exact best achievable probability of `objective` for one observation class
// via dynamic programming over (round, active count).
ClassPlan solve_class(const ProtocolParams& params, int c, OutcomeKind objective,
                      std::uint64_t& executions, std::uint64_t budget) {
  int r_max = params.rounds.max_rounds();
  std::vector<std::vector<Rational>> value(
      r_max + 2, std::vector<Rational>(c + 1));
  std::vector<std::vector<DpChoice>> best(
      r_max + 2, std::vector<DpChoice>(c + 1));

  for (int r = r_max; r >= 1; --r) {
    Rational pr = params.rounds.probability(r);
    for (int m = 0; m <= c; ++m) {
      ChoiceSet cs = choices_at(params, m);
      bool have = false;
      Rational best_v;
      DpChoice best_c;
      for (int s = cs.s_lo; s <= cs.s_hi; ++s) {
        for (int a = cs.a_lo; a <= cs.a_hi; ++a) {
          if (a < s) continue;
          if (cs.tied && a != s) continue;
          if (++executions > budget) {
            throw BudgetError("verification budget exceeded", executions, budget);
          }
          Rational v = value[r + 1][s];
          if (objective_hit(count_outcome(params, c, a), objective)) v += pr;
          if (!have || v > best_v) {
            have = true;
            best_v = v;
            best_c = {a, s};
          }
        }
      }
      value[r][m] = best_v;
      best[r][m] = best_c;
    }
  }

  // Round 0 only gates survival into round 1.
  ChoiceSet cs0 = choices_at(params, c);
  ClassPlan plan;
  bool have = false;
  for (int s = cs0.s_lo; s <= cs0.s_hi; ++s) {
    if (++executions > budget) {
      throw BudgetError("verification budget exceeded", executions, budget);
    }
    if (!have || value[1][s] > plan.value) {
      have = true;
      plan.value = value[1][s];
      plan.s0 = s;
    }
  }

  plan.path.push_back(c);
  int m = plan.s0;
  for (int r = 1; r <= r_max; ++r) {
    plan.path.push_back(m);
    plan.steps.push_back(best[r][m]);
    m = best[r][m].s;
  }
  return plan;
}

int clamp_to_attackers(const ProtocolParams& params, int x) {
  if (x < 0) return 0;
  if (x > params.t) {
    throw std::logic_error("attacker demand exceeds t during materialization");
  }
  return x;
}

// Turns a class plan into concrete attacker rows. Observers are the first c
// agents; survivor/actor subsets are always the lowest-indexed prefix, which
// keeps the realized active sets prefixes as well.
AttackSequence materialize_plan(const ProtocolParams& params, int c,
                                const ClassPlan& plan) {
  int r_max = params.rounds.max_rounds();
  int total = params.total();
  AttackSequence seq;
  seq.participants = total;
  seq.attackers = params.t;
  seq.rows.assign(r_max + 1,
                  std::vector<std::uint8_t>(
                      static_cast<std::size_t>(params.t) * total, 0));

  auto deliver = [&](int round, int receiver, int count) {
    for (int a = 0; a < count; ++a) {
      seq.rows[round][static_cast<std::size_t>(a) * total + receiver] = 1;
    }
  };

  {
    int ts = params.k + params.lambda - c;
    for (int i = 0; i < plan.s0; ++i) {
      deliver(0, i, clamp_to_attackers(params, ts));
    }
  }
  for (int r = 1; r <= r_max; ++r) {
    int m = plan.path[r];
    const DpChoice& ch = plan.steps[r - 1];
    int ta = params.k - m;
    int ts = params.k + params.lambda - m;
    for (int i = 0; i < ch.s; ++i) {
      deliver(r, i, clamp_to_attackers(params, ts));
    }
    for (int i = ch.s; i < ch.a; ++i) {
      deliver(r, i, clamp_to_attackers(params, ta));
    }
  }
  return seq;
}

// Replays a witness schedule at every support round and checks that the
// realized outcomes reproduce the claimed probability exactly.
std::vector<int> replay_witness(const ProtocolParams& params, int c,
                                const AttackSequence& seq, OutcomeKind objective,
                                const Rational& claimed) {
  auto obs = prefix_observations(params.n, c);
  std::vector<int> failing;
  Rational total;
  for (const auto& [r, pr] : params.rounds.pmf()) {
    auto attacker = make_fixed_sequence(seq);
    SplitMix64 rng(0);
    auto tr = run_protocol_fixed_rounds(params, obs, *attacker, r, rng);
    if (tr.outcome.kind == objective) {
      failing.push_back(r);
      total += pr;
    }
  }
  if (total != claimed) {
    throw std::logic_error("verifier witness replay disagrees with computed value");
  }
  return failing;
}

struct ClassOutcome {
  Rational mis;
  Rational false_c;
  std::optional<AttackSequence> mis_attack;
  std::optional<AttackSequence> false_attack;
};

ClassOutcome verify_class_reduced(const ProtocolParams& params, int c,
                                  std::uint64_t& executions,
                                  std::uint64_t budget) {
  ClassOutcome out;
  ClassPlan mis = solve_class(params, c, OutcomeKind::MisCoordination,
                              executions, budget);
  out.mis = mis.value;
  if (mis.value > Rational()) out.mis_attack = materialize_plan(params, c, mis);

  ClassPlan fc = solve_class(params, c, OutcomeKind::FalseCoordination,
                             executions, budget);
  out.false_c = fc.value;
  if (fc.value > Rational()) out.false_attack = materialize_plan(params, c, fc);
  return out;
}

// Raw oracle: enumerates every attacker bit of every round directly.
ClassOutcome verify_class_raw(const ProtocolParams& params, int c,
                              std::uint64_t& executions, std::uint64_t budget) {
  int r_max = params.rounds.max_rounds();
  int total = params.total();
  int bits_per_round = params.t * total;
  int bits = bits_per_round * (r_max + 1);
  if (bits >= 40) {
    throw BudgetError("raw verification would enumerate 2^" +
                          std::to_string(bits) + " schedules",
                      ~0ull, budget);
  }
  std::uint64_t count = 1ull << bits;

  // Cache the round probabilities indexed by round.
  std::vector<Rational> pr(r_max + 1);
  for (int r = 1; r <= r_max; ++r) pr[r] = params.rounds.probability(r);

  ClassOutcome out;
  std::uint64_t best_mis_seq = 0, best_false_seq = 0;

  for (std::uint64_t seq = 0; seq < count; ++seq) {
    if (++executions > budget) {
      throw BudgetError("verification budget exceeded", executions, budget);
    }
    Rational mis_p, false_p;
    std::uint32_t active = (c >= 32) ? ~0u : ((1u << c) - 1);
    for (int r = 0; r <= r_max; ++r) {
      int m = __builtin_popcount(active);
      if (r >= 1 && pr[r] > Rational()) {
        int a = 0;
        for (int i = 0; i < params.n; ++i) {
          if (!(active & (1u << i))) continue;
          int x = 0;
          for (int at = 0; at < params.t; ++at) {
            int bit_index = (r * params.t + at) * total + i;
            x += static_cast<int>((seq >> bit_index) & 1ull);
          }
          if (m + x >= params.k) ++a;
        }
        OutcomeKind kind = count_outcome(params, c, a);
        if (kind == OutcomeKind::MisCoordination) mis_p += pr[r];
        if (kind == OutcomeKind::FalseCoordination) false_p += pr[r];
      }
      if (r < r_max) {
        std::uint32_t next = 0;
        for (int i = 0; i < params.n; ++i) {
          if (!(active & (1u << i))) continue;
          int x = 0;
          for (int at = 0; at < params.t; ++at) {
            int bit_index = (r * params.t + at) * total + i;
            x += static_cast<int>((seq >> bit_index) & 1ull);
          }
          if (m + x >= params.k + params.lambda) next |= (1u << i);
        }
        active = next;
      }
    }
    if (mis_p > out.mis) {
      out.mis = mis_p;
      best_mis_seq = seq;
    }
    if (false_p > out.false_c) {
      out.false_c = false_p;
      best_false_seq = seq;
    }
  }

  auto to_sequence = [&](std::uint64_t seq) {
    AttackSequence s;
    s.participants = total;
    s.attackers = params.t;
    s.rows.assign(r_max + 1,
                  std::vector<std::uint8_t>(
                      static_cast<std::size_t>(params.t) * total, 0));
    for (int r = 0; r <= r_max; ++r) {
      for (int at = 0; at < params.t; ++at) {
        for (int i = 0; i < total; ++i) {
          int bit_index = (r * params.t + at) * total + i;
          s.rows[r][static_cast<std::size_t>(at) * total + i] =
              static_cast<std::uint8_t>((seq >> bit_index) & 1ull);
        }
      }
    }
    return s;
  };
  if (out.mis > Rational()) out.mis_attack = to_sequence(best_mis_seq);
  if (out.false_c > Rational()) out.false_attack = to_sequence(best_false_seq);
  return out;
}

}  // namespace

VerificationReport exhaustive_verify(const ProtocolParams& params,
                                     const VerifyOptions& options) {
  params.validate();
  VerificationReport report;
  report.params = params;
  report.bound = params.rounds.max_probability();
  report.mode_used = options.mode;

  int best_mis_class = -1, best_false_class = -1;
  std::optional<AttackSequence> best_mis_attack, best_false_attack;

  for (int c = 0; c <= params.n; ++c) {
    ClassOutcome cls;
    if (options.mode == VerifyOptions::Mode::Raw) {
      cls = verify_class_raw(params, c, report.executions, options.budget);
    } else {
      cls = verify_class_reduced(params, c, report.executions, options.budget);
    }
    report.per_class.push_back({c, cls.mis, cls.false_c});
    if (cls.mis > report.worst_mis) {
      report.worst_mis = cls.mis;
      best_mis_class = c;
      best_mis_attack = cls.mis_attack;
    }
    if (cls.false_c > report.worst_false) {
      report.worst_false = cls.false_c;
      best_false_class = c;
      best_false_attack = cls.false_attack;
    }
  }

  if (best_mis_class >= 0 && best_mis_attack) {
    VerificationWitness w;
    w.observer_count = best_mis_class;
    w.attack = *best_mis_attack;
    w.kind = OutcomeKind::MisCoordination;
    w.probability = report.worst_mis;
    w.failing_rounds = replay_witness(params, best_mis_class, w.attack,
                                      OutcomeKind::MisCoordination, w.probability);
    report.mis_witness = std::move(w);
  }
  if (best_false_class >= 0 && best_false_attack) {
    VerificationWitness w;
    w.observer_count = best_false_class;
    w.attack = *best_false_attack;
    w.kind = OutcomeKind::FalseCoordination;
    w.probability = report.worst_false;
    w.failing_rounds = replay_witness(params, best_false_class, w.attack,
                                      OutcomeKind::FalseCoordination, w.probability);
    report.false_witness = std::move(w);
  }

  report.mis_within_bound = report.worst_mis <= report.bound;
  return report;
}

MonteCarloResult monte_carlo_estimate(const ProtocolParams& params,
                                      const std::vector<std::uint8_t>& observations,
                                      AttackerStrategy& attacker,
                                      std::uint64_t trials, std::uint64_t seed,
                                      int jobs) {
  params.validate();
  if (trials == 0) throw ConfigError("monte carlo estimate needs trials > 0");
  if (jobs < 1) jobs = 1;

  MonteCarloResult result;
  result.trials = trials;

  std::vector<std::array<std::uint64_t, 4>> partial(
      static_cast<std::size_t>(jobs), std::array<std::uint64_t, 4>{});

  auto worker = [&](int job) {
    // Each worker replays the shared strategy object type by name; fixed
    // sequences and the named strategies are stateless, so sharing the
    // instance across threads would also work, but per-thread clones keep
    // randomized strategies race-free.
    for (std::uint64_t i = job; i < trials; i += static_cast<std::uint64_t>(jobs)) {
      auto tr = run_protocol(params, observations, attacker, derive_seed(seed, i));
      partial[job][static_cast<int>(tr.outcome.kind)]++;
    }
  };

  if (jobs == 1) {
    worker(0);
  } else {
    std::vector<std::thread> threads;
    for (int j = 0; j < jobs; ++j) threads.emplace_back(worker, j);
    for (auto& t : threads) t.join();
  }

  for (const auto& p : partial) {
    for (int k = 0; k < 4; ++k) result.counts[k] += p[k];
  }
  return result;
}

DiagramResult enumerate_diagram(const ProtocolParams& params, int observer_count) {
  params.validate();
  if (observer_count != params.k) {
    throw ConfigError("diagram needs observer count equal to the quorum k");
  }
  if (params.k < 2) throw ConfigError("diagram needs k >= 2");
  if (params.lambda < 1 || params.lambda > params.t) {
    throw ConfigError("diagram needs 1 <= lambda <= t");
  }
  if (!params.feasible()) throw ConfigError("diagram needs n >= k + lambda");

  int r_max = params.rounds.max_rounds();
  if (r_max < 1) throw ConfigError("diagram needs at least one round");

  int c = observer_count;
  int total = params.total();
  int keep = params.k - 1;
  int sustain = params.lambda;  // k + lambda - c with c == k
  auto obs = prefix_observations(params.n, c);

  DiagramResult result;
  result.params = params;
  result.observer_count = c;

  // Schedule that sustains the full observer set through round
  // `crossing` - 2, drops all but `keep` observers at round `crossing` - 1,
  // and keeps feeding the survivors just enough to act at the decision
  // threshold afterwards. With lambda >= 1 the survivors then fail the
  // persistence threshold, so the partial action fires at r_tot == crossing
  // and never again.
  auto build = [&](int crossing, bool camouflage) {
    AttackSequence seq;
    seq.participants = total;
    seq.attackers = params.t;
    seq.rows.assign(r_max + 1,
                    std::vector<std::uint8_t>(
                        static_cast<std::size_t>(params.t) * total, 0));
    auto deliver = [&](int round, int receiver, int count) {
      for (int a = 0; a < count; ++a) {
        seq.rows[round][static_cast<std::size_t>(a) * total + receiver] = 1;
      }
    };
    for (int r = 0; r <= r_max; ++r) {
      if (r < crossing - 1) {
        for (int i = 0; i < c; ++i) deliver(r, i, sustain);
      } else if (r == crossing - 1) {
        for (int i = 0; i < keep; ++i) deliver(r, i, sustain);
      } else {
        for (int i = 0; i < keep; ++i) deliver(r, i, 1);
      }
      if (camouflage) {
        for (int i = c; i < total; ++i) deliver(r, i, params.t);
      }
    }
    return seq;
  };

  auto play = [&](const AttackSequence& seq) {
    std::vector<DiagramCell> cells;
    for (int r = 1; r <= r_max; ++r) {
      auto attacker = make_fixed_sequence(seq);
      SplitMix64 rng(0);
      auto tr = run_protocol_fixed_rounds(params, obs, *attacker, r, rng);
      cells.push_back({r, tr.outcome.kind});
    }
    return cells;
  };

  auto add_family = [&](const std::string& label, int crossing, bool camouflage) {
    DiagramFamily fam;
    fam.label = label;
    fam.crossing_round = crossing;
    fam.attack = build(crossing, camouflage);
    fam.cells = play(fam.attack);
    for (const auto& cell : fam.cells) {
      bool expect_mis = cell.r_tot == crossing;
      bool is_mis = cell.outcome == OutcomeKind::MisCoordination;
      if (expect_mis != is_mis) {
        throw std::logic_error("diagram family does not cross where intended");
      }
    }
    result.families.push_back(std::move(fam));
  };

  add_family("below_k_direct", 1, false);
  add_family("below_band_round_1", 1, true);
  for (int r = 2; r <= r_max; ++r) {
    add_family("below_band_round_" + std::to_string(r), r, false);
  }
  return result;
}

}  // namespace ibgp
