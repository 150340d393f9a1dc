#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdint>
#include <utility>
#include <vector>

#include "ibgp/adversary.hpp"
#include "ibgp/errors.hpp"
#include "ibgp/messages.hpp"
#include "ibgp/params.hpp"
#include "ibgp/protocol.hpp"
#include "ibgp/rng.hpp"

using namespace ibgp;

namespace {

ProtocolParams anchor_params() {
  ProtocolParams p;
  p.n = 5;
  p.t = 1;
  p.k = 3;
  p.lambda = 1;
  p.rounds = RoundDistribution::uniform(3);
  return p;
}

// Attacker rows for one round, t = 1: bit per receiver.
std::vector<std::uint8_t> one_attacker_row(std::vector<std::uint8_t> bits) {
  return bits;
}

AttackSequence schedule(const ProtocolParams& p,
                        std::vector<std::vector<std::uint8_t>> rows) {
  AttackSequence seq;
  seq.participants = p.total();
  seq.attackers = p.t;
  seq.rows = std::move(rows);
  return seq;
}

}  // namespace

TEST_CASE("initial state mirrors the observation bits") {
  auto p = anchor_params();
  auto s = initial_state(p, {1, 0, 1, 0, 1});
  CHECK(s.active == std::vector<std::uint8_t>{1, 0, 1, 0, 1});
  CHECK(s.count() == 3);
  CHECK_THROWS_AS(initial_state(p, {1, 0}), ConfigError);
}

TEST_CASE("initial broadcast sends observations as constant rows") {
  auto p = anchor_params();
  std::vector<std::uint8_t> obs{1, 1, 0, 0, 0};
  auto row = one_attacker_row({1, 0, 1, 0, 1, 0});
  auto m = initial_broadcast(p, obs, row);

  CHECK(m.participants() == 6);
  for (int r = 0; r < 6; ++r) {
    CHECK(m.at(0, r) == 1);
    CHECK(m.at(1, r) == 1);
    CHECK(m.at(2, r) == 0);
  }
  for (int r = 0; r < 6; ++r) CHECK(m.at(5, r) == row[r]);
  CHECK(m.ones_to(0) == 3);  // two benign ones plus the attacker bit
  CHECK(m.ones_to(1) == 2);
  CHECK_THROWS_AS(initial_broadcast(p, obs, {1, 0}), ConfigError);
}

TEST_CASE("round gating keeps a flag only above the persistence threshold") {
  auto p = anchor_params();  // k + lambda = 4
  std::vector<std::uint8_t> obs{1, 1, 1, 0, 0};
  auto m0 = initial_broadcast(p, obs, one_attacker_row({1, 1, 0, 0, 0, 0}));
  auto state0 = initial_state(p, obs);

  // Receivers 0 and 1 hear 4 ones, receiver 2 hears 3.
  auto [state1, m1] = step_round(p, state0, m0, one_attacker_row({0, 0, 0, 0, 0, 0}));
  CHECK(state1.active == std::vector<std::uint8_t>{1, 1, 0, 0, 0});
  for (int r = 0; r < 6; ++r) {
    CHECK(m1.at(0, r) == 1);
    CHECK(m1.at(2, r) == 0);
  }

  // A dropped flag never comes back, whatever is delivered afterwards.
  auto [state2, m2] = step_round(p, state1, m0, one_attacker_row({1, 1, 1, 1, 1, 1}));
  CHECK(state2.active[2] == 0);
  (void)m2;
}

TEST_CASE("decision acts on the quorum threshold, not the persistence one") {
  auto p = anchor_params();
  AgentState s;
  s.active = {1, 1, 0, 0, 0};
  RoundMessages last(6);
  last.set_row(0, 1);
  last.set_row(1, 1);
  last.set(5, 0, 1);  // attacker one pushes receiver 0 to 3 = k
  auto d = decide(p, s, last);
  CHECK(d == std::vector<std::uint8_t>{1, 0, 0, 0, 0});
}

TEST_CASE("fixed-round transcript has one matrix and state per round") {
  auto p = anchor_params();
  auto atk = make_all_one();
  SplitMix64 rng(1);
  auto tr = run_protocol_fixed_rounds(p, {1, 1, 1, 0, 0}, *atk, 3, rng);
  CHECK(tr.r_tot == 3);
  CHECK(tr.rounds.size() == 4);
  CHECK(tr.states.size() == 4);
  CHECK(tr.states[0].active == std::vector<std::uint8_t>{1, 1, 1, 0, 0});
  CHECK(tr.decisions.size() == 5);
}

TEST_CASE("a sustained attack on a full quorum coordinates at every horizon") {
  auto p = anchor_params();
  for (int r_tot = 1; r_tot <= 3; ++r_tot) {
    auto atk = make_all_one();
    SplitMix64 rng(1);
    auto tr = run_protocol_fixed_rounds(p, {1, 1, 1, 0, 0}, *atk, r_tot, rng);
    CHECK(tr.outcome.kind == OutcomeKind::Coordinated);
    CHECK(tr.outcome.acting_observers == 3);
  }
}

TEST_CASE("a silent attacker starves a bare quorum into abstention") {
  auto p = anchor_params();  // three observers deliver 3 < k + lambda ones
  for (int r_tot = 1; r_tot <= 3; ++r_tot) {
    auto atk = make_all_zero();
    SplitMix64 rng(1);
    auto tr = run_protocol_fixed_rounds(p, {1, 1, 1, 0, 0}, *atk, r_tot, rng);
    CHECK(tr.outcome.kind == OutcomeKind::AllAbstain);
  }
}

TEST_CASE("dropping below the quorum exactly at the decision round mis-coordinates") {
  auto p = anchor_params();
  // Round 0 sustains receivers 0 and 1 only; round 1 tops both up to k.
  auto seq = schedule(p, {{1, 1, 0, 0, 0, 0}, {1, 1, 0, 0, 0, 0}});

  auto atk = make_fixed_sequence(seq);
  SplitMix64 rng(1);
  auto tr = run_protocol_fixed_rounds(p, {1, 1, 1, 0, 0}, *atk, 1, rng);
  CHECK(tr.outcome.kind == OutcomeKind::MisCoordination);
  CHECK(tr.decisions == std::vector<std::uint8_t>{1, 1, 0, 0, 0});

  // One round later the survivors fail the persistence gate and nobody acts:
  // the same schedule only works when it guesses r_tot.
  auto atk2 = make_fixed_sequence(seq);
  SplitMix64 rng2(1);
  auto tr2 = run_protocol_fixed_rounds(p, {1, 1, 1, 0, 0}, *atk2, 2, rng2);
  CHECK(tr2.outcome.kind == OutcomeKind::AllAbstain);
}

TEST_CASE("outcome classification distinguishes the four kinds") {
  auto p = anchor_params();
  std::vector<std::uint8_t> obs{1, 1, 1, 0, 0};

  auto keep = classify_outcome(p, obs, {1, 1, 1, 0, 0});
  CHECK(keep.kind == OutcomeKind::Coordinated);
  CHECK(keep.observer_count == 3);

  auto partial = classify_outcome(p, obs, {1, 1, 0, 0, 0});
  CHECK(partial.kind == OutcomeKind::MisCoordination);
  CHECK(partial.acting_observers == 2);

  auto silent = classify_outcome(p, obs, {0, 0, 0, 0, 0});
  CHECK(silent.kind == OutcomeKind::AllAbstain);

  auto illegal = classify_outcome(p, obs, {1, 1, 1, 1, 0});
  CHECK(illegal.kind == OutcomeKind::FalseCoordination);
  CHECK(illegal.acting_non_observers == 1);

  auto thin = classify_outcome(p, {1, 1, 0, 0, 0}, {1, 1, 0, 0, 0});
  CHECK(thin.kind == OutcomeKind::FalseCoordination);
  CHECK(thin.observer_count == 2);
}

TEST_CASE("outcome kind names round-trip") {
  for (auto kind : {OutcomeKind::Coordinated, OutcomeKind::MisCoordination,
                    OutcomeKind::FalseCoordination, OutcomeKind::AllAbstain}) {
    CHECK(outcome_kind_from_string(to_string(kind)) == kind);
  }
  CHECK_THROWS_AS(outcome_kind_from_string("nonsense"), ConfigError);
}

TEST_CASE("single-round rule splits a quorum with a selective top-up") {
  auto p = anchor_params();

  // Three observers, threshold 4: the two receivers hearing the attacker act,
  // the third abstains.
  auto a = single_round_rule(p, {1, 1, 1, 0, 0},
                             one_attacker_row({1, 1, 0, 0, 0, 0}), 4);
  CHECK(a.decisions == std::vector<std::uint8_t>{1, 1, 0, 0, 0});
  CHECK(a.outcome.kind == OutcomeKind::MisCoordination);

  // Four observers, threshold 5: same split one level up.
  auto b = single_round_rule(p, {1, 1, 1, 1, 0},
                             one_attacker_row({1, 1, 0, 0, 0, 0}), 5);
  CHECK(b.decisions == std::vector<std::uint8_t>{1, 1, 0, 0, 0});
  CHECK(b.outcome.kind == OutcomeKind::MisCoordination);
}

TEST_CASE("single-round rule lets non-observers act at low thresholds") {
  auto p = anchor_params();
  auto res = single_round_rule(p, {1, 1, 1, 0, 0},
                               one_attacker_row({0, 0, 0, 0, 0, 0}), 1);
  CHECK(res.decisions == std::vector<std::uint8_t>{1, 1, 1, 1, 1});
  CHECK(res.outcome.kind == OutcomeKind::FalseCoordination);
  CHECK(res.outcome.acting_non_observers == 2);
  CHECK_THROWS_AS(single_round_rule(p, {1, 1, 1, 0, 0},
                                    one_attacker_row({0, 0, 0, 0, 0, 0}), 0),
                  ConfigError);
}

TEST_CASE("every single-round threshold admits a coordination failure") {
  // The multi-round protocol's reason to exist: no fixed one-shot threshold
  // is safe. Exhaustive search over observation patterns and attacker rows.
  auto p = anchor_params();
  for (int threshold = 1; threshold <= p.total(); ++threshold) {
    bool found = false;
    for (int obs_mask = 0; obs_mask < (1 << p.n) && !found; ++obs_mask) {
      std::vector<std::uint8_t> obs(p.n);
      for (int i = 0; i < p.n; ++i) obs[i] = (obs_mask >> i) & 1;
      for (int atk_mask = 0; atk_mask < (1 << p.total()) && !found; ++atk_mask) {
        std::vector<std::uint8_t> row(p.total());
        for (int i = 0; i < p.total(); ++i) row[i] = (atk_mask >> i) & 1;
        auto res = single_round_rule(p, obs, row, threshold);
        if (res.outcome.kind == OutcomeKind::MisCoordination ||
            res.outcome.kind == OutcomeKind::FalseCoordination) {
          found = true;
        }
      }
    }
    CHECK_MESSAGE(found, "threshold ", threshold);
  }
}

TEST_CASE("all-ones observations with enough agents always coordinate") {
  SplitMix64 meta(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    ProtocolParams p;
    p.t = static_cast<int>(meta.range(0, 2));
    p.k = static_cast<int>(meta.range(1, 4));
    p.lambda = p.t;
    p.n = p.k + p.t + static_cast<int>(meta.range(0, 3));
    p.rounds = RoundDistribution::uniform(static_cast<int>(meta.range(1, 4)));
    std::vector<std::uint8_t> obs(p.n, 1);
    auto atk = make_random_p(meta.uniform());
    auto tr = run_protocol(p, obs, *atk, meta.next());
    CHECK(tr.outcome.kind == OutcomeKind::Coordinated);
  }
}

TEST_CASE("too few observers always abstain when lambda equals t") {
  SplitMix64 meta(2025);
  for (int trial = 0; trial < 1000; ++trial) {
    ProtocolParams p;
    p.t = static_cast<int>(meta.range(0, 2));
    p.k = static_cast<int>(meta.range(1, 4));
    p.lambda = p.t;
    p.n = p.k + p.t + static_cast<int>(meta.range(0, 3));
    p.rounds = RoundDistribution::uniform(static_cast<int>(meta.range(1, 4)));
    std::vector<std::uint8_t> obs(p.n, 0);
    int observers = static_cast<int>(meta.range(0, p.k - 1));
    for (int i : meta.sample_indices(p.n, observers)) obs[i] = 1;
    auto atk = make_random_p(meta.uniform());
    auto tr = run_protocol(p, obs, *atk, meta.next());
    CHECK(tr.outcome.kind == OutcomeKind::AllAbstain);
  }
}

namespace {

// Records what the protocol shows an adversary: the interface exposes the
// round index and past matrices only, so a strategy cannot key on r_tot.
class RecordingStrategy : public AttackerStrategy {
 public:
  std::vector<std::pair<int, std::size_t>> consults;

  std::string name() const override { return "recording"; }
  std::vector<std::uint8_t> rows(const AttackContext& ctx, SplitMix64&) override {
    consults.emplace_back(ctx.round, ctx.history.size());
    return std::vector<std::uint8_t>(
        static_cast<std::size_t>(ctx.params.t) * ctx.params.total(), 0);
  }
};

}  // namespace

TEST_CASE("the adversary is consulted once per round and never sees ahead") {
  auto p = anchor_params();
  RecordingStrategy rec;
  SplitMix64 rng(3);
  run_protocol_fixed_rounds(p, {1, 1, 1, 0, 0}, rec, 3, rng);
  REQUIRE(rec.consults.size() == 4);
  for (std::size_t i = 0; i < rec.consults.size(); ++i) {
    CHECK(rec.consults[i].first == static_cast<int>(i));
    CHECK(rec.consults[i].second == i);
  }
}

TEST_CASE("full runs are reproducible from the seed alone") {
  auto p = anchor_params();
  auto a1 = make_random_p(0.5);
  auto a2 = make_random_p(0.5);
  auto t1 = run_protocol(p, {1, 1, 1, 0, 0}, *a1, 77);
  auto t2 = run_protocol(p, {1, 1, 1, 0, 0}, *a2, 77);
  CHECK(t1.r_tot == t2.r_tot);
  CHECK(t1.decisions == t2.decisions);
  REQUIRE(t1.rounds.size() == t2.rounds.size());
  for (std::size_t i = 0; i < t1.rounds.size(); ++i) {
    CHECK(t1.rounds[i] == t2.rounds[i]);
  }
}

TEST_CASE("protocol rejects infeasible or malformed runs") {
  auto p = anchor_params();
  p.lambda = 3;  // k + lambda > n
  auto atk = make_all_zero();
  CHECK_THROWS_AS(run_protocol(p, {1, 1, 1, 0, 0}, *atk, 1), ConfigError);

  auto ok = anchor_params();
  SplitMix64 rng(1);
  CHECK_THROWS_AS(run_protocol_fixed_rounds(ok, {1, 1, 1, 0, 0}, *atk, 0, rng),
                  ConfigError);
  CHECK_THROWS_AS(run_protocol_fixed_rounds(ok, {1, 1}, *atk, 1, rng),
                  ConfigError);
}
