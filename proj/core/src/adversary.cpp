#include "ibgp/adversary.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "ibgp/errors.hpp"
#include "ibgp/protocol.hpp"

namespace ibgp {

namespace {

std::size_t row_bits(const AttackContext& ctx) {
  return static_cast<std::size_t>(ctx.params.t) * ctx.params.total();
}

class AllOne : public AttackerStrategy {
 public:
  std::string name() const override { return "all_one"; }
  std::vector<std::uint8_t> rows(const AttackContext& ctx, SplitMix64&) override {
    return std::vector<std::uint8_t>(row_bits(ctx), 1);
  }
};

class AllZero : public AttackerStrategy {
 public:
  std::string name() const override { return "all_zero"; }
  std::vector<std::uint8_t> rows(const AttackContext& ctx, SplitMix64&) override {
    return std::vector<std::uint8_t>(row_bits(ctx), 0);
  }
};

// Splits the receiver set: participants with index below ceil((n+t)/2) hear
// ones from every attacker, the rest hear zeros.
class AllOneAllZero : public AttackerStrategy {
 public:
  std::string name() const override { return "all_one_all_zero"; }
  std::vector<std::uint8_t> rows(const AttackContext& ctx, SplitMix64&) override {
    int total = ctx.params.total();
    int cut = (total + 1) / 2;
    std::vector<std::uint8_t> out(row_bits(ctx), 0);
    for (int a = 0; a < ctx.params.t; ++a) {
      for (int r = 0; r < cut; ++r) {
        out[static_cast<std::size_t>(a) * total + r] = 1;
      }
    }
    return out;
  }
};

class AllOneAllZeroAlternating : public AttackerStrategy {
 public:
  std::string name() const override { return "all_one_all_zero_alternating"; }
  std::vector<std::uint8_t> rows(const AttackContext& ctx, SplitMix64&) override {
    std::uint8_t bit = (ctx.round % 2 == 0) ? 1 : 0;
    return std::vector<std::uint8_t>(row_bits(ctx), bit);
  }
};

class RandomP : public AttackerStrategy {
 public:
  explicit RandomP(double p) : p_(p) {
    if (p < 0.0 || p > 1.0) throw ConfigError("random_p needs p in [0, 1]");
  }
  std::string name() const override { return "random_p"; }
  std::vector<std::uint8_t> rows(const AttackContext& ctx, SplitMix64& rng) override {
    std::vector<std::uint8_t> out(row_bits(ctx));
    for (auto& b : out) b = rng.bernoulli(p_) ? 1 : 0;
    return out;
  }

 private:
  double p_;
};

class FixedSequence : public AttackerStrategy {
 public:
  explicit FixedSequence(AttackSequence seq) : seq_(std::move(seq)) {}
  std::string name() const override { return "fixed_sequence"; }
  std::vector<std::uint8_t> rows(const AttackContext& ctx, SplitMix64&) override {
    if (seq_.participants != ctx.params.total() ||
        seq_.attackers != ctx.params.t) {
      throw ConfigError("attack sequence shape does not match parameters");
    }
    return seq_.rows_for(ctx.round);
  }

 private:
  AttackSequence seq_;
};

}  // namespace

std::unique_ptr<AttackerStrategy> make_all_one() {
  return std::make_unique<AllOne>();
}
std::unique_ptr<AttackerStrategy> make_all_zero() {
  return std::make_unique<AllZero>();
}
std::unique_ptr<AttackerStrategy> make_all_one_all_zero() {
  return std::make_unique<AllOneAllZero>();
}
std::unique_ptr<AttackerStrategy> make_all_one_all_zero_alternating() {
  return std::make_unique<AllOneAllZeroAlternating>();
}
std::unique_ptr<AttackerStrategy> make_random_p(double p) {
  return std::make_unique<RandomP>(p);
}
std::unique_ptr<AttackerStrategy> make_fixed_sequence(AttackSequence seq) {
  return std::make_unique<FixedSequence>(std::move(seq));
}

std::unique_ptr<AttackerStrategy> make_attacker(const std::string& name,
                                                double param) {
  if (name == "all_one") return make_all_one();
  if (name == "all_zero") return make_all_zero();
  if (name == "all_one_all_zero") return make_all_one_all_zero();
  if (name == "all_one_all_zero_alternating") {
    return make_all_one_all_zero_alternating();
  }
  if (name == "random_p") return make_random_p(param);
  throw ConfigError("unknown attacker strategy: " + name);
}

bool is_known_attacker(const std::string& name) {
  return name == "all_one" || name == "all_zero" ||
         name == "all_one_all_zero" ||
         name == "all_one_all_zero_alternating" || name == "random_p";
}

BestResponseResult best_response_search(
    const ProtocolParams& params, const std::vector<std::uint8_t>& observations,
    const std::vector<AttackSequence>& candidates, std::uint64_t trials,
    std::uint64_t seed, int jobs) {
  if (candidates.empty()) throw ConfigError("no candidate attacks given");
  if (trials == 0) throw ConfigError("best response search needs trials > 0");
  if (jobs < 1) jobs = 1;

  BestResponseResult result;
  result.estimates.resize(candidates.size());

  std::vector<std::uint64_t> failures(candidates.size(), 0);
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    std::vector<std::uint64_t> partial(static_cast<std::size_t>(jobs), 0);
    auto worker = [&](int job) {
      auto local = make_fixed_sequence(candidates[c]);
      std::uint64_t count = 0;
      for (std::uint64_t i = job; i < trials; i += jobs) {
        // Per-trial seeds keyed by trial index only, so every candidate is
        // evaluated on the same round draws (common random numbers).
        auto tr = run_protocol(params, observations, *local,
                               derive_seed(seed, i));
        if (tr.outcome.kind == OutcomeKind::MisCoordination ||
            tr.outcome.kind == OutcomeKind::FalseCoordination) {
          ++count;
        }
      }
      partial[job] = count;
    };
    if (jobs == 1) {
      worker(0);
    } else {
      std::vector<std::thread> threads;
      for (int j = 0; j < jobs; ++j) threads.emplace_back(worker, j);
      for (auto& t : threads) t.join();
    }
    for (auto v : partial) failures[c] += v;
  }

  for (std::size_t c = 0; c < candidates.size(); ++c) {
    auto& est = result.estimates[c];
    est.failure_rate = static_cast<double>(failures[c]) / trials;
    est.interval = wilson_interval(failures[c], trials);
    if (result.best_index < 0 || est.failure_rate > result.best_rate) {
      result.best_index = static_cast<int>(c);
      result.best_rate = est.failure_rate;
      result.best_interval = est.interval;
    }
  }
  return result;
}

std::vector<AttackSequence> band_split_candidates(
    const ProtocolParams& params, int observer_count, int max_round) {
  if (observer_count < 0 || observer_count > params.n) {
    throw ConfigError("observer count out of range");
  }
  int total = params.total();
  std::size_t bits = static_cast<std::size_t>(params.t) * total;

  auto blanket = [&](std::uint8_t v) {
    AttackSequence seq;
    seq.participants = total;
    seq.attackers = params.t;
    seq.rows.assign(max_round + 1, std::vector<std::uint8_t>(bits, v));
    return seq;
  };

  std::vector<AttackSequence> out;
  out.push_back(blanket(0));
  out.push_back(blanket(1));

  // Sustain everyone through round `split` - 1, then deliver full support to
  // only the first `keep` observers from round `split` on. The decision-round
  // boost that turns a partial band into actual actions is the same full
  // support, so one schedule covers both roles.
  for (int split = 0; split <= max_round; ++split) {
    for (int keep = 0; keep < observer_count; ++keep) {
      AttackSequence seq;
      seq.participants = total;
      seq.attackers = params.t;
      seq.rows.assign(max_round + 1, std::vector<std::uint8_t>(bits, 0));
      for (int r = 0; r <= max_round; ++r) {
        for (int a = 0; a < params.t; ++a) {
          for (int i = 0; i < total; ++i) {
            bool support;
            if (r < split) {
              support = true;
            } else {
              support = i < keep;
            }
            seq.rows[r][static_cast<std::size_t>(a) * total + i] = support ? 1 : 0;
          }
        }
      }
      out.push_back(std::move(seq));
    }
  }
  return out;
}

int attack_distance(AttackerStrategy& a, AttackerStrategy& b,
                    const ProtocolParams& params,
                    const std::vector<std::vector<std::uint8_t>>& observation_patterns,
                    int max_round) {
  if (observation_patterns.empty()) {
    throw ConfigError("attack distance needs at least one observation pattern");
  }
  int best = -1;
  SplitMix64 dummy(0);
  for (const auto& obs : observation_patterns) {
    // Play each strategy forward to collect its delivered counts in every
    // reachable context, then compare per receiver and round.
    for (AttackerStrategy* lead : {&a, &b}) {
      std::vector<RoundMessages> history;
      AgentState state = initial_state(params, obs);
      for (int r = 0; r <= max_round; ++r) {
        AttackContext ctx{params, r, history, obs};
        auto rows_a = a.rows(ctx, dummy);
        auto rows_b = b.rows(ctx, dummy);
        int total = params.total();
        for (int i = 0; i < params.n; ++i) {
          int ones_a = 0, ones_b = 0;
          for (int at = 0; at < params.t; ++at) {
            ones_a += rows_a[static_cast<std::size_t>(at) * total + i];
            ones_b += rows_b[static_cast<std::size_t>(at) * total + i];
          }
          int diff = std::abs(ones_a - ones_b);
          if (best < 0 || diff < best) best = diff;
        }
        auto lead_rows = lead->rows(ctx, dummy);
        if (r == 0) {
          history.push_back(initial_broadcast(params, obs, lead_rows));
        } else {
          auto [next, matrix] = step_round(params, state, history.back(), lead_rows);
          state = std::move(next);
          history.push_back(std::move(matrix));
        }
      }
    }
  }
  return best < 0 ? 0 : best;
}

}  // namespace ibgp
