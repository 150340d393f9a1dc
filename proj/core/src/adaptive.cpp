#include "ibgp/adaptive.hpp"

#include <algorithm>
#include <cstdio>
#include <thread>

#include "ibgp/errors.hpp"
#include "ibgp/protocol.hpp"

namespace ibgp {

int LambdaProfile::min_value() const {
  if (values.empty()) throw ConfigError("empty lambda profile");
  return *std::min_element(values.begin(), values.end());
}

void LambdaProfile::validate(int n) const {
  if (static_cast<int>(values.size()) != n) {
    throw ConfigError("lambda profile must have one value per benign agent");
  }
  for (int v : values) {
    if (v < 0) throw ConfigError("lambda profile values must be >= 0");
  }
}

Transcript run_protocol_profiled(const ProtocolParams& params,
                                 const LambdaProfile& profile,
                                 const std::vector<std::uint8_t>& observations,
                                 AttackerStrategy& attacker, std::uint64_t seed) {
  profile.validate(params.n);
  if (observations.size() != static_cast<std::size_t>(params.n)) {
    throw ConfigError("observation vector must have length n");
  }

  SplitMix64 rng(seed);
  int r_tot = params.rounds.sample(rng);

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

    const RoundMessages& prev = tr.rounds.back();
    AgentState next;
    next.active.assign(params.n, 0);
    for (int i = 0; i < params.n; ++i) {
      if (tr.states.back().active[i] &&
          prev.ones_to(i) >= params.k + profile.values[i]) {
        next.active[i] = 1;
      }
    }

    RoundMessages m(params.total());
    for (int i = 0; i < params.n; ++i) {
      if (next.active[i]) m.set_row(i, 1);
    }
    for (int a = 0; a < params.t; ++a) {
      for (int i = 0; i < params.total(); ++i) {
        m.set(params.n + a, i,
              rows[static_cast<std::size_t>(a) * params.total() + i] ? 1 : 0);
      }
    }
    tr.states.push_back(std::move(next));
    tr.rounds.push_back(std::move(m));
  }

  tr.decisions = decide(params, tr.states.back(), tr.rounds.back());
  tr.outcome = classify_outcome(params, observations, tr.decisions);
  return tr;
}

ProfiledWorstCase enumerate_profiled_worst_case(
    const ProtocolParams& params, const LambdaProfile& profile,
    const std::vector<std::uint8_t>& observations, std::uint64_t budget) {
  profile.validate(params.n);
  if (observations.size() != static_cast<std::size_t>(params.n)) {
    throw ConfigError("observation vector must have length n");
  }

  int r_max = params.rounds.max_rounds();
  int digits = params.n * (r_max + 1);
  int base = params.t + 1;

  std::uint64_t schedules = 1;
  for (int d = 0; d < digits; ++d) {
    if (schedules > budget / static_cast<std::uint64_t>(base) + 1) {
      throw BudgetError("profiled enumeration exceeds the budget",
                        ~0ull, budget);
    }
    schedules *= static_cast<std::uint64_t>(base);
  }
  if (schedules > budget) {
    throw BudgetError("profiled enumeration exceeds the budget", schedules,
                      budget);
  }

  int c = 0;
  for (auto o : observations) c += o ? 1 : 0;

  std::vector<Rational> pr(r_max + 1);
  for (int r = 1; r <= r_max; ++r) pr[r] = params.rounds.probability(r);

  ProfiledWorstCase out;
  out.schedules = schedules;

  std::vector<int> x(digits);
  std::vector<std::uint8_t> active(params.n);

  for (std::uint64_t id = 0; id < schedules; ++id) {
    std::uint64_t v = id;
    for (int d = 0; d < digits; ++d) {
      x[d] = static_cast<int>(v % base);
      v /= base;
    }

    for (int i = 0; i < params.n; ++i) active[i] = observations[i] ? 1 : 0;
    Rational mis_p, false_p;

    for (int r = 0; r <= r_max; ++r) {
      int m = 0;
      for (int i = 0; i < params.n; ++i) m += active[i];
      const int* xr = x.data() + r * params.n;

      if (r >= 1 && pr[r] > Rational()) {
        int a = 0;
        for (int i = 0; i < params.n; ++i) {
          if (active[i] && m + xr[i] >= params.k) ++a;
        }
        OutcomeKind kind;
        if (a == 0) {
          kind = OutcomeKind::AllAbstain;
        } else if (c < params.k) {
          kind = OutcomeKind::FalseCoordination;
        } else if (a < params.k) {
          kind = OutcomeKind::MisCoordination;
        } else {
          kind = OutcomeKind::Coordinated;
        }
        if (kind == OutcomeKind::MisCoordination) {
          mis_p += pr[r];
          out.mis_failures.push_back({id, r});
        } else if (kind == OutcomeKind::FalseCoordination) {
          false_p += pr[r];
          out.false_failures.push_back({id, r});
        }
      }

      if (r < r_max) {
        for (int i = 0; i < params.n; ++i) {
          if (active[i] && !(m + xr[i] >= params.k + profile.values[i])) {
            active[i] = 0;
          }
        }
      }
    }

    if (mis_p > out.worst_mis) out.worst_mis = mis_p;
    if (false_p > out.worst_false) out.worst_false = false_p;
  }
  return out;
}

namespace {

std::string attacker_label(const SweepConfig::AttackerSpec& spec) {
  if (spec.name == "random_p") {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", spec.p);
    return spec.name + ":" + buf;
  }
  return spec.name;
}

}  // namespace

EpisodeResult run_survival_episode(const SweepConfig& config, int n, int lambda,
                                   AttackerStrategy& attacker,
                                   std::uint64_t seed, std::uint64_t episode) {
  EpisodeResult result;
  int alive = n;

  for (int step = 0; step < config.horizon; ++step) {
    if (alive == 0) break;
    ++result.steps_played;

    // Environment draws depend on (episode, step) only: identical across
    // every (n, lambda, attacker) cell for pairing.
    SplitMix64 env_rng(derive_seed(seed, {9001, episode, static_cast<std::uint64_t>(step)}));
    int c_raw = static_cast<int>(env_rng.range(0, config.obs_draw_max));
    int c = std::min(c_raw, alive);

    std::vector<std::uint8_t> obs(alive, 0);
    for (int idx : env_rng.sample_indices(alive, c)) obs[idx] = 1;

    ProtocolParams params;
    params.n = alive;
    params.t = config.t;
    params.k = config.k;
    params.lambda = lambda;
    params.rounds = config.rounds;

    SplitMix64 proto_rng(derive_seed(seed, {9002, episode, static_cast<std::uint64_t>(step)}));
    int r_tot = params.rounds.sample(proto_rng);
    auto tr = run_protocol_fixed_rounds(params, obs, attacker, r_tot, proto_rng);

    switch (tr.outcome.kind) {
      case OutcomeKind::Coordinated:
        result.success = true;
        result.reward += 1.0;
        return result;
      case OutcomeKind::MisCoordination:
      case OutcomeKind::FalseCoordination: {
        int dying = tr.outcome.total_acting();
        alive -= dying;
        result.deaths += dying;
        result.reward -= config.death_penalty * dying;
        break;
      }
      case OutcomeKind::AllAbstain:
        break;
    }
  }
  return result;
}

const SweepCell& SweepResult::cell(int n, int lambda,
                                   const std::string& attacker) const {
  for (const auto& c : cells) {
    if (c.n == n && c.lambda == lambda && c.attacker == attacker) return c;
  }
  throw ConfigError("no sweep cell for the requested configuration");
}

SweepResult lambda_sweep(const SweepConfig& config, std::uint64_t seed) {
  if (config.n_values.empty() || config.lambda_values.empty() ||
      config.attackers.empty()) {
    throw ConfigError("sweep needs n values, lambda values and attackers");
  }
  if (config.episodes == 0) throw ConfigError("sweep needs episodes > 0");
  if (config.horizon < 1) throw ConfigError("sweep needs horizon >= 1");
  if (config.obs_draw_max < 0) throw ConfigError("sweep needs obs_draw_max >= 0");
  for (int n : config.n_values) {
    if (n < 1) throw ConfigError("sweep n values must be >= 1");
  }
  for (int l : config.lambda_values) {
    if (l < 0) throw ConfigError("sweep lambda values must be >= 0");
  }
  for (const auto& spec : config.attackers) {
    if (!is_known_attacker(spec.name)) {
      throw ConfigError("unknown attacker strategy: " + spec.name);
    }
  }
  int jobs = std::max(config.jobs, 1);

  SweepResult result;
  for (int n : config.n_values) {
    for (int lambda : config.lambda_values) {
      for (const auto& spec : config.attackers) {
        std::vector<EpisodeResult> episodes(config.episodes);
        auto worker = [&](int job) {
          auto attacker = make_attacker(spec.name, spec.p);
          for (std::uint64_t e = job; e < config.episodes;
               e += static_cast<std::uint64_t>(jobs)) {
            episodes[e] = run_survival_episode(config, n, lambda, *attacker,
                                               seed, e);
          }
        };
        if (jobs == 1) {
          worker(0);
        } else {
          std::vector<std::thread> threads;
          for (int j = 0; j < jobs; ++j) threads.emplace_back(worker, j);
          for (auto& t : threads) t.join();
        }

        SweepCell cell;
        cell.n = n;
        cell.lambda = lambda;
        cell.attacker = attacker_label(spec);
        cell.episodes = config.episodes;
        std::uint64_t successes = 0, deaths = 0;
        double reward = 0.0;
        for (const auto& ep : episodes) {
          successes += ep.success ? 1 : 0;
          deaths += static_cast<std::uint64_t>(ep.deaths);
          reward += ep.reward;
        }
        cell.success_rate = static_cast<double>(successes) / config.episodes;
        cell.success_interval = wilson_interval(successes, config.episodes);
        cell.mean_deaths = static_cast<double>(deaths) / config.episodes;
        cell.mean_reward = reward / config.episodes;
        result.cells.push_back(std::move(cell));
      }
    }
  }
  return result;
}

}  // namespace ibgp
