#pragma once

#include <utility>
#include <vector>

#include "ibgp/errors.hpp"
#include "ibgp/rational.hpp"
#include "ibgp/rng.hpp"

namespace ibgp {

// Distribution of the total round count r_tot, over positive integers, with
// exact rational probabilities. Kept exact so the verifier can report
// worst-case probabilities and the theoretical bound without float slop.
class RoundDistribution {
 public:
  RoundDistribution() = default;

  // pmf entries are (round, probability), rounds >= 1, strictly increasing,
  // probabilities positive and summing to exactly 1.
  explicit RoundDistribution(std::vector<std::pair<int, Rational>> pmf)
      : pmf_(std::move(pmf)) {
    validate();
  }

  static RoundDistribution uniform(int r_max) {
    if (r_max < 1) throw ConfigError("round distribution needs r_max >= 1");
    std::vector<std::pair<int, Rational>> pmf;
    pmf.reserve(r_max);
    for (int r = 1; r <= r_max; ++r) pmf.emplace_back(r, Rational(1, r_max));
    return RoundDistribution(std::move(pmf));
  }

  static RoundDistribution uniform_range(int r_lo, int r_hi) {
    if (r_lo < 1 || r_hi < r_lo) {
      throw ConfigError("round distribution needs 1 <= r_lo <= r_hi");
    }
    std::vector<std::pair<int, Rational>> pmf;
    for (int r = r_lo; r <= r_hi; ++r) {
      pmf.emplace_back(r, Rational(1, r_hi - r_lo + 1));
    }
    return RoundDistribution(std::move(pmf));
  }

  static RoundDistribution point_mass(int r) {
    if (r < 1) throw ConfigError("round count must be >= 1");
    return RoundDistribution({{r, Rational::integer(1)}});
  }

  const std::vector<std::pair<int, Rational>>& pmf() const { return pmf_; }

  int max_rounds() const { return pmf_.empty() ? 0 : pmf_.back().first; }

  Rational probability(int r) const {
    for (const auto& [round, p] : pmf_) {
      if (round == r) return p;
    }
    return Rational();
  }

  // Largest single-round mass: the adversary's best chance of guessing the
  // decision round, which is the coordination failure bound at lambda = t.
  Rational max_probability() const {
    Rational best;
    for (const auto& [round, p] : pmf_) {
      if (p > best) best = p;
    }
    return best;
  }

  int sample(SplitMix64& rng) const {
    // Inverse CDF over the pmf using one uniform draw.
    double u = rng.uniform();
    Rational cum;
    for (const auto& [round, p] : pmf_) {
      cum += p;
      if (u < cum.value()) return round;
    }
    return pmf_.back().first;
  }

 private:
  void validate() const {
    if (pmf_.empty()) throw ConfigError("round distribution is empty");
    Rational sum;
    int prev = 0;
    for (const auto& [round, p] : pmf_) {
      if (round < 1) throw ConfigError("round counts must be >= 1");
      if (round <= prev) {
        throw ConfigError("round distribution entries must be increasing");
      }
      if (!(p > Rational())) {
        throw ConfigError("round probabilities must be positive");
      }
      prev = round;
      sum += p;
    }
    if (sum != Rational::integer(1)) {
      throw ConfigError("round probabilities must sum to 1, got " + sum.str());
    }
  }

  std::vector<std::pair<int, Rational>> pmf_;
};

// Core protocol parameters. n benign agents and t adversarial participants
// share a broadcast medium; k is the action quorum and lambda the extra
// persistence margin benign agents demand before staying active.
struct ProtocolParams {
  int n = 0;
  int t = 0;
  int k = 1;
  int lambda = 0;
  RoundDistribution rounds;

  int total() const { return n + t; }

  // Coordination on a real event is possible only if the k + lambda
  // persistence threshold can be met by benign agents alone.
  bool feasible() const { return n >= k + lambda; }

  void validate() const {
    if (n < 1) throw ConfigError("n must be >= 1");
    if (t < 0) throw ConfigError("t must be >= 0");
    if (k < 1 || k > n) throw ConfigError("k must be in [1, n]");
    if (lambda < 0) throw ConfigError("lambda must be >= 0");
    if (rounds.pmf().empty()) throw ConfigError("round distribution required");
  }
};

}  // namespace ibgp
