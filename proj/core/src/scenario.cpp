#include "ibgp/scenario.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <string>

#include <json.hpp>

#include "ibgp/adaptive.hpp"
#include "ibgp/adversary.hpp"
#include "ibgp/errors.hpp"
#include "ibgp/multi_target.hpp"
#include "ibgp/protocol.hpp"
#include "ibgp/sensor.hpp"
#include "ibgp/sha256.hpp"
#include "ibgp/verifier.hpp"
#include "ibgp/version.hpp"

namespace ibgp {
namespace {

using nlohmann::json;

[[noreturn]] void fail_at(const std::string& path, const std::string& what) {
  throw ConfigError(path + ": " + what);
}

std::string type_name(const json& v) {
  switch (v.type()) {
    case json::value_t::null: return "null";
    case json::value_t::object: return "object";
    case json::value_t::array: return "array";
    case json::value_t::string: return "string";
    case json::value_t::boolean: return "boolean";
    case json::value_t::number_integer:
    case json::value_t::number_unsigned: return "integer";
    case json::value_t::number_float: return "number";
    default: return "unknown";
  }
}

void expect_object(const json& v, const std::string& path) {
  if (!v.is_object()) fail_at(path, "expected an object, got " + type_name(v));
}

void check_keys(const json& v, const std::string& path,
                std::initializer_list<const char*> allowed) {
  for (const auto& item : v.items()) {
    bool known = false;
    for (const char* key : allowed) {
      if (item.key() == key) {
        known = true;
        break;
      }
    }
    if (!known) fail_at(path + "." + item.key(), "unknown field");
  }
}

std::int64_t as_i64(const json& v, const std::string& path) {
  if (v.is_number_unsigned()) {
    auto u = v.get<std::uint64_t>();
    if (u > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) {
      fail_at(path, "integer out of range");
    }
    return static_cast<std::int64_t>(u);
  }
  if (!v.is_number_integer()) {
    fail_at(path, "expected an integer, got " + type_name(v));
  }
  return v.get<std::int64_t>();
}

int as_int(const json& v, const std::string& path) {
  std::int64_t x = as_i64(v, path);
  if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max()) {
    fail_at(path, "integer out of range");
  }
  return static_cast<int>(x);
}

std::uint64_t as_u64(const json& v, const std::string& path) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  std::int64_t x = as_i64(v, path);
  if (x < 0) fail_at(path, "expected a non-negative integer");
  return static_cast<std::uint64_t>(x);
}

double as_double(const json& v, const std::string& path) {
  if (!v.is_number()) fail_at(path, "expected a number, got " + type_name(v));
  return v.get<double>();
}

std::string as_string(const json& v, const std::string& path) {
  if (!v.is_string()) fail_at(path, "expected a string, got " + type_name(v));
  return v.get<std::string>();
}

const json& as_array(const json& v, const std::string& path) {
  if (!v.is_array()) fail_at(path, "expected an array, got " + type_name(v));
  return v;
}

const json* find(const json& obj, const char* key) {
  auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

const json& require(const json& obj, const std::string& path, const char* key) {
  const json* v = find(obj, key);
  if (!v) fail_at(path + "." + key, "missing field");
  return *v;
}

int get_int(const json& obj, const std::string& path, const char* key, int def) {
  const json* v = find(obj, key);
  return v ? as_int(*v, path + "." + key) : def;
}

double get_double(const json& obj, const std::string& path, const char* key,
                  double def) {
  const json* v = find(obj, key);
  return v ? as_double(*v, path + "." + key) : def;
}

std::string get_string(const json& obj, const std::string& path,
                       const char* key, const std::string& def) {
  const json* v = find(obj, key);
  return v ? as_string(*v, path + "." + key) : def;
}

Rational parse_rational(const std::string& text, const std::string& path) {
  auto parse_part = [&](const std::string& part) {
    if (part.empty()) fail_at(path, "malformed rational \"" + text + "\"");
    std::size_t used = 0;
    std::int64_t value = 0;
    try {
      value = std::stoll(part, &used);
    } catch (const std::exception&) {
      fail_at(path, "malformed rational \"" + text + "\"");
    }
    if (used != part.size()) fail_at(path, "malformed rational \"" + text + "\"");
    return value;
  };
  auto slash = text.find('/');
  if (slash == std::string::npos) {
    return Rational::integer(parse_part(text));
  }
  std::int64_t num = parse_part(text.substr(0, slash));
  std::int64_t den = parse_part(text.substr(slash + 1));
  if (den <= 0) fail_at(path, "rational denominator must be positive");
  return Rational(num, den);
}

RoundDistribution parse_rounds(const json& v, const std::string& path) {
  expect_object(v, path);
  check_keys(v, path, {"uniform", "uniform_range", "point", "pmf"});
  if (v.size() != 1) {
    fail_at(path, "expected exactly one of uniform, uniform_range, point, pmf");
  }
  try {
    if (const json* u = find(v, "uniform")) {
      return RoundDistribution::uniform(as_int(*u, path + ".uniform"));
    }
    if (const json* ur = find(v, "uniform_range")) {
      const json& arr = as_array(*ur, path + ".uniform_range");
      if (arr.size() != 2) {
        fail_at(path + ".uniform_range", "expected [lo, hi]");
      }
      return RoundDistribution::uniform_range(
          as_int(arr[0], path + ".uniform_range[0]"),
          as_int(arr[1], path + ".uniform_range[1]"));
    }
    if (const json* p = find(v, "point")) {
      return RoundDistribution::point_mass(as_int(*p, path + ".point"));
    }
    const json& pmf = as_array(require(v, path, "pmf"), path + ".pmf");
    std::vector<std::pair<int, Rational>> entries;
    for (std::size_t i = 0; i < pmf.size(); ++i) {
      std::string entry_path = path + ".pmf[" + std::to_string(i) + "]";
      const json& entry = as_array(pmf[i], entry_path);
      if (entry.size() != 2) fail_at(entry_path, "expected [round, \"p/q\"]");
      int round = as_int(entry[0], entry_path + "[0]");
      Rational prob = parse_rational(as_string(entry[1], entry_path + "[1]"),
                                     entry_path + "[1]");
      entries.emplace_back(round, prob);
    }
    return RoundDistribution(std::move(entries));
  } catch (const BudgetError&) {
    throw;
  } catch (const ConfigError& e) {
    std::string what = e.what();
    if (what.rfind(path, 0) == 0) throw;
    fail_at(path, what);
  }
}

struct AttackerSpecNode {
  std::string name;
  double p = 0.5;
};

AttackerSpecNode parse_attacker(const json& v, const std::string& path) {
  expect_object(v, path);
  check_keys(v, path, {"name", "p"});
  AttackerSpecNode spec;
  spec.name = as_string(require(v, path, "name"), path + ".name");
  if (!is_known_attacker(spec.name)) {
    fail_at(path + ".name", "unknown attacker \"" + spec.name + "\"");
  }
  if (const json* p = find(v, "p")) {
    if (spec.name != "random_p") {
      fail_at(path + ".p", "p is only meaningful for random_p");
    }
    spec.p = as_double(*p, path + ".p");
    if (spec.p < 0.0 || spec.p > 1.0) {
      fail_at(path + ".p", "p must lie in [0, 1]");
    }
  }
  return spec;
}

ProtocolParams parse_protocol_params(const json& params,
                                     const std::string& path) {
  ProtocolParams p;
  p.n = as_int(require(params, path, "n"), path + ".n");
  p.t = as_int(require(params, path, "t"), path + ".t");
  p.k = as_int(require(params, path, "k"), path + ".k");
  p.lambda = as_int(require(params, path, "lambda"), path + ".lambda");
  p.rounds = parse_rounds(require(params, path, "rounds"), path + ".rounds");
  p.validate();
  return p;
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

void csv_row(std::string& csv, std::initializer_list<std::string> cells) {
  bool first = true;
  for (const auto& cell : cells) {
    if (!first) csv += ',';
    csv += cell;
    first = false;
  }
  csv += '\n';
}

json attack_rows_json(const AttackSequence& attack) {
  json rows = json::array();
  for (const auto& round : attack.rows) {
    std::string bits(round.size(), '0');
    for (std::size_t i = 0; i < round.size(); ++i) {
      if (round[i]) bits[i] = '1';
    }
    rows.push_back(bits);
  }
  return rows;
}

json witness_json(const std::optional<VerificationWitness>& witness) {
  if (!witness) return nullptr;
  json w;
  w["observers"] = witness->observer_count;
  w["kind"] = to_string(witness->kind);
  w["probability"] = witness->probability.str();
  w["failing_rounds"] = witness->failing_rounds;
  w["attack_rows"] = attack_rows_json(witness->attack);
  return w;
}

// Post-parse scenario envelope with resolved seed, trials, budget and jobs.
// trials/budget stay 0 until a command resolves its own default, so the
// manifest echoes what was actually used.
struct Envelope {
  std::string command;
  std::uint64_t seed = 1;
  std::uint64_t trials = 0;
  bool trials_given = false;
  std::uint64_t budget = 0;
  bool budget_given = false;
  int jobs = 1;
  json params = json::object();

  std::uint64_t trials_or(std::uint64_t def) {
    if (!trials_given) trials = def;
    return trials;
  }
  std::uint64_t budget_or(std::uint64_t def) {
    if (!budget_given) budget = def;
    return budget;
  }
};

Envelope parse_envelope(const json& root, const std::string& expect_command,
                        const RunOptions& options) {
  expect_object(root, "$");
  check_keys(root, "$", {"command", "seed", "trials", "budget", "jobs", "params"});
  Envelope env;
  env.command = as_string(require(root, "$", "command"), "$.command");
  if (!expect_command.empty() && env.command != expect_command) {
    fail_at("$.command", "scenario is for \"" + env.command +
                             "\", invoked as \"" + expect_command + "\"");
  }
  if (const json* v = find(root, "seed")) env.seed = as_u64(*v, "$.seed");
  if (const json* v = find(root, "trials")) {
    env.trials = as_u64(*v, "$.trials");
    env.trials_given = true;
  }
  if (const json* v = find(root, "budget")) {
    env.budget = as_u64(*v, "$.budget");
    env.budget_given = true;
  }
  if (const json* v = find(root, "jobs")) env.jobs = as_int(*v, "$.jobs");
  if (const json* v = find(root, "params")) {
    expect_object(*v, "$.params");
    env.params = *v;
  }

  if (options.seed) env.seed = *options.seed;
  if (options.trials) {
    env.trials = *options.trials;
    env.trials_given = true;
  }
  if (options.budget) {
    env.budget = *options.budget;
    env.budget_given = true;
  }
  if (options.jobs) env.jobs = *options.jobs;
  if (env.jobs < 1) fail_at("$.jobs", "jobs must be >= 1");
  return env;
}

struct CommandOutput {
  json result;
  std::string csv;
  std::vector<std::string> check_failures;

  void check(bool passed, const std::string& name, const std::string& detail) {
    json entry;
    entry["name"] = name;
    entry["passed"] = passed;
    result["checks"].push_back(entry);
    if (!passed) check_failures.push_back(name + ": " + detail);
  }
};

// ---- verify ----

CommandOutput cmd_verify(Envelope& env) {
  const std::string path = "$.params";
  check_keys(env.params, path, {"n", "t", "k", "lambda", "rounds", "mode"});
  ProtocolParams params = parse_protocol_params(env.params, path);

  VerifyOptions options;
  std::string mode = get_string(env.params, path, "mode", "reduced");
  if (mode == "reduced") {
    options.mode = VerifyOptions::Mode::Reduced;
  } else if (mode == "raw") {
    options.mode = VerifyOptions::Mode::Raw;
  } else {
    fail_at(path + ".mode", "expected \"reduced\" or \"raw\"");
  }
  options.budget = env.budget_or(options.budget);

  VerificationReport report = exhaustive_verify(params, options);

  CommandOutput out;
  out.result["command"] = "verify";
  out.result["n"] = params.n;
  out.result["t"] = params.t;
  out.result["k"] = params.k;
  out.result["lambda"] = params.lambda;
  out.result["mode"] = mode;
  out.result["worst_mis"] = report.worst_mis.str();
  out.result["worst_mis_value"] = report.worst_mis.value();
  out.result["worst_false"] = report.worst_false.str();
  out.result["worst_false_value"] = report.worst_false.value();
  out.result["bound"] = report.bound.str();
  out.result["mis_within_bound"] = report.mis_within_bound;
  out.result["executions"] = report.executions;
  out.result["per_class"] = json::array();
  for (const auto& row : report.per_class) {
    json entry;
    entry["observers"] = row.observer_count;
    entry["worst_mis"] = row.mis_probability.str();
    entry["worst_false"] = row.false_probability.str();
    out.result["per_class"].push_back(entry);
  }
  out.result["witnesses"]["mis"] = witness_json(report.mis_witness);
  out.result["witnesses"]["false"] = witness_json(report.false_witness);
  out.result["checks"] = json::array();

  if (params.lambda == params.t) {
    out.check(report.mis_within_bound, "mis_within_bound",
              "worst MisCoordination probability " + report.worst_mis.str() +
                  " exceeds the bound " + report.bound.str());
  }

  csv_row(out.csv, {"observers", "worst_mis", "worst_false"});
  for (const auto& row : report.per_class) {
    csv_row(out.csv, {std::to_string(row.observer_count),
                      row.mis_probability.str(), row.false_probability.str()});
  }
  return out;
}

// ---- simulate ----

CommandOutput cmd_simulate(Envelope& env) {
  const std::string path = "$.params";
  check_keys(env.params, path,
             {"n", "t", "k", "lambda", "rounds", "observations", "attacker"});
  ProtocolParams params = parse_protocol_params(env.params, path);

  const json& obs_node = require(env.params, path, "observations");
  expect_object(obs_node, path + ".observations");
  check_keys(obs_node, path + ".observations", {"pattern", "observers"});
  if (obs_node.size() != 1) {
    fail_at(path + ".observations", "expected exactly one of pattern, observers");
  }
  std::vector<std::uint8_t> observations(params.n, 0);
  if (const json* pattern = find(obs_node, "pattern")) {
    std::string bits = as_string(*pattern, path + ".observations.pattern");
    if (static_cast<int>(bits.size()) != params.n) {
      fail_at(path + ".observations.pattern",
              "pattern length must equal n = " + std::to_string(params.n));
    }
    for (int i = 0; i < params.n; ++i) {
      if (bits[i] != '0' && bits[i] != '1') {
        fail_at(path + ".observations.pattern", "pattern must be 0s and 1s");
      }
      observations[i] = bits[i] == '1' ? 1 : 0;
    }
  } else {
    int c = as_int(*find(obs_node, "observers"), path + ".observations.observers");
    if (c < 0 || c > params.n) {
      fail_at(path + ".observations.observers", "observers must be in [0, n]");
    }
    for (int i = 0; i < c; ++i) observations[i] = 1;
  }

  AttackerSpecNode spec =
      parse_attacker(require(env.params, path, "attacker"), path + ".attacker");
  auto attacker = make_attacker(spec.name, spec.p);

  std::uint64_t trials = env.trials_or(10000);
  MonteCarloResult mc =
      monte_carlo_estimate(params, observations, *attacker, trials, env.seed,
                           env.jobs);

  CommandOutput out;
  out.result["command"] = "simulate";
  out.result["n"] = params.n;
  out.result["t"] = params.t;
  out.result["k"] = params.k;
  out.result["lambda"] = params.lambda;
  out.result["attacker"] = spec.name;
  if (spec.name == "random_p") out.result["attacker_p"] = spec.p;
  std::string bits(params.n, '0');
  for (int i = 0; i < params.n; ++i) bits[i] = observations[i] ? '1' : '0';
  out.result["observations"] = bits;
  out.result["trials"] = mc.trials;
  out.result["checks"] = json::array();

  static const OutcomeKind kKinds[] = {
      OutcomeKind::Coordinated, OutcomeKind::MisCoordination,
      OutcomeKind::FalseCoordination, OutcomeKind::AllAbstain};
  csv_row(out.csv, {"outcome", "count", "rate", "wilson_lo", "wilson_hi"});
  for (OutcomeKind kind : kKinds) {
    Interval iv = mc.interval(kind);
    json entry;
    entry["count"] = mc.count(kind);
    entry["rate"] = mc.rate(kind);
    entry["wilson_lo"] = iv.lo;
    entry["wilson_hi"] = iv.hi;
    out.result["outcomes"][to_string(kind)] = entry;
    csv_row(out.csv, {to_string(kind), std::to_string(mc.count(kind)),
                      fmt_double(mc.rate(kind)), fmt_double(iv.lo),
                      fmt_double(iv.hi)});
  }
  return out;
}

// ---- diagram ----

CommandOutput cmd_diagram(Envelope& env) {
  const std::string path = "$.params";
  check_keys(env.params, path, {"n", "t", "k", "lambda", "rounds", "observers"});
  ProtocolParams params = parse_protocol_params(env.params, path);
  int observers = get_int(env.params, path, "observers", params.k);

  DiagramResult diagram = enumerate_diagram(params, observers);

  CommandOutput out;
  out.result["command"] = "diagram";
  out.result["n"] = params.n;
  out.result["t"] = params.t;
  out.result["k"] = params.k;
  out.result["lambda"] = params.lambda;
  out.result["observers"] = diagram.observer_count;
  out.result["families"] = json::array();
  out.result["checks"] = json::array();

  csv_row(out.csv, {"family", "crossing_round", "r_tot", "outcome"});
  for (const auto& family : diagram.families) {
    json f;
    f["label"] = family.label;
    f["crossing_round"] = family.crossing_round;
    f["attack_rows"] = attack_rows_json(family.attack);
    f["cells"] = json::array();
    int mis_cells = 0;
    for (const auto& cell : family.cells) {
      json c;
      c["r_tot"] = cell.r_tot;
      c["outcome"] = to_string(cell.outcome);
      f["cells"].push_back(c);
      if (cell.outcome == OutcomeKind::MisCoordination) ++mis_cells;
      csv_row(out.csv, {family.label, std::to_string(family.crossing_round),
                        std::to_string(cell.r_tot), to_string(cell.outcome)});
    }
    out.result["families"].push_back(f);
    out.check(mis_cells == 1, "one_mis_cell_" + family.label,
              "family has " + std::to_string(mis_cells) +
                  " MisCoordination cells, expected exactly 1");
  }
  return out;
}

// ---- sweep ----

CommandOutput cmd_sweep(Envelope& env) {
  const std::string path = "$.params";
  check_keys(env.params, path,
             {"n_values", "t", "k", "lambda_values", "attackers", "horizon",
              "obs_draw_max", "rounds", "death_penalty"});

  SweepConfig config;
  const json& n_values = as_array(require(env.params, path, "n_values"),
                                  path + ".n_values");
  for (std::size_t i = 0; i < n_values.size(); ++i) {
    config.n_values.push_back(
        as_int(n_values[i], path + ".n_values[" + std::to_string(i) + "]"));
  }
  const json& lambda_values = as_array(
      require(env.params, path, "lambda_values"), path + ".lambda_values");
  for (std::size_t i = 0; i < lambda_values.size(); ++i) {
    config.lambda_values.push_back(as_int(
        lambda_values[i], path + ".lambda_values[" + std::to_string(i) + "]"));
  }
  const json& attackers = as_array(require(env.params, path, "attackers"),
                                   path + ".attackers");
  for (std::size_t i = 0; i < attackers.size(); ++i) {
    AttackerSpecNode spec = parse_attacker(
        attackers[i], path + ".attackers[" + std::to_string(i) + "]");
    config.attackers.push_back({spec.name, spec.p});
  }
  config.t = get_int(env.params, path, "t", config.t);
  config.k = get_int(env.params, path, "k", config.k);
  config.horizon = get_int(env.params, path, "horizon", config.horizon);
  config.obs_draw_max =
      get_int(env.params, path, "obs_draw_max", config.obs_draw_max);
  if (const json* rounds = find(env.params, "rounds")) {
    config.rounds = parse_rounds(*rounds, path + ".rounds");
  }
  config.death_penalty =
      get_double(env.params, path, "death_penalty", config.death_penalty);
  config.episodes = env.trials_or(config.episodes);
  config.jobs = env.jobs;

  SweepResult sweep = lambda_sweep(config, env.seed);

  CommandOutput out;
  out.result["command"] = "sweep";
  out.result["t"] = config.t;
  out.result["k"] = config.k;
  out.result["episodes"] = config.episodes;
  out.result["horizon"] = config.horizon;
  out.result["obs_draw_max"] = config.obs_draw_max;
  out.result["death_penalty"] = config.death_penalty;
  out.result["cells"] = json::array();
  out.result["checks"] = json::array();

  csv_row(out.csv, {"n", "lambda", "attacker", "episodes", "success_rate",
                    "wilson_lo", "wilson_hi", "mean_deaths", "mean_reward"});
  for (const auto& cell : sweep.cells) {
    json c;
    c["n"] = cell.n;
    c["lambda"] = cell.lambda;
    c["attacker"] = cell.attacker;
    c["episodes"] = cell.episodes;
    c["success_rate"] = cell.success_rate;
    c["wilson_lo"] = cell.success_interval.lo;
    c["wilson_hi"] = cell.success_interval.hi;
    c["mean_deaths"] = cell.mean_deaths;
    c["mean_reward"] = cell.mean_reward;
    out.result["cells"].push_back(c);
    csv_row(out.csv,
            {std::to_string(cell.n), std::to_string(cell.lambda),
             cell.attacker, std::to_string(cell.episodes),
             fmt_double(cell.success_rate), fmt_double(cell.success_interval.lo),
             fmt_double(cell.success_interval.hi), fmt_double(cell.mean_deaths),
             fmt_double(cell.mean_reward)});
  }

  // Robust-choice summary: for each n, the lambda whose worst-case success
  // rate over the attacker grid is highest.
  out.result["per_n"] = json::array();
  for (int n : config.n_values) {
    json entry;
    entry["n"] = n;
    entry["per_lambda"] = json::array();
    int best_lambda = 0;
    double best_rate = -1.0;
    for (int lambda : config.lambda_values) {
      double worst = 1.0;
      for (const auto& spec : config.attackers) {
        std::string label = spec.name;
        if (spec.name == "random_p") {
          label += ":" + std::string(fmt_double(spec.p));
        }
        worst = std::min(worst, sweep.cell(n, lambda, label).success_rate);
      }
      json row;
      row["lambda"] = lambda;
      row["worst_success_rate"] = worst;
      entry["per_lambda"].push_back(row);
      if (worst > best_rate) {
        best_rate = worst;
        best_lambda = lambda;
      }
    }
    entry["best_lambda"] = best_lambda;
    out.result["per_n"].push_back(entry);
  }
  return out;
}

// ---- multi_target (concentration bound) ----

CommandOutput cmd_multi_target(Envelope& env) {
  const std::string path = "$.params";
  check_keys(env.params, path, {"m", "n", "t", "k", "lambda", "q", "rounds"});

  CountBoundConfig config;
  config.m = get_int(env.params, path, "m", config.m);
  config.n = get_int(env.params, path, "n", config.n);
  config.t = get_int(env.params, path, "t", config.t);
  config.k = get_int(env.params, path, "k", config.k);
  config.lambda = get_int(env.params, path, "lambda", config.lambda);
  config.q = get_int(env.params, path, "q", config.q);
  if (const json* rounds = find(env.params, "rounds")) {
    config.rounds = parse_rounds(*rounds, path + ".rounds");
  }

  std::uint64_t trials = env.trials_or(10000);
  CountBoundStats stats = count_bound_check(config, trials, env.seed, env.jobs);

  CommandOutput out;
  out.result["command"] = "multi_target";
  out.result["m"] = config.m;
  out.result["n"] = config.n;
  out.result["t"] = config.t;
  out.result["k"] = config.k;
  out.result["lambda"] = config.lambda;
  out.result["q"] = config.q;
  out.result["trials"] = stats.trials;
  out.result["failing_threshold"] = stats.failing_threshold;
  out.result["envelope"] = stats.envelope;
  out.result["violating_runs"] = stats.violating_runs;
  out.result["violation_fraction"] = stats.violation_fraction;
  out.result["mean_failing_targets"] = stats.mean_failing_targets;
  out.result["checks"] = json::array();

  out.check(stats.violation_fraction <= 2.0 * stats.envelope,
            "violation_fraction_within_envelope",
            "measured fraction " + std::string(fmt_double(stats.violation_fraction)) +
                " exceeds twice the envelope " +
                std::string(fmt_double(stats.envelope)));

  csv_row(out.csv, {"metric", "value"});
  csv_row(out.csv, {"trials", std::to_string(stats.trials)});
  csv_row(out.csv, {"failing_threshold", std::to_string(stats.failing_threshold)});
  csv_row(out.csv, {"envelope", fmt_double(stats.envelope)});
  csv_row(out.csv, {"violating_runs", std::to_string(stats.violating_runs)});
  csv_row(out.csv, {"violation_fraction", fmt_double(stats.violation_fraction)});
  csv_row(out.csv,
          {"mean_failing_targets", fmt_double(stats.mean_failing_targets)});
  return out;
}

// ---- select ----

CommandOutput cmd_select(Envelope& env) {
  const std::string path = "$.params";
  check_keys(env.params, path, {"instances", "n_max", "m_max", "k_max"});
  int instances = get_int(env.params, path, "instances", 200);
  int n_max = get_int(env.params, path, "n_max", 12);
  int m_max = get_int(env.params, path, "m_max", 8);
  int k_max = get_int(env.params, path, "k_max", 3);
  if (instances < 1) fail_at(path + ".instances", "instances must be >= 1");
  if (n_max < 1 || m_max < 1 || k_max < 1) {
    fail_at(path, "n_max, m_max and k_max must be >= 1");
  }
  std::uint64_t budget = env.budget_or(1ull << 22);

  CommandOutput out;
  out.result["command"] = "select";
  out.result["instances"] = instances;
  out.result["n_max"] = n_max;
  out.result["m_max"] = m_max;
  out.result["k_max"] = k_max;
  out.result["rows"] = json::array();
  out.result["checks"] = json::array();

  csv_row(out.csv, {"instance", "n", "m", "max_quorum", "greedy_reward",
                    "optimal_reward", "ratio", "valid"});

  bool all_valid = true;
  bool all_within = true;
  double worst_ratio = std::numeric_limits<double>::infinity();
  for (int i = 0; i < instances; ++i) {
    SplitMix64 rng(derive_seed(env.seed, {5001, static_cast<std::uint64_t>(i)}));
    int n = rng.range(1, n_max);
    int m = rng.range(1, m_max);
    SelectionInstance instance = random_selection_instance(n, m, k_max, rng);

    SelectionResult greedy = greedy_select(instance);
    SelectionResult optimal = brute_force_select(instance, budget);

    int max_quorum = 1;
    for (const auto& target : instance.targets) {
      max_quorum = std::max(max_quorum, target.k);
    }

    bool valid = selection_is_valid(instance, greedy);
    double bound = optimal.total_reward / max_quorum;
    bool within = greedy.total_reward + 1e-9 >= bound;
    double ratio = optimal.total_reward > 0.0
                       ? greedy.total_reward / optimal.total_reward
                       : 1.0;
    all_valid = all_valid && valid;
    all_within = all_within && within;
    worst_ratio = std::min(worst_ratio, ratio);

    json row;
    row["instance"] = i;
    row["n"] = n;
    row["m"] = m;
    row["max_quorum"] = max_quorum;
    row["greedy_reward"] = greedy.total_reward;
    row["optimal_reward"] = optimal.total_reward;
    row["ratio"] = ratio;
    row["valid"] = valid;
    out.result["rows"].push_back(row);
    csv_row(out.csv,
            {std::to_string(i), std::to_string(n), std::to_string(m),
             std::to_string(max_quorum), fmt_double(greedy.total_reward),
             fmt_double(optimal.total_reward), fmt_double(ratio),
             valid ? "1" : "0"});
  }
  out.result["worst_ratio"] = worst_ratio;

  out.check(all_valid, "greedy_selections_valid",
            "a greedy selection violated quorum or disjointness");
  out.check(all_within, "greedy_within_quorum_factor",
            "a greedy selection fell below optimal / max_quorum");
  return out;
}

// ---- sensor ----

CommandOutput cmd_sensor(Envelope& env) {
  const std::string path = "$.params";
  check_keys(env.params, path,
             {"algorithm", "sensors", "spacing", "eta", "delta", "rho",
              "noise_bound", "attackers", "trajectory", "mode", "offset_cells"});

  SensorWorld world;
  world.sensor_count = get_int(env.params, path, "sensors", world.sensor_count);
  world.spacing = get_double(env.params, path, "spacing", world.spacing);
  world.eta = get_double(env.params, path, "eta", world.eta);
  world.delta = get_double(env.params, path, "delta", world.delta);
  world.rho = get_double(env.params, path, "rho", world.rho);
  world.noise_bound =
      get_double(env.params, path, "noise_bound", world.noise_bound);
  if (const json* attackers = find(env.params, "attackers")) {
    const json& arr = as_array(*attackers, path + ".attackers");
    world.attacker_indices.clear();
    for (std::size_t i = 0; i < arr.size(); ++i) {
      world.attacker_indices.push_back(
          as_int(arr[i], path + ".attackers[" + std::to_string(i) + "]"));
    }
  }
  world.validate();

  TargetTrajectory trajectory =
      TargetTrajectory::linear(0.0, 1.0, world.sensor_count);
  if (const json* traj = find(env.params, "trajectory")) {
    const std::string tpath = path + ".trajectory";
    expect_object(*traj, tpath);
    check_keys(*traj, tpath, {"start", "velocity", "steps", "positions"});
    if (const json* positions = find(*traj, "positions")) {
      if (traj->size() != 1) {
        fail_at(tpath, "positions excludes start, velocity and steps");
      }
      const json& arr = as_array(*positions, tpath + ".positions");
      trajectory.positions.clear();
      for (std::size_t i = 0; i < arr.size(); ++i) {
        trajectory.positions.push_back(
            as_double(arr[i], tpath + ".positions[" + std::to_string(i) + "]"));
      }
      if (trajectory.positions.empty()) {
        fail_at(tpath + ".positions", "trajectory needs at least one step");
      }
    } else {
      trajectory = TargetTrajectory::linear(
          get_double(*traj, tpath, "start", 0.0),
          get_double(*traj, tpath, "velocity", 1.0),
          get_int(*traj, tpath, "steps", world.sensor_count));
    }
  }

  std::string algorithm = get_string(env.params, path, "algorithm", "consensus");
  if (algorithm != "consensus" && algorithm != "vanilla") {
    fail_at(path + ".algorithm", "expected \"consensus\" or \"vanilla\"");
  }
  std::string mode_name = get_string(env.params, path, "mode", "silent");
  SensorAttackMode mode;
  if (mode_name == "silent") {
    mode = SensorAttackMode::Silent;
  } else if (mode_name == "fake_offset") {
    mode = SensorAttackMode::FakeOffset;
  } else {
    fail_at(path + ".mode", "expected \"silent\" or \"fake_offset\"");
  }
  int offset_cells = 3;
  if (const json* offset = find(env.params, "offset_cells")) {
    if (mode != SensorAttackMode::FakeOffset) {
      fail_at(path + ".offset_cells", "offset_cells requires mode fake_offset");
    }
    offset_cells = as_int(*offset, path + ".offset_cells");
  }

  SensorSimulation sim =
      algorithm == "consensus"
          ? simulate_consensus(world, trajectory, mode, offset_cells, env.seed)
          : simulate_vanilla(world, trajectory, mode, offset_cells, env.seed);

  CommandOutput out;
  out.result["command"] = "sensor";
  out.result["algorithm"] = algorithm;
  out.result["mode"] = mode_name;
  if (mode == SensorAttackMode::FakeOffset) {
    out.result["offset_cells"] = offset_cells;
  }
  json world_json;
  world_json["sensors"] = world.sensor_count;
  world_json["spacing"] = world.spacing;
  world_json["eta"] = world.eta;
  world_json["delta"] = world.delta;
  world_json["rho"] = world.rho;
  world_json["noise_bound"] = world.noise_bound;
  world_json["attackers"] = world.attacker_indices;
  out.result["world"] = world_json;
  out.result["steps"] = sim.rows.size();
  out.result["all_consistent"] = sim.all_consistent;
  out.result["rows"] = json::array();
  out.result["final_beliefs"] = json::array();
  for (const auto& belief : sim.final_beliefs) {
    if (belief.has_value()) {
      out.result["final_beliefs"].push_back(*belief);
    } else {
      out.result["final_beliefs"].push_back(nullptr);
    }
  }
  out.result["checks"] = json::array();

  csv_row(out.csv, {"step", "true_signal", "discretized_signal", "belief_mean",
                    "belief_std", "defined_beliefs", "consistent"});
  for (const auto& row : sim.rows) {
    json r;
    r["step"] = row.step;
    r["true_signal"] = row.true_signal;
    r["discretized_signal"] = row.discretized_signal;
    r["belief_mean"] = row.belief_mean;
    r["belief_std"] = row.belief_std;
    r["defined_beliefs"] = row.defined_beliefs;
    r["consistent"] = row.consistent != 0;
    out.result["rows"].push_back(r);
    csv_row(out.csv,
            {std::to_string(row.step), fmt_double(row.true_signal),
             fmt_double(row.discretized_signal), fmt_double(row.belief_mean),
             fmt_double(row.belief_std), std::to_string(row.defined_beliefs),
             row.consistent ? "1" : "0"});
  }

  if (algorithm == "consensus") {
    out.check(sim.all_consistent, "beliefs_consistent",
              "defined benign beliefs diverged on at least one step");
  }
  return out;
}

std::string join_path(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

void write_file(const std::string& filepath, const std::string& content) {
  std::ofstream stream(filepath, std::ios::binary | std::ios::trunc);
  if (!stream) throw ConfigError("cannot open " + filepath + " for writing");
  stream.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!stream) throw ConfigError("failed writing " + filepath);
}

}  // namespace

RunOutcome run_scenario_json(const std::string& json_text,
                             const std::string& expect_command,
                             const RunOptions& options) {
  auto start = std::chrono::steady_clock::now();

  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("scenario is not valid JSON: ") + e.what());
  }
  Envelope env = parse_envelope(root, expect_command, options);

  CommandOutput cmd;
  if (env.command == "verify") {
    cmd = cmd_verify(env);
  } else if (env.command == "simulate") {
    cmd = cmd_simulate(env);
  } else if (env.command == "diagram") {
    cmd = cmd_diagram(env);
  } else if (env.command == "sweep") {
    cmd = cmd_sweep(env);
  } else if (env.command == "multi_target") {
    cmd = cmd_multi_target(env);
  } else if (env.command == "select") {
    cmd = cmd_select(env);
  } else if (env.command == "sensor") {
    cmd = cmd_sensor(env);
  } else {
    fail_at("$.command", "unknown command \"" + env.command + "\"");
  }
  cmd.result["seed"] = env.seed;

  RunOutcome outcome;
  outcome.command = env.command;
  outcome.check_failures = cmd.check_failures;
  outcome.exit_code = cmd.check_failures.empty() ? 0 : 1;
  outcome.result_json = cmd.result.dump(2) + "\n";
  outcome.csv = cmd.csv;
  outcome.csv_name = env.command + ".csv";

  if (!options.out_dir.empty()) {
    std::filesystem::create_directories(options.out_dir);
    std::string result_path = join_path(options.out_dir, "result.json");
    std::string csv_path = join_path(options.out_dir, outcome.csv_name);
    write_file(result_path, outcome.result_json);
    outcome.written.push_back(result_path);
    write_file(csv_path, outcome.csv);
    outcome.written.push_back(csv_path);

    auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                       std::chrono::steady_clock::now() - start)
                       .count();
    json manifest;
    manifest["tool"] = kToolName;
    manifest["version"] = kToolVersion;
    manifest["command"] = env.command;
    manifest["scenario_sha256"] = sha256_hex(json_text);
    manifest["seed"] = env.seed;
    manifest["trials"] = env.trials;
    manifest["budget"] = env.budget;
    manifest["jobs"] = env.jobs;
    manifest["wall_time_ms"] = elapsed;
    manifest["outputs"] = json::array();
    auto describe = [](const std::string& file, const std::string& content) {
      json entry;
      entry["file"] = file;
      entry["sha256"] = sha256_hex(content);
      entry["bytes"] = content.size();
      return entry;
    };
    manifest["outputs"].push_back(describe("result.json", outcome.result_json));
    manifest["outputs"].push_back(describe(outcome.csv_name, outcome.csv));
    outcome.manifest_json = manifest.dump(2) + "\n";
    std::string manifest_path = join_path(options.out_dir, "manifest.json");
    write_file(manifest_path, outcome.manifest_json);
    outcome.written.push_back(manifest_path);
  }
  return outcome;
}

RunOutcome run_scenario_file(const std::string& path,
                             const std::string& expect_command,
                             const RunOptions& options) {
  std::ifstream stream(path, std::ios::binary);
  if (!stream) throw ConfigError("cannot open scenario file " + path);
  std::string text((std::istreambuf_iterator<char>(stream)),
                   std::istreambuf_iterator<char>());
  return run_scenario_json(text, expect_command, options);
}

}  // namespace ibgp
