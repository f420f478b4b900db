#pragma once

// Experiment plumbing: JSON configuration with field-path errors, seeded
// repetitions, aggregation into metrics records, parameter sweeps and
// deterministic CSV output with a JSON metadata sidecar.
//
// Seed policy: run i of an experiment uses seed + i; agent m of that run
// draws noise from stream_seed(seed + i, m).

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <type_traits>
#include <vector>

#include "json.hpp"

#include "distlingape/baselines.hpp"
#include "distlingape/bai.hpp"
#include "distlingape/environment.hpp"
#include "distlingape/protocol.hpp"

namespace distlingape::harness {

using json = nlohmann::json;

/// Invalid or inconsistent configuration; the message starts with the
/// offending field path.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ScenarioKind { synthetic, service };
enum class Algorithm { distlingape, independent, oful };

inline const char* to_string(ScenarioKind s) { return s == ScenarioKind::synthetic ? "synthetic" : "service-placement"; }
inline const char* to_string(Algorithm a) {
  switch (a) {
    case Algorithm::distlingape: return "distlingape";
    case Algorithm::independent: return "independent";
    case Algorithm::oful: return "oful";
  }
  return "?";
}

struct SyntheticParams {
  std::size_t d = 5;
  double phi = 0.01;
  double noise_std = 1.0;
};

struct ExperimentConfig {
  ScenarioKind scenario = ScenarioKind::synthetic;
  SyntheticParams synthetic;
  ScenarioParams service;

  Algorithm algorithm = Algorithm::distlingape;
  Strategy strategy = Strategy::ratio;
  std::size_t agents = 1;
  std::optional<double> threshold;         // D; infinite when unset and no budget
  std::optional<std::uint64_t> budget;     // B_c
  std::optional<double> tau_estimate;      // tau used to turn B_c into D
  double failure_probability = 0.0;

  double delta_m = 0.05;
  double epsilon = 0.0;
  double lambda = 1.0;
  std::optional<double> S;  // defaults to ||theta*||
  std::optional<double> R;  // defaults to the environment's noise scale
  bool noiseless = false;
  std::vector<double> agent_scales;

  std::size_t repetitions = 1;
  std::uint64_t seed = 1;
  std::uint64_t max_rounds = 10'000'000;
  std::optional<std::uint64_t> horizon;  // rounds of deployment for cumulative reward
  bool noisy_cumulative = false;
  std::optional<double> reference_tau;  // per-agent tau of a single-agent run
  std::string output = "results.csv";

  std::size_t arm_count() const { return scenario == ScenarioKind::synthetic ? synthetic.d + 1 : service.services; }
  std::size_t dim() const { return scenario == ScenarioKind::synthetic ? synthetic.d : service.periods; }

  /// D after resolving the budget.
  double resolved_threshold() const {
    if (algorithm == Algorithm::independent) return std::numeric_limits<double>::infinity();
    if (budget) return threshold_from_budget(agents, *tau_estimate, dim(), *budget);
    return threshold.value_or(std::numeric_limits<double>::infinity());
  }

  void validate() const {
    auto fail = [](const std::string& path, const std::string& msg) { throw ConfigError(path + ": " + msg); };
    if (scenario == ScenarioKind::synthetic) {
      if (synthetic.d < 2) fail("scenario.d", "must be at least 2");
      if (!std::isfinite(synthetic.phi)) fail("scenario.phi", "must be finite");
      if (!(synthetic.noise_std >= 0.0)) fail("scenario.noise_std", "must be nonnegative");
    } else {
      try {
        service.validate();
      } catch (const std::invalid_argument& e) {
        fail("scenario", e.what());
      }
    }
    if (agents == 0) fail("agents", "must be at least 1");
    if (repetitions == 0) fail("repetitions", "must be at least 1");
    if (max_rounds == 0) fail("max_rounds", "must be at least 1");
    if (!(delta_m > 0.0 && delta_m < 1.0)) fail("delta_m", "must lie in (0,1)");
    if (!(static_cast<double>(agents) * delta_m < 1.0)) fail("delta_m", "agents * delta_m must be below 1");
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) fail("epsilon", "must be a nonnegative number");
    if (!(lambda > 0.0) || !std::isfinite(lambda)) fail("lambda", "must be positive");
    if (S && (!(*S > 0.0) || !std::isfinite(*S))) fail("S", "must be positive");
    if (R && (!(*R > 0.0) || !std::isfinite(*R))) fail("R", "must be positive");
    if (threshold && !(*threshold > 0.0)) fail("threshold", "must be positive");
    if (budget && threshold) fail("budget", "cannot be combined with threshold");
    if (budget && *budget == 0) fail("budget", "must be positive");
    if (budget && !tau_estimate) fail("tau_estimate", "required when budget is set");
    if (tau_estimate && !(*tau_estimate >= 2.0)) fail("tau_estimate", "must be at least 2");
    if (!(failure_probability >= 0.0 && failure_probability < 1.0)) fail("failure_probability", "must lie in [0,1)");
    if (!agent_scales.empty()) {
      if (agent_scales.size() != agents) fail("agent_scales", "needs exactly one entry per agent");
      for (double c : agent_scales) {
        if (!(c > 0.0) || !std::isfinite(c)) fail("agent_scales", "entries must be positive");
      }
    }
    if (horizon && *horizon == 0) fail("horizon", "must be positive");
    if (reference_tau && !(*reference_tau > 0.0)) fail("reference_tau", "must be positive");
    if (algorithm == Algorithm::oful) {
      if (!horizon) fail("horizon", "required for the oful algorithm");
      if (agents > arm_count()) fail("agents", "oful selects distinct arms, so agents must not exceed the arm count");
      if (!agent_scales.empty()) fail("agent_scales", "not supported by the oful algorithm");
    }
    if (output.empty()) fail("output", "must not be empty");
  }
};

namespace detail {

inline std::string join(const std::string& base, const std::string& key) {
  return base.empty() ? key : base + "." + key;
}

inline std::string describe(const json& v) {
  std::string s = v.dump();
  if (s.size() > 40) s = s.substr(0, 37) + "...";
  return s;
}

class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError((path_.empty() ? std::string("<root>") : path_) + ": expected an object");
  }

  const json* find(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end() || it->is_null()) return nullptr;
    return &*it;
  }

  std::string path(const char* key) const { return join(path_, key); }

  [[noreturn]] void bad(const char* key, const json& v, const char* expected) const {
    throw ConfigError(path(key) + ": expected " + expected + ", got " + describe(v));
  }

  void number(const char* key, double& out, bool allow_inf = false) {
    if (const json* v = find(key)) out = as_number(key, *v, allow_inf);
  }
  void number(const char* key, std::optional<double>& out, bool allow_inf = false) {
    if (const json* v = find(key)) out = as_number(key, *v, allow_inf);
  }
  template <class U>
  void integer(const char* key, U& out) {
    if (const json* v = find(key)) out = static_cast<U>(as_unsigned(key, *v));
  }
  template <class U>
  void integer(const char* key, std::optional<U>& out) {
    if (const json* v = find(key)) out = static_cast<U>(as_unsigned(key, *v));
  }
  void boolean(const char* key, bool& out) {
    if (const json* v = find(key)) {
      if (!v->is_boolean()) bad(key, *v, "a boolean");
      out = v->get<bool>();
    }
  }
  void text(const char* key, std::string& out) {
    if (const json* v = find(key)) {
      if (!v->is_string()) bad(key, *v, "a string");
      out = v->get<std::string>();
    }
  }
  void range(const char* key, Range& out) {
    if (const json* v = find(key)) {
      if (!v->is_array() || v->size() != 2 || !(*v)[0].is_number() || !(*v)[1].is_number()) {
        bad(key, *v, "a [lo, hi] pair of numbers");
      }
      out = Range{(*v)[0].get<double>(), (*v)[1].get<double>()};
    }
  }
  void numbers(const char* key, std::vector<double>& out) {
    if (const json* v = find(key)) {
      if (!v->is_array()) bad(key, *v, "an array of numbers");
      out.clear();
      for (const auto& e : *v) {
        if (!e.is_number()) bad(key, *v, "an array of numbers");
        out.push_back(e.get<double>());
      }
    }
  }

  /// Rejects keys that were never looked up, which catches typos.
  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError(path(it.key().c_str()) + ": unknown field");
    }
  }

 private:
  double as_number(const char* key, const json& v, bool allow_inf) const {
    if (v.is_number()) return v.get<double>();
    if (allow_inf && v.is_string()) {
      const auto s = v.get<std::string>();
      if (s == "inf" || s == "infinity" || s == "Infinity") return std::numeric_limits<double>::infinity();
    }
    bad(key, v, allow_inf ? "a number or \"inf\"" : "a number");
  }

  std::uint64_t as_unsigned(const char* key, const json& v) const {
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
    if (v.is_number_float()) {
      const double x = v.get<double>();
      if (x >= 0.0 && x == std::floor(x) && x < 1.8e19) return static_cast<std::uint64_t>(x);
    }
    bad(key, v, "a nonnegative integer");
  }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

}  // namespace detail

/// Builds a configuration from JSON. Missing fields keep their defaults;
/// unknown fields and type mismatches raise ConfigError with the field path.
inline ExperimentConfig parse_config(const json& j) {
  ExperimentConfig c;
  detail::ObjectReader root(j, "");

  if (const json* sj = root.find("scenario")) {
    detail::ObjectReader s(*sj, "scenario");
    std::string type = "synthetic";
    s.text("type", type);
    if (type == "synthetic") {
      c.scenario = ScenarioKind::synthetic;
      s.integer("d", c.synthetic.d);
      s.number("phi", c.synthetic.phi);
      s.number("noise_std", c.synthetic.noise_std);
    } else if (type == "service-placement") {
      c.scenario = ScenarioKind::service;
      ScenarioParams& p = c.service;
      s.integer("services", p.services);
      s.integer("periods", p.periods);
      s.integer("cells", p.cells);
      s.integer("users_per_cell", p.users_per_cell);
      s.number("bandwidth_hz", p.bandwidth_hz);
      s.number("tx_power_dbm", p.tx_power_dbm);
      s.number("noise_dbm", p.noise_dbm);
      s.number("interference_dbm", p.interference_dbm);
      s.range("backhaul_bps", p.backhaul_bps);
      s.range("rtt_sbs_s", p.rtt_sbs_s);
      s.range("rtt_cloud_s", p.rtt_cloud_s);
      s.range("task_bits", p.task_bits);
      s.range("cpu_cloud_hz", p.cpu_cloud_hz);
      s.range("cpu_sbs_hz", p.cpu_sbs_hz);
      s.number("cycles_per_bit", p.cycles_per_bit);
      s.number("cell_radius_m", p.cell_radius_m);
      s.number("sbs_gain_db", p.sbs_gain_db);
      s.number("mbs_gain_db", p.mbs_gain_db);
      s.number("pathloss_exponent", p.pathloss_exponent);
      s.number("ref_distance_m", p.ref_distance_m);
      s.boolean("log2_rate", p.log2_rate);
      s.number("zipf_s", p.zipf_s);
      s.number("lognorm_sigma", p.lognorm_sigma);
      s.number("demand_noise", p.demand_noise);
      s.number("theta_norm", p.theta_norm);
      s.integer("gain_samples", p.gain_samples);
      s.integer("seed", p.seed);
    } else {
      throw ConfigError("scenario.type: expected \"synthetic\" or \"service-placement\", got \"" + type + "\"");
    }
    s.finish();
  }

  std::string algorithm = to_string(c.algorithm);
  root.text("algorithm", algorithm);
  if (algorithm == "distlingape") c.algorithm = Algorithm::distlingape;
  else if (algorithm == "independent") c.algorithm = Algorithm::independent;
  else if (algorithm == "oful") c.algorithm = Algorithm::oful;
  else throw ConfigError("algorithm: expected distlingape, independent or oful, got \"" + algorithm + "\"");

  std::string strategy = to_string(c.strategy);
  root.text("strategy", strategy);
  if (strategy == "greedy") c.strategy = Strategy::greedy;
  else if (strategy == "ratio") c.strategy = Strategy::ratio;
  else throw ConfigError("strategy: expected greedy or ratio, got \"" + strategy + "\"");

  root.integer("agents", c.agents);
  root.number("threshold", c.threshold, true);
  root.integer("budget", c.budget);
  root.number("tau_estimate", c.tau_estimate);
  root.number("failure_probability", c.failure_probability);
  root.number("delta_m", c.delta_m);
  root.number("epsilon", c.epsilon);
  root.number("lambda", c.lambda);
  root.number("S", c.S);
  root.number("R", c.R);
  root.boolean("noiseless", c.noiseless);
  root.numbers("agent_scales", c.agent_scales);
  root.integer("repetitions", c.repetitions);
  root.integer("seed", c.seed);
  root.integer("max_rounds", c.max_rounds);
  root.integer("horizon", c.horizon);
  root.boolean("noisy_cumulative", c.noisy_cumulative);
  root.number("reference_tau", c.reference_tau);
  root.text("output", c.output);
  root.finish();

  c.validate();
  return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError(file.string() + ": cannot open config file");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(file.string() + ": " + e.what());
  }
  return parse_config(j);
}

inline json to_json(const ExperimentConfig& c) {
  auto opt = [](const auto& o) -> json { return o ? json(*o) : json(nullptr); };
  auto num = [](double x) -> json { return std::isinf(x) ? json("inf") : json(x); };
  auto rng = [](const Range& r) { return json::array({r.lo, r.hi}); };
  json s;
  if (c.scenario == ScenarioKind::synthetic) {
    s = {{"type", "synthetic"}, {"d", c.synthetic.d}, {"phi", c.synthetic.phi}, {"noise_std", c.synthetic.noise_std}};
  } else {
    const ScenarioParams& p = c.service;
    s = {{"type", "service-placement"},
         {"services", p.services},
         {"periods", p.periods},
         {"cells", p.cells},
         {"users_per_cell", p.users_per_cell},
         {"bandwidth_hz", p.bandwidth_hz},
         {"tx_power_dbm", p.tx_power_dbm},
         {"noise_dbm", p.noise_dbm},
         {"interference_dbm", p.interference_dbm},
         {"backhaul_bps", rng(p.backhaul_bps)},
         {"rtt_sbs_s", rng(p.rtt_sbs_s)},
         {"rtt_cloud_s", rng(p.rtt_cloud_s)},
         {"task_bits", rng(p.task_bits)},
         {"cpu_cloud_hz", rng(p.cpu_cloud_hz)},
         {"cpu_sbs_hz", rng(p.cpu_sbs_hz)},
         {"cycles_per_bit", p.cycles_per_bit},
         {"cell_radius_m", p.cell_radius_m},
         {"sbs_gain_db", p.sbs_gain_db},
         {"mbs_gain_db", p.mbs_gain_db},
         {"pathloss_exponent", p.pathloss_exponent},
         {"ref_distance_m", p.ref_distance_m},
         {"log2_rate", p.log2_rate},
         {"zipf_s", p.zipf_s},
         {"lognorm_sigma", p.lognorm_sigma},
         {"demand_noise", p.demand_noise},
         {"theta_norm", p.theta_norm},
         {"gain_samples", p.gain_samples},
         {"seed", p.seed}};
  }
  json j = {{"scenario", s},
            {"algorithm", to_string(c.algorithm)},
            {"strategy", to_string(c.strategy)},
            {"agents", c.agents},
            {"threshold", c.threshold ? num(*c.threshold) : json(nullptr)},
            {"budget", opt(c.budget)},
            {"tau_estimate", opt(c.tau_estimate)},
            {"failure_probability", c.failure_probability},
            {"delta_m", c.delta_m},
            {"epsilon", c.epsilon},
            {"lambda", c.lambda},
            {"S", opt(c.S)},
            {"R", opt(c.R)},
            {"noiseless", c.noiseless},
            {"agent_scales", c.agent_scales},
            {"repetitions", c.repetitions},
            {"seed", c.seed},
            {"max_rounds", c.max_rounds},
            {"horizon", opt(c.horizon)},
            {"noisy_cumulative", c.noisy_cumulative},
            {"reference_tau", opt(c.reference_tau)},
            {"output", c.output}};
  return j;
}

/// Everything a repetition needs that does not depend on the run seed.
struct PreparedInstance {
  ArmSet arms;
  std::vector<ArmSet> agent_arms;  // one shared set, or one per agent
  LinearEnvironment env;
  ConfidenceConfig cfg;
  double threshold = std::numeric_limits<double>::infinity();
  ArmId truth = 0;
  double h_eps = std::numeric_limits<double>::quiet_NaN();
  SampleComplexityBound bound;
};

inline PreparedInstance prepare(const ExperimentConfig& c) {
  PreparedInstance p;
  double default_r = 1.0;
  if (c.scenario == ScenarioKind::synthetic) {
    BanditInstance inst = build_synthetic(c.synthetic.d, c.synthetic.phi);
    inst.env.set_noise_std(c.synthetic.noise_std);
    p.arms = std::move(inst.arms);
    p.env = std::move(inst.env);
    default_r = c.synthetic.noise_std > 0.0 ? c.synthetic.noise_std : 1.0;
  } else {
    ServiceInstance inst = build_service_env(ServicePlacementScenario(c.service));
    p.arms = std::move(inst.arms);
    p.env = std::move(inst.env);
    default_r = inst.noise_scale > 0.0 ? inst.noise_scale : 1.0;
  }
  if (c.noiseless) p.env.set_noise_std(0.0);

  p.cfg.R = c.R.value_or(default_r);
  p.cfg.S = c.S.value_or(p.env.theta_star().norm());
  p.cfg.lambda = c.lambda;
  p.cfg.delta_m = c.delta_m;
  p.cfg.epsilon = c.epsilon;
  p.cfg.M = c.agents;
  p.cfg.validate();
  p.threshold = c.resolved_threshold();

  if (c.agent_scales.empty()) {
    p.agent_arms.push_back(p.arms);
  } else {
    p.agent_arms = heterogeneous_view(p.arms, c.agent_scales);
  }
  p.truth = true_gaps(p.arms, p.env.theta_star()).best;

  if (c.algorithm != Algorithm::oful && c.agent_scales.empty()) {
    try {
      p.h_eps = problem_complexity(p.arms, p.env.theta_star(), c.epsilon);
      if (p.h_eps > 0.0) p.bound = sample_complexity_bound(p.h_eps, p.cfg, p.arms.size(), p.arms.dim(), p.arms.max_norm());
    } catch (const std::invalid_argument&) {
      p.h_eps = std::numeric_limits<double>::quiet_NaN();
    }
  }
  return p;
}

struct RunRecord {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  ArmId best_arm = 0;
  bool correct = false;
  bool truncated = false;
  std::uint64_t tau = 0;
  std::vector<std::uint64_t> tau_m;
  std::uint64_t comm_rounds = 0;
  std::uint64_t stop_round = 0;
  std::vector<std::uint64_t> per_arm_pulls;
  double cumulative_reward = std::numeric_limits<double>::quiet_NaN();
  double comm_bound = std::numeric_limits<double>::quiet_NaN();
  bool tau_bound_violated = false;
  bool comm_bound_violated = false;

  double tau_per_agent() const { return tau_m.empty() ? 0.0 : static_cast<double>(tau) / static_cast<double>(tau_m.size()); }
};

struct MetricsRecord {
  ExperimentConfig config;
  double threshold = std::numeric_limits<double>::infinity();
  double S = 0.0;
  double R = 0.0;
  std::size_t arms = 0;
  std::size_t dim = 0;
  ArmId truth = 0;

  double correct_rate = 0.0;
  std::size_t errors = 0;
  std::size_t truncated = 0;
  double tau_mean = 0.0;
  double tau_std = 0.0;
  double tau_m_mean = 0.0;
  double tau_m_std = 0.0;
  double speedup = std::numeric_limits<double>::quiet_NaN();
  double comm_rounds_mean = 0.0;
  double comm_rounds_std = 0.0;
  double stop_round_mean = 0.0;
  double cumulative_reward_mean = std::numeric_limits<double>::quiet_NaN();
  double cumulative_reward_std = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> per_arm_pulls_mean;
  double h_eps = std::numeric_limits<double>::quiet_NaN();
  std::optional<double> bound_case1;
  std::optional<double> bound_case2;
  std::size_t tau_bound_violations = 0;
  std::size_t comm_bound_violations = 0;
  double wall_clock_s = 0.0;

  std::vector<RunRecord> runs;
};

/// One seeded repetition.
inline RunRecord run_once(const ExperimentConfig& c, const PreparedInstance& p, std::size_t index) {
  RunRecord rec;
  rec.index = index;
  rec.seed = c.seed + index;
  LinearEnvironment env = p.env;
  env.reseed(rec.seed, c.agents);

  RunOptions opts;
  opts.max_rounds = c.max_rounds;
  opts.record_trace = c.horizon.has_value();

  RunResult r;
  std::vector<std::vector<ArmId>> deployed;
  if (c.algorithm == Algorithm::oful) {
    OfulState st(p.arms.dim(), p.cfg);
    deployed.reserve(*c.horizon);
    std::vector<std::uint64_t> pulls(p.arms.size(), 0);
    for (std::uint64_t t = 0; t < *c.horizon; ++t) {
      deployed.push_back(oful_batch_round(st, p.arms, c.agents, env));
      for (ArmId a : deployed.back()) ++pulls[a];
    }
    const Vector theta = rls_estimate(st.A, st.b);
    ArmId best = 0;
    for (ArmId k = 1; k < p.arms.size(); ++k) {
      if (p.arms[k].dot(theta) > p.arms[best].dot(theta)) best = k;
    }
    r.best_arm = best;
    r.correct = best == p.truth;
    r.tau_m.assign(c.agents, *c.horizon);
    r.tau = *c.horizon * c.agents;
    r.per_arm_pulls = std::move(pulls);
    r.stop_round = *c.horizon;
  } else if (c.algorithm == Algorithm::independent) {
    r = run_independent(p.env, p.agent_arms, p.cfg, c.strategy, rec.seed, opts);
  } else {
    SyncPolicy policy;
    policy.threshold = p.threshold;
    policy.budget = c.budget;
    if (c.failure_probability > 0.0) policy.surviving = bernoulli_failures(c.failure_probability, stream_seed(rec.seed, 0xfa11));
    r = run_distlingape(env, p.agent_arms, p.cfg, policy, c.strategy, opts);
  }

  if (c.horizon) {
    if (c.algorithm != Algorithm::oful) deployed = deployment_trace(r, c.agents, *c.horizon);
    deployed.resize(std::min<std::size_t>(deployed.size(), *c.horizon));
    const auto curve = c.noisy_cumulative ? cumulative_delay_noisy(deployed, p.arms, p.env, rec.seed)
                                          : cumulative_delay(deployed, p.arms, p.env);
    rec.cumulative_reward = curve.empty() ? 0.0 : curve.back();
  }

  rec.best_arm = r.best_arm;
  rec.correct = r.correct;
  rec.truncated = r.truncated;
  rec.tau = r.tau;
  rec.tau_m = r.tau_m;
  rec.comm_rounds = r.comm_rounds;
  rec.stop_round = r.stop_round;
  rec.per_arm_pulls = r.per_arm_pulls;

  if (c.algorithm != Algorithm::oful && !r.truncated) {
    for (std::uint64_t t : r.tau_m) {
      const double tm = static_cast<double>(t);
      if ((p.bound.case1 && tm > *p.bound.case1) || (p.bound.case2 && tm > *p.bound.case2)) rec.tau_bound_violated = true;
    }
    if (std::isfinite(p.threshold) && r.tau >= 2) {
      rec.comm_bound = comm_bound(c.agents, static_cast<double>(r.tau), p.arms.dim(), p.threshold);
      rec.comm_bound_violated = static_cast<double>(r.comm_rounds) > rec.comm_bound;
    }
  }
  return rec;
}

namespace detail {

inline double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

inline double sample_std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace detail

/// Executes `repetitions` seeded runs and aggregates them in run order.
/// Runs may be spread over `threads` workers without affecting the result.
inline MetricsRecord run_experiment(const ExperimentConfig& c, std::size_t threads = 1) {
  c.validate();
  const auto start = std::chrono::steady_clock::now();
  const PreparedInstance p = prepare(c);

  MetricsRecord m;
  m.config = c;
  m.threshold = p.threshold;
  m.S = p.cfg.S;
  m.R = p.cfg.R;
  m.arms = p.arms.size();
  m.dim = p.arms.dim();
  m.truth = p.truth;
  m.h_eps = p.h_eps;
  m.bound_case1 = p.bound.case1;
  m.bound_case2 = p.bound.case2;
  m.runs.resize(c.repetitions);

  threads = std::clamp<std::size_t>(threads, 1, c.repetitions);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < c.repetitions; i = next++) {
      try {
        m.runs[i] = run_once(c, p, i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = c.repetitions;
      }
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<double> tau, tau_m, comm, stop, cum;
  m.per_arm_pulls_mean.assign(p.arms.size(), 0.0);
  std::size_t correct = 0;
  for (const RunRecord& r : m.runs) {
    correct += r.correct ? 1 : 0;
    m.truncated += r.truncated ? 1 : 0;
    tau.push_back(static_cast<double>(r.tau));
    tau_m.push_back(r.tau_per_agent());
    comm.push_back(static_cast<double>(r.comm_rounds));
    stop.push_back(static_cast<double>(r.stop_round));
    if (c.horizon) cum.push_back(r.cumulative_reward);
    for (std::size_t a = 0; a < r.per_arm_pulls.size(); ++a) m.per_arm_pulls_mean[a] += static_cast<double>(r.per_arm_pulls[a]);
    m.tau_bound_violations += r.tau_bound_violated ? 1 : 0;
    m.comm_bound_violations += r.comm_bound_violated ? 1 : 0;
  }
  const double n = static_cast<double>(c.repetitions);
  for (double& x : m.per_arm_pulls_mean) x /= n;
  m.correct_rate = static_cast<double>(correct) / n;
  m.errors = c.repetitions - correct;
  m.tau_mean = detail::mean(tau);
  m.tau_std = detail::sample_std(tau);
  m.tau_m_mean = detail::mean(tau_m);
  m.tau_m_std = detail::sample_std(tau_m);
  m.comm_rounds_mean = detail::mean(comm);
  m.comm_rounds_std = detail::sample_std(comm);
  m.stop_round_mean = detail::mean(stop);
  if (c.horizon) {
    m.cumulative_reward_mean = detail::mean(cum);
    m.cumulative_reward_std = detail::sample_std(cum);
  }
  if (c.reference_tau && m.tau_m_mean > 0.0) m.speedup = speedup(*c.reference_tau, m.tau_m_mean);
  m.wall_clock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return m;
}

struct SweepAxis {
  std::string field;  // dotted path into the config, e.g. "scenario.d"
  std::vector<json> values;
};

struct SweepPoint {
  std::vector<json> keys;  // one value per axis
  MetricsRecord record;
};

/// Sets a dotted path inside a JSON object, creating objects as needed.
inline void set_field(json& j, const std::string& dotted, const json& value) {
  json* cur = &j;
  std::size_t start = 0;
  for (;;) {
    const auto dot = dotted.find('.', start);
    const std::string key = dotted.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (key.empty()) throw ConfigError(dotted + ": malformed field path");
    if (!cur->is_object()) throw ConfigError(dotted + ": path crosses a non-object value");
    if (dot == std::string::npos) {
      (*cur)[key] = value;
      return;
    }
    cur = &(*cur)[key];
    if (cur->is_null()) *cur = json::object();
    start = dot + 1;
  }
}

/// One record per value tuple; axes of equal length are zipped. Speedups are
/// taken against the first single-agent record of the sweep, or against the
/// template's reference_tau when no such record exists.
inline std::vector<SweepPoint> sweep(const json& base, const std::vector<SweepAxis>& axes, std::size_t threads = 1) {
  if (axes.empty()) throw ConfigError("sweep: at least one axis is required");
  const std::size_t n = axes.front().values.size();
  for (const auto& a : axes) {
    if (a.values.size() != n) throw ConfigError(a.field + ": every sweep axis needs the same number of values");
    if (a.values.empty()) throw ConfigError(a.field + ": sweep axis has no values");
  }
  std::vector<ExperimentConfig> configs;
  for (std::size_t i = 0; i < n; ++i) {
    json j = base;
    for (const auto& a : axes) set_field(j, a.field, a.values[i]);
    try {
      configs.push_back(parse_config(j));
    } catch (const ConfigError& e) {
      throw ConfigError(std::string(e.what()) + " (sweep value " + std::to_string(i) + ")");
    }
  }

  std::vector<SweepPoint> out;
  for (std::size_t i = 0; i < n; ++i) {
    SweepPoint pt;
    for (const auto& a : axes) pt.keys.push_back(a.values[i]);
    pt.record = run_experiment(configs[i], threads);
    out.push_back(std::move(pt));
  }
  std::optional<double> ref;
  for (const auto& pt : out) {
    if (pt.record.config.agents == 1 && pt.record.tau_m_mean > 0.0) {
      ref = pt.record.tau_m_mean;
      break;
    }
  }
  if (!ref) ref = configs.front().reference_tau;
  if (ref) {
    for (auto& pt : out) {
      if (pt.record.tau_m_mean > 0.0) pt.record.speedup = speedup(*ref, pt.record.tau_m_mean);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Output

namespace detail {

/// Shortest round-trip decimal form; empty for NaN.
inline std::string fmt(double x) {
  if (std::isnan(x)) return "";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string fmt(const std::optional<double>& x) { return x ? fmt(*x) : std::string(); }

inline std::string csv_cell(std::string s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char ch : s) {
    if (ch == '"') q += '"';
    q += ch;
  }
  return q + "\"";
}

inline std::string key_text(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_float()) return fmt(v.get<double>());
  return v.dump();
}

template <class T>
std::string joined(const std::vector<T>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ';';
    if constexpr (std::is_floating_point_v<T>) {
      s += fmt(v[i]);
    } else {
      s += std::to_string(v[i]);
    }
  }
  return s;
}

}  // namespace detail

inline const std::vector<std::string>& metrics_columns() {
  static const std::vector<std::string> cols = {
      "scenario",          "algorithm",          "strategy",          "agents",
      "threshold",         "budget",             "failure_probability", "delta_m",
      "epsilon",           "lambda",             "S",                 "R",
      "noiseless",         "arms",               "dim",               "true_best_arm",
      "repetitions",       "seed",               "correct_rate",      "errors",
      "truncated",         "tau_mean",           "tau_std",           "tau_m_mean",
      "tau_m_std",         "speedup",            "comm_rounds_mean",  "comm_rounds_std",
      "stop_round_mean",   "horizon",            "cumulative_reward_mean", "cumulative_reward_std",
      "h_eps",             "bound_case1",        "bound_case2",       "tau_bound_violations",
      "comm_bound_violations", "per_arm_pulls_mean"};
  return cols;
}

inline std::vector<std::string> metrics_row(const MetricsRecord& m) {
  const ExperimentConfig& c = m.config;
  return {to_string(c.scenario),
          to_string(c.algorithm),
          to_string(c.strategy),
          std::to_string(c.agents),
          detail::fmt(m.threshold),
          c.budget ? std::to_string(*c.budget) : std::string(),
          detail::fmt(c.failure_probability),
          detail::fmt(c.delta_m),
          detail::fmt(c.epsilon),
          detail::fmt(c.lambda),
          detail::fmt(m.S),
          detail::fmt(m.R),
          c.noiseless ? "true" : "false",
          std::to_string(m.arms),
          std::to_string(m.dim),
          std::to_string(m.truth + 1),
          std::to_string(c.repetitions),
          std::to_string(c.seed),
          detail::fmt(m.correct_rate),
          std::to_string(m.errors),
          std::to_string(m.truncated),
          detail::fmt(m.tau_mean),
          detail::fmt(m.tau_std),
          detail::fmt(m.tau_m_mean),
          detail::fmt(m.tau_m_std),
          detail::fmt(m.speedup),
          detail::fmt(m.comm_rounds_mean),
          detail::fmt(m.comm_rounds_std),
          detail::fmt(m.stop_round_mean),
          c.horizon ? std::to_string(*c.horizon) : std::string(),
          detail::fmt(m.cumulative_reward_mean),
          detail::fmt(m.cumulative_reward_std),
          detail::fmt(m.h_eps),
          detail::fmt(m.bound_case1),
          detail::fmt(m.bound_case2),
          std::to_string(m.tau_bound_violations),
          std::to_string(m.comm_bound_violations),
          detail::joined(m.per_arm_pulls_mean)};
}

/// Aggregated table; `axes` adds one leading key column per sweep axis.
inline void write_metrics_csv(std::ostream& os, const std::vector<SweepPoint>& points,
                              const std::vector<std::string>& axes = {}) {
  std::vector<std::string> header = axes;
  header.insert(header.end(), metrics_columns().begin(), metrics_columns().end());
  for (std::size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << detail::csv_cell(header[i]);
  os << '\n';
  for (const auto& pt : points) {
    std::vector<std::string> row;
    for (const auto& k : pt.keys) row.push_back(detail::key_text(k));
    const auto rest = metrics_row(pt.record);
    row.insert(row.end(), rest.begin(), rest.end());
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << detail::csv_cell(row[i]);
    os << '\n';
  }
}

/// Per-run table; arm ids are 1-based.
inline void write_runs_csv(std::ostream& os, const std::vector<SweepPoint>& points,
                           const std::vector<std::string>& axes = {}) {
  std::vector<std::string> header = axes;
  for (const char* h : {"run", "seed", "best_arm", "correct", "truncated", "tau", "tau_m", "comm_rounds", "stop_round",
                        "cumulative_reward", "comm_bound", "tau_bound_violated", "comm_bound_violated",
                        "per_arm_pulls"}) {
    header.emplace_back(h);
  }
  for (std::size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << detail::csv_cell(header[i]);
  os << '\n';
  for (const auto& pt : points) {
    for (const RunRecord& r : pt.record.runs) {
      std::vector<std::string> row;
      for (const auto& k : pt.keys) row.push_back(detail::key_text(k));
      row.push_back(std::to_string(r.index));
      row.push_back(std::to_string(r.seed));
      row.push_back(std::to_string(r.best_arm + 1));
      row.push_back(r.correct ? "true" : "false");
      row.push_back(r.truncated ? "true" : "false");
      row.push_back(std::to_string(r.tau));
      row.push_back(detail::joined(r.tau_m));
      row.push_back(std::to_string(r.comm_rounds));
      row.push_back(std::to_string(r.stop_round));
      row.push_back(detail::fmt(r.cumulative_reward));
      row.push_back(detail::fmt(r.comm_bound));
      row.push_back(r.tau_bound_violated ? "true" : "false");
      row.push_back(r.comm_bound_violated ? "true" : "false");
      row.push_back(detail::joined(r.per_arm_pulls));
      for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << detail::csv_cell(row[i]);
      os << '\n';
    }
  }
}

/// Resolved configuration, seeds and timings for every record.
inline json metadata(const std::vector<SweepPoint>& points, const std::vector<std::string>& axes = {}) {
  json recs = json::array();
  for (const auto& pt : points) {
    const MetricsRecord& m = pt.record;
    json seeds = json::array();
    for (const auto& r : m.runs) seeds.push_back(r.seed);
    json keys = json::object();
    for (std::size_t i = 0; i < axes.size() && i < pt.keys.size(); ++i) keys[axes[i]] = pt.keys[i];
    recs.push_back({{"axis_values", keys},
                    {"config", to_json(m.config)},
                    {"resolved",
                     {{"threshold", std::isinf(m.threshold) ? json("inf") : json(m.threshold)},
                      {"S", m.S},
                      {"R", m.R},
                      {"arms", m.arms},
                      {"dim", m.dim},
                      {"true_best_arm", m.truth + 1}}},
                    {"run_seeds", seeds},
                    {"wall_clock_s", m.wall_clock_s}});
  }
  return {{"seed_policy", "run i uses seed + i; agent m of a run uses splitmix64(run seed, m)"},
          {"arm_ids", "1-based"},
          {"records", recs}};
}

struct OutputPaths {
  std::filesystem::path metrics;
  std::filesystem::path runs;
  std::filesystem::path meta;
};

inline OutputPaths output_paths(const std::filesystem::path& out) {
  std::filesystem::path stem = out;
  stem.replace_extension();
  return {out, std::filesystem::path(stem.string() + ".runs.csv"), std::filesystem::path(stem.string() + ".meta.json")};
}

inline void write_outputs(const std::filesystem::path& out, const std::vector<SweepPoint>& points,
                          const std::vector<std::string>& axes = {}) {
  const OutputPaths paths = output_paths(out);
  if (paths.metrics.has_parent_path()) std::filesystem::create_directories(paths.metrics.parent_path());
  auto open = [](const std::filesystem::path& f) {
    std::ofstream os(f, std::ios::binary);
    if (!os) throw std::runtime_error(f.string() + ": cannot open for writing");
    return os;
  };
  {
    auto os = open(paths.metrics);
    write_metrics_csv(os, points, axes);
  }
  {
    auto os = open(paths.runs);
    write_runs_csv(os, points, axes);
  }
  {
    auto os = open(paths.meta);
    os << metadata(points, axes).dump(2) << '\n';
  }
}

}  // namespace distlingape::harness
