// Command-line front end: run, sweep and validate experiment configurations.
// Exit codes: 0 success, 1 configuration error, 2 runtime error.

#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "distlingape/harness.hpp"

namespace {

using distlingape::harness::ConfigError;
using distlingape::harness::json;

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kRuntimeError = 2;

struct Overrides {
  std::string config;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> reps;
  std::size_t threads = 1;
  std::optional<std::string> algorithm;
  std::optional<std::string> strategy;
  std::optional<std::size_t> agents;
  std::optional<std::string> threshold;
  std::optional<std::uint64_t> budget;
  std::optional<double> tau_estimate;
  std::optional<double> failure_probability;
  std::optional<double> delta_m;
  std::optional<double> epsilon;
  std::optional<double> lambda;
  std::optional<double> S;
  std::optional<double> R;
  std::optional<std::uint64_t> max_rounds;
  std::optional<std::uint64_t> horizon;
  std::optional<double> reference_tau;
  bool noiseless = false;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("-c,--config", o.config, "JSON configuration file")->check(CLI::ExistingFile);
  cmd->add_option("-o,--out", o.out, "Metrics CSV path (sidecars are written next to it)");
  cmd->add_option("--seed", o.seed, "Base seed; run i uses seed + i");
  cmd->add_option("--reps", o.reps, "Repetitions per record");
  cmd->add_option("--threads", o.threads, "Worker threads for repetitions")->check(CLI::PositiveNumber);
  cmd->add_option("--algorithm", o.algorithm, "distlingape, independent or oful");
  cmd->add_option("--strategy", o.strategy, "greedy or ratio");
  cmd->add_option("-M,--agents", o.agents, "Number of agents");
  cmd->add_option("-D,--threshold", o.threshold, "Communication threshold, or inf");
  cmd->add_option("--budget", o.budget, "Communication budget B_c (needs --tau-estimate)");
  cmd->add_option("--tau-estimate", o.tau_estimate, "Sample-count estimate used with --budget");
  cmd->add_option("--failure-probability", o.failure_probability, "Per-upload failure probability");
  cmd->add_option("--delta-m", o.delta_m, "Per-agent confidence");
  cmd->add_option("--epsilon", o.epsilon, "Target accuracy");
  cmd->add_option("--lambda", o.lambda, "Ridge regularization");
  cmd->add_option("--S", o.S, "Bound on the parameter norm");
  cmd->add_option("--R", o.R, "Sub-Gaussian noise scale");
  cmd->add_option("--max-rounds", o.max_rounds, "Global round cap per run");
  cmd->add_option("--horizon", o.horizon, "Deployment horizon in rounds for cumulative reward");
  cmd->add_option("--reference-tau", o.reference_tau, "Single-agent per-agent samples for speedup");
  cmd->add_flag("--noiseless", o.noiseless, "Observe expected rewards without noise");
}

json parse_value(const std::string& token) {
  try {
    return json::parse(token);
  } catch (const json::parse_error&) {
    return json(token);
  }
}

json load_template(const Overrides& o) {
  json j = json::object();
  if (!o.config.empty()) {
    std::ifstream in(o.config);
    if (!in) throw ConfigError(o.config + ": cannot open config file");
    try {
      j = json::parse(in);
    } catch (const json::parse_error& e) {
      throw ConfigError(o.config + ": " + e.what());
    }
    if (!j.is_object()) throw ConfigError(o.config + ": top level must be an object");
  }
  auto put = [&j](const char* key, const auto& v) {
    if (v) j[key] = *v;
  };
  put("output", o.out);
  put("seed", o.seed);
  put("repetitions", o.reps);
  put("algorithm", o.algorithm);
  put("strategy", o.strategy);
  put("agents", o.agents);
  if (o.threshold) j["threshold"] = parse_value(*o.threshold);
  put("budget", o.budget);
  put("tau_estimate", o.tau_estimate);
  put("failure_probability", o.failure_probability);
  put("delta_m", o.delta_m);
  put("epsilon", o.epsilon);
  put("lambda", o.lambda);
  put("S", o.S);
  put("R", o.R);
  put("max_rounds", o.max_rounds);
  put("horizon", o.horizon);
  put("reference_tau", o.reference_tau);
  if (o.noiseless) j["noiseless"] = true;
  return j;
}

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

void print_summary(const std::vector<distlingape::harness::SweepPoint>& points, const std::vector<std::string>& axes) {
  using distlingape::harness::detail::key_text;
  // Console precision only; the CSV keeps full round-trip digits.
  auto fmt = [](double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    return std::string(buf);
  };
  for (const auto& pt : points) {
    const auto& m = pt.record;
    std::string keys;
    for (std::size_t i = 0; i < axes.size(); ++i) keys += axes[i] + "=" + key_text(pt.keys[i]) + " ";
    std::printf("%sM=%zu D=%s correct=%s tau=%s tau_m=%s comm=%s truncated=%zu speedup=%s\n", keys.c_str(),
                m.config.agents, fmt(m.threshold).c_str(), fmt(m.correct_rate).c_str(), fmt(m.tau_mean).c_str(),
                fmt(m.tau_m_mean).c_str(), fmt(m.comm_rounds_mean).c_str(), m.truncated,
                m.speedup == m.speedup ? fmt(m.speedup).c_str() : "-");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributed best-arm identification experiments"};
  app.require_subcommand(1);

  Overrides run_o, sweep_o, validate_o;
  CLI::App* run = app.add_subcommand("run", "Run one configuration and write its metrics");
  add_common(run, run_o);
  CLI::App* sw = app.add_subcommand("sweep", "Run a configuration over one or more zipped axes");
  add_common(sw, sweep_o);
  std::vector<std::string> axis_names;
  std::vector<std::string> axis_values;
  sw->add_option("--axis", axis_names, "Config field to vary (dotted path); repeat to zip axes")->required();
  sw->add_option("--values", axis_values, "Comma-separated values, one list per --axis")->required();
  CLI::App* val = app.add_subcommand("validate", "Check a configuration without running it");
  add_common(val, validate_o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kConfigError;
  }

  try {
    namespace h = distlingape::harness;
    if (val->parsed()) {
      const h::ExperimentConfig cfg = h::parse_config(load_template(validate_o));
      std::cout << h::to_json(cfg).dump(2) << '\n';
      return kOk;
    }
    if (run->parsed()) {
      const h::ExperimentConfig cfg = h::parse_config(load_template(run_o));
      std::vector<h::SweepPoint> points(1);
      points[0].record = h::run_experiment(cfg, run_o.threads);
      h::write_outputs(cfg.output, points);
      print_summary(points, {});
      return kOk;
    }
    if (sw->parsed()) {
      if (axis_names.size() != axis_values.size()) throw ConfigError("sweep: give one --values list per --axis");
      const json base = load_template(sweep_o);
      const h::ExperimentConfig cfg = h::parse_config(base);
      std::vector<h::SweepAxis> axes;
      for (std::size_t i = 0; i < axis_names.size(); ++i) {
        h::SweepAxis a{axis_names[i], {}};
        for (const auto& tok : split(axis_values[i])) a.values.push_back(parse_value(tok));
        axes.push_back(std::move(a));
      }
      const auto points = h::sweep(base, axes, sweep_o.threads);
      h::write_outputs(cfg.output, points, axis_names);
      print_summary(points, axis_names);
      return kOk;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << '\n';
    return kRuntimeError;
  }
  return kOk;
}
