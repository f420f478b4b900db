#pragma once

// Multi-agent DistLinGapE: local rounds on composed statistics, the
// log-determinant communication trigger, coordinator aggregation with
// optional upload failures, and run-level bookkeeping.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "distlingape/bai.hpp"
#include "distlingape/environment.hpp"
#include "distlingape/linalg.hpp"

namespace distlingape {

enum class Strategy { greedy, ratio };

inline const char* to_string(Strategy s) { return s == Strategy::greedy ? "greedy" : "ratio"; }

/// Per-agent statistics: the last coordinator broadcast plus local deltas
/// gathered since the agent's last successful upload.
struct AgentState {
  std::size_t id = 0;

  Matrix delta_A;                      // sum x x^T since last upload, no lambda
  Vector delta_b;                      // sum x r since last upload
  std::uint64_t delta_t = 0;           // local pulls since last upload
  std::vector<std::uint64_t> delta_T;  // per-arm local pulls since last upload

  Matrix synced_A;                      // A_coor from the last broadcast
  Vector synced_b;                      // b_coor from the last broadcast
  std::vector<std::uint64_t> synced_T;  // T_k from the last broadcast
  double synced_logdet = 0.0;           // logdet(lambda I + synced_A)

  DesignMatrix view;  // lambda I + synced_A + delta_A, updated incrementally
  Vector view_b;      // synced_b + delta_b

  std::uint64_t pulls = 0;  // tau_m

  AgentState() = default;
  AgentState(std::size_t agent_id, std::size_t d, std::size_t k, double lambda)
      : id(agent_id),
        delta_A(Matrix::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d))),
        delta_b(Vector::Zero(static_cast<Eigen::Index>(d))),
        delta_T(k, 0),
        synced_A(Matrix::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d))),
        synced_b(Vector::Zero(static_cast<Eigen::Index>(d))),
        synced_T(k, 0),
        synced_logdet(static_cast<double>(d) * std::log(lambda)),
        view(DesignMatrix::regularized(d, lambda)),
        view_b(Vector::Zero(static_cast<Eigen::Index>(d))) {}

  /// T_{m,k} = T_k + Delta T_{m,k}.
  std::vector<std::uint64_t> pull_counts() const {
    std::vector<std::uint64_t> t(synced_T.size());
    for (std::size_t k = 0; k < t.size(); ++k) t[k] = synced_T[k] + delta_T[k];
    return t;
  }

  /// Accumulate one observation of arm `arm` with context `x`.
  void record_pull(ArmId arm, const Vector& x, double reward) {
    delta_A.noalias() += x * x.transpose();
    delta_b += reward * x;
    view.rank_one_update(x);
    view_b += reward * x;
    ++delta_t;
    ++delta_T.at(arm);
    ++pulls;
  }
};

struct CoordinatorState {
  Matrix A;  // sum of uploaded delta_A, no lambda
  Vector b;
  std::vector<std::uint64_t> T;
  std::uint64_t sync_count = 0;

  CoordinatorState() = default;
  CoordinatorState(std::size_t d, std::size_t k)
      : A(Matrix::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d))),
        b(Vector::Zero(static_cast<Eigen::Index>(d))),
        T(k, 0) {}
};

/// Per-sync upload success. Called with the 0-based sync index and M; returns
/// one flag per agent. An empty function means every upload succeeds.
using FailureSchedule = std::function<std::vector<bool>(std::uint64_t, std::size_t)>;

struct SyncPolicy {
  double threshold = std::numeric_limits<double>::infinity();  // D
  FailureSchedule surviving;
  std::optional<std::uint64_t> budget;  // B_c, informational once D is chosen

  void validate() const {
    if (!(threshold > 0.0)) throw std::invalid_argument("SyncPolicy: threshold D must be positive");
  }
};

/// Each agent's upload fails independently with probability `p`.
inline FailureSchedule bernoulli_failures(double p, std::uint64_t seed) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("bernoulli_failures: p must lie in [0,1]");
  return [p, seed](std::uint64_t sync_index, std::size_t agents) {
    std::mt19937_64 rng(stream_seed(seed, sync_index));
    std::bernoulli_distribution fail(p);
    std::vector<bool> ok(agents);
    for (std::size_t m = 0; m < agents; ++m) ok[m] = !fail(rng);
    return ok;
  };
}

struct LocalView {
  DesignMatrix A;
  Vector b;
  std::vector<std::uint64_t> T;
};

/// A_{t,m} = lambda I + A_coor + Delta A, b_{t,m} = b_coor + Delta b and the
/// composed pull counts, rebuilt from scratch.
inline LocalView local_view(const AgentState& agent, double lambda) {
  return {DesignMatrix::from_gram(lambda, agent.synced_A + agent.delta_A), agent.synced_b + agent.delta_b,
          agent.pull_counts()};
}

/// Delta t * log(det A_{t,m} / det(lambda I + A_coor)) > D, from cached
/// log-determinants. The agent's cached view must be built with `lambda`.
inline bool comm_trigger(const AgentState& agent, double lambda, double threshold) {
  if (agent.view.lambda() != lambda) throw std::invalid_argument("comm_trigger: view built with a different lambda");
  if (agent.delta_t == 0) return false;
  const double growth = agent.view.logdet() - agent.synced_logdet;
  return static_cast<double>(agent.delta_t) * growth > threshold;
}

/// Aggregates the uploads of surviving agents (ascending id), resets their
/// deltas, and broadcasts the coordinator state to every agent. Agents whose
/// upload failed keep their deltas for the next sync.
inline void synchronize(CoordinatorState& coord, std::span<AgentState> agents, const std::vector<bool>& surviving,
                        double lambda) {
  if (!surviving.empty() && surviving.size() != agents.size()) {
    throw std::invalid_argument("synchronize: surviving mask has the wrong length");
  }
  for (std::size_t m = 0; m < agents.size(); ++m) {
    if (!surviving.empty() && !surviving[m]) continue;
    AgentState& ag = agents[m];
    coord.A += ag.delta_A;
    coord.b += ag.delta_b;
    for (std::size_t k = 0; k < coord.T.size(); ++k) coord.T[k] += ag.delta_T[k];
    ag.delta_A.setZero();
    ag.delta_b.setZero();
    ag.delta_t = 0;
    std::fill(ag.delta_T.begin(), ag.delta_T.end(), 0);
  }
  ++coord.sync_count;

  const DesignMatrix base = DesignMatrix::from_gram(lambda, coord.A);
  for (AgentState& ag : agents) {
    ag.synced_A = coord.A;
    ag.synced_b = coord.b;
    ag.synced_T = coord.T;
    ag.synced_logdet = base.logdet();
    if (ag.delta_t == 0) {
      ag.view = base;
    } else {
      ag.view = DesignMatrix::from_gram(lambda, coord.A + ag.delta_A);
    }
    ag.view_b = coord.b + ag.delta_b;
  }
}

struct RunResult {
  ArmId best_arm = 0;
  std::vector<std::uint64_t> tau_m;
  std::uint64_t tau = 0;
  std::uint64_t comm_rounds = 0;
  std::vector<std::uint64_t> per_arm_pulls;
  bool correct = false;
  bool truncated = false;
  std::uint64_t stop_round = 0;
  std::size_t stopping_agent = 0;
  /// Arms pulled in each global round, one entry per agent that acted.
  std::vector<std::vector<ArmId>> trace;

  double tau_per_agent() const {
    return tau_m.empty() ? 0.0 : static_cast<double>(tau) / static_cast<double>(tau_m.size());
  }
};

struct RunOptions {
  std::uint64_t max_rounds = 10'000'000;
  bool record_trace = false;
};

/// Runs DistLinGapE to its stopping time. `agent_arms` holds either one arm
/// set shared by every agent or one (positively scaled) set per agent; the
/// environment must already be seeded with one noise stream per agent.
///
/// All agents act in ascending id within a global round; the first agent
/// whose stopping test passes ends the run. At most one synchronization
/// happens per round, after every agent has acted, if any trigger fired.
inline RunResult run_distlingape(LinearEnvironment& env, std::span<const ArmSet> agent_arms,
                                 const ConfidenceConfig& cfg, const SyncPolicy& policy, Strategy strategy,
                                 const RunOptions& opts = {}) {
  cfg.validate();
  policy.validate();
  const std::size_t m_agents = cfg.M;
  if (agent_arms.size() != 1 && agent_arms.size() != m_agents) {
    throw std::invalid_argument("run_distlingape: need one shared arm set or one per agent");
  }
  const ArmSet& ref = agent_arms.front();
  const std::size_t k = ref.size();
  const std::size_t d = ref.dim();
  if (k < 2) throw std::invalid_argument("run_distlingape: need at least two arms");
  for (const auto& a : agent_arms) {
    if (a.size() != k || a.dim() != d) throw std::invalid_argument("run_distlingape: agent arm sets differ in shape");
  }
  if (opts.max_rounds == 0) throw std::invalid_argument("run_distlingape: max_rounds must be at least 1");
  if (env.noise_std() > 0.0 && env.streams() < m_agents) {
    throw std::invalid_argument("run_distlingape: environment has fewer noise streams than agents");
  }

  auto arms_of = [&](std::size_t m) -> const ArmSet& { return agent_arms.size() == 1 ? ref : agent_arms[m]; };
  std::vector<RatioTable> tables;
  if (strategy == Strategy::ratio) {
    for (const auto& a : agent_arms) tables.emplace_back(a);
  }
  auto table_of = [&](std::size_t m) -> RatioTable& { return tables.size() == 1 ? tables.front() : tables[m]; };

  std::vector<AgentState> agents;
  agents.reserve(m_agents);
  for (std::size_t m = 0; m < m_agents; ++m) agents.emplace_back(m, d, k, cfg.lambda);
  CoordinatorState coord(d, k);

  RunResult res;
  res.tau_m.assign(m_agents, 0);
  res.per_arm_pulls.assign(k, 0);
  const ArmId truth = true_gaps(ref, env.theta_star()).best;

  bool stopped = false;
  std::uint64_t round = 0;
  while (!stopped && round < opts.max_rounds) {
    ++round;
    bool fire = false;
    std::vector<ArmId> pulled;
    if (opts.record_trace) pulled.reserve(m_agents);
    for (std::size_t m = 0; m < m_agents; ++m) {
      AgentState& ag = agents[m];
      const ArmSet& arms = arms_of(m);
      const Direction dir = select_direction(arms, ag.view, ag.view_b, cfg);
      if (check_stop(dir, cfg)) {
        res.best_arm = dir.best;
        res.stopping_agent = m;
        stopped = true;
        break;
      }
      ArmId a = 0;
      if (strategy == Strategy::greedy) {
        a = greedy_next_arm(arms, dir, ag.view);
      } else {
        const auto counts = ag.pull_counts();
        a = ratio_next_arm(table_of(m).get(dir.best, dir.ambiguous), counts);
      }
      const double r = env.sample_reward(arms[a], m);
      ag.record_pull(a, arms[a], r);
      ++res.per_arm_pulls[a];
      if (opts.record_trace) pulled.push_back(a);
      fire = comm_trigger(ag, cfg.lambda, policy.threshold) || fire;
    }
    if (opts.record_trace) res.trace.push_back(std::move(pulled));
    if (!stopped && fire) {
      const auto mask = policy.surviving ? policy.surviving(coord.sync_count, m_agents) : std::vector<bool>{};
      synchronize(coord, agents, mask, cfg.lambda);
    }
  }

  if (!stopped) {
    res.truncated = true;
    res.best_arm = select_direction(arms_of(0), agents[0].view, agents[0].view_b, cfg).best;
  }
  res.stop_round = round;
  res.comm_rounds = coord.sync_count;
  for (std::size_t m = 0; m < m_agents; ++m) {
    res.tau_m[m] = agents[m].pulls;
    res.tau += agents[m].pulls;
  }
  res.correct = !res.truncated && res.best_arm == truth;
  return res;
}

inline RunResult run_distlingape(LinearEnvironment& env, const ArmSet& arms, const ConfidenceConfig& cfg,
                                 const SyncPolicy& policy, Strategy strategy, const RunOptions& opts = {}) {
  return run_distlingape(env, std::span<const ArmSet>(&arms, 1), cfg, policy, strategy, opts);
}

/// D = M^2 tau d log2(tau) / B_c^2, the threshold that keeps the
/// communication bound within a budget of B_c rounds.
inline double threshold_from_budget(std::size_t m, double tau_estimate, std::size_t d, std::uint64_t budget) {
  if (budget == 0) throw std::invalid_argument("threshold_from_budget: budget must be positive");
  if (m == 0 || d == 0) throw std::invalid_argument("threshold_from_budget: M and d must be positive");
  if (!(tau_estimate >= 2.0)) throw std::invalid_argument("threshold_from_budget: tau estimate must be at least 2");
  const double mm = static_cast<double>(m);
  const double bc = static_cast<double>(budget);
  return mm * mm * tau_estimate * static_cast<double>(d) * std::log2(tau_estimate) / (bc * bc);
}

/// M sqrt(tau d log2(tau) / D), the communication bound with unit constant.
inline double comm_bound(std::size_t m, double tau, std::size_t d, double threshold) {
  if (!(tau >= 2.0) || !(threshold > 0.0)) throw std::invalid_argument("comm_bound: need tau >= 2 and D > 0");
  return static_cast<double>(m) * std::sqrt(tau * static_cast<double>(d) * std::log2(tau) / threshold);
}

/// S = T_single / T_per_agent.
inline double speedup(double tau_single, double tau_per_agent) {
  if (!(tau_single > 0.0) || !(tau_per_agent > 0.0)) throw std::invalid_argument("speedup: inputs must be positive");
  return tau_single / tau_per_agent;
}

}  // namespace distlingape
