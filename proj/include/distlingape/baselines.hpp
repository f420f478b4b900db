#pragma once

// Comparison algorithms: centralized M-batch OFUL and fixed-horizon
// deployment traces used to compare cumulative delay improvement.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "distlingape/bai.hpp"
#include "distlingape/environment.hpp"
#include "distlingape/linalg.hpp"
#include "distlingape/protocol.hpp"

namespace distlingape {

struct OfulState {
  DesignMatrix A;
  Vector b;
  std::uint64_t round = 0;
  ConfidenceConfig cfg;

  OfulState() = default;
  OfulState(std::size_t d, const ConfidenceConfig& c)
      : A(DesignMatrix::regularized(d, c.lambda)), b(Vector::Zero(static_cast<Eigen::Index>(d))), cfg(c) {}
};

/// x^T theta_hat + C ||x||_{A^{-1}} for every arm.
inline std::vector<double> oful_indices(const OfulState& s, const ArmSet& arms) {
  const Vector theta = rls_estimate(s.A, s.b);
  const double radius = confidence_radius(s.A, s.cfg);
  std::vector<double> idx(arms.size());
  for (ArmId k = 0; k < arms.size(); ++k) idx[k] = arms[k].dot(theta) + radius * weighted_norm_inv(s.A, arms[k]);
  return idx;
}

/// The `batch` distinct arms with the highest indices, lowest id on ties.
inline std::vector<ArmId> oful_select(const OfulState& s, const ArmSet& arms, std::size_t batch) {
  if (batch == 0 || batch > arms.size()) throw std::invalid_argument("oful_select: batch must lie in [1, K]");
  const auto idx = oful_indices(s, arms);
  std::vector<ArmId> order(arms.size());
  std::iota(order.begin(), order.end(), ArmId{0});
  std::stable_sort(order.begin(), order.end(), [&](ArmId a, ArmId b) { return idx[a] > idx[b]; });
  order.resize(batch);
  return order;
}

/// One batch round: select `batch` arms, observe them on agent streams
/// 0..batch-1, and fold every observation into the state.
inline std::vector<ArmId> oful_batch_round(OfulState& s, const ArmSet& arms, std::size_t batch,
                                           LinearEnvironment& env) {
  auto picks = oful_select(s, arms, batch);
  for (std::size_t m = 0; m < picks.size(); ++m) {
    const Vector& x = arms[picks[m]];
    const double r = env.sample_reward(x, m);
    s.A.rank_one_update(x);
    s.b += r * x;
  }
  ++s.round;
  return picks;
}

/// Runs `rounds` batch rounds and returns the per-round pulls.
inline std::vector<std::vector<ArmId>> run_oful(LinearEnvironment& env, const ArmSet& arms,
                                                const ConfidenceConfig& cfg, std::size_t batch,
                                                std::uint64_t rounds) {
  OfulState s(arms.dim(), cfg);
  std::vector<std::vector<ArmId>> trace;
  trace.reserve(rounds);
  for (std::uint64_t t = 0; t < rounds; ++t) trace.push_back(oful_batch_round(s, arms, batch, env));
  return trace;
}

/// Independent agents: M single-agent runs with no communication, agent m
/// drawing noise from stream_seed(seed, m). Each agent runs to its own
/// stopping time; the run is correct only if every agent is.
inline RunResult run_independent(const LinearEnvironment& env, std::span<const ArmSet> agent_arms,
                                 const ConfidenceConfig& cfg, Strategy strategy, std::uint64_t seed,
                                 const RunOptions& opts = {}) {
  if (agent_arms.size() != 1 && agent_arms.size() != cfg.M) {
    throw std::invalid_argument("run_independent: need one shared arm set or one per agent");
  }
  ConfidenceConfig single = cfg;
  single.M = 1;
  RunResult out;
  out.correct = true;
  out.tau_m.assign(cfg.M, 0);
  for (std::size_t m = 0; m < cfg.M; ++m) {
    const ArmSet& arms = agent_arms.size() == 1 ? agent_arms.front() : agent_arms[m];
    LinearEnvironment own = env;
    own.set_stream_seeds({stream_seed(seed, m)});
    const RunResult r = run_distlingape(own, arms, single, SyncPolicy{}, strategy, opts);
    if (m == 0) {
      out.best_arm = r.best_arm;
      out.per_arm_pulls.assign(r.per_arm_pulls.size(), 0);
    }
    for (std::size_t a = 0; a < r.per_arm_pulls.size(); ++a) out.per_arm_pulls[a] += r.per_arm_pulls[a];
    out.tau_m[m] = r.tau;
    out.tau += r.tau;
    out.correct = out.correct && r.correct;
    out.truncated = out.truncated || r.truncated;
    out.stop_round = std::max(out.stop_round, r.stop_round);
  }
  return out;
}

/// Pads a DistLinGapE trace to `rounds` rounds of `agents` pulls each: once
/// the run stops, every agent deploys the identified arm.
inline std::vector<std::vector<ArmId>> deployment_trace(const RunResult& run, std::size_t agents,
                                                        std::uint64_t rounds) {
  std::vector<std::vector<ArmId>> out;
  out.reserve(rounds);
  for (std::uint64_t t = 0; t < rounds; ++t) {
    std::vector<ArmId> row = t < run.trace.size() ? run.trace[t] : std::vector<ArmId>{};
    while (row.size() < agents) row.push_back(run.best_arm);
    out.push_back(std::move(row));
  }
  return out;
}

/// Prefix sums of the expected reward collected per round; entry t is the
/// total after t+1 rounds.
inline std::vector<double> cumulative_delay(const std::vector<std::vector<ArmId>>& trace, const ArmSet& arms,
                                            const LinearEnvironment& env) {
  std::vector<double> out;
  out.reserve(trace.size());
  double total = 0.0;
  for (const auto& round : trace) {
    for (ArmId a : round) total += env.expected_reward(arms[a]);
    out.push_back(total);
  }
  return out;
}

/// Noisy variant: each pull adds one N(0, noise_std^2) draw from a stream
/// derived from `seed`.
inline std::vector<double> cumulative_delay_noisy(const std::vector<std::vector<ArmId>>& trace, const ArmSet& arms,
                                                  const LinearEnvironment& env, std::uint64_t seed) {
  std::mt19937_64 rng(stream_seed(seed, 0x6e6f6973));
  std::normal_distribution<double> z(0.0, env.noise_std() > 0.0 ? env.noise_std() : 1.0);
  std::vector<double> out;
  out.reserve(trace.size());
  double total = 0.0;
  for (const auto& round : trace) {
    for (ArmId a : round) total += env.expected_reward(arms[a]) + (env.noise_std() > 0.0 ? z(rng) : 0.0);
    out.push_back(total);
  }
  return out;
}

}  // namespace distlingape
