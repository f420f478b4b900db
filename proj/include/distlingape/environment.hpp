#pragma once

// Ground-truth reward generators: a linear environment with per-agent noise
// streams, the canonical-basis benchmark, and the small-cell
// service-placement scenario (channel, delay and demand models).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "distlingape/bai.hpp"
#include "distlingape/linalg.hpp"

namespace distlingape {

/// splitmix64 finalizer; mixes a run seed with a stream index.
inline std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// r = x^T theta* + eta, eta ~ N(0, noise_std^2), one noise stream per agent.
class LinearEnvironment {
 public:
  LinearEnvironment() = default;
  LinearEnvironment(Vector theta_star, double noise_std) : theta_(std::move(theta_star)), noise_std_(noise_std) {
    if (theta_.size() == 0) throw std::invalid_argument("LinearEnvironment: empty parameter vector");
    if (!(noise_std_ >= 0.0)) throw std::invalid_argument("LinearEnvironment: noise std must be nonnegative");
  }

  const Vector& theta_star() const { return theta_; }
  double noise_std() const { return noise_std_; }
  void set_noise_std(double s) {
    if (!(s >= 0.0)) throw std::invalid_argument("LinearEnvironment: noise std must be nonnegative");
    noise_std_ = s;
  }

  /// Re-create `agents` independent noise streams derived from `seed`.
  void reseed(std::uint64_t seed, std::size_t agents) {
    streams_.clear();
    streams_.reserve(agents);
    for (std::size_t m = 0; m < agents; ++m) streams_.emplace_back(stream_seed(seed, m));
  }

  /// Seeds stream m directly with seeds[m], bypassing the per-agent hash.
  void set_stream_seeds(const std::vector<std::uint64_t>& seeds) {
    streams_.clear();
    for (std::uint64_t s : seeds) streams_.emplace_back(s);
  }

  std::size_t streams() const { return streams_.size(); }

  double expected_reward(const Vector& x) const {
    detail::require_dim(static_cast<std::size_t>(theta_.size()), x.size(), "expected_reward");
    return x.dot(theta_);
  }

  double sample_reward(const Vector& x, std::size_t agent) {
    const double mean = expected_reward(x);
    if (noise_std_ == 0.0) return mean;
    if (agent >= streams_.size()) throw std::out_of_range("sample_reward: no noise stream for agent " + std::to_string(agent));
    return mean + noise_std_ * unit_normal_(streams_[agent]);
  }

 private:
  Vector theta_;
  double noise_std_ = 0.0;
  std::vector<std::mt19937_64> streams_;
  std::normal_distribution<double> unit_normal_{0.0, 1.0};
};

struct BanditInstance {
  ArmSet arms;
  LinearEnvironment env;
};

/// d canonical basis arms plus x_{d+1} = (cos phi, sin phi, 0, ...), with
/// theta* = (2, 0, ..., 0) and unit-variance Gaussian noise. Arm 0 is best.
inline BanditInstance build_synthetic(std::size_t d, double phi) {
  if (d < 2) throw std::invalid_argument("build_synthetic: d must be at least 2");
  std::vector<Vector> xs;
  xs.reserve(d + 1);
  for (std::size_t i = 0; i < d; ++i) xs.push_back(Vector::Unit(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(i)));
  Vector last = Vector::Zero(static_cast<Eigen::Index>(d));
  last(0) = std::cos(phi);
  last(1) = std::sin(phi);
  xs.push_back(std::move(last));
  Vector theta = Vector::Zero(static_cast<Eigen::Index>(d));
  theta(0) = 2.0;
  return {ArmSet(std::move(xs)), LinearEnvironment(std::move(theta), 1.0)};
}

/// Per-agent views x_{k,m} = c_m x_k.
inline std::vector<ArmSet> heterogeneous_view(const ArmSet& arms, const std::vector<double>& scales) {
  std::vector<ArmSet> out;
  out.reserve(scales.size());
  for (double c : scales) {
    if (!(c > 0.0)) throw std::invalid_argument("heterogeneous_view: scales must be positive");
    out.push_back(arms.scaled(c));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Small-cell service placement

inline double dbm_to_watt(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

struct Range {
  double lo = 0.0;
  double hi = 0.0;
  double mid() const { return 0.5 * (lo + hi); }
};

/// Network, geometry and demand parameters. Units are SI (Hz, W via dBm,
/// seconds, bits, metres); task sizes of 0.5-1 MB are stored in bits.
struct ScenarioParams {
  std::size_t services = 10;
  std::size_t periods = 8;  // context dimension d
  std::size_t cells = 6;
  std::size_t users_per_cell = 75;

  double bandwidth_hz = 10e6;
  double tx_power_dbm = 10.0;
  double noise_dbm = -104.0;
  double interference_dbm = -90.0;
  Range backhaul_bps{1e9, 4e9};
  Range rtt_sbs_s{2e-3, 7e-3};
  Range rtt_cloud_s{20e-3, 40e-3};
  Range task_bits{0.5 * 8e6, 1.0 * 8e6};
  Range cpu_cloud_hz{4.6e9, 5.6e9};
  Range cpu_sbs_hz{2.3e9, 3.2e9};
  double cycles_per_bit = 100.0;

  double cell_radius_m = 200.0;
  double sbs_gain_db = -30.0;
  double mbs_gain_db = -40.0;
  double pathloss_exponent = 2.5;
  double ref_distance_m = 1.0;
  bool log2_rate = false;

  double zipf_s = 0.2;
  double lognorm_sigma = 0.3;
  double demand_noise = 10.0;  // R_xi, sub-Gaussian scale of the demand noise
  double theta_norm = 1.0;    // ||omega*||_2

  std::size_t gain_samples = 10000;
  std::uint64_t seed = 11;

  void validate() const {
    auto ordered = [](const Range& r, const char* name) {
      if (!(r.lo <= r.hi) || !(r.lo > 0.0)) throw std::invalid_argument(std::string("scenario: bad range ") + name);
    };
    if (services == 0 || periods == 0 || cells == 0 || users_per_cell == 0 || gain_samples == 0) {
      throw std::invalid_argument("scenario: counts must be positive");
    }
    ordered(backhaul_bps, "backhaul");
    ordered(rtt_sbs_s, "rtt_sbs");
    ordered(rtt_cloud_s, "rtt_cloud");
    ordered(task_bits, "task_size");
    ordered(cpu_cloud_hz, "cpu_cloud");
    ordered(cpu_sbs_hz, "cpu_sbs");
    if (!(bandwidth_hz > 0.0) || !(cycles_per_bit >= 0.0) || !(cell_radius_m > 0.0) || !(ref_distance_m > 0.0)) {
      throw std::invalid_argument("scenario: bandwidth, radius and reference distance must be positive");
    }
    if (!(lognorm_sigma >= 0.0) || !(zipf_s >= 0.0) || !(demand_noise >= 0.0) || !(theta_norm > 0.0)) {
      throw std::invalid_argument("scenario: demand parameters out of range");
    }
  }
};

/// rate = W log(1 + P h / (I + sigma^2)); natural log unless `log2` is set.
inline double uplink_rate(double bandwidth, double power, double gain, double interference, double noise,
                          bool log2 = false) {
  if (!(bandwidth > 0.0)) throw std::invalid_argument("uplink_rate: bandwidth must be positive");
  const double floor = interference + noise;
  if (!(floor > 0.0)) throw std::invalid_argument("uplink_rate: interference plus noise must be positive");
  const double snr = power * gain / floor;
  return bandwidth * (log2 ? std::log2(1.0 + snr) : std::log1p(snr));
}

/// Per-request random quantities for one service request.
struct DelayDraw {
  double task_bits = 0.0;
  double rtt_sbs = 0.0;
  double rtt_cloud = 0.0;
  double cpu_sbs = 1.0;
  double cpu_cloud = 1.0;
  double backhaul = 1.0;
};

/// s/rho + RTT + c s / f at a small base station.
inline double sbs_delay(const DelayDraw& q, double rate, double cycles_per_bit) {
  if (!(rate > 0.0) || !(q.cpu_sbs > 0.0)) throw std::invalid_argument("sbs_delay: rates must be positive");
  return q.task_bits / rate + q.rtt_sbs + cycles_per_bit * q.task_bits / q.cpu_sbs;
}

/// s/rho_0 + s/rho_b + RTT_0 + c s / f_0 via the macro cell and backbone.
inline double cloud_delay(const DelayDraw& q, double rate, double cycles_per_bit) {
  if (!(rate > 0.0) || !(q.cpu_cloud > 0.0) || !(q.backhaul > 0.0)) {
    throw std::invalid_argument("cloud_delay: rates must be positive");
  }
  return q.task_bits / rate + q.task_bits / q.backhaul + q.rtt_cloud + cycles_per_bit * q.task_bits / q.cpu_cloud;
}

struct UserPosition {
  double to_sbs_m = 0.0;
  double to_mbs_m = 0.0;
};

/// Static cell layout: `cells` equal disks on a ring around the macro base
/// station with touching edges, users uniform inside their disk.
class ServicePlacementScenario {
 public:
  explicit ServicePlacementScenario(ScenarioParams params) : p_(std::move(params)) {
    p_.validate();
    std::mt19937_64 rng(stream_seed(p_.seed, 0x6e6f6465));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double ring = p_.cells >= 2 ? p_.cell_radius_m / std::sin(std::numbers::pi / static_cast<double>(p_.cells))
                                      : 2.0 * p_.cell_radius_m;
    users_.resize(p_.cells);
    for (std::size_t m = 0; m < p_.cells; ++m) {
      const double ang = 2.0 * std::numbers::pi * static_cast<double>(m) / static_cast<double>(p_.cells);
      const double cx = ring * std::cos(ang);
      const double cy = ring * std::sin(ang);
      users_[m].reserve(p_.users_per_cell);
      for (std::size_t u = 0; u < p_.users_per_cell; ++u) {
        const double r = p_.cell_radius_m * std::sqrt(unit(rng));
        const double a = 2.0 * std::numbers::pi * unit(rng);
        const double ux = cx + r * std::cos(a);
        const double uy = cy + r * std::sin(a);
        UserPosition pos;
        pos.to_sbs_m = std::max(p_.ref_distance_m, r);
        pos.to_mbs_m = std::max(p_.ref_distance_m, std::hypot(ux, uy));
        users_[m].push_back(pos);
      }
    }
  }

  const ScenarioParams& params() const { return p_; }
  const std::vector<std::vector<UserPosition>>& users() const { return users_; }

  /// Rayleigh-faded channel gains averaged over the users of `cell`:
  /// first to the SBS, second to the MBS.
  template <class Rng>
  std::pair<double, double> draw_cell_gains(std::size_t cell, Rng& rng) const {
    std::exponential_distribution<double> fading(1.0);
    const double gs = db_to_linear(p_.sbs_gain_db);
    const double g0 = db_to_linear(p_.mbs_gain_db);
    double hs = 0.0;
    double h0 = 0.0;
    for (const auto& u : users_.at(cell)) {
      hs += fading(rng) * gs * std::pow(p_.ref_distance_m / u.to_sbs_m, p_.pathloss_exponent);
      h0 += fading(rng) * g0 * std::pow(p_.ref_distance_m / u.to_mbs_m, p_.pathloss_exponent);
    }
    const double n = static_cast<double>(users_[cell].size());
    return {hs / n, h0 / n};
  }

  template <class Rng>
  DelayDraw draw_request(Rng& rng) const {
    auto u = [&rng](const Range& r) { return std::uniform_real_distribution<double>(r.lo, r.hi)(rng); };
    DelayDraw q;
    q.task_bits = u(p_.task_bits);
    q.rtt_sbs = u(p_.rtt_sbs_s);
    q.rtt_cloud = u(p_.rtt_cloud_s);
    q.cpu_sbs = u(p_.cpu_sbs_hz);
    q.cpu_cloud = u(p_.cpu_cloud_hz);
    q.backhaul = u(p_.backhaul_bps);
    return q;
  }

  double rate(double gain) const {
    return uplink_rate(p_.bandwidth_hz, dbm_to_watt(p_.tx_power_dbm), gain, dbm_to_watt(p_.interference_dbm),
                       dbm_to_watt(p_.noise_dbm), p_.log2_rate);
  }

 private:
  ScenarioParams p_;
  std::vector<std::vector<UserPosition>> users_;
};

struct GainEstimate {
  Vector mean;     // G~_k, seconds saved per request
  Vector stderr_;  // Monte Carlo standard error per service
};

/// G~_k = E[cloud delay - SBS delay] by Monte Carlo over draws and cells.
/// Channel fading is drawn once per (draw, cell) and shared by the services;
/// the per-request quantities are drawn independently per service.
inline GainEstimate estimate_gain(const ServicePlacementScenario& sc) {
  const auto& p = sc.params();
  std::mt19937_64 rng(stream_seed(p.seed, 0x6761696e));
  const auto k = static_cast<Eigen::Index>(p.services);
  Vector sum = Vector::Zero(k);
  Vector sum_sq = Vector::Zero(k);
  Vector per_draw(k);
  for (std::size_t n = 0; n < p.gain_samples; ++n) {
    per_draw.setZero();
    for (std::size_t m = 0; m < p.cells; ++m) {
      const auto [hs, h0] = sc.draw_cell_gains(m, rng);
      const double rs = sc.rate(hs);
      const double r0 = sc.rate(h0);
      for (Eigen::Index s = 0; s < k; ++s) {
        const DelayDraw q = sc.draw_request(rng);
        per_draw(s) += cloud_delay(q, r0, p.cycles_per_bit) - sbs_delay(q, rs, p.cycles_per_bit);
      }
    }
    per_draw /= static_cast<double>(p.cells);
    sum += per_draw;
    sum_sq += per_draw.cwiseProduct(per_draw);
  }
  const double n = static_cast<double>(p.gain_samples);
  GainEstimate g;
  g.mean = sum / n;
  const Vector var = ((sum_sq / n) - g.mean.cwiseProduct(g.mean)).cwiseMax(0.0) * (n / std::max(1.0, n - 1.0));
  g.stderr_ = (var / n).cwiseSqrt();
  return g;
}

/// K x d demand matrix: Zipf base demand for the rank-k service, scaled by
/// `users` requests per period, times exp(N(0, sigma^2)) per period.
template <class Rng>
Matrix build_demand(std::size_t services, std::size_t periods, double zipf_s, double lognorm_sigma, double users,
                    Rng& rng) {
  if (services == 0 || periods == 0) throw std::invalid_argument("build_demand: K and d must be positive");
  double norm = 0.0;
  for (std::size_t k = 1; k <= services; ++k) norm += std::pow(static_cast<double>(k), -zipf_s);
  std::normal_distribution<double> z(0.0, 1.0);
  Matrix demand(static_cast<Eigen::Index>(services), static_cast<Eigen::Index>(periods));
  for (std::size_t k = 0; k < services; ++k) {
    const double base = users * std::pow(static_cast<double>(k + 1), -zipf_s) / norm;
    for (std::size_t t = 0; t < periods; ++t) {
      const double noise = lognorm_sigma > 0.0 ? std::exp(lognorm_sigma * z(rng)) : 1.0;
      demand(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(t)) = base * noise;
    }
  }
  return demand;
}

struct ServiceInstance {
  ArmSet arms;
  LinearEnvironment env;
  GainEstimate gains;
  Matrix demand;
  Vector omega;
  double noise_scale = 0.0;  // R = max_k |G~_k| R_xi
};

/// x_k = G~_k D~_k, theta* = omega* (seeded positive direction with norm
/// `theta_norm`), reward noise std R = max_k |G~_k| R_xi.
inline ServiceInstance build_service_env(const ServicePlacementScenario& sc) {
  const auto& p = sc.params();
  ServiceInstance out;
  out.gains = estimate_gain(sc);
  std::mt19937_64 rng(stream_seed(p.seed, 0x64656d64));
  out.demand = build_demand(p.services, p.periods, p.zipf_s, p.lognorm_sigma, static_cast<double>(p.users_per_cell), rng);

  std::vector<Vector> xs;
  xs.reserve(p.services);
  bool any_nonzero = false;
  for (std::size_t k = 0; k < p.services; ++k) {
    Vector x = out.gains.mean(static_cast<Eigen::Index>(k)) * out.demand.row(static_cast<Eigen::Index>(k)).transpose();
    any_nonzero = any_nonzero || x.cwiseAbs().maxCoeff() > 0.0;
    xs.push_back(std::move(x));
  }
  if (!any_nonzero) throw std::invalid_argument("build_service_env: all service contexts are zero");
  out.arms = ArmSet(std::move(xs));

  std::mt19937_64 wrng(stream_seed(p.seed, 0x6f6d6567));
  std::normal_distribution<double> z(0.0, 1.0);
  out.omega = Vector(static_cast<Eigen::Index>(p.periods));
  for (Eigen::Index t = 0; t < out.omega.size(); ++t) out.omega(t) = std::abs(z(wrng)) + 1e-3;
  out.omega *= p.theta_norm / out.omega.norm();

  out.noise_scale = out.gains.mean.cwiseAbs().maxCoeff() * p.demand_noise;
  out.env = LinearEnvironment(out.omega, out.noise_scale);
  return out;
}

}  // namespace distlingape
