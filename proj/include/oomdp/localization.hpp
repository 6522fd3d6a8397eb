// Copyright 2026 The OOMDP Lab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Monte Carlo localization on a GridMap: odometry motion model, raycast
// beam likelihood, KLD-sampling resampling and pose/mode estimation.
//
// Poses are continuous in cell units; walls occupy whole cells.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <random>
#include <set>
#include <stdexcept>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "oomdp/grid_map.hpp"
#include "oomdp/rng.hpp"
#include "oomdp/warehouse.hpp"

namespace oomdp {

inline double normalize_angle(double theta) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  double t = std::fmod(theta, kTwoPi);
  if (t < 0) t += kTwoPi;
  if (t >= kTwoPi) t = 0.0;
  return t;
}

/// Signed difference a - b wrapped into (-pi, pi].
inline double angle_diff(double a, double b) {
  double d = std::fmod(a - b, 2.0 * std::numbers::pi);
  if (d > std::numbers::pi) d -= 2.0 * std::numbers::pi;
  if (d <= -std::numbers::pi) d += 2.0 * std::numbers::pi;
  return d;
}

struct Pose {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;  // [0, 2pi)

  friend bool operator==(const Pose&, const Pose&) = default;
};

struct Particle {
  Pose pose;
  double weight = 0.0;

  friend bool operator==(const Particle&, const Particle&) = default;
};

using ParticleSet = std::vector<Particle>;

/// Odometry increment expressed in the robot frame at the start of the move.
struct OdometryDelta {
  double dx = 0.0;
  double dy = 0.0;
  double dtheta = 0.0;
};

struct MotionNoise {
  double sigma_trans = 0.1;
  double sigma_rot = 0.05;
};

/// Gaussian hit around the expected range mixed with a uniform floor.
struct SensorNoise {
  double sigma_range = 0.2;
  double z_hit = 0.9;
  double z_rand = 0.1;

  void validate() const {
    if (!(sigma_range > 0)) throw std::invalid_argument("sigma_range must be positive");
    if (z_hit < 0 || z_rand < 0 || std::abs(z_hit + z_rand - 1.0) > 1e-9)
      throw std::invalid_argument("sensor mixture weights must be nonnegative and sum to 1");
  }
};

struct KldConfig {
  double epsilon = 0.05;
  double delta = 0.01;
  double bin_xy = 0.5;
  double bin_theta = std::numbers::pi / 18;
  std::size_t min_particles = 100;
  std::size_t max_particles = 20000;

  void validate() const {
    if (!(epsilon > 0)) throw std::invalid_argument("KLD epsilon must be positive");
    if (!(delta > 0 && delta < 1)) throw std::invalid_argument("KLD delta must lie in (0,1)");
    if (!(bin_xy > 0 && bin_theta > 0)) throw std::invalid_argument("KLD bins must be positive");
    if (min_particles == 0 || min_particles > max_particles)
      throw std::invalid_argument("particle bounds must satisfy 0 < min <= max");
  }
};

// ---------------------------------------------------------------------------
// Standard normal quantile

/// Inverse standard normal CDF: Acklam's rational approximation (relative
/// error below 1.2e-9) followed by one Halley refinement step.
inline double normal_quantile(double p) {
  if (!(p > 0 && p < 1)) throw std::domain_error("normal_quantile needs p in (0,1)");
  static constexpr std::array<double, 6> a = {-3.969683028665376e+01, 2.209460984245205e+02,
                                              -2.759285104469687e+02, 1.383577518672690e+02,
                                              -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr std::array<double, 5> b = {-5.447609879822406e+01, 1.615858368580409e+02,
                                              -1.556989798598866e+02, 6.680131188771972e+01,
                                              -1.328068155288572e+01};
  static constexpr std::array<double, 6> c = {-7.784894002430293e-03, -3.223964580411365e-01,
                                              -2.400758277161838e+00, -2.549732539343734e+00,
                                              4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr std::array<double, 4> d = {7.784695709041462e-03, 3.224671290700398e-01,
                                              2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  } else if (p <= 1 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
  } else {
    const double q = std::sqrt(-2 * std::log(1 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  }
  const double e = 0.5 * std::erfc(-x / std::numbers::sqrt2) - p;
  const double u = e * std::sqrt(2 * std::numbers::pi) * std::exp(x * x / 2);
  return x - u / (1 + x * u / 2);
}

/// Particles needed so that, with probability 1 - delta, the KL divergence
/// between the sample-based and true posterior stays below epsilon, given
/// k occupied histogram bins. Zero for k <= 1.
inline double kld_bound(std::size_t k, double epsilon, double delta) {
  if (k <= 1) return 0.0;
  const double km1 = static_cast<double>(k - 1);
  const double z = normal_quantile(1.0 - delta);
  const double t = 2.0 / (9.0 * km1);
  const double base = 1.0 - t + std::sqrt(t) * z;
  return km1 / (2.0 * epsilon) * base * base * base;
}

// ---------------------------------------------------------------------------
// Sensing

/// Scan of `beams` equally spaced rays; bearings are relative to the pose
/// heading.
inline Scan scan_from_pose(const GridMap& map, const Pose& pose, int beams, double max_range) {
  if (beams < 4) throw std::invalid_argument("scan needs at least 4 beams");
  Scan scan;
  scan.max_range = max_range;
  for (int i = 0; i < beams; ++i) {
    const double bearing = 2.0 * std::numbers::pi * i / beams;
    scan.beams.push_back(
        {bearing, raycast_walls(map, pose.x, pose.y, pose.theta + bearing, max_range)});
  }
  return scan;
}

inline bool pose_in_free_space(const GridMap& map, const Pose& p) {
  return map.is_free({static_cast<int>(std::floor(p.x)), static_cast<int>(std::floor(p.y))});
}

/// Log-likelihood of the scan at pose; -inf inside walls.
inline double scan_log_likelihood(const GridMap& map, const Pose& pose, const Scan& scan,
                                  const SensorNoise& noise) {
  if (!pose_in_free_space(map, pose)) return -std::numeric_limits<double>::infinity();
  const double norm = 1.0 / (noise.sigma_range * std::sqrt(2.0 * std::numbers::pi));
  const double floor = scan.max_range > 0 ? noise.z_rand / scan.max_range : 0.0;
  double ll = 0.0;
  for (const Beam& b : scan.beams) {
    const double expected =
        raycast_walls(map, pose.x, pose.y, pose.theta + b.bearing, scan.max_range);
    const double z = (b.range - expected) / noise.sigma_range;
    ll += std::log(noise.z_hit * norm * std::exp(-0.5 * z * z) + floor);
  }
  return ll;
}

inline ParticleSet uniform_particles(const GridMap& map, std::size_t count, Rng& rng) {
  const std::vector<Cell> free = map.free_cells();
  if (free.empty()) throw std::invalid_argument("map has no free cell");
  std::uniform_int_distribution<std::size_t> pick(0, free.size() - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  ParticleSet out(count);
  for (Particle& p : out) {
    const Cell c = free[pick(rng)];
    p.pose = {c.x + unit(rng), c.y + unit(rng), normalize_angle(2 * std::numbers::pi * unit(rng))};
    p.weight = 1.0 / static_cast<double>(count);
  }
  return out;
}

inline void normalize_weights(ParticleSet& particles) {
  double total = 0.0;
  for (const Particle& p : particles) total += p.weight;
  if (!(total > 0)) throw std::domain_error("particle weights sum to zero");
  for (Particle& p : particles) p.weight /= total;
}

// ---------------------------------------------------------------------------
// Filter steps

inline ParticleSet motion_update(ParticleSet particles, const OdometryDelta& delta,
                                 const MotionNoise& noise, Rng& rng) {
  std::normal_distribution<double> unit(0.0, 1.0);
  for (Particle& p : particles) {
    const double dx = delta.dx + (noise.sigma_trans > 0 ? noise.sigma_trans * unit(rng) : 0.0);
    const double dy = delta.dy + (noise.sigma_trans > 0 ? noise.sigma_trans * unit(rng) : 0.0);
    const double dt = delta.dtheta + (noise.sigma_rot > 0 ? noise.sigma_rot * unit(rng) : 0.0);
    const double c = std::cos(p.pose.theta);
    const double s = std::sin(p.pose.theta);
    p.pose.x += dx * c - dy * s;
    p.pose.y += dx * s + dy * c;
    p.pose.theta = normalize_angle(p.pose.theta + dt);
  }
  return particles;
}

struct MeasurementResult {
  ParticleSet particles;
  /// Every weight vanished; the set was redrawn uniformly over free space.
  bool diverged = false;
};

/// On divergence the set is redrawn with `reinit_count` particles (0 keeps
/// the current size).
inline MeasurementResult measurement_update(ParticleSet particles, const Scan& scan,
                                            const GridMap& map, const SensorNoise& noise,
                                            Rng& rng, std::size_t reinit_count = 0) {
  noise.validate();
  if (particles.empty()) throw std::invalid_argument("empty particle set");
  std::vector<double> log_w(particles.size());
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < particles.size(); ++i) {
    const double prior = particles[i].weight > 0 ? std::log(particles[i].weight)
                                                 : -std::numeric_limits<double>::infinity();
    log_w[i] = prior + scan_log_likelihood(map, particles[i].pose, scan, noise);
    best = std::max(best, log_w[i]);
  }
  if (!std::isfinite(best)) {
    ParticleSet fresh =
        uniform_particles(map, reinit_count > 0 ? reinit_count : particles.size(), rng);
    std::vector<double> ll(fresh.size());
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < fresh.size(); ++i) {
      ll[i] = scan_log_likelihood(map, fresh[i].pose, scan, noise);
      top = std::max(top, ll[i]);
    }
    for (std::size_t i = 0; i < fresh.size(); ++i) fresh[i].weight = std::exp(ll[i] - top);
    normalize_weights(fresh);
    return {std::move(fresh), true};
  }
  for (std::size_t i = 0; i < particles.size(); ++i)
    particles[i].weight = std::exp(log_w[i] - best);
  normalize_weights(particles);
  return {std::move(particles), false};
}

namespace detail {

struct BinKey {
  long x, y, t;
  friend auto operator<=>(const BinKey&, const BinKey&) = default;
};

inline BinKey bin_of(const Pose& p, const KldConfig& kld) {
  return {static_cast<long>(std::floor(p.x / kld.bin_xy)),
          static_cast<long>(std::floor(p.y / kld.bin_xy)),
          static_cast<long>(std::floor(p.theta / kld.bin_theta))};
}

}  // namespace detail

struct ResampleResult {
  ParticleSet particles;
  std::size_t occupied_bins = 0;
  bool low_diversity = false;
};

/// Adaptive resampling. The sample size is grown one draw at a time until
/// it exceeds the KLD bound for the histogram bins occupied so far
/// (clamped to [min, max]); the output set of that size is then drawn by
/// systematic resampling. Output weights are uniform.
inline ResampleResult resample(const ParticleSet& particles, const KldConfig& kld, Rng& rng) {
  kld.validate();
  if (particles.empty()) throw std::invalid_argument("empty particle set");
  std::vector<double> cdf(particles.size());
  double total = 0.0;
  std::size_t nonzero = 0;
  std::size_t last_nonzero = 0;
  for (std::size_t i = 0; i < particles.size(); ++i) {
    const double w = particles[i].weight;
    if (w < 0 || !std::isfinite(w)) throw std::invalid_argument("invalid particle weight");
    if (w > 0) {
      ++nonzero;
      last_nonzero = i;
    }
    total += w;
    cdf[i] = total;
  }
  if (!(total > 0)) throw std::invalid_argument("particle weights sum to zero");

  ResampleResult out;
  if (nonzero == 1) {
    Particle only = particles[last_nonzero];
    only.weight = 1.0 / static_cast<double>(kld.min_particles);
    out.particles.assign(kld.min_particles, only);
    out.occupied_bins = 1;
    out.low_diversity = true;
    return out;
  }

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto draw = [&](double u) {
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u * total);
    return static_cast<std::size_t>(std::min<std::ptrdiff_t>(
        it - cdf.begin(), static_cast<std::ptrdiff_t>(particles.size()) - 1));
  };

  std::set<detail::BinKey> bins;
  std::size_t count = 0;
  double needed = static_cast<double>(kld.min_particles);
  while (count < kld.max_particles && static_cast<double>(count) < needed) {
    const std::size_t i = draw(unit(rng));
    ++count;
    if (bins.insert(detail::bin_of(particles[i].pose, kld)).second)
      needed = std::max(static_cast<double>(kld.min_particles),
                        kld_bound(bins.size(), kld.epsilon, kld.delta));
  }

  const double step = 1.0 / static_cast<double>(count);
  const double start = unit(rng) * step;
  out.particles.reserve(count);
  for (std::size_t j = 0; j < count; ++j) {
    Particle p = particles[draw(start + step * static_cast<double>(j))];
    p.weight = step;
    out.particles.push_back(p);
  }
  out.occupied_bins = bins.size();
  return out;
}

struct ModeConfig {
  /// Single-linkage merge distance in cells.
  double link_distance = 1.0;
  /// Clusters lighter than this fraction of the total weight are ignored.
  double min_weight_fraction = 0.05;
  /// Particles lighter than this multiple of the mean weight take no part
  /// in the clustering.
  double min_relative_weight = 0.5;
};

struct PoseEstimate {
  Pose mean;
  std::array<std::array<double, 3>, 3> covariance{};
  std::size_t modes = 0;
};

namespace detail {

struct DisjointSets {
  explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  }
  void unite(std::size_t a, std::size_t b) { parent[find(a)] = find(b); }
  std::vector<std::size_t> parent;
};

}  // namespace detail

/// Number of single-linkage clusters over (x, y) of the heavier particles
/// carrying at least the configured fraction of their weight.
inline std::size_t count_modes(const ParticleSet& particles, const ModeConfig& cfg) {
  if (particles.empty()) return 0;
  const double link = cfg.link_distance;
  const double link2 = link * link;
  auto bucket_of = [&](const Pose& p) {
    return std::pair<long, long>{static_cast<long>(std::floor(p.x / link)),
                                 static_cast<long>(std::floor(p.y / link))};
  };
  double sum = 0.0;
  for (const Particle& p : particles) sum += p.weight;
  const double cutoff = cfg.min_relative_weight * sum / static_cast<double>(particles.size());
  std::vector<bool> kept(particles.size());
  std::map<std::pair<long, long>, std::vector<std::size_t>> buckets;
  for (std::size_t i = 0; i < particles.size(); ++i) {
    kept[i] = particles[i].weight >= cutoff;
    if (kept[i]) buckets[bucket_of(particles[i].pose)].push_back(i);
  }

  detail::DisjointSets sets(particles.size());
  for (const auto& [key, members] : buckets) {
    for (long bx = key.first - 1; bx <= key.first + 1; ++bx) {
      for (long by = key.second - 1; by <= key.second + 1; ++by) {
        const auto other = buckets.find({bx, by});
        if (other == buckets.end() || other->first < key) continue;
        for (std::size_t i : members) {
          for (std::size_t j : other->second) {
            if (other->first == key && j <= i) continue;
            if (sets.find(i) == sets.find(j)) continue;
            const double ddx = particles[i].pose.x - particles[j].pose.x;
            const double ddy = particles[i].pose.y - particles[j].pose.y;
            if (ddx * ddx + ddy * ddy <= link2) sets.unite(i, j);
          }
        }
      }
    }
  }
  std::map<std::size_t, double> mass;
  double total = 0.0;
  for (std::size_t i = 0; i < particles.size(); ++i) {
    if (!kept[i]) continue;
    mass[sets.find(i)] += particles[i].weight;
    total += particles[i].weight;
  }
  std::size_t modes = 0;
  for (const auto& [root, m] : mass)
    if (m >= cfg.min_weight_fraction * total) ++modes;
  return modes;
}

/// Weighted mean (circular in theta), covariance and mode count.
inline PoseEstimate estimate_pose(const ParticleSet& particles, const ModeConfig& modes = {}) {
  if (particles.empty()) throw std::invalid_argument("empty particle set");
  double total = 0.0;
  double mx = 0.0, my = 0.0, sc = 0.0, ss = 0.0;
  for (const Particle& p : particles) {
    total += p.weight;
    mx += p.weight * p.pose.x;
    my += p.weight * p.pose.y;
    sc += p.weight * std::cos(p.pose.theta);
    ss += p.weight * std::sin(p.pose.theta);
  }
  if (!(total > 0)) throw std::invalid_argument("particle weights sum to zero");
  PoseEstimate est;
  est.mean = {mx / total, my / total, normalize_angle(std::atan2(ss, sc))};
  for (const Particle& p : particles) {
    const std::array<double, 3> d = {p.pose.x - est.mean.x, p.pose.y - est.mean.y,
                                     angle_diff(p.pose.theta, est.mean.theta)};
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) est.covariance[r][c] += p.weight * d[r] * d[c] / total;
  }
  est.modes = count_modes(particles, modes);
  return est;
}

/// Weighted RMS position error of the particle cloud around `truth`.
inline double position_rmse(const ParticleSet& particles, const Pose& truth) {
  double total = 0.0, acc = 0.0;
  for (const Particle& p : particles) {
    const double dx = p.pose.x - truth.x;
    const double dy = p.pose.y - truth.y;
    acc += p.weight * (dx * dx + dy * dy);
    total += p.weight;
  }
  return std::sqrt(acc / total);
}

// ---------------------------------------------------------------------------
// Scripted runs

struct MclConfig {
  MotionNoise motion;
  SensorNoise sensor;
  KldConfig kld;
  ModeConfig modes;
  int beams = 12;
  double max_range = 8.0;
};

struct TraceRow {
  int t = 0;
  Pose truth;
  Pose estimate;
  std::size_t particles = 0;
  std::size_t modes = 0;
  double rmse = 0.0;
  bool diverged = false;
};

/// Global localization along a scripted odometry sequence. The true pose
/// follows the odometry exactly; the filter sees noisy motion through its
/// motion model and one scan per step (including t = 0 before moving).
inline std::vector<TraceRow> run_localization(const GridMap& map, const Pose& start,
                                              const std::vector<OdometryDelta>& script,
                                              const MclConfig& cfg, std::uint64_t seed) {
  cfg.kld.validate();
  cfg.sensor.validate();
  Rng rng = make_rng(seed, 0x6d636c);
  ParticleSet particles = uniform_particles(map, cfg.kld.max_particles, rng);
  Pose truth = start;
  std::vector<TraceRow> trace;
  for (std::size_t t = 0; t <= script.size(); ++t) {
    if (t > 0) {
      const OdometryDelta& d = script[t - 1];
      particles = motion_update(std::move(particles), d, cfg.motion, rng);
      const double c = std::cos(truth.theta), s = std::sin(truth.theta);
      truth = {truth.x + d.dx * c - d.dy * s, truth.y + d.dx * s + d.dy * c,
               normalize_angle(truth.theta + d.dtheta)};
      if (!pose_in_free_space(map, truth))
        throw std::invalid_argument("scripted trajectory enters a wall at step " +
                                    std::to_string(t));
    }
    const std::size_t n = particles.size();
    const Scan scan = scan_from_pose(map, truth, cfg.beams, cfg.max_range);
    MeasurementResult m = measurement_update(std::move(particles), scan, map, cfg.sensor, rng,
                                             cfg.kld.max_particles);
    const PoseEstimate est = estimate_pose(m.particles, cfg.modes);
    trace.push_back({static_cast<int>(t), truth, est.mean, n, est.modes,
                     position_rmse(m.particles, truth), m.diverged});
    particles = resample(m.particles, cfg.kld, rng).particles;
  }
  return trace;
}

/// Odometry that walks a sequence of 4-connected cells, turning to face
/// each move.
inline std::vector<OdometryDelta> odometry_for_path(const std::vector<Cell>& path,
                                                    double initial_heading) {
  std::vector<OdometryDelta> out;
  double heading = initial_heading;
  for (std::size_t i = 1; i < path.size(); ++i) {
    const int dx = path[i].x - path[i - 1].x;
    const int dy = path[i].y - path[i - 1].y;
    if (std::abs(dx) + std::abs(dy) != 1)
      throw std::invalid_argument("path cells must be 4-connected");
    const double travel = std::atan2(dy, dx);
    const double turn = angle_diff(travel, heading);
    out.push_back({std::cos(turn), std::sin(turn), turn});
    heading = normalize_angle(heading + turn);
  }
  return out;
}

/// Seeded random walk over free cells that avoids stepping straight back
/// unless boxed in.
inline std::vector<Cell> random_walk(const GridMap& map, Cell start, std::size_t steps,
                                     std::uint64_t seed) {
  if (!map.is_free(start)) throw std::invalid_argument("random walk starts inside a wall");
  Rng rng = make_rng(seed, 0x77616c6b);
  std::vector<Cell> path{start};
  for (std::size_t i = 0; i < steps; ++i) {
    const Cell here = path.back();
    std::vector<Cell> options;
    for (Action a : kMoveActions) {
      const Cell d = action_delta(a);
      const Cell next{here.x + d.x, here.y + d.y};
      if (!map.is_free(next)) continue;
      if (path.size() >= 2 && next == path[path.size() - 2]) continue;
      options.push_back(next);
    }
    if (options.empty() && path.size() >= 2) options.push_back(path[path.size() - 2]);
    if (options.empty()) break;
    std::uniform_int_distribution<std::size_t> pick(0, options.size() - 1);
    path.push_back(options[pick(rng)]);
  }
  return path;
}

}  // namespace oomdp
