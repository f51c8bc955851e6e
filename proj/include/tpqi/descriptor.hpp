#pragma once

// Trajectory descriptors. A trajectory unit is three consecutive points
// x_{i-1}, x_i, x_{i+1}; with difference vectors a = x_i - x_{i-1} and
// b = x_{i+1} - x_i:
//
//   curvature  theta_i = angle between a and b
//   distance   S_i     = |a + b| = |x_{i+1} - x_{i-1}|   (default option)
//   VPT        Q_i     = theta_i * sqrt(S_i)
//
// A domain score is log(mean_i Q_i); TPQI averages the LGN and V1 domain
// scores. Larger values mean a more curved / less compact trajectory, i.e.
// worse temporal quality.

#include "tpqi/core.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace tpqi {

/// Difference vectors shorter than this make an instant's angle undefined.
inline constexpr double kDegenerateNorm = 1e-12;
/// Floor applied to the mean before the log.
inline constexpr double kScoreFloor = 1e-12;

enum class Variant { vpt, curvature_only, distance_only, linear_error };

enum class DistanceOption {
  norm_first,    // |x_i - x_{i-1}|
  norm_second,   // |x_{i+1} - x_i|
  sum_of_norms,  // |x_i - x_{i-1}| + |x_{i+1} - x_i|
  norm_of_sum,   // |x_{i+1} - x_{i-1}|
  point_to_line, // distance from x_{i+1} to the line through x_{i-1}, x_i
};

struct DescriptorKind {
  Variant variant = Variant::vpt;
  DistanceOption distance = DistanceOption::norm_of_sum;
};

std::string to_string(Variant v);
std::string to_string(DistanceOption o);
Variant parse_variant(const std::string& s);
DistanceOption parse_distance_option(const std::string& s);

template <typename A, typename B, typename C>
std::optional<typename A::Scalar> curvature(const Eigen::MatrixBase<A>& prev,
                                            const Eigen::MatrixBase<B>& cur,
                                            const Eigen::MatrixBase<C>& next) {
  using Scalar = typename A::Scalar;
  const auto a = (cur - prev).eval();
  const auto b = (next - cur).eval();
  const Scalar na = a.norm(), nb = b.norm();
  if (!(na > kDegenerateNorm) || !(nb > kDegenerateNorm)) return std::nullopt;
  // Half-angle form: exact zero for parallel vectors, no acos cancellation.
  const auto ua = (a / na).eval();
  const auto ub = (b / nb).eval();
  return Scalar(2) * std::atan2((ua - ub).norm(), (ua + ub).norm());
}

template <typename A, typename B, typename C>
std::optional<typename A::Scalar> distance(const Eigen::MatrixBase<A>& prev,
                                           const Eigen::MatrixBase<B>& cur,
                                           const Eigen::MatrixBase<C>& next,
                                           DistanceOption option) {
  using Scalar = typename A::Scalar;
  switch (option) {
  case DistanceOption::norm_first: return (cur - prev).norm();
  case DistanceOption::norm_second: return (next - cur).norm();
  case DistanceOption::sum_of_norms: return (cur - prev).norm() + (next - cur).norm();
  case DistanceOption::norm_of_sum: return (next - prev).norm();
  case DistanceOption::point_to_line: {
    const auto dir = (cur - prev).eval();
    const Scalar len = dir.norm();
    if (!(len > kDegenerateNorm)) return std::nullopt;
    const auto rel = (next - prev).eval();
    const auto unit = (dir / len).eval();
    return (rel - rel.dot(unit) * unit).norm();
  }
  }
  return std::nullopt;
}

template <typename Scalar>
Scalar vpt_instant(Scalar theta, Scalar s) {
  return theta * std::sqrt(s);
}

/// Deviation of x_{i+1} from first-order extrapolation 2 x_i - x_{i-1}.
template <typename A, typename B, typename C>
typename A::Scalar linear_error_instant(const Eigen::MatrixBase<A>& prev,
                                        const Eigen::MatrixBase<B>& cur,
                                        const Eigen::MatrixBase<C>& next) {
  return (next - (2 * cur - prev)).norm();
}

/// Per-instant values for one trajectory. `instants` holds the trajectory
/// row index i of every kept instant; theta / s are filled only for the
/// variants that use them and are then aligned with `q`.
struct DescriptorSeries {
  std::vector<Index> instants;
  std::vector<double> theta;
  std::vector<double> s;
  std::vector<double> q;
  std::vector<Index> skipped;
};

/// Evaluates the descriptor at every interior row of `points` (N x d).
template <typename Derived>
DescriptorSeries describe(const Eigen::MatrixBase<Derived>& points, const DescriptorKind& kind) {
  DescriptorSeries out;
  const bool uses_angle = kind.variant == Variant::vpt || kind.variant == Variant::curvature_only;
  const bool uses_distance = kind.variant == Variant::vpt || kind.variant == Variant::distance_only;
  for (Index i = 1; i + 1 < points.rows(); ++i) {
    const auto prev = points.row(i - 1).transpose();
    const auto cur = points.row(i).transpose();
    const auto next = points.row(i + 1).transpose();

    if (kind.variant == Variant::linear_error) {
      out.instants.push_back(i);
      out.q.push_back(linear_error_instant(prev, cur, next));
      continue;
    }
    std::optional<double> theta, s;
    if (uses_angle) theta = curvature(prev, cur, next);
    if (uses_distance) s = distance(prev, cur, next, kind.distance);
    if ((uses_angle && !theta) || (uses_distance && !s)) {
      out.skipped.push_back(i);
      continue;
    }
    out.instants.push_back(i);
    if (theta) out.theta.push_back(*theta);
    if (s) out.s.push_back(*s);
    switch (kind.variant) {
    case Variant::vpt: out.q.push_back(vpt_instant(*theta, *s)); break;
    case Variant::curvature_only: out.q.push_back(*theta); break;
    case Variant::distance_only: out.q.push_back(*s); break;
    case Variant::linear_error: break;
    }
  }
  return out;
}

struct DomainScore {
  double value = 0;
  double mean = 0;         // mean of Q_i before flooring
  std::size_t used = 0;    // instants in the mean
  std::size_t skipped = 0; // instants excluded as undefined
  bool degenerate = false; // no usable instant, or mean below the floor
};

/// log of the mean over kept instants, floored at kScoreFloor.
inline DomainScore score_series(const DescriptorSeries& series) {
  DomainScore out;
  out.used = series.q.size();
  out.skipped = series.skipped.size();
  if (series.q.empty()) {
    out.degenerate = true;
    out.value = std::log(kScoreFloor);
    return out;
  }
  // Fixed-order pairwise summation keeps results independent of threading.
  std::vector<double> partial(series.q);
  while (partial.size() > 1) {
    std::vector<double> next((partial.size() + 1) / 2);
    for (std::size_t k = 0; k < next.size(); ++k)
      next[k] = partial[2 * k] + (2 * k + 1 < partial.size() ? partial[2 * k + 1] : 0.0);
    partial.swap(next);
  }
  out.mean = partial.front() / static_cast<double>(series.q.size());
  out.degenerate = !(out.mean >= kScoreFloor);
  out.value = std::log(std::max(out.mean, kScoreFloor));
  return out;
}

template <typename Derived>
DomainScore domain_score(const Eigen::MatrixBase<Derived>& points, const DescriptorKind& kind = {}) {
  if (points.rows() < 3)
    throw ConfigError("descriptor: trajectory needs at least 3 points, got " +
                      std::to_string(points.rows()));
  return score_series(describe(points, kind));
}

struct TpqiScore {
  double value = 0;
  bool degenerate = false;
  std::vector<DomainScore> domains;
};

/// Arithmetic mean of the given domain scores (one domain gives the
/// single-domain variant).
inline TpqiScore tpqi(std::span<const DomainScore> domains) {
  if (domains.empty()) throw ConfigError("tpqi: no domain scores");
  TpqiScore out;
  double sum = 0;
  for (const auto& d : domains) {
    sum += d.value;
    out.degenerate = out.degenerate || d.degenerate;
  }
  out.value = sum / static_cast<double>(domains.size());
  out.domains.assign(domains.begin(), domains.end());
  return out;
}

template <typename A, typename B>
TpqiScore tpqi(const Eigen::MatrixBase<A>& lgn_points, const Eigen::MatrixBase<B>& v1_points,
               const DescriptorKind& kind = {}) {
  if (lgn_points.rows() != v1_points.rows())
    throw DimensionError("tpqi: LGN and V1 trajectories differ in frame count");
  const DomainScore scores[] = {domain_score(lgn_points, kind), domain_score(v1_points, kind)};
  return tpqi(std::span<const DomainScore>(scores));
}

} // namespace tpqi
