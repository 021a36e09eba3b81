#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "pcfsq/constants.hpp"
#include "pcfsq/grid.hpp"
#include "pcfsq/propagator.hpp"

namespace pcfsq {

struct StokesSample {
  double s0 = 0.0;
  double s1 = 0.0;
  double s2 = 0.0;
  double s3 = 0.0;
};

/// Sagnac output: the two counter-propagating arms recombine with a pi/2
/// relative phase into orthogonal polarisation components, phi_y = i * arm_B.
inline std::pair<std::vector<cplx>, std::vector<cplx>> combine_sagnac(
    const TrajectoryField& arm_a, const TrajectoryField& arm_b) {
  if (arm_a.values.size() != arm_b.values.size())
    throw std::invalid_argument("combine_sagnac: arms on different grids");
  std::vector<cplx> phi_x = arm_a.values;
  std::vector<cplx> phi_y(arm_b.values.size());
  for (std::size_t j = 0; j < phi_y.size(); ++j)
    phi_y[j] = cplx(0.0, 1.0) * arm_b.values[j];
  return {std::move(phi_x), std::move(phi_y)};
}

/// Stokes parameters from the polarisation components:
///   N_ij = nbar * sum conj(phi_i) phi_j dt,
///   S0 = Nxx + Nyy, S1 = Nxx - Nyy, S2 = 2 Re Nxy, S3 = 2 Im Nxy.
inline StokesSample stokes_sample(const std::vector<cplx>& phi_x, const std::vector<cplx>& phi_y,
                                  double nbar, const Grid& grid) {
  if (phi_x.size() != phi_y.size() ||
      phi_x.size() != static_cast<std::size_t>(grid.n_points))
    throw std::invalid_argument("stokes_sample: fields do not match the grid");
  double nxx = 0.0, nyy = 0.0;
  cplx nxy = 0.0;
  for (std::size_t j = 0; j < phi_x.size(); ++j) {
    nxx += std::norm(phi_x[j]);
    nyy += std::norm(phi_y[j]);
    nxy += std::conj(phi_x[j]) * phi_y[j];
  }
  const double w = nbar * grid.dt;
  StokesSample s;
  s.s0 = w * (nxx + nyy);
  s.s1 = w * (nxx - nyy);
  s.s2 = 2.0 * w * nxy.real();
  s.s3 = 2.0 * w * nxy.imag();
  return s;
}

/// A differential phase delta between the arms multiplies Nxy by e^{i delta},
/// i.e. rotates (S2, S3) while leaving S0, S1 untouched.
inline StokesSample rotate_s2_s3(const StokesSample& in, double delta) {
  const double c = std::cos(delta);
  const double s = std::sin(delta);
  StokesSample out = in;
  out.s2 = in.s2 * c - in.s3 * s;
  out.s3 = in.s2 * s + in.s3 * c;
  return out;
}

struct StokesMoments {
  std::size_t count = 0;
  double mean_s0 = 0.0, mean_s1 = 0.0, mean_s2 = 0.0, mean_s3 = 0.0;
  double c11 = 0.0, c22 = 0.0, c12 = 0.0;  // sample covariance of (S1, S2)
};

// Per-trajectory Stokes records. Reductions run in trajectory-index order with
// two passes, so moments are bit-identical for any worker count.
class StokesEnsemble {
 public:
  StokesEnsemble() = default;
  explicit StokesEnsemble(std::size_t n) : samples_(n) {}

  void reserve(std::size_t n) { samples_.reserve(n); }
  void add(const StokesSample& s) { samples_.push_back(s); }
  std::size_t size() const { return samples_.size(); }
  StokesSample& operator[](std::size_t i) { return samples_[i]; }
  const StokesSample& operator[](std::size_t i) const { return samples_[i]; }
  const std::vector<StokesSample>& samples() const { return samples_; }

  StokesMoments moments() const {
    if (samples_.size() < 2)
      throw std::invalid_argument("stokes ensemble needs at least 2 trajectories");
    StokesMoments m;
    m.count = samples_.size();
    for (const auto& s : samples_) {
      m.mean_s0 += s.s0;
      m.mean_s1 += s.s1;
      m.mean_s2 += s.s2;
      m.mean_s3 += s.s3;
    }
    const double inv_n = 1.0 / static_cast<double>(m.count);
    m.mean_s0 *= inv_n;
    m.mean_s1 *= inv_n;
    m.mean_s2 *= inv_n;
    m.mean_s3 *= inv_n;
    double c11 = 0.0, c22 = 0.0, c12 = 0.0;
    for (const auto& s : samples_) {
      const double d1 = s.s1 - m.mean_s1;
      const double d2 = s.s2 - m.mean_s2;
      c11 += d1 * d1;
      c22 += d2 * d2;
      c12 += d1 * d2;
    }
    const double inv_nm1 = 1.0 / static_cast<double>(m.count - 1);
    m.c11 = c11 * inv_nm1;
    m.c22 = c22 * inv_nm1;
    m.c12 = c12 * inv_nm1;
    return m;
  }

 private:
  std::vector<StokesSample> samples_;
};

struct SqueezingResult {
  double m_min = 0.0;
  double m_max = 0.0;
  double theta_min = 0.0;  // radians in [0, pi)
  double theta_max = 0.0;
  double m_min_db = 0.0;
  double m_max_db = 0.0;
  double sem_db = 0.0;
  bool degenerate = false;
};

namespace detail {

inline double wrap_half_turn(double theta) {
  while (theta < 0.0) theta += kPi;
  while (theta >= kPi) theta -= kPi;
  return theta;
}

}  // namespace detail

/// Extremal dark-plane variances: Var(S_theta) = mean +- R with
/// mean = (C11+C22)/2, R = sqrt(((C11-C22)/2)^2 + C12^2), normalized by
/// |<S3>| (or by denominator_override, e.g. an empirically calibrated shot
/// level, when positive). sem_db is the standard error of the minimum
/// variance estimate, from the kurtosis-corrected variance of the sample
/// variance, propagated through 10*log10.
inline SqueezingResult dark_plane_extrema(const StokesEnsemble& ensemble,
                                          double denominator_override = 0.0) {
  const StokesMoments m = ensemble.moments();
  double denom = denominator_override;
  if (denom <= 0.0) {
    denom = std::abs(m.mean_s3);
    if (denom == 0.0)
      throw std::invalid_argument("dark_plane_extrema: <S3> vanishes; no dark plane defined");
  }
  const double half_diff = 0.5 * (m.c11 - m.c22);
  const double mean_var = 0.5 * (m.c11 + m.c22);
  const double r = std::hypot(half_diff, m.c12);
  const double psi = std::atan2(m.c12, half_diff);

  SqueezingResult res;
  res.m_min = (mean_var - r) / denom;
  res.m_max = (mean_var + r) / denom;
  res.theta_max = detail::wrap_half_turn(0.5 * psi);
  res.theta_min = detail::wrap_half_turn(0.5 * psi + 0.5 * kPi);

  if (!(mean_var - r > 0.0)) {
    res.degenerate = true;
    res.m_min_db = -std::numeric_limits<double>::infinity();
    res.m_max_db = res.m_max > 0.0 ? 10.0 * std::log10(res.m_max)
                                   : -std::numeric_limits<double>::infinity();
    res.sem_db = 0.0;
    return res;
  }
  res.m_min_db = 10.0 * std::log10(res.m_min);
  res.m_max_db = 10.0 * std::log10(res.m_max);

  // spread of the sample variance along the minimizing direction
  const double c = std::cos(res.theta_min);
  const double s = std::sin(res.theta_min);
  const double mu = c * m.mean_s1 + s * m.mean_s2;
  const double n = static_cast<double>(m.count);
  double sum2 = 0.0, sum4 = 0.0;
  for (const auto& smp : ensemble.samples()) {
    const double d = c * smp.s1 + s * smp.s2 - mu;
    const double d2 = d * d;
    sum2 += d2;
    sum4 += d2 * d2;
  }
  const double var = sum2 / (n - 1.0);
  const double m4 = sum4 / n;
  const double var_of_var = (m4 - var * var * (n - 3.0) / (n - 1.0)) / n;
  res.sem_db = 10.0 / std::log(10.0) * std::sqrt(std::max(var_of_var, 0.0)) / var;
  return res;
}

/// Lumped linear loss on the metric: shot noise (M=1) is the fixed point.
inline double apply_loss(double m, double epsilon) {
  if (epsilon < 0.0 || epsilon > 1.0) throw std::invalid_argument("loss must lie in [0,1]");
  if (m < 0.0) throw std::invalid_argument("metric must be >= 0");
  return (1.0 - epsilon) * m + epsilon;
}

/// Imperfect spectral overlap acts as an extra effective loss of 1-V.
inline double apply_overlap(double m, double visibility) {
  if (visibility < 0.0 || visibility > 1.0)
    throw std::invalid_argument("visibility must lie in [0,1]");
  return apply_loss(m, 1.0 - visibility);
}

/// Serial loss + overlap composition on a full result: M -> aM + (1-a) with
/// a = (1-eps)V. Angles are unchanged; the sem transforms with the same
/// affine map as the metric.
inline SqueezingResult apply_detection(SqueezingResult r, double epsilon, double visibility) {
  if (epsilon < 0.0 || epsilon > 1.0) throw std::invalid_argument("loss must lie in [0,1]");
  if (visibility < 0.0 || visibility > 1.0)
    throw std::invalid_argument("visibility must lie in [0,1]");
  const double a = (1.0 - epsilon) * visibility;
  if (a == 1.0) return r;
  const auto to_db = [](double m) {
    return m > 0.0 ? 10.0 * std::log10(m) : -std::numeric_limits<double>::infinity();
  };
  const double sem_linear =
      r.m_min > 0.0 ? r.sem_db * std::log(10.0) / 10.0 * r.m_min : 0.0;
  r.m_min = a * r.m_min + (1.0 - a);
  r.m_max = a * r.m_max + (1.0 - a);
  r.m_min_db = to_db(r.m_min);
  r.m_max_db = to_db(r.m_max);
  r.sem_db = r.m_min > 0.0 ? 10.0 / std::log(10.0) * a * sem_linear / r.m_min : 0.0;
  return r;
}

}  // namespace pcfsq
