#pragma once

#include <complex>
#include <stdexcept>
#include <vector>

#include "pcfsq/constants.hpp"

namespace pcfsq {

using cplx = std::complex<double>;

// Fourier convention used throughout: phi(tau) = sum_k Phi_k exp(-i Omega_k tau),
// so d/dtau maps to multiplication by -i*Omega. Frequencies are stored in
// standard DFT order (non-negative first, then negative).

struct Grid {
  int n_points = 0;
  double t_window = 0.0;  // grid spans [-t_window, t_window)
  double dt = 0.0;
  std::vector<double> tau;
  std::vector<double> omega;
};

inline bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

inline Grid make_grid(int n_points, double t_window) {
  if (!is_power_of_two(n_points) || n_points < 64)
    throw std::invalid_argument("grid: n_points must be a power of two >= 64");
  if (!(t_window > 0.0)) throw std::invalid_argument("grid: t_window must be > 0");
  Grid g;
  g.n_points = n_points;
  g.t_window = t_window;
  g.dt = 2.0 * t_window / n_points;
  g.tau.resize(n_points);
  g.omega.resize(n_points);
  const double domega = kPi / t_window;  // 2*pi / (n*dt)
  for (int j = 0; j < n_points; ++j) {
    g.tau[j] = -t_window + j * g.dt;
    const int k = j < n_points / 2 ? j : j - n_points;
    g.omega[j] = domega * k;
  }
  return g;
}

/// Spectral factor of the exact linear step over dz:
/// exp(i*dz*(-Omega^2/2 + B3*Omega^3/6)). Unit magnitude at every Omega.
inline std::vector<std::complex<double>> linear_multiplier(const Grid& grid, double b3,
                                                           double dz) {
  std::vector<std::complex<double>> m(grid.n_points);
  for (int k = 0; k < grid.n_points; ++k) {
    const double w = grid.omega[k];
    const double phase = dz * (-0.5 * w * w + b3 * w * w * w / 6.0);
    m[k] = std::complex<double>(std::cos(phase), std::sin(phase));
  }
  return m;
}

}  // namespace pcfsq
