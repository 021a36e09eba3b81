#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <random>
#include <vector>

#include "pcfsq/fft.hpp"
#include "pcfsq/grid.hpp"

using namespace pcfsq;

namespace {

std::vector<cplx> random_field(int n, unsigned seed) {
  std::mt19937 gen(seed);
  std::normal_distribution<double> nd;
  std::vector<cplx> f(n);
  for (auto& v : f) v = {nd(gen), nd(gen)};
  return f;
}

}  // namespace

TEST_CASE("round trip is the identity", "[fft]") {
  const int n = 1024;
  FftWorkspace ws(n);
  const auto f = random_field(n, 42);
  std::vector<cplx> spec(n), back(n);
  ws.to_spectrum(f.data(), spec.data());
  ws.to_time(spec.data(), back.data());
  double max_err = 0.0, max_val = 0.0;
  for (int j = 0; j < n; ++j) {
    max_err = std::max(max_err, std::abs(back[j] - f[j]));
    max_val = std::max(max_val, std::abs(f[j]));
  }
  CHECK(max_err / max_val < 1e-12);
}

TEST_CASE("analysis maps a pure mode to its bin", "[fft]") {
  const int n = 256;
  FftWorkspace ws(n);
  // phi_j = exp(-i Omega_m (tau_j - tau_0)) = exp(-i 2 pi j m / n)
  for (int m : {5, n - 3}) {
    std::vector<cplx> f(n), spec(n);
    for (int j = 0; j < n; ++j) {
      const double ph = -2.0 * kPi * j * m / n;
      f[j] = {std::cos(ph), std::sin(ph)};
    }
    ws.to_spectrum(f.data(), spec.data());
    for (int k = 0; k < n; ++k) {
      const cplx expect = (k == m) ? cplx(1.0, 0.0) : cplx(0.0, 0.0);
      CHECK(std::abs(spec[k] - expect) < 1e-12);
    }
  }
}

TEST_CASE("Parseval with the 1/n analysis normalization", "[fft]") {
  const int n = 512;
  FftWorkspace ws(n);
  const auto f = random_field(n, 7);
  std::vector<cplx> spec(n);
  ws.to_spectrum(f.data(), spec.data());
  double time_sum = 0.0, spec_sum = 0.0;
  for (int j = 0; j < n; ++j) time_sum += std::norm(f[j]);
  for (int k = 0; k < n; ++k) spec_sum += std::norm(spec[k]);
  CHECK_THAT(time_sum, Catch::Matchers::WithinRel(n * spec_sum, 1e-12));
}

TEST_CASE("spectral derivative matches the analytic one", "[fft]") {
  const Grid g = make_grid(4096, 20.0);
  FftWorkspace ws(g.n_points);
  std::vector<cplx> f(g.n_points), spec(g.n_points), deriv(g.n_points);
  for (int j = 0; j < g.n_points; ++j) f[j] = std::exp(-0.5 * g.tau[j] * g.tau[j]);
  ws.to_spectrum(f.data(), spec.data());
  for (int k = 0; k < g.n_points; ++k) spec[k] *= cplx(0.0, -g.omega[k]);  // d/dtau
  ws.to_time(spec.data(), deriv.data());
  for (int j = 0; j < g.n_points; j += 17) {
    const double expect = -g.tau[j] * std::exp(-0.5 * g.tau[j] * g.tau[j]);
    CHECK_THAT(deriv[j].real(), Catch::Matchers::WithinAbs(expect, 1e-10));
    CHECK_THAT(deriv[j].imag(), Catch::Matchers::WithinAbs(0.0, 1e-10));
  }
}

TEST_CASE("dispersed Gaussian matches the closed form", "[fft]") {
  // phi(z,tau) = (1+iz)^(-1/2) exp(-tau^2/(2(1+iz))) under the e^{-i Omega tau}
  // convention; width sqrt(2) at z = 1
  const Grid g = make_grid(4096, 20.0);
  FftWorkspace ws(g.n_points);
  const double z = 1.0;
  std::vector<cplx> f(g.n_points), spec(g.n_points);
  for (int j = 0; j < g.n_points; ++j) f[j] = std::exp(-0.5 * g.tau[j] * g.tau[j]);
  ws.to_spectrum(f.data(), spec.data());
  const auto mult = linear_multiplier(g, 0.0, z);
  for (int k = 0; k < g.n_points; ++k) spec[k] *= mult[k];
  ws.to_time(spec.data(), f.data());

  const cplx a = cplx(1.0, z);
  double max_err = 0.0;
  for (int j = 0; j < g.n_points; ++j) {
    const cplx expect = std::exp(-0.5 * g.tau[j] * g.tau[j] / a) / std::sqrt(a);
    max_err = std::max(max_err, std::abs(f[j] - expect));
  }
  CHECK(max_err < 1e-10);
}

TEST_CASE("half-complex transforms invert up to the factor n", "[fft]") {
  const int n = 256;
  FftWorkspace ws(n);
  std::mt19937 gen(3);
  std::normal_distribution<double> nd;
  std::vector<double> rho(n), back(n);
  for (auto& v : rho) v = nd(gen);
  std::vector<cplx> half(n / 2 + 1);
  ws.forward_r2c(rho.data(), half.data());

  // real input: DC and Nyquist bins are exactly real
  CHECK(half[0].imag() == 0.0);
  CHECK(half[n / 2].imag() == 0.0);

  ws.backward_c2r(half.data(), back.data());
  for (int j = 0; j < n; ++j)
    CHECK_THAT(back[j], Catch::Matchers::WithinAbs(n * rho[j], 1e-10));
}
