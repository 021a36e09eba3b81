#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace pcfsq {

// Counter-based noise generation: every Gaussian draw is addressed by
// (seed, trajectory, arm, channel, step, index), so results are identical for
// any worker count and any execution order.

enum class NoiseChannel : std::uint32_t {
  vacuum = 0,
  raman = 1,
  gawbs = 2,
};

struct NoiseKey {
  std::uint64_t seed = 0;
  std::uint32_t trajectory = 0;
  std::uint32_t arm = 0;  // 0 = clockwise, 1 = counter-clockwise
};

namespace detail {

struct U32x4 {
  std::uint32_t v[4];
};

// Philox4x32-10 (Salmon et al. reference constants).
inline U32x4 philox4x32(U32x4 ctr, std::uint32_t k0, std::uint32_t k1) {
  constexpr std::uint32_t kM0 = 0xD2511F53u;
  constexpr std::uint32_t kM1 = 0xCD9E8D57u;
  constexpr std::uint32_t kW0 = 0x9E3779B9u;
  constexpr std::uint32_t kW1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * ctr.v[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * ctr.v[2];
    const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
    const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
    ctr = U32x4{{hi1 ^ ctr.v[1] ^ k0, lo1, hi0 ^ ctr.v[3] ^ k1, lo0}};
    k0 += kW0;
    k1 += kW1;
  }
  return ctr;
}

inline double uniform_open(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 32) | lo;
  // 52 mantissa bits, offset by half a step: every value lies strictly inside
  // (0,1) with exact arithmetic (53 bits would round the top value to 1.0)
  return (static_cast<double>(bits >> 12) + 0.5) * 0x1.0p-52;
}

}  // namespace detail

/// Inverse of the standard normal CDF (Wichura's PPND16), accurate to ~1e-16
/// over (0,1).
inline double inverse_normal_cdf(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("inverse_normal_cdf: p outside (0,1)");
  const double q = p - 0.5;
  if (q >= -0.425 && q <= 0.425) {
    const double r = 0.180625 - q * q;
    const double num =
        (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
              6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r +
            1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r +
          1.3314166789178437745e2) * r + 3.3871328727963666080e0);
    const double den =
        (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
              3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r +
            5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r +
          4.2313330701600911252e1) * r + 1.0);
    return q * num / den;
  }
  double r = (q < 0.0) ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double val;
  if (r <= 5.0) {
    r -= 1.6;
    const double num =
        (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
              2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r +
            3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r +
          4.63033784615654529590e0) * r + 1.42343711074968357734e0);
    const double den =
        (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
              1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
            6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r +
          2.05319162663775882187e0) * r + 1.0);
    val = num / den;
  } else {
    r -= 5.0;
    const double num =
        (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
              1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
            2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r +
          5.46378491116411436990e0) * r + 6.65790464350110377720e0);
    const double den =
        (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
              1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
            1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
          5.99832206555887937690e-1) * r + 1.0);
    val = num / den;
  }
  return (q < 0.0) ? -val : val;
}

/// Two independent N(0,1) draws for block `index` of the addressed stream.
inline void normal_pair(const NoiseKey& key, NoiseChannel channel, std::uint32_t step,
                        std::uint32_t index, double& z0, double& z1) {
  const detail::U32x4 ctr{{key.trajectory, step,
                           (static_cast<std::uint32_t>(channel) << 1) | (key.arm & 1u), index}};
  const auto out = detail::philox4x32(ctr, static_cast<std::uint32_t>(key.seed),
                                      static_cast<std::uint32_t>(key.seed >> 32));
  z0 = inverse_normal_cdf(detail::uniform_open(out.v[0], out.v[1]));
  z1 = inverse_normal_cdf(detail::uniform_open(out.v[2], out.v[3]));
}

/// Fills out[0..count) with N(0,1) draws from consecutive blocks.
inline void fill_normals(const NoiseKey& key, NoiseChannel channel, std::uint32_t step,
                         double* out, std::size_t count) {
  std::size_t i = 0;
  std::uint32_t block = 0;
  while (i + 2 <= count) {
    normal_pair(key, channel, step, block++, out[i], out[i + 1]);
    i += 2;
  }
  if (i < count) {
    double z0, z1;
    normal_pair(key, channel, step, block, z0, z1);
    out[i] = z0;
  }
}

}  // namespace pcfsq
