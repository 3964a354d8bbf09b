#include "cbi/rng.hpp"

#include <cmath>
#include <limits>

#include "cbi/errors.hpp"

namespace cbi::rng {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void mul_hi_lo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi,
                      std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

// Philox 4x32-10; counter = (position, stream_id), key = seed.
inline void philox_block(std::uint64_t key, std::uint64_t stream_id,
                         std::uint64_t position, std::uint32_t out[4]) {
  std::uint32_t c0 = static_cast<std::uint32_t>(position);
  std::uint32_t c1 = static_cast<std::uint32_t>(position >> 32);
  std::uint32_t c2 = static_cast<std::uint32_t>(stream_id);
  std::uint32_t c3 = static_cast<std::uint32_t>(stream_id >> 32);
  std::uint32_t k0 = static_cast<std::uint32_t>(key);
  std::uint32_t k1 = static_cast<std::uint32_t>(key >> 32);

  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mul_hi_lo(kPhiloxM0, c0, hi0, lo0);
    mul_hi_lo(kPhiloxM1, c2, hi1, lo1);
    const std::uint32_t n0 = hi1 ^ c1 ^ k0;
    const std::uint32_t n1 = lo1;
    const std::uint32_t n2 = hi0 ^ c3 ^ k1;
    const std::uint32_t n3 = lo0;
    c0 = n0;
    c1 = n1;
    c2 = n2;
    c3 = n3;
    k0 += kPhiloxW0;
    k1 += kPhiloxW1;
  }
  out[0] = c0;
  out[1] = c1;
  out[2] = c2;
  out[3] = c3;
}

// SplitMix64 finalizer; bijective on 64-bit words.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

constexpr double kPi = 3.14159265358979323846;

}  // namespace

RandomStream make_stream(std::uint64_t seed) {
  RandomStream s;
  s.key = seed;
  return s;
}

RandomStream split(const RandomStream& parent, std::uint64_t child_index) {
  RandomStream s;
  s.key = parent.key;
  // mix64 is a bijection, so children of one parent are collision-free.
  s.stream_id = mix64(parent.stream_id) ^ mix64(child_index + 1);
  return s;
}

std::uint32_t next_u32(RandomStream& s) {
  if (s.block_pos >= 4) {
    philox_block(s.key, s.stream_id, s.position, s.block);
    ++s.position;
    s.block_pos = 0;
  }
  return s.block[s.block_pos++];
}

std::uint64_t next_u64(RandomStream& s) {
  const std::uint64_t lo = next_u32(s);
  const std::uint64_t hi = next_u32(s);
  return (hi << 32) | lo;
}

double uniform01(RandomStream& s) {
  // 53 random bits, offset by half an ulp so the result lies in (0,1).
  return (static_cast<double>(next_u64(s) >> 11) + 0.5) * 0x1.0p-53;
}

double normal(RandomStream& s) {
  const double u1 = uniform01(s);
  const double u2 = uniform01(s);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
}

double exponential(RandomStream& s) { return -std::log(uniform01(s)); }

namespace {

std::int64_t poisson_inversion(RandomStream& s, double mean) {
  const double u = uniform01(s);
  double p = std::exp(-mean);
  double cum = p;
  std::int64_t k = 0;
  while (u > cum) {
    ++k;
    p *= mean / static_cast<double>(k);
    cum += p;
    if (p < 1e-300 && k > 4 * (1 + static_cast<std::int64_t>(mean))) break;
  }
  return k;
}

// Hormann's PTRD transformed-rejection sampler, valid for mean >= 10.
std::int64_t poisson_ptrd(RandomStream& s, double mean) {
  const double smu = std::sqrt(mean);
  const double b = 0.931 + 2.53 * smu;
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double v_r = 0.9277 - 3.6224 / (b - 2.0);
  const double log_mu = std::log(mean);

  for (;;) {
    double u = uniform01(s) - 0.5;
    double v = uniform01(s);
    const double us = 0.5 - std::fabs(u);
    const double kf = std::floor((2.0 * a / us + b) * u + mean + 0.43);
    if (us >= 0.07 && v <= v_r) return static_cast<std::int64_t>(kf);
    if (kf < 0.0 || (us < 0.013 && v > us)) continue;
    const double k = kf;
    if (std::log(v * inv_alpha / (a / (us * us) + b)) <=
        k * log_mu - mean - std::lgamma(k + 1.0)) {
      return static_cast<std::int64_t>(kf);
    }
  }
}

}  // namespace

std::int64_t sample_poisson(RandomStream& s, double mean) {
  if (!(mean >= 0.0) || !std::isfinite(mean)) {
    throw DomainError("sample_poisson: mean must be finite and >= 0");
  }
  if (mean == 0.0) return 0;
  if (mean < 10.0) return poisson_inversion(s, mean);
  return poisson_ptrd(s, mean);
}

double sample_gamma(RandomStream& s, double shape, double rate) {
  if (!(shape > 0.0) || !(rate > 0.0)) {
    throw DomainError("sample_gamma: shape and rate must be > 0");
  }
  double boost = 1.0;
  if (shape < 1.0) {
    // Gamma(a) = Gamma(a+1) * U^{1/a}
    boost = std::pow(uniform01(s), 1.0 / shape);
    shape += 1.0;
  }
  const double d = shape - 1.0 / 3.0;
  const double cc = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = normal(s);
      v = 1.0 + cc * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform01(s);
    const double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) return boost * d * v / rate;
    if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v)))
      return boost * d * v / rate;
  }
}

double sample_one_sided_stable(RandomStream& s, double alpha, double c) {
  if (!(alpha > 0.0) || !(alpha < 1.0)) {
    throw DomainError("sample_one_sided_stable: alpha must lie in (0,1)");
  }
  if (!(c > 0.0)) {
    throw DomainError("sample_one_sided_stable: c must be > 0");
  }
  // Kanter: X = c^{1/alpha} (A(U)/E)^{(1-alpha)/alpha} with
  // A(u) = sin(a pi u)^{a/(1-a)} sin((1-a) pi u) / sin(pi u)^{1/(1-a)}.
  const double u = uniform01(s);
  const double e = exponential(s);
  const double la = std::log(std::sin(alpha * kPi * u));
  const double lb = std::log(std::sin((1.0 - alpha) * kPi * u));
  const double lc = std::log(std::sin(kPi * u));
  const double log_a = (alpha * la - lc) / (1.0 - alpha) + lb;
  const double log_x =
      std::log(c) / alpha + (1.0 - alpha) / alpha * (log_a - std::log(e));
  return std::exp(log_x);
}

double sample_stable_increment(RandomStream& s, double alpha, double dt) {
  if (!(alpha > 1.0) || !(alpha < 2.0)) {
    throw DomainError("sample_stable_increment: alpha must lie in (1,2)");
  }
  if (!(dt > 0.0)) {
    throw DomainError("sample_stable_increment: dt must be > 0");
  }
  // Chambers-Mallows-Stuck for the totally skewed (beta = 1) stable law,
  // then rescaled so the Laplace exponent is dt z^alpha G(2-a)/(a(a-1)).
  const double tan_half = std::tan(0.5 * kPi * alpha);  // < 0 here
  const double shift = std::atan(tan_half) / alpha;
  const double scale_std =
      std::pow(1.0 + tan_half * tan_half, 0.5 / alpha);
  const double v = kPi * (uniform01(s) - 0.5);
  const double w = exponential(s);
  const double av = alpha * (v + shift);
  const double x_std = scale_std * std::sin(av) /
                       std::pow(std::cos(v), 1.0 / alpha) *
                       std::pow(std::cos(v - av) / w, (1.0 - alpha) / alpha);
  const double cos_abs = std::fabs(std::cos(0.5 * kPi * alpha));
  const double scale = std::pow(
      dt * std::tgamma(2.0 - alpha) / (alpha * (alpha - 1.0)) * cos_abs,
      1.0 / alpha);
  return scale * x_std;
}

}  // namespace cbi::rng
