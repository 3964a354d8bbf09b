#pragma once

#include <cstdint>

namespace cbi::rng {

/// Counter-based random stream (Philox 4x32-10 core).
///
/// Every output block is a pure function of (key, stream_id, position), so
/// identical state reproduces identical sequences and substreams are O(1)
/// to create. One stream is owned by exactly one consumer; parallel callers
/// take split() children.
struct RandomStream {
  std::uint64_t key = 0;        // seed
  std::uint64_t stream_id = 0;  // substream selector
  std::uint64_t position = 0;   // block counter

  std::uint32_t block[4] = {0, 0, 0, 0};
  int block_pos = 4;  // 4 means the current block is exhausted
};

/// Stream at position 0 of substream 0 for the given seed.
RandomStream make_stream(std::uint64_t seed);

/// Child stream: a pure function of (parent.key, parent.stream_id, child_index).
/// Children of the same parent never collide for distinct indices.
RandomStream split(const RandomStream& parent, std::uint64_t child_index);

std::uint32_t next_u32(RandomStream& s);
std::uint64_t next_u64(RandomStream& s);

/// Uniform on the open interval (0,1).
double uniform01(RandomStream& s);

/// Standard normal via Box-Muller; consumes exactly two uniforms.
double normal(RandomStream& s);

/// Standard exponential.
double exponential(RandomStream& s);

/// Poisson(mean). Inversion below mean 10, transformed rejection above.
/// mean must be finite and >= 0.
std::int64_t sample_poisson(RandomStream& s, double mean);

/// Gamma(shape, rate), E = shape/rate. Marsaglia-Tsang squeeze.
double sample_gamma(RandomStream& s, double shape, double rate);

/// One-sided stable variate with E exp(-lambda X) = exp(-c lambda^alpha),
/// 0 < alpha < 1, via the exponential-uniform (Kanter) transform.
double sample_one_sided_stable(RandomStream& s, double alpha, double c);

/// Increment over dt of the compensated spectrally positive stable process
/// with Levy measure z^{-1-alpha} dz, 1 < alpha < 2. Centered; may be
/// negative. E exp(-lambda X) = exp(dt lambda^alpha Gamma(2-alpha)/(alpha(alpha-1))).
double sample_stable_increment(RandomStream& s, double alpha, double dt);

}  // namespace cbi::rng
