#pragma once

#include <cmath>
#include <cstdint>
#include <span>

#include "cbi/errors.hpp"

namespace cbi {

/// Monte Carlo estimate: sample mean with its standard error.
struct MCEstimate {
  double mean = 0.0;
  double stderr_ = 0.0;
  std::int64_t n = 0;
};

inline MCEstimate mc_estimate(std::span<const double> samples) {
  if (samples.empty()) throw DomainError("mc_estimate: empty sample list");
  const auto n = static_cast<std::int64_t>(samples.size());
  double mean = 0.0;
  for (double x : samples) mean += x;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double x : samples) {
    const double d = x - mean;
    ss += d * d;
  }
  MCEstimate est;
  est.mean = mean;
  est.n = n;
  est.stderr_ = n >= 2 ? std::sqrt(ss / (static_cast<double>(n) * (n - 1.0))) : 0.0;
  return est;
}

}  // namespace cbi
