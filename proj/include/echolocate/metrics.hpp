#pragma once

#include <limits>

#include "echolocate/core.hpp"

namespace echolocate {

/// Peak signal-to-noise ratio in dB, 10*log10(MAX^2 / MSE) with MAX the
/// peak absolute value of the reference. Identical inputs return +infinity.
inline double psnr(const AudioBuffer& reference, const AudioBuffer& test) {
  require(reference.channels() == test.channels() && reference.frames() == test.frames(),
          "psnr requires equal shapes");
  require(reference.sample_rate == test.sample_rate, "psnr requires equal sample rates");
  const double mse = (reference.samples - test.samples).squaredNorm() /
                     double(reference.samples.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  const double peak = reference.samples.cwiseAbs().maxCoeff();
  return 10.0 * std::log10(peak * peak / mse);
}

}  // namespace echolocate
