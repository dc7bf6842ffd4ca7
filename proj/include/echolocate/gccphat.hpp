#pragma once

#include <algorithm>
#include <limits>
#include <vector>

#include "echolocate/core.hpp"
#include "echolocate/fft.hpp"

namespace echolocate {

struct GccPhatResult {
  double delay_s = 0.0;
  double peak = 0.0;  // ~1.0 for a perfectly matched pair
};

// PHAT bins are zeroed (not normalized) below this fraction of the strongest
// cross-spectrum bin; narrowband inputs would otherwise drown the peak in
// bins that carry nothing but rounding noise.
constexpr double kPhatRelativeFloor = 1e-8;
constexpr double kPhatAbsoluteFloor = 1e-12;

namespace gcc_detail {

// Core estimate for ordered inputs: returns the delay of `b` relative to
// `a`, positive when b arrives later (b[n] = a[n - d]). The correlation of
// the PHAT-weighted cross-spectrum peaks at that lag, refined by three-point
// parabolic interpolation.
inline GccPhatResult gcc_phat_ordered(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                                      int sample_rate, double max_lag_s) {
  const std::size_t n = std::size_t(a.size());
  const std::size_t m = next_power_of_two(2 * n);

  std::vector<cdouble> fa(m, cdouble(0, 0)), fb(m, cdouble(0, 0));
  for (std::size_t i = 0; i < n; ++i) {
    fa[i] = cdouble(a[Eigen::Index(i)], 0.0);
    fb[i] = cdouble(b[Eigen::Index(i)], 0.0);
  }
  fft_inplace(fa, false);
  fft_inplace(fb, false);

  std::vector<cdouble> cross(m);
  double max_mag = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    cross[k] = std::conj(fa[k]) * fb[k];
    max_mag = std::max(max_mag, std::abs(cross[k]));
  }
  require(max_mag > 0.0, "undefined correlation: all-zero input channel");

  const double floor_mag = std::max(kPhatAbsoluteFloor, kPhatRelativeFloor * max_mag);
  std::size_t active = 0;
  for (std::size_t k = 0; k < m; ++k) {
    const double mag = std::abs(cross[k]);
    if (mag < floor_mag) {
      cross[k] = cdouble(0, 0);
    } else {
      cross[k] /= mag;
      ++active;
    }
  }
  fft_inplace(cross, true);

  const auto max_lag = std::min<long>(long(std::floor(max_lag_s * sample_rate)), long(n) - 1);
  const double scale = double(m) / double(active);
  const auto corr_at = [&](long lag) {
    return cross[std::size_t((lag + long(m)) % long(m))].real() * scale;
  };

  long best_lag = 0;
  double best_val = -std::numeric_limits<double>::infinity();
  for (long lag = -max_lag; lag <= max_lag; ++lag) {
    const double v = corr_at(lag);
    if (v > best_val) {
      best_val = v;
      best_lag = lag;
    }
  }

  // parabolic refinement around the discrete peak
  const double c0 = corr_at(best_lag);
  const double cm = corr_at(best_lag - 1);
  const double cp = corr_at(best_lag + 1);
  double offset = 0.0;
  double peak = c0;
  const double denom = cm - 2.0 * c0 + cp;
  if (denom < 0.0) {
    offset = 0.5 * (cm - cp) / denom;
    if (std::abs(offset) > 0.5) offset = 0.0;
    peak = c0 - 0.25 * (cm - cp) * offset;
  }

  GccPhatResult result;
  result.delay_s = (double(best_lag) + offset) / sample_rate;
  result.delay_s = std::clamp(result.delay_s, -max_lag_s, max_lag_s);
  result.peak = peak;
  return result;
}

}  // namespace gcc_detail

/*
 * Generalized cross-correlation with phase transform. The cross-power
 * spectrum is normalized to unit magnitude so only phase (pure delay)
 * information survives, which sharpens the correlation peak and makes the
 * estimate invariant to amplitude scaling. Returns the delay of b relative
 * to a, positive when b arrives later. The pair is evaluated in a canonical
 * data order so delay(a, b) == -delay(b, a) holds exactly.
 */
inline GccPhatResult gcc_phat(const AudioBuffer& a, const AudioBuffer& b, double max_lag_s) {
  require(a.channels() == 1 && b.channels() == 1, "gcc_phat expects single-channel buffers");
  require(a.frames() == b.frames(), "gcc_phat requires equal signal lengths");
  require(a.sample_rate == b.sample_rate, "gcc_phat requires equal sample rates");
  require(a.frames() > 0, "empty signals");
  require(max_lag_s >= 0.0, "max_lag must be non-negative");
  require(max_lag_s < a.duration_s() / 2.0, "max_lag must be below half the signal duration");

  const Eigen::VectorXd xa = a.channel(0);
  const Eigen::VectorXd xb = b.channel(0);
  require(xa.squaredNorm() > 0.0 && xb.squaredNorm() > 0.0,
          "undefined correlation: all-zero input channel");

  const bool swap = std::lexicographical_compare(xb.data(), xb.data() + xb.size(), xa.data(),
                                                 xa.data() + xa.size());
  GccPhatResult r = swap ? gcc_detail::gcc_phat_ordered(xb, xa, a.sample_rate, max_lag_s)
                         : gcc_detail::gcc_phat_ordered(xa, xb, a.sample_rate, max_lag_s);
  if (swap) r.delay_s = -r.delay_s;
  return r;
}

}  // namespace echolocate
