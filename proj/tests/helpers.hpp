#pragma once

// Shared fixtures and independent oracles for the test suites. Oracles here
// deliberately avoid the library's transform implementations: the DFT is a
// direct summation, cross-correlation slides in the time domain, and the
// Otsu scan enumerates every split.

#include <algorithm>
#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "echolocate/core.hpp"
#include "echolocate/denoise.hpp"

namespace testing {

using echolocate::Rng;

inline Eigen::VectorXd tone(double freq_hz, double duration_s, int sample_rate,
                            double amplitude = 1.0, double phase = 0.0) {
  const auto n = Eigen::Index(std::lround(duration_s * sample_rate));
  Eigen::VectorXd x(n);
  for (Eigen::Index i = 0; i < n; ++i)
    x[i] = amplitude * std::sin(2.0 * M_PI * freq_hz * double(i) / sample_rate + phase);
  return x;
}

inline Eigen::VectorXd white_noise(std::size_t n, std::uint64_t seed, double amplitude = 1.0) {
  Rng rng(seed);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(Eigen::Index(n));
  for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = amplitude * rng.normal();
  return x;
}

/// Direct O(n^2) DFT summation.
inline std::vector<std::complex<double>> direct_dft(const Eigen::VectorXd& x, std::size_t n) {
  std::vector<std::complex<double>> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<double> acc(0.0, 0.0);
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double ang = -2.0 * M_PI * double(k) * double(i) / double(n);
      acc += x[i] * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    out[k] = acc;
  }
  return out;
}

/// Exhaustive between-class-variance maximizer over every histogram split;
/// ties break toward the smallest level. Mirrors the documented threshold
/// semantics (class 0 = bins [0, t], threshold = lower edge of bin t + 1).
inline double otsu_exhaustive(const echolocate::MagnitudeHistogram& hist) {
  const std::size_t n = hist.bins.size();
  double total = 0.0, total_mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    total += double(hist.bins[i]);
    total_mean += double(i) * double(hist.bins[i]);
  }
  total_mean /= total;

  double best_sigma = -1.0;
  std::size_t best_t = 0;
  for (std::size_t t = 0; t + 1 < n; ++t) {
    double w0 = 0.0, sum0 = 0.0;
    for (std::size_t i = 0; i <= t; ++i) {
      w0 += double(hist.bins[i]) / total;
      sum0 += double(i) * double(hist.bins[i]) / total;
    }
    if (w0 <= 0.0 || w0 >= 1.0) continue;
    const double w1 = 1.0 - w0;
    const double mu0 = sum0 / w0;
    const double mu1 = (total_mean - sum0) / w1;
    const double sigma = w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
    if (sigma > best_sigma) {
      best_sigma = sigma;
      best_t = t;
    }
  }
  return hist.level(best_t + 1);
}

/// Brute-force time-domain normalized cross-correlation argmax over integer
/// lags in [-max_lag, max_lag]; returns the lag where b best matches a
/// delayed by that many samples.
inline long xcorr_peak_lag(const Eigen::VectorXd& a, const Eigen::VectorXd& b, long max_lag) {
  long best_lag = 0;
  double best = -std::numeric_limits<double>::infinity();
  const long n = long(a.size());
  for (long lag = -max_lag; lag <= max_lag; ++lag) {
    double acc = 0.0;
    for (long i = 0; i < n; ++i) {
      const long j = i - lag;  // b[i] ~ a[i - lag]
      if (j >= 0 && j < n) acc += b[i] * a[j];
    }
    if (acc > best) {
      best = acc;
      best_lag = lag;
    }
  }
  return best_lag;
}

/// Pearson correlation between two equal-length vectors.
inline double correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const Eigen::VectorXd ac = a.array() - a.mean();
  const Eigen::VectorXd bc = b.array() - b.mean();
  const double d = ac.norm() * bc.norm();
  return d > 0.0 ? ac.dot(bc) / d : 0.0;
}

/// Best per-source |correlation| after optimal permutation matching of
/// recovered rows to reference rows (2x2 case enumerates both pairings).
inline double matched_min_abs_correlation(const Eigen::MatrixXd& recovered,
                                          const Eigen::MatrixXd& reference) {
  const long k = recovered.rows();
  std::vector<int> perm(static_cast<std::size_t>(k), 0);
  for (long i = 0; i < k; ++i) perm[std::size_t(i)] = int(i);
  double best = -1.0;
  do {
    double worst = std::numeric_limits<double>::infinity();
    for (long i = 0; i < k; ++i) {
      const double c = std::abs(correlation(recovered.row(i).transpose(),
                                            reference.row(perm[std::size_t(i)]).transpose()));
      worst = std::min(worst, c);
    }
    best = std::max(best, worst);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

}  // namespace testing
