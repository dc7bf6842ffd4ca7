#pragma once

#include <algorithm>
#include <variant>
#include <vector>

#include "echolocate/core.hpp"
#include "echolocate/fft.hpp"
#include "echolocate/localize.hpp"

namespace echolocate {

/// Retain either a fixed component count or enough components to explain a
/// variance fraction.
using RetainSpec = std::variant<int, double>;

struct WhitenedData {
  Eigen::MatrixXd components;        // retained x frames, unit variance, uncorrelated
  Eigen::MatrixXd whitening;         // retained x channels
  Eigen::VectorXd channel_means;     // subtracted before whitening
  std::vector<double> explained_variance;  // fraction per retained component
  int retained = 0;
  bool rank_reduced = false;  // requested more components than the data carries
  int sample_rate = 16000;
};

/*
 * PCA whitening: eigendecompose the channel covariance, keep the leading
 * components, and scale them to unit variance. Rank-deficient covariances
 * reduce the retained count instead of failing.
 */
inline WhitenedData pca_whiten(const AudioBuffer& buf, RetainSpec retain) {
  require(buf.channels() >= 2, "whitening needs at least two channels");
  require(buf.frames() > buf.channels(), "need more frames than channels");

  const Eigen::Index n = buf.frames();
  Eigen::MatrixXd centered = buf.samples;
  const Eigen::VectorXd means = centered.rowwise().mean();
  centered.colwise() -= means;
  const Eigen::MatrixXd cov = centered * centered.transpose() / double(n - 1);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  require(eig.info() == Eigen::Success, "eigendecomposition failed");
  // ascending from Eigen; view in descending order
  const Eigen::VectorXd evals = eig.eigenvalues().reverse();
  Eigen::MatrixXd evecs = eig.eigenvectors().rowwise().reverse();

  const double total_var = std::max(evals.sum(), 0.0);
  require(total_var > 0.0 && evals[0] > 0.0, "zero-variance input cannot be whitened");
  const double rank_floor = 1e-12 * evals[0];
  int rank = 0;
  for (Eigen::Index i = 0; i < evals.size(); ++i)
    if (evals[i] > rank_floor) ++rank;

  int want = 0;
  if (const int* count = std::get_if<int>(&retain)) {
    require(*count >= 1, "retained component count must be positive");
    want = *count;
  } else {
    const double frac = std::get<double>(retain);
    require(frac > 0.0 && frac <= 1.0, "variance fraction must be in (0, 1]");
    double acc = 0.0;
    for (Eigen::Index i = 0; i < evals.size(); ++i) {
      acc += std::max(evals[i], 0.0) / total_var;
      ++want;
      if (acc >= frac) break;
    }
  }

  WhitenedData out;
  out.rank_reduced = want > rank;
  out.retained = std::min(want, rank);
  out.sample_rate = buf.sample_rate;
  out.channel_means = means;
  out.whitening.resize(out.retained, buf.channels());
  for (int i = 0; i < out.retained; ++i)
    out.whitening.row(i) = evecs.col(i).transpose() / std::sqrt(evals[i]);
  out.components = out.whitening * centered;
  for (int i = 0; i < out.retained; ++i)
    out.explained_variance.push_back(evals[i] / total_var);
  return out;
}

struct NmfFactors {
  Eigen::MatrixXd w;  // bins x rank
  Eigen::MatrixXd h;  // rank x frames
  std::vector<double> objective_history;  // ||V - WH||_F^2 per iteration
};

/*
 * Euclidean NMF by Lee-Seung multiplicative updates:
 *   H <- H .* (W'V) ./ (W'WH + eps)
 *   W <- W .* (VH') ./ (WHH' + eps)
 * The objective is non-increasing at every step; factors stay non-negative
 * because updates only ever multiply by non-negative ratios.
 */
inline NmfFactors nmf(const Eigen::MatrixXd& v, int rank, int iterations,
                      std::uint64_t seed = 7) {
  require((v.array() >= 0.0).all(), "NMF input must be non-negative");
  require(rank >= 1, "rank must be positive");
  require(rank < std::min(v.rows(), v.cols()), "rank must be below both matrix dimensions");
  require(iterations >= 0, "iteration count must be non-negative");

  NmfFactors out;
  if (v.maxCoeff() == 0.0) {
    out.w = Eigen::MatrixXd::Zero(v.rows(), rank);
    out.h = Eigen::MatrixXd::Zero(rank, v.cols());
    out.objective_history.push_back(0.0);
    return out;
  }

  Rng rng(seed);
  out.w.resize(v.rows(), rank);
  out.h.resize(rank, v.cols());
  for (Eigen::Index i = 0; i < out.w.size(); ++i) out.w.data()[i] = 0.1 + rng.uniform();
  for (Eigen::Index i = 0; i < out.h.size(); ++i) out.h.data()[i] = 0.1 + rng.uniform();

  constexpr double eps = 1e-12;
  out.objective_history.push_back((v - out.w * out.h).squaredNorm());
  for (int it = 0; it < iterations; ++it) {
    out.h.array() *= (out.w.transpose() * v).array() /
                     ((out.w.transpose() * out.w * out.h).array() + eps);
    out.w.array() *= (v * out.h.transpose()).array() /
                     ((out.w * out.h * out.h.transpose()).array() + eps);
    out.objective_history.push_back((v - out.w * out.h).squaredNorm());
  }
  return out;
}

struct SeparatedSources {
  Eigen::MatrixXd sources;   // sources x frames, unit variance
  Eigen::MatrixXd unmixing;  // sources x channels (whitening folded in)
  std::vector<int> assignment;       // source -> mic index, -1 while unassigned
  std::vector<double> assignment_scores;
  bool converged = false;
  bool low_nongaussianity = false;  // all outputs near-Gaussian: separation unreliable
  int sample_rate = 16000;
};

namespace bss_detail {

/// Symmetric decorrelation W <- (W W')^{-1/2} W.
inline Eigen::MatrixXd decorrelate(const Eigen::MatrixXd& w) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(w * w.transpose());
  const Eigen::VectorXd d = eig.eigenvalues().cwiseMax(1e-18).cwiseSqrt().cwiseInverse();
  return eig.eigenvectors() * d.asDiagonal() * eig.eigenvectors().transpose() * w;
}

inline Eigen::MatrixXd random_orthogonal(int n, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd g(n, n);
  for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = rng.normal();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ();
  const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int i = 0; i < n; ++i)
    if (r(i, i) < 0) q.col(i) = -q.col(i);  // deterministic sign convention
  return q;
}

inline double excess_kurtosis(const Eigen::VectorXd& x) {
  const double mean = x.mean();
  const Eigen::ArrayXd c = x.array() - mean;
  const double var = c.square().mean();
  if (var <= 0.0) return 0.0;
  return c.square().square().mean() / (var * var) - 3.0;
}

}  // namespace bss_detail

/*
 * FastICA with the tanh contrast and symmetric decorrelation. The fixed
 * point update on whitened data y is
 *   w_i <- E[y g(w_i'y)] - E[g'(w_i'y)] w_i,   g = tanh,
 * all rows updated in parallel and re-orthogonalized each sweep. Converged
 * when every row's direction moves less than tol between sweeps. Gaussian
 * inputs have no stable fixed point; the result then comes back flagged.
 */
inline SeparatedSources fast_ica(const WhitenedData& white, int iterations = 200,
                                 double tol = 1e-8, std::uint64_t seed = 11) {
  const int k = white.retained;
  require(k >= 2, "ICA needs at least two retained components");
  require(iterations > 0, "iteration budget must be positive");
  const Eigen::MatrixXd& y = white.components;
  const double n = double(y.cols());

  Eigen::MatrixXd w = bss_detail::random_orthogonal(k, seed);
  bool converged = false;
  for (int it = 0; it < iterations && !converged; ++it) {
    const Eigen::MatrixXd prev = w;
    const Eigen::MatrixXd proj = w * y;            // k x n
    const Eigen::MatrixXd g = proj.array().tanh();  // contrast
    const Eigen::VectorXd g_deriv_mean = (1.0 - g.array().square()).rowwise().mean();
    w = (g * y.transpose()) / n - g_deriv_mean.asDiagonal() * w;
    w = bss_detail::decorrelate(w);

    double delta = 0.0;
    for (int i = 0; i < k; ++i)
      delta = std::max(delta, std::abs(1.0 - std::abs(w.row(i).dot(prev.row(i)))));
    converged = delta < tol;
  }

  SeparatedSources out;
  out.sources = w * y;
  out.unmixing = w * white.whitening;
  out.converged = converged;
  out.sample_rate = white.sample_rate;
  out.assignment.assign(std::size_t(k), -1);
  out.assignment_scores.assign(std::size_t(k), 0.0);

  // canonical sign: strongest sample of each source is positive
  for (int i = 0; i < k; ++i) {
    Eigen::Index arg = 0;
    out.sources.row(i).cwiseAbs().maxCoeff(&arg);
    if (out.sources(i, arg) < 0) {
      out.sources.row(i) = -out.sources.row(i);
      out.unmixing.row(i) = -out.unmixing.row(i);
    }
  }

  double max_kurt = 0.0;
  for (int i = 0; i < k; ++i)
    max_kurt = std::max(max_kurt,
                        std::abs(bss_detail::excess_kurtosis(out.sources.row(i).transpose())));
  out.low_nongaussianity = max_kurt < 0.1;
  return out;
}

constexpr double kAssignScoreFloor = 0.2;
constexpr double kAssignMargin = 0.2;

namespace bss_detail {

/// Peak |normalized cross-correlation| between a source and a channel over
/// lags within +-max_lag samples.
inline double ncc_peak(const Eigen::VectorXd& source, const Eigen::VectorXd& channel,
                       long max_lag) {
  const std::size_t n = std::size_t(source.size());
  const std::size_t m = next_power_of_two(2 * n);
  std::vector<cdouble> fs(m, cdouble(0, 0)), fc(m, cdouble(0, 0));
  for (std::size_t i = 0; i < n; ++i) {
    fs[i] = cdouble(source[Eigen::Index(i)], 0.0);
    fc[i] = cdouble(channel[Eigen::Index(i)], 0.0);
  }
  fft_inplace(fs, false);
  fft_inplace(fc, false);
  for (std::size_t i = 0; i < m; ++i) fs[i] = std::conj(fs[i]) * fc[i];
  fft_inplace(fs, true);

  const double denom = source.norm() * channel.norm();
  if (denom <= 0.0) return 0.0;
  double best = 0.0;
  for (long lag = -max_lag; lag <= max_lag; ++lag)
    best = std::max(best, std::abs(fs[std::size_t((lag + long(m)) % long(m))].real()) / denom);
  return best;
}

}  // namespace bss_detail

/*
 * Ties separated sources back to microphones using the cross-correlation
 * against each raw channel, searching lags within the TDoA set's physical
 * window. Greedy best-first matching keeps the assignment injective; a
 * source stays unassigned when its best score is weak or not separated from
 * the runner-up by the confidence margin.
 */
inline SeparatedSources assign_sources(const SeparatedSources& sep, const AudioBuffer& buf,
                                       const TdoaSet& tdoa) {
  require(std::size_t(buf.channels()) == tdoa.n_mics,
          "channel count does not match the TDoA set");
  require(sep.sources.cols() == buf.frames(),
          "separation and capture block have different lengths");
  require(sep.sources.rows() <= buf.channels(), "more sources than microphones");

  double max_delay = 0.0;
  for (const auto& p : tdoa.pairs) max_delay = std::max(max_delay, std::abs(p.delay_s));
  const long max_lag = long(std::ceil(max_delay * buf.sample_rate)) + 16;

  const int n_sources = int(sep.sources.rows());
  const int n_mics = int(buf.channels());
  Eigen::MatrixXd score(n_sources, n_mics);
  for (int s = 0; s < n_sources; ++s)
    for (int m = 0; m < n_mics; ++m)
      score(s, m) = bss_detail::ncc_peak(sep.sources.row(s).transpose(),
                                         buf.channel(m), max_lag);

  SeparatedSources out = sep;
  out.assignment.assign(std::size_t(n_sources), -1);
  out.assignment_scores.assign(std::size_t(n_sources), 0.0);

  std::vector<bool> source_done(std::size_t(n_sources), false);
  std::vector<bool> mic_taken(std::size_t(n_mics), false);
  for (int round = 0; round < n_sources; ++round) {
    int best_s = -1, best_m = -1;
    double best = -1.0;
    for (int s = 0; s < n_sources; ++s) {
      if (source_done[std::size_t(s)]) continue;
      for (int m = 0; m < n_mics; ++m) {
        if (mic_taken[std::size_t(m)]) continue;
        if (score(s, m) > best) {
          best = score(s, m);
          best_s = s;
          best_m = m;
        }
      }
    }
    if (best_s < 0) break;
    source_done[std::size_t(best_s)] = true;
    out.assignment_scores[std::size_t(best_s)] = best;

    double runner_up = 0.0;
    for (int m = 0; m < n_mics; ++m)
      if (m != best_m && !mic_taken[std::size_t(m)])
        runner_up = std::max(runner_up, score(best_s, m));

    if (best >= kAssignScoreFloor && best - runner_up >= kAssignMargin) {
      out.assignment[std::size_t(best_s)] = best_m;
      mic_taken[std::size_t(best_m)] = true;
    }
  }
  return out;
}

}  // namespace echolocate
