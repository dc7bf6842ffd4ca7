#pragma once

#include <optional>
#include <string>
#include <vector>

#include "echolocate/core.hpp"
#include "echolocate/metrics.hpp"
#include "echolocate/stft.hpp"

namespace echolocate {

// Magnitudes below this floor are treated as silence when converting to dB.
constexpr double kMagnitudeFloor = 1e-12;

inline double magnitude_db(double mag) {
  return 20.0 * std::log10(std::max(mag, kMagnitudeFloor));
}

/// Histogram of dB magnitudes over every time-frequency cell of a clip.
struct MagnitudeHistogram {
  std::vector<std::size_t> bins;
  double min_db = 0.0;
  double max_db = 0.0;

  double bin_width() const { return (max_db - min_db) / double(bins.size()); }
  /// Lower edge of bin i.
  double level(std::size_t i) const { return min_db + double(i) * bin_width(); }
  std::size_t total() const {
    std::size_t t = 0;
    for (auto c : bins) t += c;
    return t;
  }
  std::size_t nonempty() const {
    std::size_t t = 0;
    for (auto c : bins) t += c > 0 ? 1 : 0;
    return t;
  }
};

inline MagnitudeHistogram magnitude_histogram(const Spectrogram& spec,
                                              std::size_t n_bins = 256) {
  require(spec.frames.size() > 0, "empty spectrogram");
  require(n_bins >= 2, "histogram needs at least two bins");
  MagnitudeHistogram hist;
  hist.bins.assign(n_bins, 0);
  hist.min_db = std::numeric_limits<double>::infinity();
  hist.max_db = -std::numeric_limits<double>::infinity();
  for (Eigen::Index f = 0; f < spec.frames.rows(); ++f)
    for (Eigen::Index k = 0; k < spec.frames.cols(); ++k) {
      const double db = magnitude_db(std::abs(spec.frames(f, k)));
      hist.min_db = std::min(hist.min_db, db);
      hist.max_db = std::max(hist.max_db, db);
    }
  if (hist.max_db <= hist.min_db) {
    // all cells share one level; everything lands in bin 0
    hist.max_db = hist.min_db + 1.0;
    hist.bins[0] = std::size_t(spec.frames.size());
    return hist;
  }
  const double width = (hist.max_db - hist.min_db) / double(n_bins);
  for (Eigen::Index f = 0; f < spec.frames.rows(); ++f)
    for (Eigen::Index k = 0; k < spec.frames.cols(); ++k) {
      const double db = magnitude_db(std::abs(spec.frames(f, k)));
      auto i = std::size_t((db - hist.min_db) / width);
      hist.bins[std::min(i, n_bins - 1)] += 1;
    }
  return hist;
}

/*
 * Otsu's threshold over the magnitude histogram: pick the split maximizing
 * the between-class variance sigma_b^2(t) = w0 * w1 * (mu0 - mu1)^2 where
 * class 0 holds bins [0, t] and class 1 holds bins (t, n). Ties break toward
 * the smallest level. Returns the dB level separating the classes (the lower
 * edge of the first foreground bin).
 */
inline double otsu_threshold(const MagnitudeHistogram& hist) {
  require(hist.nonempty() >= 2, "degenerate histogram: fewer than two nonempty bins");
  const std::size_t n = hist.bins.size();
  const double total = double(hist.total());

  double total_mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) total_mean += double(i) * double(hist.bins[i]);
  total_mean /= total;

  double best_sigma = -1.0;
  std::size_t best_t = 0;
  double w0 = 0.0, sum0 = 0.0;
  for (std::size_t t = 0; t + 1 < n; ++t) {
    w0 += double(hist.bins[t]) / total;
    sum0 += double(t) * double(hist.bins[t]) / total;
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
  require(best_sigma > 0.0, "degenerate histogram: zero between-class variance everywhere");
  return hist.level(best_t + 1);
}

struct OtsuDenoiseResult {
  Spectrogram spec;
  double threshold_db = 0.0;
  bool degenerate = false;  // histogram had a single level; input passed through
};

/// Hard mask at the Otsu threshold: cells whose dB magnitude falls below the
/// selected level are zeroed, everything else is preserved bit-exactly.
inline OtsuDenoiseResult denoise_otsu(const Spectrogram& spec, std::size_t hist_bins = 256) {
  require(spec.frames.size() > 0, "empty spectrogram");
  OtsuDenoiseResult result;
  result.spec = spec;
  const MagnitudeHistogram hist = magnitude_histogram(spec, hist_bins);
  if (hist.nonempty() < 2) {
    result.degenerate = true;
    result.threshold_db = hist.min_db;
    return result;
  }
  result.threshold_db = otsu_threshold(hist);
  for (Eigen::Index f = 0; f < result.spec.frames.rows(); ++f)
    for (Eigen::Index k = 0; k < result.spec.frames.cols(); ++k)
      if (magnitude_db(std::abs(result.spec.frames(f, k))) < result.threshold_db)
        result.spec.frames(f, k) = cdouble(0.0, 0.0);
  return result;
}

/// Per-bin mean noise magnitude.
struct NoiseProfile {
  Eigen::VectorXd magnitude;  // one entry per spectrum bin
  std::size_t frames_used = 0;
};

inline NoiseProfile estimate_noise_profile(const Spectrogram& spec,
                                           std::size_t n_frames = 10) {
  require(spec.n_frames() > 0, "empty spectrogram");
  const auto use = std::min<std::size_t>(n_frames, std::size_t(spec.n_frames()));
  NoiseProfile p;
  p.frames_used = use;
  p.magnitude = spec.frames.topRows(Eigen::Index(use)).cwiseAbs().colwise().mean().transpose();
  return p;
}

inline void check_profile(const Spectrogram& spec, const NoiseProfile& profile) {
  require(profile.magnitude.size() == spec.n_bins(),
          "noise profile bin count does not match spectrogram");
  require((profile.magnitude.array() >= 0.0).all(), "noise profile must be non-negative");
}

/// Wiener gain S / (S + N) with S = max(|X|^2 - N^2, 0) and N^2 the profile
/// noise power.
inline Spectrogram denoise_wiener(const Spectrogram& spec, const NoiseProfile& profile) {
  check_profile(spec, profile);
  Spectrogram out = spec;
  for (Eigen::Index f = 0; f < out.frames.rows(); ++f)
    for (Eigen::Index k = 0; k < out.frames.cols(); ++k) {
      const double noise_pow = profile.magnitude[k] * profile.magnitude[k];
      const double sig_pow = std::norm(out.frames(f, k));
      const double s = std::max(sig_pow - noise_pow, 0.0);
      const double denom = s + noise_pow;
      out.frames(f, k) *= denom > 0.0 ? s / denom : 1.0;
    }
  return out;
}

constexpr double kDefaultGateFactor = 1.5;

/// Zero every cell whose magnitude falls below gate_factor times the profile.
inline Spectrogram denoise_spectral_gate(const Spectrogram& spec, const NoiseProfile& profile,
                                         double gate_factor = kDefaultGateFactor) {
  check_profile(spec, profile);
  Spectrogram out = spec;
  for (Eigen::Index f = 0; f < out.frames.rows(); ++f)
    for (Eigen::Index k = 0; k < out.frames.cols(); ++k)
      if (std::abs(out.frames(f, k)) < gate_factor * profile.magnitude[k])
        out.frames(f, k) = cdouble(0.0, 0.0);
  return out;
}

/// Magnitude subtraction max(|X| - N, 0) with the original phase.
inline Spectrogram denoise_spectral_subtract(const Spectrogram& spec,
                                             const NoiseProfile& profile) {
  check_profile(spec, profile);
  Spectrogram out = spec;
  for (Eigen::Index f = 0; f < out.frames.rows(); ++f)
    for (Eigen::Index k = 0; k < out.frames.cols(); ++k) {
      const double mag = std::abs(out.frames(f, k));
      const double kept = std::max(mag - profile.magnitude[k], 0.0);
      out.frames(f, k) = mag > 0.0 ? out.frames(f, k) * (kept / mag) : cdouble(0.0, 0.0);
    }
  return out;
}

enum class DenoiserKind { otsu, wiener, spectral_gate, spectral_subtract };

inline const char* denoiser_name(DenoiserKind kind) {
  switch (kind) {
    case DenoiserKind::wiener: return "wiener";
    case DenoiserKind::spectral_gate: return "spectral_gate";
    case DenoiserKind::spectral_subtract: return "spectral_subtract";
    case DenoiserKind::otsu: return "fft_otsu";
  }
  return "unknown";
}

struct BenchmarkEntry {
  std::string algorithm;
  double psnr_db = 0.0;
  double paper_reference_db = 0.0;
  std::optional<std::string> error;
};

struct DenoiseBenchmarkReport {
  std::vector<BenchmarkEntry> entries;  // sorted by descending PSNR
  double noisy_psnr_db = 0.0;
};

// Published comparison column the report is printed against.
constexpr double kReferenceWienerDb = 36.791;
constexpr double kReferenceGateDb = 55.235;
constexpr double kReferenceSubtractDb = 57.116;
constexpr double kReferenceOtsuDb = 57.529;

inline double reference_db(DenoiserKind kind) {
  switch (kind) {
    case DenoiserKind::wiener: return kReferenceWienerDb;
    case DenoiserKind::spectral_gate: return kReferenceGateDb;
    case DenoiserKind::spectral_subtract: return kReferenceSubtractDb;
    case DenoiserKind::otsu: return kReferenceOtsuDb;
  }
  return 0.0;
}

/*
 * Runs all four denoisers on the noisy clip and scores each against the
 * clean clip. The baseline noise profile comes from an explicit noise clip
 * when given, otherwise from the residual noisy - clean (the benchmark holds
 * both, so the true noise is available). Signals are compared over the
 * region the overlap-add reconstruction covers. Per-algorithm failures land
 * in the report instead of aborting the run.
 */
inline DenoiseBenchmarkReport benchmark_denoisers(
    const AudioBuffer& clean, const AudioBuffer& noisy,
    const std::optional<AudioBuffer>& noise_clip = std::nullopt,
    const FrameParams& params = {}) {
  require(clean.channels() == 1 && noisy.channels() == 1,
          "benchmark expects single-channel clips");
  require(clean.frames() == noisy.frames(), "clean and noisy lengths differ");
  require(clean.sample_rate == noisy.sample_rate, "clean and noisy sample rates differ");

  const Spectrogram noisy_spec = stft(noisy, params);

  NoiseProfile profile;
  if (noise_clip) {
    require(noise_clip->channels() == 1, "noise clip must be single-channel");
    require(noise_clip->sample_rate == noisy.sample_rate, "noise clip sample rate differs");
    const Spectrogram noise_spec = stft(*noise_clip, params);
    profile.magnitude = noise_spec.frames.cwiseAbs().colwise().mean().transpose();
    profile.frames_used = std::size_t(noise_spec.n_frames());
  } else {
    AudioBuffer residual = noisy;
    residual.samples -= clean.samples;
    if (residual.samples.cwiseAbs().maxCoeff() == 0.0) {
      profile.magnitude = Eigen::VectorXd::Zero(noisy_spec.n_bins());
      profile.frames_used = 0;
    } else {
      const Spectrogram residual_spec = stft(residual, params);
      profile.magnitude = residual_spec.frames.cwiseAbs().colwise().mean().transpose();
      profile.frames_used = std::size_t(residual_spec.n_frames());
    }
  }

  DenoiseBenchmarkReport report;
  const auto run = [&](DenoiserKind kind) -> Spectrogram {
    switch (kind) {
      case DenoiserKind::wiener: return denoise_wiener(noisy_spec, profile);
      case DenoiserKind::spectral_gate: return denoise_spectral_gate(noisy_spec, profile);
      case DenoiserKind::spectral_subtract: return denoise_spectral_subtract(noisy_spec, profile);
      case DenoiserKind::otsu: return denoise_otsu(noisy_spec).spec;
    }
    throw Error("unreachable denoiser kind");
  };

  std::optional<AudioBuffer> clean_cropped;
  for (DenoiserKind kind : {DenoiserKind::wiener, DenoiserKind::spectral_gate,
                            DenoiserKind::spectral_subtract, DenoiserKind::otsu}) {
    BenchmarkEntry entry;
    entry.algorithm = denoiser_name(kind);
    entry.paper_reference_db = reference_db(kind);
    try {
      const AudioBuffer denoised = istft(run(kind));
      if (!clean_cropped) {
        Eigen::MatrixXd c = clean.samples.leftCols(denoised.frames());
        clean_cropped = AudioBuffer(std::move(c), clean.sample_rate);
        Eigen::MatrixXd n = noisy.samples.leftCols(denoised.frames());
        report.noisy_psnr_db = psnr(*clean_cropped, AudioBuffer(std::move(n), noisy.sample_rate));
      }
      entry.psnr_db = psnr(*clean_cropped, denoised);
    } catch (const std::exception& e) {
      entry.error = e.what();
    }
    report.entries.push_back(std::move(entry));
  }

  std::stable_sort(report.entries.begin(), report.entries.end(),
                   [](const BenchmarkEntry& a, const BenchmarkEntry& b) {
                     if (a.error.has_value() != b.error.has_value()) return !a.error.has_value();
                     return a.psnr_db > b.psnr_db;
                   });
  return report;
}

}  // namespace echolocate
