#pragma once

#include "echolocate/core.hpp"
#include "echolocate/stft.hpp"

namespace echolocate {

inline double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

constexpr double kLogFloor = 1e-10;

/// Log mel energies, one row per band.
struct MelSpectrogram {
  Eigen::MatrixXd values;  // n_mels x frames
  int n_mels = 128;

  Eigen::Index n_frames() const { return values.cols(); }
};

/// Triangular filters with peaks evenly spaced on the mel scale over
/// [0, sample_rate/2]. A band narrower than the bin spacing would sample to
/// an all-zero row; such rows get unit weight at the bin nearest the band
/// center so every row keeps positive mass.
inline Eigen::MatrixXd mel_filterbank(int n_mels, std::size_t n_bins, int sample_rate) {
  require(n_mels >= 1, "need at least one mel band");
  require(std::size_t(n_mels) <= n_bins, "more mel bands than spectrum bins");
  const double nyquist = sample_rate / 2.0;
  const double mel_max = hz_to_mel(nyquist);
  const double bin_hz = nyquist / double(n_bins - 1);

  Eigen::VectorXd edges(n_mels + 2);
  for (int i = 0; i < n_mels + 2; ++i)
    edges[i] = mel_to_hz(mel_max * double(i) / double(n_mels + 1));

  Eigen::MatrixXd fb = Eigen::MatrixXd::Zero(n_mels, Eigen::Index(n_bins));
  for (int m = 0; m < n_mels; ++m) {
    const double lo = edges[m], center = edges[m + 1], hi = edges[m + 2];
    for (std::size_t k = 0; k < n_bins; ++k) {
      const double f = k * bin_hz;
      double wgt = 0.0;
      if (f > lo && f < center)
        wgt = (f - lo) / (center - lo);
      else if (f >= center && f < hi)
        wgt = (hi - f) / (hi - center);
      fb(m, Eigen::Index(k)) = wgt;
    }
    if (fb.row(m).sum() <= 0.0) {
      const auto k = Eigen::Index(std::lround(center / bin_hz));
      fb(m, std::min(k, Eigen::Index(n_bins - 1))) = 1.0;
    }
  }
  return fb;
}

inline MelSpectrogram mel_features(const AudioBuffer& buf, int n_mels = 128,
                                   const FrameParams& params = {}) {
  require(buf.sample_rate >= 8000, "mel features need a sample rate of at least 8 kHz");
  const Spectrogram spec = stft(buf, params);
  const Eigen::MatrixXd fb =
      mel_filterbank(n_mels, std::size_t(spec.n_bins()), buf.sample_rate);
  const Eigen::MatrixXd power = spec.frames.cwiseAbs2().transpose();  // bins x frames
  MelSpectrogram mel;
  mel.n_mels = n_mels;
  mel.values = ((fb * power).array() + kLogFloor).log().matrix();
  return mel;
}

}  // namespace echolocate
