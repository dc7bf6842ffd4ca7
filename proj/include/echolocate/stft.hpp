#pragma once

#include <vector>

#include "echolocate/core.hpp"
#include "echolocate/fft.hpp"

namespace echolocate {

enum class WindowKind { hamming, rectangular };

/// Analysis framing. Defaults follow the 25 ms / 10 ms Hamming convention;
/// fft_size 0 means "next power of two >= window length in samples".
struct FrameParams {
  double window_s = 0.025;
  double hop_s = 0.010;
  WindowKind window = WindowKind::hamming;
  std::size_t fft_size = 0;

  std::size_t window_samples(int sample_rate) const {
    return std::size_t(std::lround(window_s * sample_rate));
  }
  std::size_t hop_samples(int sample_rate) const {
    return std::size_t(std::lround(hop_s * sample_rate));
  }
  std::size_t effective_fft_size(int sample_rate) const {
    const std::size_t w = window_samples(sample_rate);
    return fft_size == 0 ? next_power_of_two(w) : fft_size;
  }

  void validate(int sample_rate) const {
    const std::size_t w = window_samples(sample_rate);
    const std::size_t h = hop_samples(sample_rate);
    require(w > 0 && h > 0, "window and hop must be positive");
    require(h <= w, "hop must not exceed window length");
    const std::size_t n = effective_fft_size(sample_rate);
    require(is_power_of_two(n) && n >= w, "fft_size must be a power of two >= window samples");
  }
};

inline Eigen::VectorXd make_window(WindowKind kind, std::size_t length) {
  Eigen::VectorXd w(length);
  switch (kind) {
    case WindowKind::hamming:
      for (std::size_t n = 0; n < length; ++n)
        w[Eigen::Index(n)] =
            length == 1 ? 1.0 : 0.54 - 0.46 * std::cos(2.0 * M_PI * double(n) / double(length - 1));
      break;
    case WindowKind::rectangular:
      w.setOnes();
      break;
  }
  return w;
}

/// Complex STFT frames, one row per frame, fft_size/2 + 1 bins per row.
struct Spectrogram {
  Eigen::MatrixXcd frames;  // frames x bins
  FrameParams params;
  int sample_rate = 16000;

  Eigen::Index n_frames() const { return frames.rows(); }
  Eigen::Index n_bins() const { return frames.cols(); }
};

inline std::size_t stft_frame_count(std::size_t n_samples, std::size_t window, std::size_t hop) {
  require(n_samples >= window, "signal shorter than one analysis window");
  return (n_samples - window) / hop + 1;
}

inline Spectrogram stft(const AudioBuffer& buf, const FrameParams& params = {}) {
  require(buf.channels() == 1, "stft expects a single-channel buffer");
  params.validate(buf.sample_rate);
  const std::size_t w = params.window_samples(buf.sample_rate);
  const std::size_t h = params.hop_samples(buf.sample_rate);
  const std::size_t n = params.effective_fft_size(buf.sample_rate);
  const std::size_t n_frames = stft_frame_count(std::size_t(buf.frames()), w, h);
  const Eigen::VectorXd win = make_window(params.window, w);

  Spectrogram spec;
  spec.params = params;
  spec.params.fft_size = n;
  spec.sample_rate = buf.sample_rate;
  spec.frames.resize(Eigen::Index(n_frames), Eigen::Index(n / 2 + 1));

  const Eigen::VectorXd x = buf.channel(0);
  for (std::size_t f = 0; f < n_frames; ++f) {
    Eigen::VectorXd frame = x.segment(Eigen::Index(f * h), Eigen::Index(w)).cwiseProduct(win);
    const std::vector<cdouble> bins = rfft(frame, n);
    for (std::size_t k = 0; k < bins.size(); ++k)
      spec.frames(Eigen::Index(f), Eigen::Index(k)) = bins[k];
  }
  return spec;
}

/// Weighted overlap-add inverse. Exact on unmodified spectrograms wherever
/// the squared-window sum is bounded away from zero; output covers
/// (n_frames - 1) * hop + window samples.
inline AudioBuffer istft(const Spectrogram& spec) {
  require(spec.n_frames() > 0, "empty spectrogram");
  spec.params.validate(spec.sample_rate);
  const std::size_t w = spec.params.window_samples(spec.sample_rate);
  const std::size_t h = spec.params.hop_samples(spec.sample_rate);
  const std::size_t n = spec.params.effective_fft_size(spec.sample_rate);
  require(std::size_t(spec.n_bins()) == n / 2 + 1, "bin count inconsistent with fft size");
  const Eigen::VectorXd win = make_window(spec.params.window, w);

  const std::size_t n_frames = std::size_t(spec.n_frames());
  const std::size_t out_len = (n_frames - 1) * h + w;
  Eigen::VectorXd num = Eigen::VectorXd::Zero(Eigen::Index(out_len));
  Eigen::VectorXd den = Eigen::VectorXd::Zero(Eigen::Index(out_len));

  std::vector<cdouble> bins(n / 2 + 1);
  for (std::size_t f = 0; f < n_frames; ++f) {
    for (std::size_t k = 0; k <= n / 2; ++k) bins[k] = spec.frames(Eigen::Index(f), Eigen::Index(k));
    const Eigen::VectorXd y = irfft(bins, n);
    for (std::size_t m = 0; m < w; ++m) {
      num[Eigen::Index(f * h + m)] += win[Eigen::Index(m)] * y[Eigen::Index(m)];
      den[Eigen::Index(f * h + m)] += win[Eigen::Index(m)] * win[Eigen::Index(m)];
    }
  }

  for (Eigen::Index i = 0; i < num.size(); ++i) {
    require(den[i] > 1e-12, "zero window-sum region: degenerate hop/window combination");
    num[i] /= den[i];
  }
  return AudioBuffer::mono(num, spec.sample_rate);
}

}  // namespace echolocate
