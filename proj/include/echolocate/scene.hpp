#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "echolocate/core.hpp"
#include "echolocate/fft.hpp"
#include "echolocate/geometry.hpp"
#include "echolocate/wav.hpp"

namespace echolocate {

struct ToneSignal {
  double freq_hz = 440.0;
};
struct NoiseSignal {};
struct WavSignal {
  std::string path;
};

struct SceneSource {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();  // meters
  std::variant<ToneSignal, NoiseSignal, WavSignal> kind = ToneSignal{};
  double level = 1.0;
};

/// Free-field scene: point sources, exact spherical propagation delays,
/// 1/r gain, optional white noise at a fixed per-channel SNR.
struct SceneSpec {
  MicArrayGeometry geometry = square_array();
  std::vector<SceneSource> sources;
  std::optional<double> noise_snr_db;
  double duration_s = 1.0;
  int sample_rate = 16000;
  std::uint64_t seed = 1;

  void validate() const {
    geometry.validate();
    require(!sources.empty(), "scene needs at least one source");
    require(duration_s > 0.0, "duration must be positive");
    require(sample_rate > 0, "sample rate must be positive");
    for (const auto& s : sources)
      for (const auto& mic : geometry.positions)
        require((s.position - mic).norm() > 1e-6,
                "source co-located with a microphone: singular gain");
  }
};

/// Exact per-source geometry answers for a rendered scene.
struct GroundTruth {
  struct Source {
    double azimuth_deg = 0.0;
    double distance_m = 0.0;
    std::vector<double> delays_s;  // per mic
    std::vector<double> gains;     // per mic, 1/r
  };
  std::vector<Source> sources;
};

namespace scene_detail {

/// Shift x right by a fractional number of samples using a frequency-domain
/// phase ramp on a zero-padded block, so the delay is exact at any geometry.
inline Eigen::VectorXd fractional_delay(const Eigen::VectorXd& x, double delay_samples) {
  require(delay_samples >= 0.0, "delay must be non-negative");
  const std::size_t n = std::size_t(x.size());
  const std::size_t m = next_power_of_two(n + std::size_t(std::ceil(delay_samples)) + 4);

  std::vector<cdouble> buf(m, cdouble(0, 0));
  for (std::size_t i = 0; i < n; ++i) buf[i] = cdouble(x[Eigen::Index(i)], 0.0);
  fft_inplace(buf, false);

  // conjugate-symmetric ramp keeps the inverse transform real
  for (std::size_t k = 0; k <= m / 2; ++k) {
    const double phase = -2.0 * M_PI * double(k) * delay_samples / double(m);
    if (k == m / 2) {
      buf[k] *= std::cos(phase);  // Nyquist bin must stay real
    } else {
      buf[k] *= cdouble(std::cos(phase), std::sin(phase));
    }
  }
  for (std::size_t k = m / 2 + 1; k < m; ++k) buf[k] = std::conj(buf[m - k]);
  fft_inplace(buf, true);

  Eigen::VectorXd out(x.size());
  for (std::size_t i = 0; i < n; ++i) out[Eigen::Index(i)] = buf[i].real();
  return out;
}

inline Eigen::VectorXd source_signal(const SceneSource& src, std::size_t n_samples,
                                     int sample_rate, Rng& rng) {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(Eigen::Index(n_samples));
  if (const auto* tone = std::get_if<ToneSignal>(&src.kind)) {
    for (std::size_t i = 0; i < n_samples; ++i)
      x[Eigen::Index(i)] =
          src.level * std::sin(2.0 * M_PI * tone->freq_hz * double(i) / sample_rate);
  } else if (std::get_if<NoiseSignal>(&src.kind)) {
    for (std::size_t i = 0; i < n_samples; ++i) x[Eigen::Index(i)] = src.level * rng.normal();
  } else {
    const auto& wav = std::get<WavSignal>(src.kind);
    const AudioBuffer clip = read_wav(wav.path);
    require(clip.sample_rate == sample_rate,
            "WAV source sample rate does not match the scene (no implicit resampling)");
    x.setZero();
    const auto copy = std::min<Eigen::Index>(clip.frames(), Eigen::Index(n_samples));
    x.head(copy) = clip.samples.row(0).head(copy).transpose() * src.level;
  }
  return x;
}

}  // namespace scene_detail

inline std::pair<AudioBuffer, GroundTruth> render_scene(const SceneSpec& spec) {
  spec.validate();
  const auto n_samples = std::size_t(std::lround(spec.duration_s * spec.sample_rate));
  require(n_samples > 0, "scene renders to zero samples");
  const std::size_t n_mics = spec.geometry.n_mics();

  Eigen::MatrixXd mix = Eigen::MatrixXd::Zero(Eigen::Index(n_mics), Eigen::Index(n_samples));
  GroundTruth truth;

  Rng rng(spec.seed);
  for (std::size_t s = 0; s < spec.sources.size(); ++s) {
    const SceneSource& src = spec.sources[s];
    const Eigen::VectorXd base =
        scene_detail::source_signal(src, n_samples, spec.sample_rate, rng);

    GroundTruth::Source gt;
    gt.azimuth_deg = wrap_degrees(rad_to_deg(std::atan2(src.position.y(), src.position.x())));
    gt.distance_m = src.position.norm();
    for (std::size_t mic = 0; mic < n_mics; ++mic) {
      const double dist = (src.position - spec.geometry.positions[mic]).norm();
      gt.delays_s.push_back(dist / spec.geometry.speed_of_sound);
      gt.gains.push_back(1.0 / dist);
    }
    // render in steady state: drop the common bulk propagation delay so a
    // distant source still lands inside the block; inter-mic differences,
    // which are what TDoA measures, are preserved exactly
    const double min_delay = *std::min_element(gt.delays_s.begin(), gt.delays_s.end());
    for (std::size_t mic = 0; mic < n_mics; ++mic) {
      mix.row(Eigen::Index(mic)) +=
          gt.gains[mic] *
          scene_detail::fractional_delay(base, (gt.delays_s[mic] - min_delay) * spec.sample_rate)
              .transpose();
    }
    truth.sources.push_back(std::move(gt));
  }

  if (spec.noise_snr_db) {
    // scale each channel's noise to the exact measured energy ratio
    for (std::size_t mic = 0; mic < n_mics; ++mic) {
      Eigen::VectorXd noise = Eigen::VectorXd::Zero(Eigen::Index(n_samples));
      for (std::size_t i = 0; i < n_samples; ++i) noise[Eigen::Index(i)] = rng.normal();
      const double sig_pow = mix.row(Eigen::Index(mic)).squaredNorm() / double(n_samples);
      const double noise_pow = noise.squaredNorm() / double(n_samples);
      if (sig_pow > 0.0 && noise_pow > 0.0) {
        const double target = sig_pow / std::pow(10.0, *spec.noise_snr_db / 10.0);
        noise *= std::sqrt(target / noise_pow);
        mix.row(Eigen::Index(mic)) += noise.transpose();
      }
    }
  }

  return {AudioBuffer(std::move(mix), spec.sample_rate), std::move(truth)};
}

}  // namespace echolocate
