#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <random>
#include <stdexcept>
#include <string>

namespace echolocate {

// Domain error for violated preconditions and malformed inputs.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw Error(msg);
}

/// Multi-channel audio, one row per channel, amplitudes nominally in [-1, 1].
struct AudioBuffer {
  Eigen::MatrixXd samples;  // channels x samples
  int sample_rate = 16000;

  AudioBuffer() = default;
  AudioBuffer(Eigen::MatrixXd s, int rate) : samples(std::move(s)), sample_rate(rate) {
    validate();
  }

  static AudioBuffer mono(const Eigen::VectorXd& x, int rate) {
    Eigen::MatrixXd m(1, x.size());
    m.row(0) = x.transpose();
    return AudioBuffer(std::move(m), rate);
  }

  Eigen::Index channels() const { return samples.rows(); }
  Eigen::Index frames() const { return samples.cols(); }
  double duration_s() const { return double(frames()) / sample_rate; }

  Eigen::VectorXd channel(Eigen::Index c) const {
    require(c >= 0 && c < channels(), "channel index out of range");
    return samples.row(c).transpose();
  }

  void validate() const {
    require(sample_rate > 0, "sample_rate must be positive");
    require(samples.allFinite(), "audio contains non-finite samples");
  }
};

// Seeded RNG with transforms hand-rolled on top of mt19937_64 output so
// streams are identical across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() { return state_(); }

  /// Uniform in [0, 1).
  double uniform() {
    return double(state_() >> 11) * 0x1.0p-53;
  }

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    while (u1 <= 0.0) u1 = uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  /// Zero-mean Laplacian with unit scale.
  double laplacian() {
    double u = uniform() - 0.5;
    return (u < 0 ? 1.0 : -1.0) * std::log(1.0 - 2.0 * std::abs(u));
  }

 private:
  std::mt19937_64 state_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

/// Fixture seed, overridable through the ECHOLOCATE_SEED environment variable.
inline std::uint64_t seed_or_env(std::uint64_t fallback) {
  if (const char* s = std::getenv("ECHOLOCATE_SEED")) {
    try {
      return std::stoull(s);
    } catch (const std::exception&) {
      throw Error("ECHOLOCATE_SEED is not a valid unsigned integer");
    }
  }
  return fallback;
}

inline double deg_to_rad(double d) { return d * M_PI / 180.0; }
inline double rad_to_deg(double r) { return r * 180.0 / M_PI; }

/// Normalize an angle in degrees into [0, 360).
inline double wrap_degrees(double d) {
  double w = std::fmod(d, 360.0);
  if (w < 0) w += 360.0;
  return w;
}

}  // namespace echolocate
