#pragma once

#include <vector>

#include "echolocate/core.hpp"

namespace echolocate {

constexpr double kSpeedOfSound = 343.0;  // m/s

/// Ordered microphone positions in meters. Azimuths and distances are
/// measured from the coordinate origin, so arrays should be centered on it.
struct MicArrayGeometry {
  std::vector<Eigen::Vector3d> positions;
  double speed_of_sound = kSpeedOfSound;

  std::size_t n_mics() const { return positions.size(); }

  double baseline(std::size_t i, std::size_t j) const {
    return (positions.at(i) - positions.at(j)).norm();
  }

  /// Largest pairwise mic distance.
  double aperture() const {
    double a = 0.0;
    for (std::size_t i = 0; i < positions.size(); ++i)
      for (std::size_t j = i + 1; j < positions.size(); ++j)
        a = std::max(a, baseline(i, j));
    return a;
  }

  void validate() const {
    require(positions.size() >= 2, "need at least two microphones");
    require(speed_of_sound > 0.0, "speed of sound must be positive");
    for (std::size_t i = 0; i < positions.size(); ++i)
      for (std::size_t j = i + 1; j < positions.size(); ++j)
        require(baseline(i, j) > 1e-9, "microphone positions must be pairwise distinct");
  }
};

/// Square array in the z=0 plane, corners counter-clockwise from (+x, +y).
/// The default side matches the footprint class of small 4-mic boards.
inline MicArrayGeometry square_array(double side = 0.0457,
                                     double speed_of_sound = kSpeedOfSound) {
  const double h = side / 2.0;
  MicArrayGeometry g;
  g.speed_of_sound = speed_of_sound;
  g.positions = {{h, h, 0.0}, {-h, h, 0.0}, {-h, -h, 0.0}, {h, -h, 0.0}};
  return g;
}

}  // namespace echolocate
