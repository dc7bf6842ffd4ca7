#pragma once

#include <array>
#include <vector>

#include "echolocate/core.hpp"
#include "echolocate/gccphat.hpp"
#include "echolocate/geometry.hpp"

namespace echolocate {

/// Pairwise arrival-time differences. delay(i, j) is the arrival delay of
/// mic j relative to mic i (positive when j hears the source later), so
/// delay(i, j) == -delay(j, i) by construction.
struct TdoaSet {
  struct Pair {
    std::size_t i = 0, j = 0;  // i < j
    double delay_s = 0.0;
    double peak = 0.0;
  };
  std::vector<Pair> pairs;
  std::size_t n_mics = 0;

  double delay(std::size_t i, std::size_t j) const {
    for (const auto& p : pairs) {
      if (p.i == i && p.j == j) return p.delay_s;
      if (p.i == j && p.j == i) return -p.delay_s;
    }
    throw Error("no such mic pair in TDoA set");
  }
};

/// GCC-PHAT over all mic pairs; the per-pair search window is the physical
/// bound baseline / c plus one sample period.
inline TdoaSet estimate_tdoa(const AudioBuffer& buf, const MicArrayGeometry& geom) {
  geom.validate();
  require(std::size_t(buf.channels()) == geom.n_mics(),
          "channel count does not match microphone count");
  TdoaSet set;
  set.n_mics = geom.n_mics();
  for (std::size_t i = 0; i < geom.n_mics(); ++i) {
    for (std::size_t j = i + 1; j < geom.n_mics(); ++j) {
      const double max_lag =
          geom.baseline(i, j) / geom.speed_of_sound + 1.0 / buf.sample_rate;
      const GccPhatResult r =
          gcc_phat(AudioBuffer::mono(buf.channel(Eigen::Index(i)), buf.sample_rate),
                   AudioBuffer::mono(buf.channel(Eigen::Index(j)), buf.sample_rate), max_lag);
      set.pairs.push_back({i, j, r.delay_s, r.peak});
    }
  }
  return set;
}

struct DoaResult {
  double azimuth_deg = 0.0;
  double residual_s = 0.0;  // RMS delay residual of the plane-wave fit
  bool ambiguous = false;   // collinear array: mirror_azimuth_deg also valid
  double mirror_azimuth_deg = 0.0;
};

/*
 * Far-field direction of arrival. A plane wave from unit direction u (array
 * toward source) predicts delay(i, j) = (p_i - p_j) . u / c, so the slowness
 * vector v = u / c comes out of a linear least-squares fit over all pairs.
 * Collinear arrays determine only the component along the array axis; the
 * two mirror directions are both returned, flagged ambiguous.
 */
inline DoaResult doa_far_field(const TdoaSet& tdoa, const MicArrayGeometry& geom) {
  geom.validate();
  require(tdoa.pairs.size() >= 2, "need at least two independent mic pairs");
  const std::size_t n = tdoa.pairs.size();
  Eigen::MatrixXd d(n, 2);
  Eigen::VectorXd tau(n);
  for (std::size_t r = 0; r < n; ++r) {
    const auto& p = tdoa.pairs[r];
    const Eigen::Vector3d diff = geom.positions[p.i] - geom.positions[p.j];
    d(Eigen::Index(r), 0) = diff.x();
    d(Eigen::Index(r), 1) = diff.y();
    tau[Eigen::Index(r)] = p.delay_s;
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(d, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();
  const double c = geom.speed_of_sound;

  DoaResult result;
  if (sv[1] < 1e-9 * sv[0]) {
    // collinear array: slowness known only along the array axis; zero axis
    // delay is a legitimate broadside arrival, not an error
    const Eigen::Vector2d axis = svd.matrixV().col(0);
    const double along = svd.matrixU().col(0).dot(tau) / sv[0];
    const double cos_comp = std::clamp(along * c, -1.0, 1.0);
    const double axis_deg = rad_to_deg(std::atan2(axis.y(), axis.x()));
    const double off = rad_to_deg(std::acos(cos_comp));
    result.ambiguous = true;
    result.azimuth_deg = wrap_degrees(axis_deg + off);
    result.mirror_azimuth_deg = wrap_degrees(axis_deg - off);
    const Eigen::VectorXd fit = d * (axis * along);
    result.residual_s = std::sqrt((tau - fit).squaredNorm() / double(n));
    return result;
  }

  const Eigen::Vector2d v = svd.solve(tau);
  require(v.norm() * c > 0.1, "indeterminate direction: near-zero delay vector");
  result.azimuth_deg = wrap_degrees(rad_to_deg(std::atan2(v.y(), v.x())));
  result.residual_s = std::sqrt((tau - d * v).squaredNorm() / double(n));
  return result;
}

struct SearchBounds {
  double min_radius_m = 0.05;
  double max_radius_m = 100.0;
};

/// Azimuth, distance from the origin, and fit quality for one source.
/// far_field set means the TDoAs carried no usable range information and
/// only the azimuth is meaningful.
struct SourceEstimate {
  double azimuth_deg = 0.0;
  double distance_m = 0.0;  // valid when !far_field
  bool far_field = false;
  TdoaSet tdoa;
  double residual_s = 0.0;
  bool low_confidence = false;
};

namespace localize_detail {

inline double tdoa_residual(const Eigen::Vector2d& pos, const TdoaSet& tdoa,
                            const MicArrayGeometry& geom) {
  double acc = 0.0;
  for (const auto& p : tdoa.pairs) {
    const Eigen::Vector3d x(pos.x(), pos.y(), 0.0);
    const double di = (x - geom.positions[p.i]).norm();
    const double dj = (x - geom.positions[p.j]).norm();
    const double pred = (dj - di) / geom.speed_of_sound;
    acc += (p.delay_s - pred) * (p.delay_s - pred);
  }
  return std::sqrt(acc / double(tdoa.pairs.size()));
}

/// 2D Nelder-Mead on f, started from x0 with the given simplex scale.
template <typename F>
Eigen::Vector2d nelder_mead(const F& f, Eigen::Vector2d x0, double scale, int max_iter = 200) {
  std::array<Eigen::Vector2d, 3> xs = {x0, x0 + Eigen::Vector2d(scale, 0),
                                       x0 + Eigen::Vector2d(0, scale)};
  std::array<double, 3> fs = {f(xs[0]), f(xs[1]), f(xs[2])};

  for (int it = 0; it < max_iter; ++it) {
    std::array<int, 3> order = {0, 1, 2};
    std::sort(order.begin(), order.end(), [&](int a, int b) { return fs[a] < fs[b]; });
    const int lo = order[0], mid = order[1], hi = order[2];
    if ((xs[hi] - xs[lo]).norm() < 1e-10 * (1.0 + xs[lo].norm())) break;

    const Eigen::Vector2d centroid = 0.5 * (xs[lo] + xs[mid]);
    const Eigen::Vector2d refl = centroid + (centroid - xs[hi]);
    const double f_refl = f(refl);
    if (f_refl < fs[lo]) {
      const Eigen::Vector2d exp_pt = centroid + 2.0 * (centroid - xs[hi]);
      const double f_exp = f(exp_pt);
      if (f_exp < f_refl) {
        xs[hi] = exp_pt;
        fs[hi] = f_exp;
      } else {
        xs[hi] = refl;
        fs[hi] = f_refl;
      }
    } else if (f_refl < fs[mid]) {
      xs[hi] = refl;
      fs[hi] = f_refl;
    } else {
      const Eigen::Vector2d contr = centroid + 0.5 * (xs[hi] - centroid);
      const double f_contr = f(contr);
      if (f_contr < fs[hi]) {
        xs[hi] = contr;
        fs[hi] = f_contr;
      } else {
        xs[mid] = xs[lo] + 0.5 * (xs[mid] - xs[lo]);
        xs[hi] = xs[lo] + 0.5 * (xs[hi] - xs[lo]);
        fs[mid] = f(xs[mid]);
        fs[hi] = f(xs[hi]);
      }
    }
  }
  const int best = fs[0] <= fs[1] && fs[0] <= fs[2] ? 0 : (fs[1] <= fs[2] ? 1 : 2);
  return xs[best];
}

}  // namespace localize_detail

/*
 * Near-field source location by TDoA residual minimization: a coarse polar
 * grid (36 azimuths x 20 log-spaced radii) seeds a Nelder-Mead refinement.
 * The result falls back to the far-field marker unless the finite-distance
 * fit beats the best plane-wave fit by at least 10% RMS residual; relative
 * TDoAs carry no range information for distant sources, so a flat residual
 * in range means only the direction is trustworthy.
 */
inline SourceEstimate distance_multilateration(const TdoaSet& tdoa, const MicArrayGeometry& geom,
                                               const SearchBounds& bounds = {}) {
  geom.validate();
  require(geom.n_mics() >= 3, "multilateration needs at least three microphones");
  require(bounds.min_radius_m > 0.0 && bounds.max_radius_m > bounds.min_radius_m,
          "search bounds must be positive and ordered");

  SourceEstimate est;
  est.tdoa = tdoa;

  // plane-wave reference fit
  const DoaResult doa = doa_far_field(tdoa, geom);

  constexpr int kAzimuthSteps = 36;
  constexpr int kRadiusSteps = 20;
  const double log_lo = std::log(bounds.min_radius_m);
  const double log_hi = std::log(bounds.max_radius_m);

  Eigen::Vector2d best_pos(bounds.min_radius_m, 0.0);
  double best_res = std::numeric_limits<double>::infinity();
  for (int a = 0; a < kAzimuthSteps; ++a) {
    const double az = 2.0 * M_PI * double(a) / kAzimuthSteps;
    for (int r = 0; r < kRadiusSteps; ++r) {
      const double radius =
          std::exp(log_lo + (log_hi - log_lo) * double(r) / double(kRadiusSteps - 1));
      const Eigen::Vector2d pos(radius * std::cos(az), radius * std::sin(az));
      const double res = localize_detail::tdoa_residual(pos, tdoa, geom);
      if (res < best_res) {
        best_res = res;
        best_pos = pos;
      }
    }
  }

  const auto objective = [&](const Eigen::Vector2d& p) {
    return localize_detail::tdoa_residual(p, tdoa, geom);
  };
  const Eigen::Vector2d refined =
      localize_detail::nelder_mead(objective, best_pos, 0.1 * best_pos.norm() + 1e-3);
  const double refined_res = objective(refined);

  if (!(refined_res <= 0.9 * doa.residual_s)) {
    est.far_field = true;
    est.azimuth_deg = doa.azimuth_deg;
    est.residual_s = doa.residual_s;
    est.low_confidence = doa.ambiguous;
    return est;
  }

  est.azimuth_deg = wrap_degrees(rad_to_deg(std::atan2(refined.y(), refined.x())));
  est.distance_m = refined.norm();
  est.residual_s = refined_res;

  const double aperture = geom.aperture();
  if (refined_res > 0.25 * aperture / geom.speed_of_sound) est.low_confidence = true;
  for (const auto& mic : geom.positions)
    if ((Eigen::Vector3d(refined.x(), refined.y(), 0.0) - mic).norm() <
        std::max(0.05 * aperture, 1e-3))
      est.low_confidence = true;  // source sitting on a mic: singular geometry
  return est;
}

}  // namespace echolocate
