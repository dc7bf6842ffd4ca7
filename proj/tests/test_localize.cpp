#include <catch2/catch_amalgamated.hpp>

#include "echolocate/localize.hpp"
#include "echolocate/scene.hpp"
#include "helpers.hpp"

using namespace echolocate;

namespace {

AudioBuffer mono16k(const Eigen::VectorXd& x) { return AudioBuffer::mono(x, 16000); }

/// TDoA set synthesized from the plane-wave delay model for direction
/// azimuth_deg: delay(i, j) = (p_i - p_j) . u / c.
TdoaSet plane_wave_tdoa(const MicArrayGeometry& geom, double azimuth_deg) {
  const Eigen::Vector3d u(std::cos(deg_to_rad(azimuth_deg)), std::sin(deg_to_rad(azimuth_deg)),
                          0.0);
  TdoaSet set;
  set.n_mics = geom.n_mics();
  for (std::size_t i = 0; i < geom.n_mics(); ++i)
    for (std::size_t j = i + 1; j < geom.n_mics(); ++j)
      set.pairs.push_back(
          {i, j, (geom.positions[i] - geom.positions[j]).dot(u) / geom.speed_of_sound, 1.0});
  return set;
}

/// TDoA set from exact spherical geometry for a point source.
TdoaSet spherical_tdoa(const MicArrayGeometry& geom, const Eigen::Vector3d& pos) {
  TdoaSet set;
  set.n_mics = geom.n_mics();
  for (std::size_t i = 0; i < geom.n_mics(); ++i)
    for (std::size_t j = i + 1; j < geom.n_mics(); ++j) {
      const double delay = ((pos - geom.positions[j]).norm() - (pos - geom.positions[i]).norm()) /
                           geom.speed_of_sound;
      set.pairs.push_back({i, j, delay, 1.0});
    }
  return set;
}

}  // namespace

TEST_CASE("gcc-phat of a signal with itself peaks at zero", "[gccphat]") {
  const AudioBuffer a = mono16k(testing::white_noise(3280, 3));
  const GccPhatResult r = gcc_phat(a, a, 0.002);
  CHECK(std::abs(r.delay_s) <= 0.5 / 16000.0);
  CHECK(r.peak > 0.9);
}

TEST_CASE("gcc-phat recovers an integer shift, cross-checked by brute force", "[gccphat]") {
  const Eigen::VectorXd x = testing::white_noise(3280, 11);
  Eigen::VectorXd shifted = Eigen::VectorXd::Zero(x.size());
  shifted.tail(x.size() - 5) = x.head(x.size() - 5);  // b[n] = a[n-5]

  const GccPhatResult r = gcc_phat(mono16k(x), mono16k(shifted), 0.002);
  CHECK(r.delay_s == Catch::Approx(5.0 / 16000.0).margin(0.5 / 16000.0));
  CHECK(r.delay_s == Catch::Approx(3.125e-4).margin(0.5 / 16000.0));

  const long oracle = testing::xcorr_peak_lag(x, shifted, 32);
  CHECK(oracle == 5);
}

TEST_CASE("independent noise scores well below a matched pair", "[gccphat]") {
  const AudioBuffer a = mono16k(testing::white_noise(3280, 21));
  const AudioBuffer b = mono16k(testing::white_noise(3280, 22));
  const double matched = gcc_phat(a, a, 0.002).peak;
  const double unmatched = gcc_phat(a, b, 0.002).peak;
  CHECK(unmatched < 0.3 * matched);
}

TEST_CASE("gcc-phat delay is exactly antisymmetric", "[gccphat]") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::VectorXd x = testing::white_noise(2048, 100 + std::uint64_t(trial));
    Eigen::VectorXd y = testing::white_noise(2048, 200 + std::uint64_t(trial), 0.3);
    const long shift = long(rng.uniform(0.0, 20.0));
    y.tail(y.size() - shift) += x.head(x.size() - shift);
    const GccPhatResult ab = gcc_phat(mono16k(x), mono16k(y), 0.0015);
    const GccPhatResult ba = gcc_phat(mono16k(y), mono16k(x), 0.0015);
    REQUIRE(ab.delay_s == -ba.delay_s);
  }
}

TEST_CASE("gcc-phat rejects bad inputs", "[gccphat]") {
  const AudioBuffer a = mono16k(testing::white_noise(1000, 1));
  const AudioBuffer zero = mono16k(Eigen::VectorXd::Zero(1000));
  CHECK_THROWS_AS(gcc_phat(a, zero, 0.002), Error);
  CHECK_THROWS_AS(gcc_phat(a, a, 0.04), Error);  // max_lag >= duration / 2
  const AudioBuffer shorter = mono16k(testing::white_noise(999, 2));
  CHECK_THROWS_AS(gcc_phat(a, shorter, 0.002), Error);
}

TEST_CASE("tdoa of identical channels is zero everywhere", "[tdoa]") {
  const MicArrayGeometry geom = square_array(0.5);
  Eigen::MatrixXd chans(4, 3280);
  const Eigen::VectorXd x = testing::white_noise(3280, 9);
  for (int c = 0; c < 4; ++c) chans.row(c) = x.transpose();
  const TdoaSet set = estimate_tdoa(AudioBuffer(chans, 16000), geom);
  REQUIRE(set.pairs.size() == 6);
  for (const auto& p : set.pairs) CHECK(std::abs(p.delay_s) <= 0.5 / 16000.0);
}

TEST_CASE("tdoa respects the physical bound for every pair", "[tdoa]") {
  const MicArrayGeometry geom = square_array(0.5);
  SceneSpec spec;
  spec.geometry = geom;
  spec.duration_s = 0.205;
  spec.noise_snr_db = 0.0;  // heavy noise: estimates may be garbage but must stay bounded
  spec.sources = {{Eigen::Vector3d(1.3, -0.4, 0.0), NoiseSignal{}, 1.0}};
  spec.seed = 77;
  const auto [buf, truth] = render_scene(spec);
  const TdoaSet set = estimate_tdoa(buf, geom);
  for (const auto& p : set.pairs) {
    CHECK(std::abs(p.delay_s) <=
          geom.baseline(p.i, p.j) / geom.speed_of_sound + 1.0 / buf.sample_rate);
  }
}

TEST_CASE("channel/mic mismatch rejected", "[tdoa]") {
  const MicArrayGeometry geom = square_array();
  Eigen::MatrixXd two = Eigen::MatrixXd::Random(2, 1000);
  CHECK_THROWS_AS(estimate_tdoa(AudioBuffer(two, 16000), geom), Error);
}

TEST_CASE("scene source on a pair's perpendicular bisector gives zero delay", "[tdoa]") {
  const MicArrayGeometry geom = square_array(0.5);
  // +y source sits on the bisector of mics 0 (+,+) and 1 (-,+)
  SceneSpec spec = {geom, {{Eigen::Vector3d(0.0, 2.0, 0.0), NoiseSignal{}, 1.0}},
                    std::nullopt, 0.205, 16000, 13};
  const auto [buf, truth] = render_scene(spec);
  const TdoaSet set = estimate_tdoa(buf, geom);
  CHECK(std::abs(set.delay(0, 1)) <= 0.5 / 16000.0);
}

TEST_CASE("estimated tdoa matches scene ground truth within a sample", "[tdoa]") {
  const MicArrayGeometry geom = square_array(0.5);
  SceneSpec spec = {geom, {{Eigen::Vector3d(1.5, 1.0, 0.0), NoiseSignal{}, 1.0}},
                    std::nullopt, 0.205, 16000, 29};
  const auto [buf, truth] = render_scene(spec);
  const TdoaSet set = estimate_tdoa(buf, geom);
  for (const auto& p : set.pairs) {
    const double expected = truth.sources[0].delays_s[p.j] - truth.sources[0].delays_s[p.i];
    CHECK(p.delay_s == Catch::Approx(expected).margin(1.0 / 16000.0));
  }
}

TEST_CASE("tdoa from integer-sample shifts matches ground truth", "[tdoa]") {
  // channels built by integer-shifting one noise signal per the geometry's
  // exact delays rounded to samples
  const MicArrayGeometry geom = square_array(0.5);
  const Eigen::Vector3d pos(2.0, -1.2, 0.0);
  const Eigen::VectorXd base = testing::white_noise(3280, 31);
  std::vector<long> shifts;
  for (const auto& mic : geom.positions) {
    shifts.push_back(std::lround((pos - mic).norm() / geom.speed_of_sound * 16000.0));
  }
  const long min_shift = *std::min_element(shifts.begin(), shifts.end());
  Eigen::MatrixXd chans = Eigen::MatrixXd::Zero(4, base.size());
  for (std::size_t m = 0; m < 4; ++m) {
    const long s = shifts[m] - min_shift;
    chans.row(Eigen::Index(m)).tail(base.size() - s) = base.head(base.size() - s).transpose();
  }
  const TdoaSet set = estimate_tdoa(AudioBuffer(chans, 16000), geom);
  for (const auto& p : set.pairs) {
    const double expected = double(shifts[p.j] - shifts[p.i]) / 16000.0;
    CHECK(p.delay_s == Catch::Approx(expected).margin(1.0 / 16000.0));
  }
}

TEST_CASE("far-field doa recovers plane-wave directions", "[doa]") {
  const MicArrayGeometry geom = square_array(0.5);
  SECTION("source far along +x") {
    const DoaResult r = doa_far_field(plane_wave_tdoa(geom, 0.0), geom);
    CHECK(!r.ambiguous);
    const double err = std::abs(std::remainder(r.azimuth_deg - 0.0, 360.0));
    CHECK(err <= 5.0);
  }
  SECTION("source along +y") {
    const DoaResult r = doa_far_field(plane_wave_tdoa(geom, 90.0), geom);
    const double err = std::abs(std::remainder(r.azimuth_deg - 90.0, 360.0));
    CHECK(err <= 5.0);
  }
  SECTION("sweep") {
    for (double az = 0.0; az < 360.0; az += 30.0) {
      const DoaResult r = doa_far_field(plane_wave_tdoa(geom, az), geom);
      CHECK(std::abs(std::remainder(r.azimuth_deg - az, 360.0)) <= 1.0);
    }
  }
}

TEST_CASE("all-zero delays are an indeterminate direction", "[doa]") {
  const MicArrayGeometry geom = square_array(0.5);
  TdoaSet zeros;
  zeros.n_mics = 4;
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = i + 1; j < 4; ++j) zeros.pairs.push_back({i, j, 0.0, 1.0});
  CHECK_THROWS_AS(doa_far_field(zeros, geom), Error);
}

TEST_CASE("collinear array yields mirrored candidates", "[doa]") {
  MicArrayGeometry line;
  line.positions = {{-0.25, 0.0, 0.0}, {0.0, 0.0, 0.0}, {0.25, 0.0, 0.0}};
  const double az = 40.0;
  const TdoaSet set = plane_wave_tdoa(line, az);
  const DoaResult r = doa_far_field(set, line);
  CHECK(r.ambiguous);
  const double e1 = std::abs(std::remainder(r.azimuth_deg - az, 360.0));
  const double e2 = std::abs(std::remainder(r.mirror_azimuth_deg - az, 360.0));
  CHECK(std::min(e1, e2) <= 1.0);
  // mirror pair reflects across the array axis
  CHECK(std::abs(std::remainder(r.azimuth_deg + r.mirror_azimuth_deg, 360.0)) <= 2.0);
}

TEST_CASE("doa is invariant under amplitude scaling", "[doa]") {
  const MicArrayGeometry geom = square_array(0.5);
  SceneSpec spec = {geom, {{Eigen::Vector3d(1.0, 1.0, 0.0), NoiseSignal{}, 1.0}},
                    std::nullopt, 0.205, 16000, 47};
  const auto [buf, truth] = render_scene(spec);
  AudioBuffer scaled = buf;
  scaled.samples *= 37.5;
  const DoaResult r1 = doa_far_field(estimate_tdoa(buf, geom), geom);
  const DoaResult r2 = doa_far_field(estimate_tdoa(scaled, geom), geom);
  CHECK(r1.azimuth_deg == Catch::Approx(r2.azimuth_deg).margin(1e-9));
}

TEST_CASE("multilateration finds a 2 m source at 45 degrees", "[multilateration]") {
  const MicArrayGeometry geom = square_array(0.5);
  const double r = 2.0;
  const Eigen::Vector3d pos(r * std::cos(M_PI / 4), r * std::sin(M_PI / 4), 0.0);
  SceneSpec spec = {geom, {{pos, NoiseSignal{}, 1.0}}, std::nullopt, 0.205, 16000, 53};
  const auto [buf, truth] = render_scene(spec);
  const SourceEstimate est =
      distance_multilateration(estimate_tdoa(buf, geom), geom, {0.1, 50.0});
  REQUIRE(!est.far_field);
  CHECK(std::abs(std::remainder(est.azimuth_deg - 45.0, 360.0)) <= 5.0);
  CHECK(est.distance_m == Catch::Approx(2.0).epsilon(0.15));
}

TEST_CASE("distant source falls back to the far-field marker", "[multilateration]") {
  const MicArrayGeometry geom = square_array(0.5);
  const double r = 100.0 * geom.aperture();
  SceneSpec spec = {geom,
                    {{Eigen::Vector3d(r * std::cos(1.0), r * std::sin(1.0), 0.0),
                      NoiseSignal{}, 1.0}},
                    std::nullopt, 0.205, 16000, 59};
  const auto [buf, truth] = render_scene(spec);
  const SourceEstimate est =
      distance_multilateration(estimate_tdoa(buf, geom), geom, {0.1, 200.0});
  CHECK(est.far_field);
  CHECK(std::abs(std::remainder(est.azimuth_deg - rad_to_deg(1.0), 360.0)) <= 5.0);
}

TEST_CASE("source on a microphone is flagged low confidence", "[multilateration]") {
  const MicArrayGeometry geom = square_array(0.5);
  const TdoaSet set = spherical_tdoa(geom, geom.positions[0]);
  const SourceEstimate est = distance_multilateration(set, geom, {0.05, 50.0});
  CHECK(est.low_confidence);
}

TEST_CASE("optimizer returns at least the ground-truth fit quality", "[multilateration]") {
  const MicArrayGeometry geom = square_array(0.5);
  const Eigen::Vector3d pos(1.4, -0.9, 0.0);
  const TdoaSet set = spherical_tdoa(geom, pos);
  const SourceEstimate est = distance_multilateration(set, geom, {0.1, 50.0});
  REQUIRE(!est.far_field);
  const double truth_res = localize_detail::tdoa_residual(pos.head<2>(), set, geom);
  CHECK(est.residual_s <= truth_res + 1e-9);
}
