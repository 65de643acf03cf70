#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <numeric>

#include "magarc/errors.hpp"
#include "magarc/glomap.hpp"
#include "magarc/sim.hpp"

namespace sim = magarc::sim;
namespace kin = magarc::kin;
namespace glomap = magarc::glomap;

TEST_CASE("straight route: analytic kinematics everywhere") {
  sim::RouteSpec spec;
  spec.waypoints = {{0.0, 0.0}, {100.0, 0.0}};
  spec.speed = 10.0;
  spec.sample_dt = 0.1;
  const auto traj = sim::gen_trajectory(spec);
  REQUIRE(traj.t.size() == 101);
  for (std::size_t k = 0; k < traj.t.size(); ++k) {
    CHECK(traj.xy[k].x() == doctest::Approx(10.0 * traj.t[k]).epsilon(1e-12));
    CHECK(traj.xy[k].y() == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(traj.s[k] == doctest::Approx(10.0 * traj.t[k]).epsilon(1e-12));
    CHECK(traj.heading[k] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(traj.v[k].norm() == doctest::Approx(spec.speed).epsilon(1e-12));
    CHECK(traj.a[k].norm() == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(traj.yaw_rate[k] == 0.0);
  }
}

TEST_CASE("filleted corner: constant speed, centripetal acceleration on the arc") {
  sim::RouteSpec spec;
  spec.waypoints = {{0.0, 0.0}, {100.0, 0.0}, {100.0, 100.0}};
  spec.speed = 5.0;
  spec.sample_dt = 0.05;
  spec.corner_radius = 20.0;
  const auto traj = sim::gen_trajectory(spec);

  // Route length: two 80 m legs plus a quarter circle of radius 20.
  const double expected_len = 80.0 + 80.0 + 20.0 * M_PI / 2.0;
  CHECK(traj.s.back() <= expected_len + 1e-9);
  CHECK(traj.s.back() > expected_len - spec.speed * spec.sample_dt);

  for (std::size_t k = 0; k < traj.t.size(); ++k) {
    CHECK(traj.v[k].norm() == doctest::Approx(spec.speed).epsilon(1e-12));
    // Velocity must agree with the stored heading.
    CHECK(traj.v[k].x() == doctest::Approx(spec.speed * std::cos(traj.heading[k])).epsilon(1e-12));
    CHECK(traj.v[k].y() == doctest::Approx(spec.speed * std::sin(traj.heading[k])).epsilon(1e-12));
    if (traj.s[k] > 80.0 + 1e-6 && traj.s[k] < 80.0 + 20.0 * M_PI / 2.0 - 1e-6) {
      // On the arc: |a| = v^2 / r, a orthogonal to v, yaw rate = v / r (left turn).
      CHECK(traj.a[k].norm() == doctest::Approx(spec.speed * spec.speed / 20.0).epsilon(1e-9));
      CHECK(std::abs(traj.a[k].dot(traj.v[k])) < 1e-9);
      CHECK(traj.yaw_rate[k] == doctest::Approx(spec.speed / 20.0).epsilon(1e-12));
    } else if (traj.s[k] < 80.0 - 1e-6 || traj.s[k] > 80.0 + 20.0 * M_PI / 2.0 + 1e-6) {
      CHECK(traj.a[k].norm() == doctest::Approx(0.0).epsilon(1e-12));
      CHECK(traj.yaw_rate[k] == 0.0);
    }
  }

  // Position steps are consistent with the arc length parameterization.
  for (std::size_t k = 1; k < traj.t.size(); ++k) {
    const double chord = (traj.xy[k] - traj.xy[k - 1]).norm();
    const double ds = traj.s[k] - traj.s[k - 1];
    CHECK(chord <= ds + 1e-12);          // chord never exceeds arc
    CHECK(chord > ds - 1e-4);            // and is close at this step size
  }
}

TEST_CASE("route geometry errors") {
  sim::RouteSpec spec;
  spec.waypoints = {{0.0, 0.0}};
  CHECK_THROWS_AS(sim::gen_trajectory(spec), magarc::GeometryError);

  spec.waypoints = {{0.0, 0.0}, {10.0, 0.0}, {10.0, 10.0}};
  spec.corner_radius = 50.0;  // fillet tangent exceeds both legs
  CHECK_THROWS_AS(sim::gen_trajectory(spec), magarc::GeometryError);

  spec.corner_radius = 2.0;
  spec.speed = 0.0;
  CHECK_THROWS_AS(sim::gen_trajectory(spec), magarc::GeometryError);

  spec.speed = 5.0;
  spec.waypoints = {{0.0, 0.0}, {10.0, 0.0}, {0.0, 0.0}};  // 180-degree reversal
  CHECK_THROWS_AS(sim::gen_trajectory(spec), magarc::GeometryError);
}

TEST_CASE("default route is a multi-kilometer loop at 30 km/h") {
  const auto spec = sim::default_route();
  CHECK(spec.speed == doctest::Approx(8.33));
  const auto traj = sim::gen_trajectory(spec);
  CHECK(traj.s.back() > 2500.0);
  CHECK(traj.s.back() < 4000.0);
}

TEST_CASE("gen_field is deterministic in the seed and bounded by the spec") {
  sim::RouteSpec rspec;
  rspec.waypoints = {{0.0, 0.0}, {500.0, 0.0}};
  const auto traj = sim::gen_trajectory(rspec);

  sim::FieldSpec fspec;
  fspec.seed = 42;
  const auto field_a = sim::gen_field(traj, fspec);
  const auto field_b = sim::gen_field(traj, fspec);
  REQUIRE(field_a.bumps.size() == fspec.anomaly_count);
  REQUIRE(field_b.bumps.size() == fspec.anomaly_count);
  for (std::size_t i = 0; i < field_a.bumps.size(); ++i) {
    CHECK(field_a.bumps[i].center == field_b.bumps[i].center);
    CHECK(field_a.bumps[i].amplitude == field_b.bumps[i].amplitude);
    CHECK(field_a.bumps[i].length_scale == field_b.bumps[i].length_scale);
    CHECK(std::abs(field_a.bumps[i].amplitude) >= fspec.amp_min);
    CHECK(std::abs(field_a.bumps[i].amplitude) <= fspec.amp_max);
    CHECK(field_a.bumps[i].length_scale >= fspec.scale_min);
    CHECK(field_a.bumps[i].length_scale <= fspec.scale_max);
  }

  fspec.seed = 43;
  const auto field_c = sim::gen_field(traj, fspec);
  bool any_diff = false;
  for (std::size_t i = 0; i < field_a.bumps.size(); ++i)
    any_diff = any_diff || field_a.bumps[i].center != field_c.bumps[i].center;
  CHECK(any_diff);

  // field_along is just eval applied pointwise.
  const auto along = sim::field_along(field_a, traj.xy);
  REQUIRE(along.size() == traj.xy.size());
  for (std::size_t i = 0; i < along.size(); ++i)
    CHECK(along[i] == field_a.eval(traj.xy[i]));

  sim::FieldSpec bad;
  bad.scale_min = 0.0;
  CHECK_THROWS_AS(sim::gen_field(traj, bad), magarc::DomainError);
}

TEST_CASE("field along the track is captured by the arc-length map to < 0.05 uT RMS") {
  const auto traj = sim::gen_trajectory(sim::default_route());
  sim::FieldSpec fspec;
  fspec.seed = 5;
  const auto field = sim::gen_field(traj, fspec);
  const auto values = sim::field_along(field, traj.xy);
  const auto map = glomap::build_map(traj.s, values, 10.0, "mag", "uT");

  double sq = 0.0;
  for (std::size_t i = 0; i < traj.s.size(); ++i) {
    const double e = glomap::eval_map(map, traj.s[i]) - values[i];
    sq += e * e;
  }
  CHECK(std::sqrt(sq / static_cast<double>(traj.s.size())) < 0.05);
}

TEST_CASE("add_mag_noise: sigma 0 is the identity, seeds are reproducible") {
  std::vector<double> values(5000);
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = 45.0 + std::sin(0.01 * i);

  CHECK(sim::add_mag_noise(values, 0.0, 9) == values);
  CHECK_THROWS_AS(sim::add_mag_noise(values, -1.0, 9), magarc::DomainError);

  const auto a = sim::add_mag_noise(values, 0.1, 9);
  const auto b = sim::add_mag_noise(values, 0.1, 9);
  CHECK(a == b);

  double mean = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) mean += a[i] - values[i];
  mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double d = a[i] - values[i] - mean;
    var += d * d;
  }
  var /= static_cast<double>(values.size() - 1);
  CHECK(std::abs(mean) < 0.01);                      // ~3 sigma of the mean estimate
  CHECK(std::sqrt(var) == doctest::Approx(0.1).epsilon(0.1));
}

TEST_CASE("synth_imu inverts the estimation model exactly when noise free") {
  sim::RouteSpec rspec;
  rspec.waypoints = {{0.0, 0.0}, {200.0, 0.0}, {200.0, 200.0}};
  rspec.speed = 8.0;
  rspec.corner_radius = 30.0;
  const auto traj = sim::gen_trajectory(rspec);

  sim::ImuTruth imu;
  imu.beta_g = {0.002, -0.001, 0.003};
  imu.beta_a = {0.2, -0.1, 0.05};
  imu.k_g = {0.01, -0.02, 0.03};
  imu.k_a = {1.05, 0.95, 1.02};
  const auto samples = sim::synth_imu(traj, imu, /*gravity_free=*/false);
  REQUIRE(samples.size() == traj.t.size());

  kin::NavState truth_params;
  truth_params.beta_g = imu.beta_g;
  truth_params.beta_a = imu.beta_a;
  truth_params.k_g = imu.k_g;
  truth_params.k_a = imu.k_a;

  for (std::size_t k = 0; k < samples.size(); k += 7) {
    Eigen::Vector3d omega_hat, accel_hat;
    kin::correct_imu(samples[k], truth_params, omega_hat, accel_hat);
    CHECK((omega_hat - Eigen::Vector3d(0.0, 0.0, traj.yaw_rate[k])).norm() < 1e-12);
    // Corrected reading is the body-frame specific force: local acceleration
    // plus gravity, rotated by the heading.
    const Eigen::Matrix3d c = kin::dcm(kin::quat_from_yaw(traj.heading[k]));
    const Eigen::Vector3d f_local(traj.a[k].x(), traj.a[k].y(), kin::kGravity);
    CHECK((accel_hat - c * f_local).norm() < 1e-12);
  }

  // Gravity-free synthesis drops the z column entirely.
  const auto gf = sim::synth_imu(traj, imu, /*gravity_free=*/true);
  Eigen::Vector3d omega_hat, accel_hat;
  kin::correct_imu(gf[10], truth_params, omega_hat, accel_hat);
  CHECK(std::abs(accel_hat.z()) < 1e-12);
}

TEST_CASE("synth_imu rejects singular scale factors") {
  const auto traj = sim::gen_trajectory({{{0.0, 0.0}, {50.0, 0.0}}, 5.0, 0.1, 10.0});
  sim::ImuTruth imu;
  imu.k_g = {1.0, 0.0, 0.0};  // (I - K_g) singular on x
  CHECK_THROWS_AS(sim::synth_imu(traj, imu, true), magarc::InvalidImuTruth);
  imu.k_g = {0.0, 0.0, 0.0};
  imu.k_a = {0.0, 1.0, 1.0};  // K_a singular on x
  CHECK_THROWS_AS(sim::synth_imu(traj, imu, true), magarc::InvalidImuTruth);
}

TEST_CASE("noise-free synthesized IMU dead-reckons back onto the truth") {
  sim::RouteSpec rspec;
  rspec.waypoints = {{0.0, 0.0}, {150.0, 0.0}, {150.0, 150.0}, {0.0, 150.0}};
  rspec.speed = 6.0;
  rspec.sample_dt = 0.001;
  rspec.corner_radius = 25.0;
  const auto traj = sim::gen_trajectory(rspec);

  sim::ImuTruth imu;
  imu.beta_a = {0.2, -0.1, 0.0};
  imu.k_a = {1.05, 0.95, 1.0};
  const auto samples = sim::synth_imu(traj, imu, /*gravity_free=*/false);

  kin::NavState state;
  state.q = kin::quat_from_yaw(traj.heading.front());
  state.p = {traj.xy.front().x(), traj.xy.front().y(), 0.0};
  state.v = {traj.v.front().x(), traj.v.front().y(), 0.0};
  state.beta_a = imu.beta_a;
  state.k_a = imu.k_a;

  double max_err = 0.0;
  for (std::size_t k = 1; k < samples.size(); ++k) {
    state = kin::propagate(state, samples[k], rspec.sample_dt, /*gravity_comp=*/true);
    max_err = std::max(max_err, (state.p.head<2>() - traj.xy[k]).norm());
  }
  // First-order integrator at 1 kHz over ~75 s of driving; the residual is
  // dominated by the zero-order hold across the curvature discontinuities.
  CHECK(max_err < 0.2);
}
