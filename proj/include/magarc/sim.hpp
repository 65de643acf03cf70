#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "magarc/kinematics.hpp"

namespace magarc::sim {

// Waypoint route driven at constant speed with circular corner fillets.
struct RouteSpec {
  std::vector<Eigen::Vector2d> waypoints;  // meters, >= 2
  double speed = 8.33;                     // m/s
  double sample_dt = 0.1;                  // seconds
  double corner_radius = 20.0;             // meters
};

// Smooth ambient field: base magnitude plus Gaussian bump anomalies.
struct FieldSpec {
  double base = 45.0;            // microtesla
  std::size_t anomaly_count = 120;
  double amp_min = 1.0;          // microtesla
  double amp_max = 5.0;
  double scale_min = 10.0;       // meters
  double scale_max = 40.0;
  double lateral_jitter = 15.0;  // meters, anomaly offset from the track
  std::uint64_t seed = 1;
};

struct GaussianBump {
  Eigen::Vector2d center{0, 0};
  double amplitude = 0.0;   // microtesla, signed
  double length_scale = 0.0;  // meters
};

struct MagneticField {
  double base = 0.0;
  std::vector<GaussianBump> bumps;

  double eval(const Eigen::Vector2d& xy) const;
};

// True IMU corruption parameters.
struct ImuTruth {
  Eigen::Vector3d beta_g{0, 0, 0};   // rad/s
  Eigen::Vector3d beta_a{0, 0, 0};   // m/s^2
  Eigen::Vector3d k_g{0, 0, 0};      // gyro scale diagonal, in (-0.5, 0.5)
  Eigen::Vector3d k_a{1, 1, 1};      // accel scale diagonal, in (0.5, 1.5)
  kin::NoiseParams noise;
  std::uint64_t seed = 2;
};

// Arc-length parameterized ground truth at uniform time steps.
struct Trajectory {
  double sample_dt = 0.0;
  std::vector<double> t;                 // seconds
  std::vector<Eigen::Vector2d> xy;       // meters
  std::vector<double> s;                 // meters (analytic arc length)
  std::vector<double> heading;           // rad, velocity direction
  std::vector<Eigen::Vector2d> v;        // m/s, local frame
  std::vector<Eigen::Vector2d> a;        // m/s^2, local frame
  std::vector<double> yaw_rate;          // rad/s
};

// Constant-speed drive through the route. Throws GeometryError when a fillet
// does not fit its corner.
Trajectory gen_trajectory(const RouteSpec& spec);

// Deterministic anomaly placement along the track.
MagneticField gen_field(const Trajectory& track, const FieldSpec& spec);

std::vector<double> field_along(const MagneticField& field,
                                const std::vector<Eigen::Vector2d>& xy);

// Inverts the estimation models to produce corrupted IMU readings from the
// planar truth. Body frame = local frame yawed by the heading; gravity is
// added to the body-frame specific force unless gravity_free.
std::vector<kin::ImuSample> synth_imu(const Trajectory& truth, const ImuTruth& imu,
                                      bool gravity_free);

std::vector<double> add_mag_noise(const std::vector<double>& values, double sigma,
                                  std::uint64_t seed);

// A 3 km suburban loop mirroring the reference experiment's scale.
RouteSpec default_route();

}  // namespace magarc::sim
