#include "magarc/sim.hpp"

#include <cmath>

#include "magarc/errors.hpp"
#include "magarc/rng.hpp"

namespace magarc::sim {

namespace {

// Piecewise path primitive: a straight segment or a circular arc.
struct Piece {
  bool is_arc = false;
  // line
  Eigen::Vector2d start{0, 0};
  Eigen::Vector2d dir{1, 0};
  // arc
  Eigen::Vector2d center{0, 0};
  double radius = 0.0;
  double angle0 = 0.0;  // angle of the start point about the center
  double turn = 0.0;    // signed sweep, + = counterclockwise
  double length = 0.0;

  Eigen::Vector2d position(double s) const {
    if (!is_arc) return start + dir * s;
    const double a = angle0 + (turn >= 0 ? 1.0 : -1.0) * s / radius;
    return center + radius * Eigen::Vector2d(std::cos(a), std::sin(a));
  }
  double heading(double s) const {
    if (!is_arc) return std::atan2(dir.y(), dir.x());
    const double sign = turn >= 0 ? 1.0 : -1.0;
    const double a = angle0 + sign * s / radius;
    return a + sign * M_PI / 2.0;
  }
  double curvature() const { return is_arc ? (turn >= 0 ? 1.0 : -1.0) / radius : 0.0; }
};

double wrap_pi(double a) {
  while (a > M_PI) a -= 2.0 * M_PI;
  while (a < -M_PI) a += 2.0 * M_PI;
  return a;
}

std::vector<Piece> build_path(const RouteSpec& spec) {
  const auto& wp = spec.waypoints;
  if (wp.size() < 2) throw GeometryError("gen_trajectory: need at least 2 waypoints");
  if (spec.speed <= 0.0 || spec.sample_dt <= 0.0)
    throw GeometryError("gen_trajectory: speed and sample_dt must be positive");

  std::vector<Piece> pieces;
  Eigen::Vector2d cursor = wp.front();
  for (std::size_t i = 1; i + 1 < wp.size(); ++i) {
    const Eigen::Vector2d u1 = (wp[i] - wp[i - 1]).normalized();
    const Eigen::Vector2d u2 = (wp[i + 1] - wp[i]).normalized();
    const double dtheta = wrap_pi(std::atan2(u2.y(), u2.x()) - std::atan2(u1.y(), u1.x()));
    if (std::abs(dtheta) < 1e-9) continue;  // collinear, no fillet
    if (std::abs(std::abs(dtheta) - M_PI) < 1e-9)
      throw GeometryError("gen_trajectory: 180-degree reversal cannot be filleted");
    const double tangent = spec.corner_radius * std::tan(std::abs(dtheta) / 2.0);
    const double avail_in = (wp[i] - cursor).norm();
    const double avail_out = (wp[i + 1] - wp[i]).norm();
    if (tangent > avail_in + 1e-9 || tangent > avail_out / 2.0 + 1e-9)
      throw GeometryError("gen_trajectory: corner radius too large for route geometry");

    const Eigen::Vector2d t_in = wp[i] - tangent * u1;
    const Eigen::Vector2d t_out = wp[i] + tangent * u2;
    if ((t_in - cursor).norm() > 1e-9) {
      Piece line;
      line.start = cursor;
      line.dir = u1;
      line.length = (t_in - cursor).norm();
      pieces.push_back(line);
    }
    const double sign = dtheta >= 0 ? 1.0 : -1.0;
    Piece arc;
    arc.is_arc = true;
    arc.radius = spec.corner_radius;
    arc.center = t_in + sign * spec.corner_radius * Eigen::Vector2d(-u1.y(), u1.x());
    const Eigen::Vector2d rel = t_in - arc.center;
    arc.angle0 = std::atan2(rel.y(), rel.x());
    arc.turn = dtheta;
    arc.length = spec.corner_radius * std::abs(dtheta);
    pieces.push_back(arc);
    cursor = t_out;
  }
  if ((wp.back() - cursor).norm() > 1e-9) {
    Piece line;
    line.start = cursor;
    line.dir = (wp.back() - cursor).normalized();
    line.length = (wp.back() - cursor).norm();
    pieces.push_back(line);
  }
  if (pieces.empty()) throw GeometryError("gen_trajectory: degenerate route");
  return pieces;
}

}  // namespace

Trajectory gen_trajectory(const RouteSpec& spec) {
  const auto pieces = build_path(spec);
  double total = 0.0;
  for (const auto& p : pieces) total += p.length;

  Trajectory out;
  out.sample_dt = spec.sample_dt;
  const auto n = static_cast<std::size_t>(std::floor(total / (spec.speed * spec.sample_dt))) + 1;
  out.t.reserve(n);
  std::size_t piece_idx = 0;
  double piece_start_s = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double tk = static_cast<double>(k) * spec.sample_dt;
    const double sk = spec.speed * tk;
    while (piece_idx + 1 < pieces.size() && sk > piece_start_s + pieces[piece_idx].length) {
      piece_start_s += pieces[piece_idx].length;
      ++piece_idx;
    }
    const Piece& pc = pieces[piece_idx];
    const double local_s = sk - piece_start_s;
    const double theta = pc.heading(local_s);
    const double kappa = pc.curvature();
    out.t.push_back(tk);
    out.xy.push_back(pc.position(local_s));
    out.s.push_back(sk);
    out.heading.push_back(theta);
    out.v.emplace_back(spec.speed * std::cos(theta), spec.speed * std::sin(theta));
    out.a.push_back(spec.speed * spec.speed * kappa *
                    Eigen::Vector2d(-std::sin(theta), std::cos(theta)));
    out.yaw_rate.push_back(spec.speed * kappa);
  }
  return out;
}

double MagneticField::eval(const Eigen::Vector2d& xy) const {
  double v = base;
  for (const auto& b : bumps)
    v += b.amplitude *
         std::exp(-(xy - b.center).squaredNorm() / (2.0 * b.length_scale * b.length_scale));
  return v;
}

MagneticField gen_field(const Trajectory& track, const FieldSpec& spec) {
  if (spec.amp_min < 0.0 || spec.scale_min <= 0.0)
    throw DomainError("gen_field: amplitudes must be >= 0 and length scales > 0");
  MagneticField field;
  field.base = spec.base;
  Rng rng(spec.seed);
  field.bumps.reserve(spec.anomaly_count);
  for (std::size_t i = 0; i < spec.anomaly_count; ++i) {
    const auto idx = static_cast<std::size_t>(rng.uniform() * static_cast<double>(track.xy.size()));
    GaussianBump b;
    b.center = track.xy[std::min(idx, track.xy.size() - 1)] +
               Eigen::Vector2d(rng.normal(0.0, spec.lateral_jitter),
                               rng.normal(0.0, spec.lateral_jitter));
    b.amplitude = (rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform(spec.amp_min, spec.amp_max);
    b.length_scale = rng.uniform(spec.scale_min, spec.scale_max);
    field.bumps.push_back(b);
  }
  return field;
}

std::vector<double> field_along(const MagneticField& field,
                                const std::vector<Eigen::Vector2d>& xy) {
  std::vector<double> out;
  out.reserve(xy.size());
  for (const auto& p : xy) out.push_back(field.eval(p));
  return out;
}

std::vector<kin::ImuSample> synth_imu(const Trajectory& truth, const ImuTruth& imu,
                                      bool gravity_free) {
  for (int i = 0; i < 3; ++i) {
    if (std::abs(1.0 - imu.k_g(i)) < 1e-9)
      throw InvalidImuTruth("synth_imu: singular (I - K_g)");
    if (std::abs(imu.k_a(i)) < 1e-9)
      throw InvalidImuTruth("synth_imu: singular K_a");
  }
  Rng rng(imu.seed);
  const double dt = truth.sample_dt;
  const double sqrt_dt = std::sqrt(dt);
  Eigen::Vector3d beta_g = imu.beta_g;
  Eigen::Vector3d beta_a = imu.beta_a;

  std::vector<kin::ImuSample> out;
  out.reserve(truth.t.size());
  for (std::size_t k = 0; k < truth.t.size(); ++k) {
    const Eigen::Vector4d q = kin::quat_from_yaw(truth.heading[k]);
    const Eigen::Matrix3d c = kin::dcm(q);
    const Eigen::Vector3d omega_true(0.0, 0.0, truth.yaw_rate[k]);
    Eigen::Vector3d accel_local(truth.a[k].x(), truth.a[k].y(), 0.0);
    if (!gravity_free) accel_local.z() += kin::kGravity;  // specific force includes -gravity
    const Eigen::Vector3d f_body = c * accel_local;

    Eigen::Vector3d eta_gv, eta_av;
    for (int i = 0; i < 3; ++i) eta_gv(i) = rng.normal(0.0, imu.noise.sigma_gv / sqrt_dt);
    for (int i = 0; i < 3; ++i) eta_av(i) = rng.normal(0.0, imu.noise.sigma_av / sqrt_dt);

    kin::ImuSample s;
    s.timestamp = truth.t[k];
    for (int i = 0; i < 3; ++i) {
      s.omega_meas(i) = (omega_true(i) + eta_gv(i)) / (1.0 - imu.k_g(i)) + beta_g(i);
      s.accel_meas(i) = (f_body(i) + beta_a(i) + eta_av(i)) / imu.k_a(i);
    }
    out.push_back(s);

    for (int i = 0; i < 3; ++i) beta_g(i) += rng.normal(0.0, imu.noise.sigma_gu * sqrt_dt);
    for (int i = 0; i < 3; ++i) beta_a(i) += rng.normal(0.0, imu.noise.sigma_au * sqrt_dt);
  }
  return out;
}

std::vector<double> add_mag_noise(const std::vector<double>& values, double sigma,
                                  std::uint64_t seed) {
  if (sigma < 0.0) throw DomainError("add_mag_noise: sigma must be >= 0");
  if (sigma == 0.0) return values;
  Rng rng(seed);
  std::vector<double> out;
  out.reserve(values.size());
  for (double v : values) out.push_back(v + rng.normal(0.0, sigma));
  return out;
}

RouteSpec default_route() {
  RouteSpec spec;
  spec.waypoints = {{0, 0},      {640, 0},    {825, 230},  {640, 460}, {90, 460},
                    {-95, 690},  {90, 920},   {735, 920}};
  spec.speed = 8.33;       // ~30 km/h
  spec.sample_dt = 0.1;
  spec.corner_radius = 25.0;
  return spec;
}

}  // namespace magarc::sim
