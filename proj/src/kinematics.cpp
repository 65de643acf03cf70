#include "magarc/kinematics.hpp"
#include <Eigen/Geometry>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "magarc/csv.hpp"
#include "magarc/errors.hpp"

namespace magarc::kin {

Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
  Eigen::Matrix3d m;
  m << 0, -v.z(), v.y(),
       v.z(), 0, -v.x(),
       -v.y(), v.x(), 0;
  return m;
}

Eigen::Vector4d quat_mult(const Eigen::Vector4d& a, const Eigen::Vector4d& b) {
  const Eigen::Vector3d av = a.head<3>();
  const Eigen::Vector3d bv = b.head<3>();
  Eigen::Vector4d out;
  out.head<3>() = a(3) * bv + b(3) * av - av.cross(bv);
  out(3) = a(3) * b(3) - av.dot(bv);
  return out;
}

Eigen::Vector4d quat_conj(const Eigen::Vector4d& q) {
  return {-q(0), -q(1), -q(2), q(3)};
}

Eigen::Vector4d quat_from_yaw(double yaw) {
  return {0.0, 0.0, std::sin(0.5 * yaw), std::cos(0.5 * yaw)};
}

double yaw_from_quat(const Eigen::Vector4d& q) {
  const Eigen::Matrix3d c = dcm(q);
  // c maps local to body; local x-axis expressed in body gives the heading.
  return std::atan2(c(0, 1), c(0, 0));
}

Eigen::Matrix3d dcm(const Eigen::Vector4d& q) {
  Eigen::Vector4d qn = q;
  const double norm = q.norm();
  if (std::abs(norm - 1.0) > 1e-3)
    throw QuaternionNormError("dcm: quaternion norm deviates by more than 1e-3");
  qn /= norm;
  const Eigen::Vector3d e = qn.head<3>();
  const double w = qn(3);
  return (w * w - e.squaredNorm()) * Eigen::Matrix3d::Identity() +
         2.0 * e * e.transpose() - 2.0 * w * skew(e);
}

Eigen::Vector4d inject_attitude(const Eigen::Vector4d& q_hat, const Eigen::Vector3d& delta_alpha) {
  Eigen::Vector4d dq;
  dq.head<3>() = 0.5 * delta_alpha;
  dq(3) = 1.0;
  dq.normalize();
  Eigen::Vector4d q = quat_mult(dq, q_hat);
  q.normalize();
  return q;
}

Eigen::Vector3d attitude_error(const Eigen::Vector4d& q, const Eigen::Vector4d& q_hat) {
  Eigen::Vector4d dq = quat_mult(q, quat_conj(q_hat));
  if (dq(3) < 0.0) dq = -dq;
  return 2.0 * dq.head<3>() / dq(3);
}

void correct_imu(const ImuSample& sample, const NavState& state,
                 Eigen::Vector3d& omega_hat, Eigen::Vector3d& accel_hat) {
  omega_hat = (Eigen::Matrix3d::Identity() -
               Eigen::Matrix3d(state.k_g.asDiagonal())) *
              (sample.omega_meas - state.beta_g);
  accel_hat = state.k_a.asDiagonal() * sample.accel_meas - state.beta_a;
}

Eigen::Matrix4d phi_matrix(const Eigen::Vector3d& omega_hat, double dt) {
  const double wn = omega_hat.norm();
  Eigen::Vector3d psi;
  double c;
  if (wn * dt < 1e-8) {
    psi = 0.5 * dt * omega_hat;
    c = 1.0;
  } else {
    psi = std::sin(0.5 * wn * dt) * omega_hat / wn;
    c = std::cos(0.5 * wn * dt);
  }
  Eigen::Matrix4d phi;
  phi.topLeftCorner<3, 3>() = c * Eigen::Matrix3d::Identity() - skew(psi);
  phi.topRightCorner<3, 1>() = psi;
  phi.bottomLeftCorner<1, 3>() = -psi.transpose();
  phi(3, 3) = c;
  return phi;
}

namespace {

NavState propagate_core(const NavState& state, const Eigen::Vector3d& omega_hat,
                        const Eigen::Vector3d& accel_hat, double dt, bool gravity_comp) {
  const Eigen::Matrix3d c = dcm(state.q);
  Eigen::Vector3d a_local = c.transpose() * accel_hat;
  if (gravity_comp) a_local.z() -= kGravity;

  NavState out = state;
  out.q = phi_matrix(omega_hat, dt) * state.q;
  out.q.normalize();
  out.p = state.p + state.v * dt + 0.5 * a_local * dt * dt;
  out.v = state.v + a_local * dt;
  return out;
}

}  // namespace

NavState propagate(const NavState& state, const ImuSample& sample, double dt, bool gravity_comp) {
  if (dt <= 0.0) throw DomainError("propagate: dt must be positive");
  Eigen::Vector3d omega_hat, accel_hat;
  correct_imu(sample, state, omega_hat, accel_hat);
  return propagate_core(state, omega_hat, accel_hat, dt, gravity_comp);
}

NavState propagate_noisy(const NavState& state, const ImuSample& sample, double dt,
                         const Eigen::Matrix<double, kNoiseDim, 1>& w, bool gravity_comp) {
  if (dt <= 0.0) throw DomainError("propagate_noisy: dt must be positive");
  Eigen::Vector3d omega_hat, accel_hat;
  correct_imu(sample, state, omega_hat, accel_hat);
  omega_hat -= w.segment<3>(0);
  accel_hat -= w.segment<3>(6);
  NavState out = propagate_core(state, omega_hat, accel_hat, dt, gravity_comp);
  out.beta_g += w.segment<3>(3) * dt;
  out.beta_a += w.segment<3>(9) * dt;
  return out;
}

Mat21 transition_matrix(const NavState& state, const ImuSample& sample, double dt) {
  Eigen::Vector3d omega_hat, accel_hat;
  correct_imu(sample, state, omega_hat, accel_hat);
  const Eigen::Matrix3d ct = dcm(state.q).transpose();
  const Eigen::Matrix3d eye = Eigen::Matrix3d::Identity();

  Mat21 f = Mat21::Identity();
  f.block<3, 3>(iAtt, iAtt) = eye - skew(omega_hat * dt);
  f.block<3, 3>(iAtt, iBg) =
      -(eye - Eigen::Matrix3d(state.k_g.asDiagonal())) * dt;
  f.block<3, 3>(iAtt, iKg) =
      -Eigen::Matrix3d((sample.omega_meas - state.beta_g).asDiagonal()) * dt;

  f.block<3, 3>(iPos, iVel) = eye * dt;
  f.block<3, 3>(iPos, iBa) = -0.5 * ct * dt * dt;
  f.block<3, 3>(iPos, iKa) =
      0.5 * ct * Eigen::Matrix3d(sample.accel_meas.asDiagonal()) * dt * dt;

  f.block<3, 3>(iVel, iBa) = -ct * dt;
  f.block<3, 3>(iVel, iKa) = ct * Eigen::Matrix3d(sample.accel_meas.asDiagonal()) * dt;
  return f;
}

Mat21x12 noise_matrix(const NavState& state, double dt) {
  if (dt <= 0.0) throw DomainError("noise_matrix: dt must be positive");
  const Eigen::Matrix3d ct = dcm(state.q).transpose();
  const Eigen::Matrix3d eye = Eigen::Matrix3d::Identity();

  Mat21x12 g = Mat21x12::Zero();
  g.block<3, 3>(iAtt, 0) = -eye * dt;
  g.block<3, 3>(iPos, 6) = -0.5 * ct * dt * dt;
  g.block<3, 3>(iVel, 6) = -ct * dt;
  g.block<3, 3>(iBg, 3) = eye * dt;
  g.block<3, 3>(iBa, 9) = eye * dt;
  return g;
}

std::vector<ImuSample> read_imu_csv(const std::string& path) {
  const auto rows = csv::read_numeric(path, "t,wx,wy,wz,ax,ay,az");
  std::vector<ImuSample> out;
  out.reserve(rows.size());
  for (const auto& r : rows) {
    ImuSample s;
    s.timestamp = r[0];
    s.omega_meas = Eigen::Vector3d(r[1], r[2], r[3]);
    s.accel_meas = Eigen::Vector3d(r[4], r[5], r[6]);
    out.push_back(s);
  }
  return out;
}

void write_imu_csv(const std::string& path, const std::vector<ImuSample>& samples) {
  std::ofstream out(path);
  if (!out) throw ParseError(path + ": cannot open for writing");
  out << "t,wx,wy,wz,ax,ay,az\n";
  char buf[256];
  for (const auto& s : samples) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", s.timestamp,
                  s.omega_meas.x(), s.omega_meas.y(), s.omega_meas.z(), s.accel_meas.x(),
                  s.accel_meas.y(), s.accel_meas.z());
    out << buf;
  }
}

}  // namespace magarc::kin
