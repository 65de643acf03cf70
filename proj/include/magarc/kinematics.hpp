#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

namespace magarc::kin {

// Error-state layout (21 states): attitude error, position, velocity,
// gyro bias, accel bias, gyro scale, accel scale. 3 components each.
inline constexpr int kErrDim = 21;
inline constexpr int kNoiseDim = 12;
inline constexpr int iAtt = 0;
inline constexpr int iPos = 3;
inline constexpr int iVel = 6;
inline constexpr int iBg = 9;
inline constexpr int iBa = 12;
inline constexpr int iKg = 15;
inline constexpr int iKa = 18;

inline constexpr double kGravity = 9.80665;  // m/s^2

using Mat21 = Eigen::Matrix<double, kErrDim, kErrDim>;
using Mat21x12 = Eigen::Matrix<double, kErrDim, kNoiseDim>;
using Vec21 = Eigen::Matrix<double, kErrDim, 1>;

// Full filter state. Quaternion is scalar-last and kept unit-norm.
struct NavState {
  Eigen::Vector4d q{0, 0, 0, 1};   // attitude, local -> body, scalar last
  Eigen::Vector3d p{0, 0, 0};      // meters, local frame
  Eigen::Vector3d v{0, 0, 0};      // m/s, local frame
  Eigen::Vector3d beta_g{0, 0, 0};  // rad/s
  Eigen::Vector3d beta_a{0, 0, 0};  // m/s^2
  Eigen::Vector3d k_g{0, 0, 0};     // gyro scale-factor diagonal
  Eigen::Vector3d k_a{1, 1, 1};     // accel scale-factor diagonal
};

struct ImuSample {
  double timestamp = 0.0;                 // seconds
  Eigen::Vector3d omega_meas{0, 0, 0};    // rad/s
  Eigen::Vector3d accel_meas{0, 0, 0};    // m/s^2
};

// Continuous-time noise densities for the IMU error vector
// [eta_gv, eta_gu, eta_av, eta_au].
struct NoiseParams {
  double sigma_gv = 0.0;  // rad/s/sqrt(Hz)
  double sigma_gu = 0.0;  // rad/s^2/sqrt(Hz)
  double sigma_av = 0.0;  // m/s^2/sqrt(Hz)
  double sigma_au = 0.0;  // m/s^3/sqrt(Hz)
};

Eigen::Matrix3d skew(const Eigen::Vector3d& v);

// Quaternion composition with C(quat_mult(a, b)) = dcm(a) * dcm(b).
Eigen::Vector4d quat_mult(const Eigen::Vector4d& a, const Eigen::Vector4d& b);
Eigen::Vector4d quat_conj(const Eigen::Vector4d& q);
Eigen::Vector4d quat_from_yaw(double yaw);
double yaw_from_quat(const Eigen::Vector4d& q);

// Direction cosine matrix: rotates local-frame vectors into the body frame.
// Renormalizes quaternions within 1e-3 of unit norm; QuaternionNormError
// beyond that.
Eigen::Matrix3d dcm(const Eigen::Vector4d& q);

// Multiplicative attitude-error helpers: q_true = dq(delta_alpha) * q_hat.
Eigen::Vector4d inject_attitude(const Eigen::Vector4d& q_hat, const Eigen::Vector3d& delta_alpha);
Eigen::Vector3d attitude_error(const Eigen::Vector4d& q, const Eigen::Vector4d& q_hat);

// Estimation models: omega_hat = (I - K_g)(omega_meas - beta_g),
// accel_hat = K_a * accel_meas - beta_a.
void correct_imu(const ImuSample& sample, const NavState& state,
                 Eigen::Vector3d& omega_hat, Eigen::Vector3d& accel_hat);

// 4x4 quaternion transition matrix; small-angle branch below 1e-8 rad.
Eigen::Matrix4d phi_matrix(const Eigen::Vector3d& omega_hat, double dt);

// One discrete strapdown step. With gravity_comp, kGravity * z is removed
// from the local-frame specific force after rotation.
NavState propagate(const NavState& state, const ImuSample& sample, double dt,
                   bool gravity_comp = false);

// Error-state transition matrix, 21x21.
Mat21 transition_matrix(const NavState& state, const ImuSample& sample, double dt);

// Noise input matrix, 21x12.
Mat21x12 noise_matrix(const NavState& state, double dt);

// Propagation with an injected noise vector w = [eta_gv, eta_gu, eta_av,
// eta_au]; used by the noise-Jacobian checks and the consistency tests.
NavState propagate_noisy(const NavState& state, const ImuSample& sample, double dt,
                         const Eigen::Matrix<double, kNoiseDim, 1>& w, bool gravity_comp = false);

// IMU CSV with header `t,wx,wy,wz,ax,ay,az`.
std::vector<ImuSample> read_imu_csv(const std::string& path);
void write_imu_csv(const std::string& path, const std::vector<ImuSample>& samples);

}  // namespace magarc::kin
