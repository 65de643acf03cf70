#pragma once

#include <Eigen/Core>
#include <optional>
#include <vector>

namespace magarc::cal {

// A window of matched poses with the raw body-frame planar accelerometer
// readings recorded at the same timestamps. Bias and scale are body-fixed,
// so the fit needs the yaw that maps local vectors into the body frame.
struct PoseWindow {
  std::vector<double> timestamps;              // seconds, strictly increasing
  std::vector<Eigen::Vector2d> xy;             // meters, local frame
  std::vector<double> yaw;                     // rad, local -> body
  std::vector<Eigen::Vector2d> accel_meas_xy;  // m/s^2, body frame
};

// Per-timestamp radial-distance kinematics from finite differences.
struct ArcKinematics {
  std::vector<double> s;        // meters, ||r_j||
  std::vector<double> s_dot;    // m/s
  std::vector<double> s_ddot;   // m/s^2
  std::vector<Eigen::Vector2d> v;  // m/s
};

struct CalibrationEstimate {
  Eigen::Vector2d k_bar{1, 1};     // accel scale factors (x, y)
  Eigen::Vector2d beta_bar{0, 0};  // accel biases, m/s^2
  double residual_rms = 0.0;       // m/s^2
  std::size_t n_rows = 0;
};

// Measurement model output for the accelerometer EKF update.
struct AccelMeasurement {
  Eigen::Vector2d h{0, 0};                       // predicted planar accel, m/s^2
  Eigen::Matrix2d h_pos = Eigen::Matrix2d::Zero();  // d h / d p_j
  Eigen::Matrix2d h_vel = Eigen::Matrix2d::Zero();  // d h / d v_j
};

// Central finite differences (one-sided at the ends) on S(t) = ||r(t)|| and
// xy(t). With S the radial distance, S*S_ddot - v.v + S_dot^2 = r.a holds
// exactly, which is the identity the calibration rows and the accelerometer
// measurement model rely on.
// Throws DegenerateTiming on repeated timestamps; requires >= 5 entries.
ArcKinematics arc_kinematics(const PoseWindow& window);

// Right-hand side scalar m_j = S * d2S/dt2 - v.v + (dS/dt)^2.
double resultant_rhs(const ArcKinematics& k, std::size_t j);

// Stacked least-squares system for [k_x, k_y, beta_x, beta_y]: one resultant
// row and two axis rows per timestamp (3n x 4). The resultant row is scaled
// by 1/||r|| so it carries the same weight as the axis rows.
void build_lsq(const PoseWindow& window, Eigen::MatrixXd& design, Eigen::VectorXd& rhs);

// Truncated-SVD least squares about the prior point (k = 1, beta = 0):
// well-determined directions are solved exactly; directions with singular
// value below 1e-2 of the largest (e.g. the k/beta ambiguity left by
// constant-speed data) keep the prior component. UnobservableCalibration
// when the design matrix has rank <= 2 (relative singular-value cutoff
// 1e-8), as with a straight constant-velocity window.
CalibrationEstimate solve_calibration(const PoseWindow& window);

// Measurement model h = R^-1 M with R = [r_prev^T; r_curr^T] and analytic
// position/velocity partials. Returns nullopt when R is too ill-conditioned
// (condition number above 1e6), signalling the filter to skip the update.
std::optional<AccelMeasurement> accel_measurement(const Eigen::Vector2d& r_prev,
                                                  const Eigen::Vector2d& r_curr,
                                                  const Eigen::Vector2d& v_curr,
                                                  double m_prev, double m_curr);

}  // namespace magarc::cal
