#include "magarc/accel_cal.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "magarc/errors.hpp"

namespace magarc::cal {

namespace {

// Three-point derivative weights on a possibly non-uniform grid.
void diff_weights(double h1, double h2, Eigen::Vector3d& d1, Eigen::Vector3d& d2) {
  d1 << -h2 / (h1 * (h1 + h2)), (h2 - h1) / (h1 * h2), h1 / (h2 * (h1 + h2));
  d2 << 2.0 / (h1 * (h1 + h2)), -2.0 / (h1 * h2), 2.0 / (h2 * (h1 + h2));
}

template <typename Get>
void differentiate(const std::vector<double>& t, Get get, std::vector<double>& d1,
                   std::vector<double>& d2) {
  const std::size_t n = t.size();
  d1.resize(n);
  d2.resize(n);
  Eigen::Vector3d w1, w2;
  for (std::size_t i = 0; i < n; ++i) {
    // Interior points use the centered stencil; endpoints reuse the stencil
    // anchored at the adjacent interior point.
    const std::size_t c = std::min(std::max<std::size_t>(i, 1), n - 2);
    diff_weights(t[c] - t[c - 1], t[c + 1] - t[c], w1, w2);
    const double f0 = get(c - 1), f1 = get(c), f2 = get(c + 1);
    d2[i] = w2(0) * f0 + w2(1) * f1 + w2(2) * f2;
    const double slope_c = w1(0) * f0 + w1(1) * f1 + w1(2) * f2;
    // Shift the first derivative to t[i] using the (constant) curvature of
    // the local quadratic.
    d1[i] = slope_c + d2[i] * (t[i] - t[c]);
  }
}

}  // namespace

ArcKinematics arc_kinematics(const PoseWindow& window) {
  const std::size_t n = window.timestamps.size();
  if (n < 5 || window.xy.size() != n)
    throw DomainError("arc_kinematics: window needs at least 5 consistent entries");
  for (std::size_t i = 1; i < n; ++i)
    if (window.timestamps[i] <= window.timestamps[i - 1])
      throw DegenerateTiming("arc_kinematics: timestamps not strictly increasing");

  // S is the radial distance sqrt(r^T r); that choice makes the resultant
  // relation S*S_ddot - v.v + S_dot^2 = r.a an exact identity for any motion,
  // not just radially aligned tracks.
  ArcKinematics out;
  out.s.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.s[i] = window.xy[i].norm();

  differentiate(window.timestamps, [&](std::size_t i) { return out.s[i]; }, out.s_dot,
                out.s_ddot);

  std::vector<double> vx, vy, dummy;
  differentiate(window.timestamps, [&](std::size_t i) { return window.xy[i].x(); }, vx, dummy);
  differentiate(window.timestamps, [&](std::size_t i) { return window.xy[i].y(); }, vy, dummy);
  out.v.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.v[i] = Eigen::Vector2d(vx[i], vy[i]);
  return out;
}

double resultant_rhs(const ArcKinematics& k, std::size_t j) {
  return k.s[j] * k.s_ddot[j] - k.v[j].squaredNorm() + k.s_dot[j] * k.s_dot[j];
}

void build_lsq(const PoseWindow& window, Eigen::MatrixXd& design, Eigen::VectorXd& rhs) {
  const auto kin = arc_kinematics(window);
  const auto n = static_cast<Eigen::Index>(window.timestamps.size());
  if (window.accel_meas_xy.size() != static_cast<std::size_t>(n) ||
      window.yaw.size() != static_cast<std::size_t>(n))
    throw DomainError("build_lsq: accelerometer/yaw column size mismatch");

  std::vector<double> ax_fd, ay_fd, d1x, d1y;
  differentiate(window.timestamps, [&](std::size_t i) { return window.xy[i].x(); }, d1x, ax_fd);
  differentiate(window.timestamps, [&](std::size_t i) { return window.xy[i].y(); }, d1y, ay_fd);

  // With local-frame acceleration a = C(psi)^T (k . a_tilde - beta) and
  // body-frame position r_b = C(psi) r:
  //   resultant: r . a = r_b . (k . a_tilde - beta) = m  (scaled by 1/||r||)
  //   axis x:    c(k_x a_x - b_x) - s(k_y a_y - b_y) = x_dd
  //   axis y:    s(k_x a_x - b_x) + c(k_y a_y - b_y) = y_dd
  design.resize(3 * n, 4);
  rhs.resize(3 * n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const Eigen::Vector2d& r = window.xy[j];
    const Eigen::Vector2d& a = window.accel_meas_xy[j];
    const double c = std::cos(window.yaw[j]);
    const double s = std::sin(window.yaw[j]);
    const Eigen::Vector2d rb(c * r.x() + s * r.y(), -s * r.x() + c * r.y());
    const double scale = 1.0 / std::max(r.norm(), 1.0);
    design.row(j) << scale * rb.x() * a.x(), scale * rb.y() * a.y(), -scale * rb.x(),
        -scale * rb.y();
    rhs(j) = scale * resultant_rhs(kin, j);
    design.row(n + j) << c * a.x(), -s * a.y(), -c, s;
    rhs(n + j) = ax_fd[j];
    design.row(2 * n + j) << s * a.x(), c * a.y(), -s, -c;
    rhs(2 * n + j) = ay_fd[j];
  }
}

CalibrationEstimate solve_calibration(const PoseWindow& window) {
  Eigen::MatrixXd design;
  Eigen::VectorXd rhs;
  build_lsq(window, design, rhs);

  // On constant-speed data the tangential channel only pins the combination
  // k*a_tilde - beta, leaving a one-dimensional (k, beta) ambiguity; rank 3
  // is therefore expected and resolved below with a weak unit-scale prior.
  // Rank <= 2 means genuinely unobservable parameters (e.g. a straight
  // constant-velocity window).
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(design, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  if (sv(0) <= 0.0 || sv(2) < 1e-8 * sv(0)) {
    // Name the parameter directions lost in the null space.
    static const char* names[4] = {"k_x", "k_y", "beta_x", "beta_y"};
    std::string msg = "solve_calibration: rank-deficient system; unobservable directions:";
    for (int col = 2; col < 4; ++col) {
      const Eigen::Vector4d null_dir = svd.matrixV().col(col);
      for (int i = 0; i < 4; ++i)
        if (std::abs(null_dir(i)) > 0.3) msg += std::string(" ") + names[i];
    }
    throw UnobservableCalibration(msg);
  }

  // Truncated-SVD solve about the prior point (k = 1, beta = 0): directions
  // the data determines well are solved exactly, with no regularization bias;
  // weak directions -- e.g. the k/beta ambiguity left by near-constant-speed
  // windows, whose singular value is set by noise alone -- keep the prior
  // component instead of amplifying that noise.
  constexpr double kWeakRatio = 1e-2;
  const auto n_data = design.rows();
  const Eigen::Vector4d x_prior(1.0, 1.0, 0.0, 0.0);
  Eigen::JacobiSVD<Eigen::MatrixXd> full(design, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd residual_prior = rhs - design * x_prior;
  Eigen::Vector4d x = x_prior;
  for (int i = 0; i < 4; ++i) {
    if (full.singularValues()(i) < kWeakRatio * full.singularValues()(0)) continue;
    x += full.matrixV().col(i) *
         (full.matrixU().col(i).dot(residual_prior) / full.singularValues()(i));
  }
  CalibrationEstimate est;
  est.k_bar = x.head<2>();
  est.beta_bar = x.tail<2>();
  est.n_rows = static_cast<std::size_t>(n_data);
  est.residual_rms = (design * x - rhs).norm() / std::sqrt(static_cast<double>(n_data));
  return est;
}

std::optional<AccelMeasurement> accel_measurement(const Eigen::Vector2d& r_prev,
                                                  const Eigen::Vector2d& r_curr,
                                                  const Eigen::Vector2d& v_curr,
                                                  double m_prev, double m_curr) {
  Eigen::Matrix2d r_mat;
  r_mat.row(0) = r_prev.transpose();
  r_mat.row(1) = r_curr.transpose();
  Eigen::JacobiSVD<Eigen::Matrix2d> svd(r_mat, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const double smax = svd.singularValues()(0);
  const double smin = svd.singularValues()(1);
  if (smax <= 0.0 || smin < 1e-6 * smax) return std::nullopt;  // SkipAccelUpdate

  const Eigen::Matrix2d r_inv = r_mat.inverse();
  const Eigen::Vector2d m_vec(m_prev, m_curr);
  AccelMeasurement out;
  out.h = r_inv * m_vec;

  const double s = r_curr.norm();
  if (s < 1e-9) return std::nullopt;
  const double s_dot = r_curr.dot(v_curr) / s;
  // S_ddot is pose-derived data, held fixed in the partials; recover it from
  // the supplied m_curr so the model is self-consistent.
  const double s_ddot = (m_curr + v_curr.squaredNorm() - s_dot * s_dot) / s;

  const Eigen::RowVector2d dS_dp = r_curr.transpose() / s;
  const Eigen::RowVector2d dSdot_dp =
      v_curr.transpose() / s - s_dot * r_curr.transpose() / (s * s);
  const Eigen::RowVector2d dm_dp = s_ddot * dS_dp + 2.0 * s_dot * dSdot_dp;
  const Eigen::RowVector2d dm_dv =
      -2.0 * v_curr.transpose() + 2.0 * s_dot * r_curr.transpose() / s;

  // dh/dp = -R^-1 (dR/dp) h + R^-1 dM/dp; only R's second row depends on p.
  const Eigen::Vector2d rinv_e2 = r_inv.col(1);
  out.h_pos = rinv_e2 * (dm_dp - out.h.transpose());
  out.h_vel = rinv_e2 * dm_dv;
  return out;
}

}  // namespace magarc::cal
