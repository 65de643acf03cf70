#include "magarc/ekf.hpp"
#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <fstream>
#include <cstdlib>

#include "magarc/csv.hpp"
#include "magarc/errors.hpp"

namespace magarc::ekf {

namespace {

using Mat2x21 = Eigen::Matrix<double, 2, kin::kErrDim>;

void apply_correction(FilterState& fs, const kin::Vec21& dx) {
  fs.nav.q = kin::inject_attitude(fs.nav.q, dx.segment<3>(kin::iAtt));
  fs.nav.p += dx.segment<3>(kin::iPos);
  fs.nav.v += dx.segment<3>(kin::iVel);
  fs.nav.beta_g += dx.segment<3>(kin::iBg);
  fs.nav.beta_a += dx.segment<3>(kin::iBa);
  fs.nav.k_g += dx.segment<3>(kin::iKg);
  fs.nav.k_a += dx.segment<3>(kin::iKa);
}

void finalize_covariance(FilterState& fs) {
  fs.P = 0.5 * (fs.P + fs.P.transpose()).eval();
  for (int i = 0; i < kin::kErrDim; ++i)
    if (fs.P(i, i) < 0.0)
      throw InvariantFailure("covariance diagonal went negative at index " + std::to_string(i));
}

void measurement_update(FilterState& fs, const Mat2x21& h_mat, const Eigen::Vector2d& innovation,
                        const Eigen::Matrix2d& r_meas, const FilterConfig& cfg) {
  const Eigen::Matrix2d s_mat = h_mat * fs.P * h_mat.transpose() + r_meas;
  const Eigen::Matrix<double, kin::kErrDim, 2> k_gain =
      fs.P * h_mat.transpose() * s_mat.inverse();
  apply_correction(fs, k_gain * innovation);
  const kin::Mat21 ikh = kin::Mat21::Identity() - k_gain * h_mat;
  if (cfg.joseph_update)
    fs.P = ikh * fs.P * ikh.transpose() + k_gain * r_meas * k_gain.transpose();
  else
    fs.P = ikh * fs.P;
  finalize_covariance(fs);
}

double trace_ppos(const FilterState& fs) {
  return fs.P(kin::iPos, kin::iPos) + fs.P(kin::iPos + 1, kin::iPos + 1);
}

}  // namespace

Eigen::Matrix<double, 12, 12> process_noise(const kin::NoiseParams& noise, double dt) {
  Eigen::Matrix<double, 12, 12> q = Eigen::Matrix<double, 12, 12>::Zero();
  const double s[4] = {noise.sigma_gv, noise.sigma_gu, noise.sigma_av, noise.sigma_au};
  for (int b = 0; b < 4; ++b)
    for (int i = 0; i < 3; ++i) q(3 * b + i, 3 * b + i) = s[b] * s[b] / dt;
  return q;
}

FilterState time_update(const FilterState& fs, const kin::ImuSample& sample,
                        const FilterConfig& cfg) {
  const double dt = sample.timestamp - fs.t;
  if (dt <= 0.0) throw TimeRegression("time_update: sample timestamp not after filter time");
  FilterState out;
  out.t = sample.timestamp;
  out.nav = kin::propagate(fs.nav, sample, dt, cfg.gravity_comp);
  const kin::Mat21 f = kin::transition_matrix(fs.nav, sample, dt);
  const kin::Mat21x12 g = kin::noise_matrix(fs.nav, dt);
  out.P = f * fs.P * f.transpose() + g * process_noise(cfg.noise, dt) * g.transpose();
  finalize_covariance(out);
  return out;
}

bool mag_update(FilterState& fs, const match::MatchCandidate& candidate,
                const FilterConfig& cfg) {
  Mat2x21 h_mat = Mat2x21::Zero();
  h_mat(0, kin::iPos) = 1.0;
  h_mat(1, kin::iPos + 1) = 1.0;
  const Eigen::Vector2d innovation = candidate.xy - fs.nav.p.head<2>();
  if (cfg.innovation_gate) {
    const Eigen::Matrix2d s_mat = h_mat * fs.P * h_mat.transpose() + cfg.R_mag;
    const double mahal = innovation.dot(s_mat.inverse() * innovation);
    if (mahal > cfg.chi2_gate) return false;
  }
  measurement_update(fs, h_mat, innovation, cfg.R_mag, cfg);
  return true;
}

void accel_update(FilterState& fs, const Eigen::Vector2d& z, const Eigen::Vector2d& h,
                  const cal::AccelMeasurement& model, const FilterConfig& cfg) {
  Mat2x21 h_mat = Mat2x21::Zero();
  h_mat.block<2, 2>(0, kin::iPos) = model.h_pos;
  h_mat.block<2, 2>(0, kin::iVel) = model.h_vel;
  measurement_update(fs, h_mat, z - h, cfg.R_acc, cfg);
}

RunReport run_filter(FilterState fs, const std::vector<kin::ImuSample>& imu,
                     const std::vector<MagSample>& mag, const glomap::ScalarArcMap& mag_map,
                     const glomap::ScalarArcMap& x_map, const glomap::ScalarArcMap& y_map,
                     const FilterConfig& cfg, const TruthTrack* truth) {
  RunReport report;
  if (imu.empty()) return report;
  if (!mag.empty()) {
    const double batch_span =
        static_cast<double>(cfg.batch_samples - 1) * cfg.scan_stride;  // coarse lower bound
    if (mag_map.s_max - mag_map.s_min < batch_span)
      throw Error("run_filter: magnitude map range shorter than one matching batch");
  }

  std::deque<MagSample> mag_buffer;
  std::size_t mag_idx = 0;
  double last_mag_t = fs.t;
  double last_acc_t = fs.t;
  std::deque<double> pose_t;
  std::deque<Eigen::Vector2d> pose_xy;
  std::deque<double> pose_yaw;
  // Raw body-frame planar readings at IMU rate; the calibration column is a
  // moving average of these so it lives on the same timescale as the
  // finite-differenced pose accelerations.
  std::deque<std::pair<double, Eigen::Vector2d>> accel_hist;
  // Triangle-weighted average over +/- half_width.  The central second
  // difference (p(t+h) - 2 p(t) + p(t-h)) / h^2 equals exactly the
  // triangle-weighted mean of acceleration over [t-h, t+h], so using the same
  // kernel on the readings keeps the regression slope unbiased.
  auto accel_avg = [&](double t_center, double half_width) {
    Eigen::Vector2d sum = Eigen::Vector2d::Zero();
    double wsum = 0.0;
    for (const auto& [ta, aa] : accel_hist) {
      const double w = 1.0 - std::abs(ta - t_center) / half_width;
      if (w <= 0.0) continue;
      sum += w * aa;
      wsum += w;
    }
    return wsum > 0.0 ? Eigen::Vector2d(sum / wsum) : sum;
  };

  auto truth_at = [&](double t, Eigen::Vector2d& out) {
    if (!truth || truth->t.empty()) return false;
    const auto it = std::lower_bound(truth->t.begin(), truth->t.end(), t - 1e-9);
    if (it == truth->t.end()) return false;
    const auto idx = static_cast<std::size_t>(it - truth->t.begin());
    if (std::abs(truth->t[idx] - t) > 0.5 * cfg.cadence_imu) return false;
    out = truth->xy[idx];
    return true;
  };

  auto emit_row = [&](const std::string& event) {
    ReportRow row;
    row.t = fs.t;
    row.xy = fs.nav.p.head<2>();
    row.has_truth = truth_at(fs.t, row.xy_true);
    row.trace_ppos = trace_ppos(fs);
    row.event = event;
    report.rows.push_back(row);
  };

  double dev_sum = 0.0;
  std::size_t dev_count = 0;
  cal::CalibrationEstimate latest_cal;  // identity until the first solve
  bool have_cal = false;

  for (const auto& sample : imu) {
    if (sample.timestamp <= fs.t) continue;
    fs = time_update(fs, sample, cfg);
    emit_row("predict");
    {
      // Body-frame planar readings; raw vs calibration-corrected.
      AccelLogRow ar;
      ar.t = fs.t;
      ar.raw = sample.accel_meas.head<2>();
      ar.corrected = latest_cal.k_bar.cwiseProduct(ar.raw) - latest_cal.beta_bar;
      ar.calibrated = have_cal;
      report.accel_log.push_back(ar);
    }
    accel_hist.emplace_back(fs.t, sample.accel_meas.head<2>());
    while (!accel_hist.empty() &&
           accel_hist.front().first <
               fs.t - (static_cast<double>(cfg.cal_window) + 2.0) * cfg.cadence_mag)
      accel_hist.pop_front();
    {
      Eigen::Vector2d xt;
      if (truth_at(fs.t, xt)) {
        const double d = (fs.nav.p.head<2>() - xt).norm();
        dev_sum += d;
        report.max_deviation = std::max(report.max_deviation, d);
        ++dev_count;
      }
    }

    while (mag_idx < mag.size() && mag[mag_idx].t <= fs.t + 1e-9)
      mag_buffer.push_back(mag[mag_idx++]);
    while (mag_buffer.size() > cfg.batch_samples) mag_buffer.pop_front();

    // Magnetic measurement update.
    if (fs.t - last_mag_t >= cfg.cadence_mag - 1e-9 && mag_buffer.size() >= cfg.batch_samples &&
        mag_buffer.size() >= 2) {
      last_mag_t = fs.t;
      const double period = (mag_buffer.back().t - mag_buffer.front().t) /
                            static_cast<double>(mag_buffer.size() - 1);
      match::MagBatch batch;
      batch.t_end = mag_buffer.back().t;
      batch.ds = std::max(fs.nav.v.head<2>().norm(), 0.5) * period;
      batch.values.reserve(mag_buffer.size());
      for (const auto& m : mag_buffer) batch.values.push_back(m.value);

      const double threshold =
          cfg.match_threshold_per_sample * std::sqrt(static_cast<double>(batch.values.size()));
      const auto candidates =
          match::scan_candidates(batch, mag_map, x_map, y_map, cfg.scan_stride, threshold);
      const Eigen::Vector2d predicted = fs.nav.p.head<2>();
      const double gate = std::max(cfg.gate_radius_floor, 3.0 * std::sqrt(trace_ppos(fs)));
      const auto gated = match::gate_candidates(candidates, predicted, gate);
      const auto best = match::select_best(gated, predicted);
      if (std::getenv("MAGARC_DEBUG")) {
        Eigen::Vector2d xt;
        const bool ht = truth_at(fs.t, xt);
        std::fprintf(stderr,
                     "scan t=%.1f pos_err=%.2f ncand=%zu ngated=%zu gate=%.1f best_err=%.3f "
                     "best_s=%.1f thr=%.3f\n",
                     fs.t, ht ? (predicted - xt).norm() : -1.0, candidates.size(), gated.size(),
                     gate, best ? best->error : -1.0, best ? best->s_end : -1.0, threshold);
        std::fprintf(stderr,
                     "  v=(%.2f,%.2f) ba=(%.3f,%.3f) ka=(%.3f,%.3f) sig_v=%.3f sig_ba=%.3f "
                     "sig_ka=%.4f yaw=%.4f\n",
                     fs.nav.v.x(), fs.nav.v.y(), fs.nav.beta_a.x(), fs.nav.beta_a.y(),
                     fs.nav.k_a.x(), fs.nav.k_a.y(), std::sqrt(fs.P(kin::iVel, kin::iVel)),
                     std::sqrt(fs.P(kin::iBa, kin::iBa)), std::sqrt(fs.P(kin::iKa, kin::iKa)),
                     kin::yaw_from_quat(fs.nav.q));
      }

      for (const auto& c : candidates) {
        CandidateLogRow lr;
        lr.t = fs.t;
        lr.s_end = c.s_end;
        lr.error = c.error;
        lr.xy = c.xy;
        lr.accepted = best && std::abs(best->s_end - c.s_end) < 1e-12;
        report.candidates.push_back(lr);
      }

      if (best) {
        if (mag_update(fs, *best, cfg)) {
          ++report.mag_updates;
          emit_row("mag_update");
          // Matched pose feeds the calibration window together with the raw
          // body-frame accelerometer reading and the current yaw estimate.
          pose_t.push_back(fs.t);
          pose_xy.push_back(best->xy);
          pose_yaw.push_back(kin::yaw_from_quat(fs.nav.q));
          while (pose_t.size() > cfg.cal_window) {
            pose_t.pop_front();
            pose_xy.pop_front();
            pose_yaw.pop_front();
          }
        } else {
          ++report.mag_rejects;
          emit_row("mag_reject");
        }
      }
    }

    // Accelerometer measurement update.
    if (fs.t - last_acc_t >= cfg.cadence_acc - 1e-9) {
      last_acc_t = fs.t;
      if (pose_t.size() >= std::max<std::size_t>(cfg.cal_min_poses, 5)) {
        cal::PoseWindow window;
        window.timestamps.assign(pose_t.begin(), pose_t.end());
        window.xy.assign(pose_xy.begin(), pose_xy.end());
        window.yaw.assign(pose_yaw.begin(), pose_yaw.end());
        window.accel_meas_xy.resize(window.timestamps.size());
        for (std::size_t j = 0; j < window.timestamps.size(); ++j)
          window.accel_meas_xy[j] =
              accel_avg(window.timestamps[j], cfg.cadence_mag);

        CalibrationLogRow cl;
        cl.t = fs.t;
        try {
          const auto est = cal::solve_calibration(window);
          cl.estimate = est;
          // Poorly excited windows can pass the rank gate yet return wild
          // parameters; only physically plausible estimates are used.
          const bool plausible = est.k_bar.minCoeff() > 0.5 && est.k_bar.maxCoeff() < 1.5 &&
                                 est.beta_bar.cwiseAbs().maxCoeff() < 1.0 &&
                                 est.residual_rms < cfg.cal_residual_max;
          if (!plausible) {
            ++report.acc_skips;
            cl.status = "implausible";
            emit_row("acc_skip");
          } else {
            latest_cal = est;
            have_cal = true;
            const auto kinm = cal::arc_kinematics(window);
            const std::size_t j = window.timestamps.size() - 1;
            const auto model = cal::accel_measurement(
                window.xy[j - 1], fs.nav.p.head<2>(), fs.nav.v.head<2>(),
                cal::resultant_rhs(kinm, j - 1), cal::resultant_rhs(kinm, j));
            if (model) {
              // Calibrated body-frame reading rotated into the local frame.
              const double yaw = kin::yaw_from_quat(fs.nav.q);
              const Eigen::Vector2d a_cal =
                  est.k_bar.cwiseProduct(sample.accel_meas.head<2>()) - est.beta_bar;
              const Eigen::Vector2d z(std::cos(yaw) * a_cal.x() - std::sin(yaw) * a_cal.y(),
                                      std::sin(yaw) * a_cal.x() + std::cos(yaw) * a_cal.y());
              if (std::getenv("MAGARC_DEBUG"))
                std::fprintf(stderr,
                             "acc t=%.1f z=(%.3f,%.3f) h=(%.3f,%.3f) |Hp|=%.3g |Hv|=%.3g "
                             "kbar=(%.3f,%.3f) bbar=(%.3f,%.3f)\n",
                             fs.t, z.x(), z.y(), model->h.x(), model->h.y(), model->h_pos.norm(),
                             model->h_vel.norm(), est.k_bar.x(), est.k_bar.y(), est.beta_bar.x(),
                             est.beta_bar.y());
              accel_update(fs, z, model->h, *model, cfg);
              ++report.acc_updates;
              cl.status = "ok";
              emit_row("acc_update");
            } else {
              ++report.acc_skips;
              cl.status = "skip";
              emit_row("acc_skip");
            }
          }
        } catch (const UnobservableCalibration&) {
          ++report.acc_skips;
          cl.status = "unobservable";
          emit_row("acc_skip");
        }
        report.calibrations.push_back(cl);
      }
    }
  }

  report.mean_deviation = dev_count ? dev_sum / static_cast<double>(dev_count) : 0.0;
  return report;
}

void write_report_csv(const std::string& path, const RunReport& report) {
  std::ofstream out(path);
  if (!out) throw ParseError(path + ": cannot open for writing");
  out << "t,x,y,x_true,y_true,trace_Ppos,event\n";
  char buf[256];
  for (const auto& r : report.rows) {
    std::snprintf(buf, sizeof(buf), "%.6f,%.9g,%.9g,%.9g,%.9g,%.12g,", r.t, r.xy.x(), r.xy.y(),
                  r.has_truth ? r.xy_true.x() : std::nan(""),
                  r.has_truth ? r.xy_true.y() : std::nan(""), r.trace_ppos);
    out << buf << r.event << "\n";
  }
}

RunReport read_report_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open");
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path + ":1: empty report");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "t,x,y,x_true,y_true,trace_Ppos,event")
    throw ParseError(path + ":1: bad report header");
  RunReport report;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = csv::split(line);
    if (fields.size() != 7) throw ParseError(path + ":" + std::to_string(lineno) + ": bad row");
    ReportRow r;
    r.t = csv::to_double(fields[0], path, lineno);
    r.xy = {csv::to_double(fields[1], path, lineno), csv::to_double(fields[2], path, lineno)};
    const double xt = std::strtod(fields[3].c_str(), nullptr);
    const double yt = std::strtod(fields[4].c_str(), nullptr);
    r.has_truth = !std::isnan(xt) && !std::isnan(yt);
    if (r.has_truth) r.xy_true = {xt, yt};
    r.trace_ppos = csv::to_double(fields[5], path, lineno);
    r.event = fields[6];
    report.rows.push_back(r);
    if (r.event == "mag_update") ++report.mag_updates;
    if (r.event == "mag_reject") ++report.mag_rejects;
    if (r.event == "acc_update") ++report.acc_updates;
    if (r.event == "acc_skip") ++report.acc_skips;
  }
  return report;
}

std::vector<MagSample> read_mag_csv(const std::string& path) {
  const auto rows = csv::read_numeric(path, "t,mag");
  std::vector<MagSample> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back({r[0], r[1]});
  return out;
}

void write_mag_csv(const std::string& path, const std::vector<MagSample>& samples) {
  std::ofstream out(path);
  if (!out) throw ParseError(path + ": cannot open for writing");
  out << "t,mag\n";
  char buf[128];
  for (const auto& s : samples) {
    std::snprintf(buf, sizeof(buf), "%.6f,%.17g\n", s.t, s.value);
    out << buf;
  }
}

}  // namespace magarc::ekf
