#pragma once

#include <Eigen/Core>
#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "magarc/accel_cal.hpp"
#include "magarc/glomap.hpp"
#include "magarc/kinematics.hpp"
#include "magarc/mag_match.hpp"

namespace magarc::ekf {

struct FilterState {
  kin::NavState nav;
  kin::Mat21 P = kin::Mat21::Identity();
  double t = 0.0;
};

struct FilterConfig {
  kin::NoiseParams noise;                    // builds the 12x12 process noise
  Eigen::Matrix2d R_mag = Eigen::Matrix2d::Identity() * 0.5;    // m^2
  Eigen::Matrix2d R_acc = Eigen::Matrix2d::Identity() * 0.25;   // (m/s^2)^2
  double cadence_imu = 0.1;   // seconds
  double cadence_mag = 3.0;
  double cadence_acc = 6.0;

  // Matching parameters.
  std::size_t batch_samples = 30;
  double scan_stride = 0.5;           // meters
  double match_threshold_per_sample = 0.3;   // microtesla, scaled by sqrt(n)
  double gate_radius_floor = 10.0;    // meters

  // Calibration parameters.
  std::size_t cal_window = 60;        // matched poses
  std::size_t cal_min_poses = 8;
  double cal_residual_max = 0.2;     // m/s^2; reject poorly fitting solves

  bool gravity_comp = true;
  bool joseph_update = false;
  bool innovation_gate = true;        // chi-square(2, 0.999) gate
  double chi2_gate = 13.8155;
};

// One report row per processed IMU step.
struct ReportRow {
  double t = 0.0;
  Eigen::Vector2d xy{0, 0};
  Eigen::Vector2d xy_true{0, 0};
  bool has_truth = false;
  double trace_ppos = 0.0;
  std::string event;  // predict | mag_update | mag_reject | acc_update | acc_skip
};

struct CandidateLogRow {
  double t = 0.0;
  double s_end = 0.0;
  double error = 0.0;
  Eigen::Vector2d xy{0, 0};
  bool accepted = false;
};

struct CalibrationLogRow {
  double t = 0.0;
  cal::CalibrationEstimate estimate;
  std::string status;  // ok | unobservable | skip
};

// Raw vs calibration-corrected local-frame planar acceleration per step.
struct AccelLogRow {
  double t = 0.0;
  Eigen::Vector2d raw{0, 0};
  Eigen::Vector2d corrected{0, 0};
  bool calibrated = false;  // false until the first calibration estimate
};

struct RunReport {
  std::vector<ReportRow> rows;
  std::vector<CandidateLogRow> candidates;
  std::vector<CalibrationLogRow> calibrations;
  std::vector<AccelLogRow> accel_log;
  std::size_t mag_updates = 0;
  std::size_t mag_rejects = 0;
  std::size_t acc_updates = 0;
  std::size_t acc_skips = 0;
  double mean_deviation = 0.0;  // vs truth, when available
  double max_deviation = 0.0;
};

struct MagSample {
  double t = 0.0;
  double value = 0.0;  // microtesla magnitude
};

Eigen::Matrix<double, 12, 12> process_noise(const kin::NoiseParams& noise, double dt);

// Propagation step: nav propagate + P <- F P F^T + G Q G^T (symmetrized).
FilterState time_update(const FilterState& fs, const kin::ImuSample& sample,
                        const FilterConfig& cfg);

// Planar position update from a matched candidate. Returns false (state
// untouched) when the innovation fails the chi-square gate.
bool mag_update(FilterState& fs, const match::MatchCandidate& candidate,
                const FilterConfig& cfg);

// Accelerometer update with the pose/velocity measurement matrix.
void accel_update(FilterState& fs, const Eigen::Vector2d& z, const Eigen::Vector2d& h,
                  const cal::AccelMeasurement& model, const FilterConfig& cfg);

// Ground truth for report deviation columns, matched by timestamp index.
struct TruthTrack {
  std::vector<double> t;
  std::vector<Eigen::Vector2d> xy;
};

// Full three-stage loop over the logs.
RunReport run_filter(FilterState fs, const std::vector<kin::ImuSample>& imu,
                     const std::vector<MagSample>& mag, const glomap::ScalarArcMap& mag_map,
                     const glomap::ScalarArcMap& x_map, const glomap::ScalarArcMap& y_map,
                     const FilterConfig& cfg, const TruthTrack* truth = nullptr);

void write_report_csv(const std::string& path, const RunReport& report);
RunReport read_report_csv(const std::string& path);

std::vector<MagSample> read_mag_csv(const std::string& path);
void write_mag_csv(const std::string& path, const std::vector<MagSample>& samples);

}  // namespace magarc::ekf
