// magarc: simulate drives, build arc-length field maps, and localize.
#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "magarc/config.hpp"
#include "magarc/csv.hpp"
#include "magarc/ekf.hpp"
#include "magarc/errors.hpp"
#include "magarc/geo_frame.hpp"
#include "magarc/glomap.hpp"
#include "magarc/kinematics.hpp"
#include "magarc/pipeline.hpp"

namespace fs = std::filesystem;
using namespace magarc;

namespace {

constexpr const char* kVersion = "magarc 1.0.0";

constexpr int kExitOk = 0;
constexpr int kExitInputError = 2;
constexpr int kExitConstraint = 3;
constexpr int kExitInternal = 4;

void write_manifest(const fs::path& out_dir, const std::string& command,
                    const std::vector<std::string>& inputs, const std::string& config_path,
                    long seed) {
  std::ofstream out(out_dir / "manifest.txt");
  out << "command = " << command << "\n";
  out << "version = " << kVersion << "\n";
  out << "seed = " << seed << "\n";
  out << "config = " << (config_path.empty() ? "<defaults>" : config_path) << "\n";
  for (const auto& in : inputs) out << "input = " << in << "\n";
}

KeyValueConfig load_config(const std::string& path) {
  if (path.empty()) return {};
  return KeyValueConfig::from_file(path);
}

void write_truth_csv(const std::string& path, const sim::Trajectory& truth) {
  std::ofstream out(path);
  if (!out) throw ParseError(path + ": cannot open for writing");
  out << "t,x,y,s,heading,vx,vy,ax,ay\n";
  char buf[512];
  for (std::size_t i = 0; i < truth.t.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.6f,%.9f,%.9f,%.9f,%.9f,%.9f,%.9f,%.9f,%.9f\n", truth.t[i],
                  truth.xy[i].x(), truth.xy[i].y(), truth.s[i], truth.heading[i], truth.v[i].x(),
                  truth.v[i].y(), truth.a[i].x(), truth.a[i].y());
    out << buf;
  }
}

int cmd_simulate(const std::string& scenario_path, const std::string& out_dir_s, long seed_flag) {
  KeyValueConfig cfg = load_config(scenario_path);
  if (seed_flag >= 0) cfg.set("seed", std::to_string(seed_flag));
  const auto scenario = pipeline::scenario_from_config(cfg);
  const auto sim_out = pipeline::run_simulation(scenario);

  const fs::path out_dir(out_dir_s);
  fs::create_directories(out_dir);
  geo::write_survey_csv((out_dir / "survey.csv").string(), sim_out.survey);
  kin::write_imu_csv((out_dir / "imu.csv").string(), sim_out.imu);
  write_truth_csv((out_dir / "truth.csv").string(), sim_out.truth);
  ekf::write_mag_csv((out_dir / "mag.csv").string(), sim_out.mag_stream);
  write_manifest(out_dir, "simulate", {}, scenario_path, static_cast<long>(scenario.seed));

  std::printf("simulate: %zu samples, route length %.1f m, %zu field anomalies\n",
              sim_out.truth.t.size(), sim_out.truth.s.back(), sim_out.field.bumps.size());
  return kExitOk;
}

int cmd_map_build(const std::string& survey_path, double h, const std::string& out_dir_s) {
  const auto survey = geo::read_survey_csv(survey_path);
  const auto track = geo::make_track(survey);
  const auto maps = pipeline::build_maps(track, h);

  const fs::path out_dir(out_dir_s);
  fs::create_directories(out_dir);
  glomap::save_map(maps.mag, (out_dir / "map_mag.csv").string());
  glomap::save_map(maps.x, (out_dir / "map_x.csv").string());
  glomap::save_map(maps.y, (out_dir / "map_y.csv").string());
  write_manifest(out_dir, "map-build", {survey_path}, "", 0);

  auto fit_rms = [&](const glomap::ScalarArcMap& map, auto value_at) {
    double sq = 0.0;
    for (std::size_t i = 0; i < track.s.size(); ++i) {
      const double r = glomap::eval_map(map, track.s[i]) - value_at(i);
      sq += r * r;
    }
    return std::sqrt(sq / static_cast<double>(track.s.size()));
  };
  std::printf("map-build: h=%.3g m, %zu fits per map\n", h, maps.mag.fits.size());
  std::printf("  magnitude RMS %.4g uT\n", fit_rms(maps.mag, [&](std::size_t i) {
                return track.mag_magnitude[i];
              }));
  std::printf("  x RMS %.4g m\n", fit_rms(maps.x, [&](std::size_t i) { return track.xy[i].x(); }));
  std::printf("  y RMS %.4g m\n", fit_rms(maps.y, [&](std::size_t i) { return track.xy[i].y(); }));
  return kExitOk;
}

ekf::TruthTrack read_truth_csv(const std::string& path) {
  const auto rows = csv::read_numeric(path, "t,x,y,s,heading,vx,vy,ax,ay");
  ekf::TruthTrack out;
  for (const auto& r : rows) {
    out.t.push_back(r[0]);
    out.xy.emplace_back(r[1], r[2]);
  }
  return out;
}

int cmd_localize(const std::string& map_mag, const std::string& map_x, const std::string& map_y,
                 const std::string& imu_path, const std::string& mag_path,
                 const std::string& truth_path, const std::string& config_path,
                 const std::string& out_dir_s, long seed_flag) {
  const auto cfg = load_config(config_path);
  const auto fc = pipeline::filter_config_from(cfg);
  const auto m_mag = glomap::load_map(map_mag);
  const auto m_x = glomap::load_map(map_x);
  const auto m_y = glomap::load_map(map_y);
  const auto imu = kin::read_imu_csv(imu_path);
  if (imu.empty()) throw ParseError(imu_path + ": empty IMU log");

  std::vector<ekf::MagSample> mag;
  if (!mag_path.empty()) {
    mag = ekf::read_mag_csv(mag_path);
  } else {
    std::fprintf(stderr, "warning: no magnetic stream supplied; dead reckoning only\n");
  }

  ekf::TruthTrack truth;
  ekf::FilterState init;
  const long seed = seed_flag >= 0 ? seed_flag : cfg.get_long("seed", 1);
  if (!truth_path.empty()) {
    truth = read_truth_csv(truth_path);
    sim::Trajectory pseudo;
    pseudo.t = truth.t;
    pseudo.xy = truth.xy;
    // Initial heading and speed from the first truth step.
    pseudo.heading.push_back(std::atan2(truth.xy[1].y() - truth.xy[0].y(),
                                        truth.xy[1].x() - truth.xy[0].x()));
    const double dt0 = truth.t[1] - truth.t[0];
    pseudo.v.emplace_back((truth.xy[1] - truth.xy[0]) / dt0);
    init = pipeline::initial_state(pseudo, cfg, static_cast<std::uint64_t>(seed));
  } else {
    init.t = imu.front().timestamp - fc.cadence_imu;
    init.nav.p = Eigen::Vector3d(cfg.get_double("init_x", 0.0), cfg.get_double("init_y", 0.0), 0.0);
    init.nav.q = kin::quat_from_yaw(cfg.get_double("init_yaw", 0.0));
    const double speed = cfg.get_double("init_speed", 0.0);
    const double yaw = cfg.get_double("init_yaw", 0.0);
    init.nav.v = Eigen::Vector3d(speed * std::cos(yaw), speed * std::sin(yaw), 0.0);
  }

  const auto report = ekf::run_filter(init, imu, mag, m_mag, m_x, m_y, fc,
                                      truth.t.empty() ? nullptr : &truth);

  const fs::path out_dir(out_dir_s);
  fs::create_directories(out_dir);
  ekf::write_report_csv((out_dir / "report.csv").string(), report);
  {
    std::ofstream out(out_dir / "candidates.csv");
    out << "t,s_end,error,x,y,accepted\n";
    char buf[256];
    for (const auto& c : report.candidates) {
      std::snprintf(buf, sizeof(buf), "%.6f,%.6f,%.9g,%.6f,%.6f,%d\n", c.t, c.s_end, c.error,
                    c.xy.x(), c.xy.y(), c.accepted ? 1 : 0);
      out << buf;
    }
  }
  {
    std::ofstream out(out_dir / "calibration.csv");
    out << "t,kx,ky,bx,by,residual_rms,n_rows,status\n";
    char buf[256];
    for (const auto& c : report.calibrations) {
      std::snprintf(buf, sizeof(buf), "%.6f,%.9g,%.9g,%.9g,%.9g,%.9g,%zu,", c.t,
                    c.estimate.k_bar.x(), c.estimate.k_bar.y(), c.estimate.beta_bar.x(),
                    c.estimate.beta_bar.y(), c.estimate.residual_rms, c.estimate.n_rows);
      out << buf << c.status << "\n";
    }
  }
  {
    std::ofstream out(out_dir / "accel.csv");
    out << "t,ax_raw,ay_raw,ax_corr,ay_corr,calibrated\n";
    char buf[256];
    for (const auto& a : report.accel_log) {
      std::snprintf(buf, sizeof(buf), "%.6f,%.9g,%.9g,%.9g,%.9g,%d\n", a.t, a.raw.x(), a.raw.y(),
                    a.corrected.x(), a.corrected.y(), a.calibrated ? 1 : 0);
      out << buf;
    }
  }
  write_manifest(out_dir, "localize", {map_mag, map_x, map_y, imu_path, mag_path, truth_path},
                 config_path, seed);

  std::printf("localize: %zu steps, %zu mag updates, %zu rejects, %zu acc updates, %zu skips\n",
              report.accel_log.size(), report.mag_updates, report.mag_rejects, report.acc_updates,
              report.acc_skips);
  if (!truth.t.empty())
    std::printf("  deviation vs truth: mean %.3f m, max %.3f m\n", report.mean_deviation,
                report.max_deviation);
  return kExitOk;
}

int cmd_plotdata(const std::string& report_path, const std::string& accel_path,
                 const std::string& out_dir_s) {
  const auto report = ekf::read_report_csv(report_path);
  const fs::path out_dir(out_dir_s);
  fs::create_directories(out_dir);

  {
    std::ofstream out(out_dir / "plot_trajectory.csv");
    out << "t,x,y,x_true,y_true\n";
    char buf[256];
    for (const auto& r : report.rows) {
      if (r.event != "predict" && r.event != "mag_update") continue;
      std::snprintf(buf, sizeof(buf), "%.6f,%.9g,%.9g,%.9g,%.9g\n", r.t, r.xy.x(), r.xy.y(),
                    r.has_truth ? r.xy_true.x() : std::nan(""),
                    r.has_truth ? r.xy_true.y() : std::nan(""));
      out << buf;
    }
  }
  {
    std::ofstream out(out_dir / "plot_covariance.csv");
    out << "t,trace_Ppos,event\n";
    char buf[256];
    for (const auto& r : report.rows) {
      std::snprintf(buf, sizeof(buf), "%.6f,%.12g,", r.t, r.trace_ppos);
      out << buf << r.event << "\n";
    }
  }
  {
    std::ofstream out(out_dir / "plot_acceleration.csv");
    out << "t,ax_raw,ay_raw,ax_corr,ay_corr\n";
    if (!accel_path.empty()) {
      const auto rows = csv::read_numeric(accel_path, "t,ax_raw,ay_raw,ax_corr,ay_corr,calibrated");
      char buf[256];
      for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%.6f,%.9g,%.9g,%.9g,%.9g\n", r[0], r[1], r[2], r[3], r[4]);
        out << buf;
      }
    }
  }
  std::printf("plot-data: wrote 3 plot CSVs to %s\n", out_dir_s.c_str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Magnetic-field arc-length mapping and localization toolkit"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  std::string scenario_path, out_dir = "out", config_path;
  long seed = -1;
  double h = 10.0;

  auto* sim_cmd = app.add_subcommand("simulate", "Generate survey, IMU, truth, and mag-stream CSVs");
  sim_cmd->add_option("--config", scenario_path, "Scenario key=value file");
  sim_cmd->add_option("--out", out_dir, "Output directory");
  sim_cmd->add_option("--seed", seed, "Override scenario seed");

  std::string survey_path;
  auto* map_cmd = app.add_subcommand("map-build", "Fit the three arc-length maps from a survey");
  map_cmd->add_option("--survey", survey_path, "Survey CSV (t,lat,lon,bx,by,bz)")->required();
  map_cmd->add_option("--window", h, "Segment length h in meters");
  map_cmd->add_option("--out", out_dir, "Output directory");

  std::string map_mag, map_x, map_y, imu_path, mag_path, truth_path;
  auto* loc_cmd = app.add_subcommand("localize", "Run the three-stage filter over drive logs");
  loc_cmd->add_option("--map-mag", map_mag, "Magnitude map file")->required();
  loc_cmd->add_option("--map-x", map_x, "X-position map file")->required();
  loc_cmd->add_option("--map-y", map_y, "Y-position map file")->required();
  loc_cmd->add_option("--imu", imu_path, "IMU CSV")->required();
  loc_cmd->add_option("--mag", mag_path, "Magnetic stream CSV (t,mag)");
  loc_cmd->add_option("--truth", truth_path, "Truth CSV for deviation reporting");
  loc_cmd->add_option("--config", config_path, "Run config key=value file");
  loc_cmd->add_option("--out", out_dir, "Output directory");
  loc_cmd->add_option("--seed", seed, "Seed for the initial-state perturbation");

  std::string report_path, accel_path;
  auto* plot_cmd = app.add_subcommand("plot-data", "Emit plot-ready CSVs from a run report");
  plot_cmd->add_option("--report", report_path, "Run report CSV")->required();
  plot_cmd->add_option("--accel", accel_path, "Acceleration log CSV");
  plot_cmd->add_option("--out", out_dir, "Output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim_cmd->parsed()) return cmd_simulate(scenario_path, out_dir, seed);
    if (map_cmd->parsed()) return cmd_map_build(survey_path, h, out_dir);
    if (loc_cmd->parsed())
      return cmd_localize(map_mag, map_x, map_y, imu_path, mag_path, truth_path, config_path,
                          out_dir, seed);
    if (plot_cmd->parsed()) return cmd_plotdata(report_path, accel_path, out_dir);
  } catch (const ParseError& e) {
    std::fprintf(stderr, "input error: %s\n", e.what());
    return kExitInputError;
  } catch (const EmptyLog& e) {
    std::fprintf(stderr, "input error: %s\n", e.what());
    return kExitInputError;
  } catch (const MapFormatError& e) {
    std::fprintf(stderr, "input error: %s\n", e.what());
    return kExitInputError;
  } catch (const TrackTooShort& e) {
    std::fprintf(stderr, "constraint violation: %s\n", e.what());
    return kExitConstraint;
  } catch (const GeometryError& e) {
    std::fprintf(stderr, "constraint violation: %s\n", e.what());
    return kExitConstraint;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitInternal;
  }
  return kExitOk;
}
