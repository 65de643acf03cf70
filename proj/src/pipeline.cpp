#include "magarc/pipeline.hpp"

#include <cmath>
#include <sstream>

#include "magarc/errors.hpp"
#include "magarc/rng.hpp"

namespace magarc::pipeline {

namespace {

std::vector<Eigen::Vector2d> parse_waypoints(const std::string& text) {
  std::vector<Eigen::Vector2d> out;
  std::stringstream ss(text);
  std::string pair;
  while (std::getline(ss, pair, ';')) {
    const auto comma = pair.find(',');
    if (comma == std::string::npos)
      throw ParseError("scenario waypoints: expected 'x,y' pairs separated by ';'");
    out.emplace_back(std::stod(pair.substr(0, comma)), std::stod(pair.substr(comma + 1)));
  }
  if (out.size() < 2) throw ParseError("scenario waypoints: need at least 2 points");
  return out;
}

}  // namespace

Scenario scenario_from_config(const KeyValueConfig& cfg) {
  Scenario sc;
  sc.route = sim::default_route();
  if (cfg.has("waypoints")) sc.route.waypoints = parse_waypoints(cfg.get_string("waypoints", ""));
  sc.route.speed = cfg.get_double("speed", sc.route.speed);
  sc.route.sample_dt = cfg.get_double("sample_dt", sc.route.sample_dt);
  sc.route.corner_radius = cfg.get_double("corner_radius", sc.route.corner_radius);

  sc.seed = static_cast<std::uint64_t>(cfg.get_long("seed", 1));
  sc.field.base = cfg.get_double("field_base", sc.field.base);
  sc.field.anomaly_count =
      static_cast<std::size_t>(cfg.get_long("anomaly_count", static_cast<long>(sc.field.anomaly_count)));
  sc.field.amp_min = cfg.get_double("anomaly_amp_min", sc.field.amp_min);
  sc.field.amp_max = cfg.get_double("anomaly_amp_max", sc.field.amp_max);
  sc.field.scale_min = cfg.get_double("anomaly_scale_min", sc.field.scale_min);
  sc.field.scale_max = cfg.get_double("anomaly_scale_max", sc.field.scale_max);
  sc.field.lateral_jitter = cfg.get_double("anomaly_lateral_jitter", sc.field.lateral_jitter);
  sc.field.seed = sc.seed;

  sc.imu.seed = sc.seed + 1;
  sc.imu.beta_g = {cfg.get_double("beta_g_x", 0.0), cfg.get_double("beta_g_y", 0.0),
                   cfg.get_double("beta_g_z", 0.0)};
  sc.imu.beta_a = {cfg.get_double("beta_a_x", 0.2), cfg.get_double("beta_a_y", -0.1),
                   cfg.get_double("beta_a_z", 0.0)};
  sc.imu.k_g = {cfg.get_double("k_g_x", 0.0), cfg.get_double("k_g_y", 0.0),
                cfg.get_double("k_g_z", 0.0)};
  sc.imu.k_a = {cfg.get_double("k_a_x", 1.05), cfg.get_double("k_a_y", 0.95),
                cfg.get_double("k_a_z", 1.0)};
  sc.imu.noise.sigma_gv = cfg.get_double("sigma_gv", 2e-4);
  sc.imu.noise.sigma_gu = cfg.get_double("sigma_gu", 0.0);
  sc.imu.noise.sigma_av = cfg.get_double("sigma_av", 0.01);
  sc.imu.noise.sigma_au = cfg.get_double("sigma_au", 0.0);

  sc.anchor_lat = cfg.get_double("anchor_lat", sc.anchor_lat);
  sc.anchor_lon = cfg.get_double("anchor_lon", sc.anchor_lon);
  sc.mag_noise_sigma = cfg.get_double("mag_noise_sigma", sc.mag_noise_sigma);
  sc.map_h = cfg.get_double("map_h", sc.map_h);
  sc.gravity_free = cfg.get_bool("gravity_free", sc.gravity_free);
  sc.magstream_from_map = cfg.get_bool("magstream_from_map", sc.magstream_from_map);
  return sc;
}

SimOutputs run_simulation(const Scenario& scenario) {
  SimOutputs out;
  out.truth = sim::gen_trajectory(scenario.route);
  out.field = sim::gen_field(out.truth, scenario.field);
  const auto field_values = sim::field_along(out.field, out.truth.xy);

  out.survey.reserve(out.truth.t.size());
  for (std::size_t i = 0; i < out.truth.t.size(); ++i) {
    geo::GeoSample g;
    g.timestamp = out.truth.t[i];
    geo::to_geodetic(out.truth.xy[i], scenario.anchor_lat, scenario.anchor_lon, g.lat, g.lon);
    g.mag_xyz = Eigen::Vector3d(0.0, 0.0, field_values[i]);
    out.survey.push_back(g);
  }

  out.imu = sim::synth_imu(out.truth, scenario.imu, scenario.gravity_free);

  std::vector<double> stream_values;
  if (scenario.magstream_from_map) {
    // Replays the fitted map values, mirroring the reference experiment's
    // simulated-noise setup.
    const auto track_map =
        glomap::build_map(out.truth.s, field_values, scenario.map_h, "mag", "uT");
    stream_values.reserve(out.truth.s.size());
    for (double s : out.truth.s)
      stream_values.push_back(glomap::eval_map(track_map, s));
  } else {
    stream_values = field_values;
  }
  stream_values = sim::add_mag_noise(stream_values, scenario.mag_noise_sigma, scenario.seed + 2);
  out.mag_stream.reserve(stream_values.size());
  for (std::size_t i = 0; i < stream_values.size(); ++i)
    out.mag_stream.push_back({out.truth.t[i], stream_values[i]});
  return out;
}

Maps build_maps(const geo::LocalTrack& track, double h) {
  Maps maps;
  maps.mag = glomap::build_map(track.s, track.mag_magnitude, h, "mag", "uT");
  std::vector<double> xs, ys;
  xs.reserve(track.xy.size());
  ys.reserve(track.xy.size());
  for (const auto& p : track.xy) {
    xs.push_back(p.x());
    ys.push_back(p.y());
  }
  maps.x = glomap::build_map(track.s, xs, h, "x", "m");
  maps.y = glomap::build_map(track.s, ys, h, "y", "m");
  return maps;
}

ekf::FilterConfig filter_config_from(const KeyValueConfig& cfg) {
  ekf::FilterConfig fc;
  fc.noise.sigma_gv = cfg.get_double("sigma_gv", 2e-4);
  fc.noise.sigma_gu = cfg.get_double("sigma_gu", 1e-6);
  // Filter-side noise is deliberately inflated relative to the sensor truth so
  // the covariance stays honest about unmodeled errors (matching, calibration).
  fc.noise.sigma_av = cfg.get_double("sigma_av", 0.1);
  fc.noise.sigma_au = cfg.get_double("sigma_au", 1e-3);
  const double r_mag = cfg.get_double("r_mag", 0.5);
  const double r_acc = cfg.get_double("r_acc", 0.25);
  fc.R_mag = Eigen::Matrix2d::Identity() * r_mag;
  fc.R_acc = Eigen::Matrix2d::Identity() * r_acc;
  fc.cadence_imu = cfg.get_double("cadence_imu", 0.1);
  fc.cadence_mag = cfg.get_double("cadence_mag", 3.0);
  fc.cadence_acc = cfg.get_double("cadence_acc", 6.0);
  fc.batch_samples = static_cast<std::size_t>(cfg.get_long("batch_samples", 30));
  fc.scan_stride = cfg.get_double("scan_stride", 0.5);
  fc.match_threshold_per_sample = cfg.get_double("match_threshold_per_sample", 0.3);
  fc.gate_radius_floor = cfg.get_double("gate_radius_floor", 10.0);
  fc.cal_window = static_cast<std::size_t>(cfg.get_long("cal_window", 60));
  fc.cal_min_poses = static_cast<std::size_t>(cfg.get_long("cal_min_poses", 8));
  fc.cal_residual_max = cfg.get_double("cal_residual_max", 0.2);
  fc.gravity_comp = cfg.get_bool("gravity_comp", true);
  fc.joseph_update = cfg.get_bool("joseph_update", false);
  fc.innovation_gate = cfg.get_bool("innovation_gate", true);
  return fc;
}

ekf::FilterState initial_state(const sim::Trajectory& truth, const KeyValueConfig& cfg,
                               std::uint64_t seed) {
  if (truth.t.empty()) throw EmptyLog("initial_state: empty truth trajectory");
  const double sig_pos = cfg.get_double("init_sigma_pos", 0.5);
  const double sig_vel = cfg.get_double("init_sigma_vel", 0.2);
  const double sig_yaw = cfg.get_double("init_sigma_yaw", 0.01);
  const double sig_ba = cfg.get_double("init_sigma_beta_a", 0.3);
  const double sig_ka = cfg.get_double("init_sigma_k_a", 0.05);
  const double sig_bg = cfg.get_double("init_sigma_beta_g", 1e-5);
  const double sig_kg = cfg.get_double("init_sigma_k_g", 1e-5);

  Rng rng(seed ^ 0x9e3779b97f4a7c15ull);
  ekf::FilterState fs;
  fs.t = truth.t.front();
  fs.nav.q = kin::quat_from_yaw(truth.heading.front() + rng.normal(0.0, sig_yaw));
  fs.nav.p = Eigen::Vector3d(truth.xy.front().x() + rng.normal(0.0, sig_pos),
                             truth.xy.front().y() + rng.normal(0.0, sig_pos), 0.0);
  fs.nav.v = Eigen::Vector3d(truth.v.front().x() + rng.normal(0.0, sig_vel),
                             truth.v.front().y() + rng.normal(0.0, sig_vel), 0.0);
  fs.nav.beta_g.setZero();
  fs.nav.beta_a.setZero();
  fs.nav.k_g.setZero();
  fs.nav.k_a.setOnes();

  fs.P.setZero();
  for (int i = 0; i < 3; ++i) {
    fs.P(kin::iAtt + i, kin::iAtt + i) = sig_yaw * sig_yaw;
    fs.P(kin::iPos + i, kin::iPos + i) = sig_pos * sig_pos;
    fs.P(kin::iVel + i, kin::iVel + i) = sig_vel * sig_vel;
    fs.P(kin::iBg + i, kin::iBg + i) = sig_bg * sig_bg;
    fs.P(kin::iBa + i, kin::iBa + i) = sig_ba * sig_ba;
    fs.P(kin::iKg + i, kin::iKg + i) = sig_kg * sig_kg;
    fs.P(kin::iKa + i, kin::iKa + i) = sig_ka * sig_ka;
  }
  return fs;
}

ekf::TruthTrack truth_track(const sim::Trajectory& truth) {
  ekf::TruthTrack tt;
  tt.t = truth.t;
  tt.xy = truth.xy;
  return tt;
}

}  // namespace magarc::pipeline
