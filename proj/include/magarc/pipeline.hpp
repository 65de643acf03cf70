#pragma once

#include <cstdint>
#include <string>

#include "magarc/config.hpp"
#include "magarc/ekf.hpp"
#include "magarc/geo_frame.hpp"
#include "magarc/glomap.hpp"
#include "magarc/sim.hpp"

namespace magarc::pipeline {

// Everything needed to re-create one simulated drive.
struct Scenario {
  sim::RouteSpec route;
  sim::FieldSpec field;
  sim::ImuTruth imu;
  double anchor_lat = 30.6;    // degrees
  double anchor_lon = -96.3;
  double mag_noise_sigma = 0.1;  // microtesla, on the localization stream
  double map_h = 10.0;           // meters
  bool gravity_free = false;
  bool magstream_from_map = false;  // true replays fitted map points instead
  std::uint64_t seed = 1;
};

struct SimOutputs {
  sim::Trajectory truth;
  sim::MagneticField field;
  std::vector<geo::GeoSample> survey;
  std::vector<kin::ImuSample> imu;
  std::vector<ekf::MagSample> mag_stream;
};

struct Maps {
  glomap::ScalarArcMap mag;
  glomap::ScalarArcMap x;
  glomap::ScalarArcMap y;
};

// Scenario keys are plain `key = value`; missing keys fall back to the
// reference-experiment defaults (3 km loop, 30 km/h, 0.1 s sampling).
Scenario scenario_from_config(const KeyValueConfig& cfg);

SimOutputs run_simulation(const Scenario& scenario);

Maps build_maps(const geo::LocalTrack& track, double h);

ekf::FilterConfig filter_config_from(const KeyValueConfig& cfg);

// Truth pose plus a seeded perturbation drawn from the initial covariance.
ekf::FilterState initial_state(const sim::Trajectory& truth, const KeyValueConfig& cfg,
                               std::uint64_t seed);

ekf::TruthTrack truth_track(const sim::Trajectory& truth);

}  // namespace magarc::pipeline
