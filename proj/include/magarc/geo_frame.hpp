#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

namespace magarc::geo {

inline constexpr double kEarthRadius = 6371000.0;  // meters

// One geo-referenced survey sample: GPS fix plus a 3-axis magnetometer reading.
struct GeoSample {
  double timestamp = 0.0;          // seconds
  double lat = 0.0;                // degrees
  double lon = 0.0;                // degrees
  Eigen::Vector3d mag_xyz{0, 0, 0};  // microtesla
};

// A survey converted to the local planar frame with cumulative arc length.
struct LocalTrack {
  std::vector<double> timestamp;          // seconds
  std::vector<Eigen::Vector2d> xy;        // meters
  std::vector<double> s;                  // meters, s[0] = 0, non-decreasing
  std::vector<double> mag_magnitude;      // microtesla
};

// Equirectangular projection about the anchor: x east, y north.
// Throws EmptyLog on empty input, FrameDistortion if any sample lies more
// than 1 degree from the anchor.
std::vector<Eigen::Vector2d> to_local_frame(const std::vector<GeoSample>& samples,
                                            double anchor_lat_deg, double anchor_lon_deg);

// Inverse of to_local_frame for one point.
void to_geodetic(const Eigen::Vector2d& xy, double anchor_lat_deg, double anchor_lon_deg,
                 double& lat_deg, double& lon_deg);

// s[0] = 0; s[n] = s[n-1] + ||xy[n] - xy[n-1]||.
std::vector<double> cumulative_arclength(const std::vector<Eigen::Vector2d>& xy);

// Full survey ingestion: project about the first sample (or explicit anchor)
// and attach arc length and field magnitude.
LocalTrack make_track(const std::vector<GeoSample>& samples);

// Survey CSV with header `t,lat,lon,bx,by,bz`.
std::vector<GeoSample> read_survey_csv(const std::string& path);
void write_survey_csv(const std::string& path, const std::vector<GeoSample>& samples);

}  // namespace magarc::geo
