#include "magarc/geo_frame.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "magarc/csv.hpp"
#include "magarc/errors.hpp"

namespace magarc::geo {

namespace {
constexpr double kDegToRad = M_PI / 180.0;
}

std::vector<Eigen::Vector2d> to_local_frame(const std::vector<GeoSample>& samples,
                                            double anchor_lat_deg, double anchor_lon_deg) {
  if (samples.empty()) throw EmptyLog("to_local_frame: empty survey log");
  const double clat = std::cos(anchor_lat_deg * kDegToRad);
  std::vector<Eigen::Vector2d> out;
  out.reserve(samples.size());
  for (const auto& g : samples) {
    if (std::abs(g.lat - anchor_lat_deg) > 1.0 || std::abs(g.lon - anchor_lon_deg) > 1.0)
      throw FrameDistortion("to_local_frame: sample farther than 1 deg from anchor");
    const double x = kEarthRadius * clat * (g.lon - anchor_lon_deg) * kDegToRad;
    const double y = kEarthRadius * (g.lat - anchor_lat_deg) * kDegToRad;
    out.emplace_back(x, y);
  }
  return out;
}

void to_geodetic(const Eigen::Vector2d& xy, double anchor_lat_deg, double anchor_lon_deg,
                 double& lat_deg, double& lon_deg) {
  const double clat = std::cos(anchor_lat_deg * kDegToRad);
  lat_deg = anchor_lat_deg + xy.y() / kEarthRadius / kDegToRad;
  lon_deg = anchor_lon_deg + xy.x() / (kEarthRadius * clat) / kDegToRad;
}

std::vector<double> cumulative_arclength(const std::vector<Eigen::Vector2d>& xy) {
  if (xy.empty()) throw EmptyLog("cumulative_arclength: empty sequence");
  std::vector<double> s(xy.size());
  s[0] = 0.0;
  for (std::size_t i = 1; i < xy.size(); ++i)
    s[i] = s[i - 1] + (xy[i] - xy[i - 1]).norm();
  return s;
}

LocalTrack make_track(const std::vector<GeoSample>& samples) {
  if (samples.empty()) throw EmptyLog("make_track: empty survey log");
  for (std::size_t i = 1; i < samples.size(); ++i)
    if (samples[i].timestamp <= samples[i - 1].timestamp)
      throw TimeRegression("make_track: timestamps not strictly increasing");
  LocalTrack track;
  track.xy = to_local_frame(samples, samples.front().lat, samples.front().lon);
  track.s = cumulative_arclength(track.xy);
  track.timestamp.reserve(samples.size());
  track.mag_magnitude.reserve(samples.size());
  for (const auto& g : samples) {
    track.timestamp.push_back(g.timestamp);
    track.mag_magnitude.push_back(g.mag_xyz.norm());
  }
  return track;
}

std::vector<GeoSample> read_survey_csv(const std::string& path) {
  const auto rows = csv::read_numeric(path, "t,lat,lon,bx,by,bz");
  std::vector<GeoSample> out;
  out.reserve(rows.size());
  for (const auto& r : rows) {
    GeoSample g;
    g.timestamp = r[0];
    g.lat = r[1];
    g.lon = r[2];
    g.mag_xyz = Eigen::Vector3d(r[3], r[4], r[5]);
    if (std::abs(g.lat) > 90.0 || std::abs(g.lon) > 180.0)
      throw ParseError(path + ": lat/lon out of range");
    out.push_back(g);
  }
  return out;
}

void write_survey_csv(const std::string& path, const std::vector<GeoSample>& samples) {
  std::ofstream out(path);
  if (!out) throw ParseError(path + ": cannot open for writing");
  out << "t,lat,lon,bx,by,bz\n";
  char buf[256];
  for (const auto& g : samples) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", g.timestamp, g.lat,
                  g.lon, g.mag_xyz.x(), g.mag_xyz.y(), g.mag_xyz.z());
    out << buf;
  }
}

}  // namespace magarc::geo
