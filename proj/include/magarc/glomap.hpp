#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

namespace magarc::glomap {

// One third-degree Legendre fit over a window [s_start, s_start + s_span],
// with the abscissa rescaled to [-1, 1] on that window.
struct LocalFit {
  double s_start = 0.0;   // meters
  double s_span = 0.0;    // meters, = 2h
  Eigen::Vector4d coeffs = Eigen::Vector4d::Zero();  // P0..P3 coefficients

  double eval(double s) const;
};

// Global function map: overlapping local fits stepping by h and blended with
// the partition-of-unity weight, covering [s_min, s_max].
struct ScalarArcMap {
  double h = 0.0;       // segment length, meters
  double s_min = 0.0;   // meters
  double s_max = 0.0;   // meters
  std::vector<LocalFit> fits;  // ordered by s_start, spaced exactly h apart
  std::string value_label;
  std::string value_units;
};

// Blending weight on [-1, 1]; W(0) = 1, W(+-1) = 0, and
// W(u) + W(u - 1) = 1 for u in [0, 1]. Throws DomainError outside [-1, 1].
double weight(double s);

// Least-squares degree-3 Legendre fit of (s, value) points over
// [s0, s0 + span]. Requires >= 4 distinct abscissae (RankDeficient otherwise).
LocalFit fit_local(const std::vector<double>& s, const std::vector<double>& value,
                   double s0, double span);

// Builds the global map with windows [s_min + k*h, s_min + (k+2)*h].
// Throws TrackTooShort if the data spans less than 2h.
ScalarArcMap build_map(const std::vector<double>& s, const std::vector<double>& value,
                       double h, const std::string& label = "value",
                       const std::string& units = "");

// Blended evaluation; OutOfMapRange outside [s_min, s_max].
double eval_map(const ScalarArcMap& map, double s);

// n evaluations at s_start, s_start + spacing, ...
std::vector<double> eval_map_batch(const ScalarArcMap& map, double s_start, double spacing,
                                   std::size_t n);

// Plain-text map file, round-trips bit-exact.
void save_map(const ScalarArcMap& map, const std::string& path);
ScalarArcMap load_map(const std::string& path);

}  // namespace magarc::glomap
