#pragma once

#include <Eigen/Core>
#include <optional>
#include <vector>

#include "magarc/glomap.hpp"

namespace magarc::match {

// A time-ordered window of magnetometer magnitudes with assumed uniform
// arc-length spacing between consecutive samples.
struct MagBatch {
  std::vector<double> values;  // microtesla, length >= 2
  double ds = 0.0;             // meters between samples
  double t_end = 0.0;          // seconds, timestamp of the trailing sample
};

// One arc-length hypothesis from the map scan.
struct MatchCandidate {
  double s_end = 0.0;   // meters, trailing-sample arc length
  double error = 0.0;   // microtesla, Euclidean residual norm
  Eigen::Vector2d xy{0, 0};  // map-implied position at s_end
};

// Euclidean norm of the residual between the batch and the magnitude map
// at n uniformly spaced abscissae ending at s_end.
double match_error(const MagBatch& batch, const glomap::ScalarArcMap& mag_map, double s_end);

// Grid of match errors with s_end = first valid .. map end stepping by
// stride. Parallel and serial variants produce identical results; the
// serial one is the test reference.
std::vector<double> scan_errors_serial(const MagBatch& batch, const glomap::ScalarArcMap& mag_map,
                                       double s_first, double stride, std::size_t n_grid);
std::vector<double> scan_errors_parallel(const MagBatch& batch, const glomap::ScalarArcMap& mag_map,
                                         double s_first, double stride, std::size_t n_grid);

// All sub-threshold local minima of the error grid, each refined by
// golden-section search within +- stride, with map-implied positions from
// the x and y maps.
std::vector<MatchCandidate> scan_candidates(const MagBatch& batch,
                                            const glomap::ScalarArcMap& mag_map,
                                            const glomap::ScalarArcMap& x_map,
                                            const glomap::ScalarArcMap& y_map,
                                            double stride, double threshold);

// Keeps candidates within gate_radius of the predicted position.
std::vector<MatchCandidate> gate_candidates(const std::vector<MatchCandidate>& candidates,
                                            const Eigen::Vector2d& predicted_xy,
                                            double gate_radius);

// Minimum-error candidate; ties (|d_error| < 1e-9) broken by distance to
// the predicted position.
std::optional<MatchCandidate> select_best(const std::vector<MatchCandidate>& gated,
                                          const Eigen::Vector2d& predicted_xy);

}  // namespace magarc::match
