#include "magarc/mag_match.hpp"

#include <algorithm>
#include <cmath>

#include "magarc/errors.hpp"
#include "magarc/golden.hpp"

namespace magarc::match {

double match_error(const MagBatch& batch, const glomap::ScalarArcMap& mag_map, double s_end) {
  if (batch.values.size() < 2) throw DomainError("match_error: batch shorter than 2 samples");
  if (batch.ds <= 0.0) throw DomainError("match_error: non-positive sample spacing");
  const auto n = batch.values.size();
  const double s_start = s_end - static_cast<double>(n - 1) * batch.ds;
  const auto map_vals = glomap::eval_map_batch(mag_map, s_start, batch.ds, n);
  double sq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = batch.values[i] - map_vals[i];
    sq += r * r;
  }
  return std::sqrt(sq);
}

std::vector<double> scan_errors_serial(const MagBatch& batch, const glomap::ScalarArcMap& mag_map,
                                       double s_first, double stride, std::size_t n_grid) {
  std::vector<double> errors(n_grid);
  for (std::size_t i = 0; i < n_grid; ++i)
    errors[i] = match_error(batch, mag_map, s_first + static_cast<double>(i) * stride);
  return errors;
}

std::vector<double> scan_errors_parallel(const MagBatch& batch, const glomap::ScalarArcMap& mag_map,
                                         double s_first, double stride, std::size_t n_grid) {
  std::vector<double> errors(n_grid);
  // Each grid point is independent; results are written to disjoint slots,
  // so the output does not depend on the thread count.
#pragma omp parallel for schedule(static)
  for (long i = 0; i < static_cast<long>(n_grid); ++i)
    errors[i] = match_error(batch, mag_map, s_first + static_cast<double>(i) * stride);
  return errors;
}

std::vector<MatchCandidate> scan_candidates(const MagBatch& batch,
                                            const glomap::ScalarArcMap& mag_map,
                                            const glomap::ScalarArcMap& x_map,
                                            const glomap::ScalarArcMap& y_map,
                                            double stride, double threshold) {
  if (stride <= 0.0) throw DomainError("scan_candidates: stride must be positive");
  const double span = static_cast<double>(batch.values.size() - 1) * batch.ds;
  const double s_first = mag_map.s_min + span;
  if (s_first > mag_map.s_max) return {};
  const auto n_grid = static_cast<std::size_t>((mag_map.s_max - s_first) / stride) + 1;
  const auto errors = scan_errors_parallel(batch, mag_map, s_first, stride, n_grid);

  std::vector<MatchCandidate> out;
  for (std::size_t i = 0; i < n_grid; ++i) {
    if (errors[i] >= threshold) continue;
    const bool left_ok = (i == 0) || errors[i] <= errors[i - 1];
    const bool right_ok = (i + 1 == n_grid) || errors[i] < errors[i + 1];
    if (!left_ok || !right_ok) continue;

    const double lo = std::max(s_first, s_first + static_cast<double>(i) * stride - stride);
    const double hi = std::min(mag_map.s_max, s_first + static_cast<double>(i) * stride + stride);
    const double s_ref = golden_section_minimize(
        [&](double s) { return match_error(batch, mag_map, s); }, lo, hi, stride * 1e-4);

    MatchCandidate c;
    c.s_end = s_ref;
    c.error = match_error(batch, mag_map, s_ref);
    c.xy = {glomap::eval_map(x_map, s_ref), glomap::eval_map(y_map, s_ref)};
    if (c.error < threshold) out.push_back(c);
  }
  return out;
}

std::vector<MatchCandidate> gate_candidates(const std::vector<MatchCandidate>& candidates,
                                            const Eigen::Vector2d& predicted_xy,
                                            double gate_radius) {
  if (gate_radius <= 0.0) throw DomainError("gate_candidates: gate radius must be positive");
  std::vector<MatchCandidate> out;
  for (const auto& c : candidates)
    if ((c.xy - predicted_xy).norm() <= gate_radius) out.push_back(c);
  return out;
}

std::optional<MatchCandidate> select_best(const std::vector<MatchCandidate>& gated,
                                          const Eigen::Vector2d& predicted_xy) {
  if (gated.empty()) return std::nullopt;
  const MatchCandidate* best = &gated.front();
  for (const auto& c : gated) {
    if (c.error < best->error - 1e-9) {
      best = &c;
    } else if (std::abs(c.error - best->error) < 1e-9 &&
               (c.xy - predicted_xy).norm() < (best->xy - predicted_xy).norm()) {
      best = &c;
    }
  }
  return *best;
}

}  // namespace magarc::match
