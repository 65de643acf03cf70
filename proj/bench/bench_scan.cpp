// Benchmarks the magnitude-map grid scan: serial reference vs OpenMP kernel.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <vector>

#include "magarc/glomap.hpp"
#include "magarc/mag_match.hpp"

namespace glomap = magarc::glomap;
namespace match = magarc::match;

namespace {

double time_ms(const std::vector<double>& samples) {
  double best = samples.front();
  for (double s : samples) best = std::min(best, s);
  return best;
}

}  // namespace

int main() {
  // Non-repeating synthetic field over a long track.
  const double length = 20000.0;
  const double ds = 0.5;
  std::vector<double> s, value;
  for (double x = 0.0; x <= length; x += ds) {
    s.push_back(x);
    value.push_back(45.0 + 2.0 * std::sin(0.011 * x) + 1.2 * std::sin(0.0047 * x + 1.0) +
                    0.8 * std::sin(0.0013 * x + 2.0));
  }
  const auto map = glomap::build_map(s, value, 10.0, "mag", "uT");

  match::MagBatch batch;
  batch.ds = 0.8;
  for (int i = 0; i < 30; ++i)
    batch.values.push_back(glomap::eval_map(map, 12000.0 + batch.ds * i));

  const double span = static_cast<double>(batch.values.size() - 1) * batch.ds;
  const double s_first = map.s_min + span;
  const double stride = 0.5;
  const auto n_grid = static_cast<std::size_t>((map.s_max - s_first) / stride) + 1;

  std::printf("grid scan: %zu hypotheses x %zu samples\n", n_grid, batch.values.size());

  constexpr int kReps = 10;
  std::vector<double> serial_ms, parallel_ms;
  std::vector<double> ref, par;
  for (int r = 0; r < kReps; ++r) {
    auto t0 = std::chrono::steady_clock::now();
    ref = match::scan_errors_serial(batch, map, s_first, stride, n_grid);
    auto t1 = std::chrono::steady_clock::now();
    par = match::scan_errors_parallel(batch, map, s_first, stride, n_grid);
    auto t2 = std::chrono::steady_clock::now();
    serial_ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
    parallel_ms.push_back(std::chrono::duration<double, std::milli>(t2 - t1).count());
  }

  double max_diff = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) max_diff = std::max(max_diff, std::abs(ref[i] - par[i]));

  const double ts = time_ms(serial_ms);
  const double tp = time_ms(parallel_ms);
  std::printf("serial:   %8.2f ms (best of %d)\n", ts, kReps);
  std::printf("parallel: %8.2f ms (best of %d)\n", tp, kReps);
  std::printf("speedup:  %8.2fx\n", ts / tp);
  std::printf("max |serial - parallel| = %.3g\n", max_diff);
  return max_diff == 0.0 ? 0 : 1;
}
