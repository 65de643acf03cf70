#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "magarc/glomap.hpp"
#include "magarc/mag_match.hpp"
#include "magarc/rng.hpp"

using namespace magarc;

namespace {

// A wiggly but non-repeating synthetic field along 1 km of arc length.
double signal(double s) {
  return 45.0 + 2.0 * std::sin(0.05 * s) + 1.2 * std::sin(0.013 * s + 0.7) +
         0.8 * std::cos(0.031 * s + 2.1);
}

glomap::ScalarArcMap make_signal_map() {
  std::vector<double> s, v;
  for (int i = 0; i <= 4000; ++i) {
    s.push_back(0.25 * i);
    v.push_back(signal(s.back()));
  }
  return glomap::build_map(s, v, 10.0);
}

match::MagBatch batch_at(const glomap::ScalarArcMap& map, double s_end, std::size_t n, double ds) {
  match::MagBatch b;
  b.ds = ds;
  for (std::size_t i = 0; i < n; ++i) {
    const double s = s_end - ds * static_cast<double>(n - 1 - i);
    b.values.push_back(glomap::eval_map(map, s));
  }
  return b;
}

}  // namespace

TEST_CASE("match error is zero at the generating location") {
  const auto map = make_signal_map();
  const double s_true = 431.7;
  const auto b = batch_at(map, s_true, 30, 0.8);
  CHECK(match::match_error(b, map, s_true) < 1e-12);
  // And clearly nonzero a few meters away.
  CHECK(match::match_error(b, map, s_true + 5.0) > 0.1);
}

TEST_CASE("serial and parallel scans are identical") {
  const auto map = make_signal_map();
  const auto b = batch_at(map, 700.0, 30, 0.8);
  const double s_first = b.ds * 29.0;
  const std::size_t n_grid = 1500;
  const auto serial = match::scan_errors_serial(b, map, s_first, 0.5, n_grid);
  const auto parallel = match::scan_errors_parallel(b, map, s_first, 0.5, n_grid);
  REQUIRE(serial.size() == parallel.size());
  for (std::size_t i = 0; i < serial.size(); ++i) CHECK(serial[i] == parallel[i]);
}

TEST_CASE("refined candidates agree with a dense brute-force scan") {
  const auto map = make_signal_map();
  Rng rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    const double s_true = rng.uniform(50.0, 950.0);
    const auto b = batch_at(map, s_true, 30, 0.8);

    const auto cands = match::scan_candidates(b, map, map, map, 0.5, 0.05 * std::sqrt(30.0));
    REQUIRE(!cands.empty());
    double best_refined = cands[0].s_end, best_err = cands[0].error;
    for (const auto& c : cands)
      if (c.error < best_err) {
        best_err = c.error;
        best_refined = c.s_end;
      }

    // Brute force on a 0.01 m grid.
    const double span_lo = b.ds * 29.0;
    double brute_s = span_lo, brute_e = match::match_error(b, map, span_lo);
    for (double s = span_lo; s <= map.s_max; s += 0.01) {
      const double e = match::match_error(b, map, s);
      if (e < brute_e) {
        brute_e = e;
        brute_s = s;
      }
    }
    CHECK(std::abs(best_refined - brute_s) < 0.05);
    CHECK(std::abs(best_refined - s_true) < 0.05);
  }
}

TEST_CASE("candidates carry map-implied positions") {
  const auto map = make_signal_map();
  // Position maps: a straight east track, x = s, y = 2.
  std::vector<double> s, xs, ys;
  for (int i = 0; i <= 4000; ++i) {
    s.push_back(0.25 * i);
    xs.push_back(s.back());
    ys.push_back(2.0);
  }
  const auto x_map = glomap::build_map(s, xs, 10.0);
  const auto y_map = glomap::build_map(s, ys, 10.0);

  const double s_true = 500.0;
  const auto b = batch_at(map, s_true, 30, 0.8);
  const auto cands = match::scan_candidates(b, map, x_map, y_map, 0.5, 0.05 * std::sqrt(30.0));
  REQUIRE(!cands.empty());
  const auto best = match::select_best(cands, Eigen::Vector2d(s_true, 2.0));
  REQUIRE(best.has_value());
  CHECK(best->xy.x() == doctest::Approx(s_true).epsilon(1e-3));
  CHECK(best->xy.y() == doctest::Approx(2.0).epsilon(1e-3));
}

TEST_CASE("gating keeps only nearby candidates") {
  std::vector<match::MatchCandidate> cands;
  for (int i = 0; i < 10; ++i) {
    match::MatchCandidate c;
    c.s_end = 10.0 * i;
    c.error = 0.01 * i;
    c.xy = Eigen::Vector2d(10.0 * i, 0.0);
    cands.push_back(c);
  }
  const Eigen::Vector2d predicted(42.0, 0.0);
  const auto gated = match::gate_candidates(cands, predicted, 15.0);
  REQUIRE(gated.size() == 3);  // 30, 40, 50 m
  for (const auto& c : gated) CHECK((c.xy - predicted).norm() <= 15.0);

  CHECK(match::gate_candidates(cands, predicted, 1e9).size() == cands.size());
  CHECK(match::gate_candidates(cands, Eigen::Vector2d(1e6, 0), 5.0).empty());
}

TEST_CASE("select_best prefers the lowest error and breaks ties by distance") {
  std::vector<match::MatchCandidate> cands(2);
  cands[0].s_end = 100.0;
  cands[0].error = 0.5;
  cands[0].xy = Eigen::Vector2d(100.0, 0.0);
  cands[1].s_end = 300.0;
  cands[1].error = 0.2;
  cands[1].xy = Eigen::Vector2d(300.0, 0.0);
  const auto best = match::select_best(cands, Eigen::Vector2d(100.0, 0.0));
  REQUIRE(best.has_value());
  CHECK(best->s_end == 300.0);  // lower error wins even though farther

  // Exact tie: the closer candidate wins.
  cands[1].error = 0.5;
  const auto tied = match::select_best(cands, Eigen::Vector2d(120.0, 0.0));
  REQUIRE(tied.has_value());
  CHECK(tied->s_end == 100.0);

  CHECK(!match::select_best({}, Eigen::Vector2d::Zero()).has_value());
}

TEST_CASE("a repeating field is disambiguated by gating") {
  // Periodic signal: the same signature appears at s and s + 400.
  std::vector<double> s, v, xs, ys;
  for (int i = 0; i <= 3200; ++i) {
    s.push_back(0.25 * i);
    v.push_back(45.0 + 2.0 * std::sin(2.0 * M_PI * s.back() / 400.0) +
                std::cos(6.0 * M_PI * s.back() / 400.0));
    xs.push_back(s.back());
    ys.push_back(0.0);
  }
  const auto map = glomap::build_map(s, v, 10.0);
  const auto x_map = glomap::build_map(s, xs, 10.0);
  const auto y_map = glomap::build_map(s, ys, 10.0);

  Rng rng(47);
  for (int trial = 0; trial < 50; ++trial) {
    const double s_true = rng.uniform(120.0, 360.0);
    const auto b = batch_at(map, s_true, 30, 0.8);
    const auto cands = match::scan_candidates(b, map, x_map, y_map, 0.5, 0.1 * std::sqrt(30.0));
    // The ambiguity is real: at least one alias further down the track.
    bool has_alias = false;
    for (const auto& c : cands) has_alias |= c.s_end > s_true + 200.0;
    CHECK(has_alias);

    const Eigen::Vector2d predicted(s_true + rng.uniform(-5.0, 5.0), 0.0);
    const auto gated = match::gate_candidates(cands, predicted, 30.0);
    const auto best = match::select_best(gated, predicted);
    REQUIRE(best.has_value());
    CHECK(std::abs(best->s_end - s_true) < 1.0);
  }
}
