#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "magarc/errors.hpp"
#include "magarc/glomap.hpp"
#include "magarc/rng.hpp"

using namespace magarc;

namespace {

double legendre(int n, double u) {
  switch (n) {
    case 0: return 1.0;
    case 1: return u;
    case 2: return 0.5 * (3.0 * u * u - 1.0);
    default: return 0.5 * (5.0 * u * u * u - 3.0 * u);
  }
}

}  // namespace

TEST_CASE("weight endpoint and midpoint values") {
  CHECK(glomap::weight(0.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(glomap::weight(1.0) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(glomap::weight(-1.0) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(glomap::weight(0.5) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(glomap::weight(-0.5) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK_THROWS_AS(glomap::weight(1.0 + 1e-9), DomainError);
  CHECK_THROWS_AS(glomap::weight(-1.5), DomainError);
}

TEST_CASE("weight is a partition of unity") {
  // W(u) + W(u - 1) = 1 for u in [0, 1].
  for (int i = 0; i <= 100000; ++i) {
    const double u = static_cast<double>(i) / 100000.0;
    CHECK(std::abs(glomap::weight(u) + glomap::weight(u - 1.0) - 1.0) < 1e-12);
  }
}

TEST_CASE("fit_local reproduces constants and cubics") {
  std::vector<double> s, v;
  for (int i = 0; i < 25; ++i) {
    s.push_back(10.0 + 20.0 * i / 24.0);
    v.push_back(7.5);
  }
  const auto cfit = glomap::fit_local(s, v, 10.0, 20.0);
  CHECK(cfit.coeffs(0) == doctest::Approx(7.5).epsilon(1e-12));
  for (int k = 1; k < 4; ++k) CHECK(std::abs(cfit.coeffs(k)) < 1e-12);

  // An exact cubic lies in the basis span, so every point is reproduced.
  auto cubic = [](double x) { return 1.0 - 0.3 * x + 0.02 * x * x + 0.001 * x * x * x; };
  std::vector<double> vc;
  for (double x : s) vc.push_back(cubic(x));
  const auto fit = glomap::fit_local(s, vc, 10.0, 20.0);
  for (double x : s) CHECK(fit.eval(x) == doctest::Approx(cubic(x)).epsilon(1e-9));
}

TEST_CASE("fit_local matches a direct normal-equations solve") {
  Rng rng(21);
  std::vector<double> s, v;
  for (int i = 0; i < 40; ++i) {
    s.push_back(5.0 + 20.0 * rng.uniform());
    v.push_back(2.0 + 0.5 * s.back() + 0.05 * rng.normal());
  }
  const auto fit = glomap::fit_local(s, v, 5.0, 20.0);

  // Independent oracle: 4x4 normal equations in the rescaled Legendre basis.
  Eigen::MatrixXd a(s.size(), 4);
  Eigen::VectorXd b(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double u = 2.0 * (s[i] - 5.0) / 20.0 - 1.0;
    for (int k = 0; k < 4; ++k) a(i, k) = legendre(k, u);
    b(i) = v[i];
  }
  const Eigen::Vector4d x = (a.transpose() * a).ldlt().solve(a.transpose() * b);
  for (int k = 0; k < 4; ++k) CHECK(fit.coeffs(k) == doctest::Approx(x(k)).epsilon(1e-9));
}

TEST_CASE("fit_local needs four distinct abscissae") {
  std::vector<double> s{0.0, 0.0, 1.0, 2.0};
  std::vector<double> v{1.0, 1.0, 2.0, 3.0};
  CHECK_THROWS_AS(glomap::fit_local(s, v, 0.0, 2.0), RankDeficient);
}

TEST_CASE("build_map window count and short-track error") {
  // 3 km of data with h = 10 m: ceil(range / h) - 1 = 299 overlapping fits.
  std::vector<double> s, v;
  for (int i = 0; i <= 3000; ++i) {
    s.push_back(static_cast<double>(i));
    v.push_back(45.0 + std::sin(0.01 * i));
  }
  const auto map = glomap::build_map(s, v, 10.0);
  CHECK(map.fits.size() == 299);
  CHECK(map.h == 10.0);
  CHECK(map.s_min == 0.0);
  CHECK(map.s_max == 3000.0);
  for (std::size_t k = 1; k < map.fits.size(); ++k)
    CHECK(map.fits[k].s_start - map.fits[k - 1].s_start == doctest::Approx(10.0).epsilon(1e-12));

  std::vector<double> ss{0.0, 5.0, 15.0};
  std::vector<double> vs{1.0, 2.0, 3.0};
  CHECK_THROWS_AS(glomap::build_map(ss, vs, 10.0), TrackTooShort);
}

TEST_CASE("a track exactly two windows long yields one fit") {
  std::vector<double> s, v;
  for (int i = 0; i <= 20; ++i) {
    s.push_back(static_cast<double>(i));
    v.push_back(3.0 + 0.1 * i);
  }
  const auto map = glomap::build_map(s, v, 10.0);
  CHECK(map.fits.size() == 1);
  CHECK(glomap::eval_map(map, 7.3) == doctest::Approx(map.fits[0].eval(7.3)).epsilon(1e-12));
}

TEST_CASE("map built from a global cubic reproduces it everywhere") {
  auto cubic = [](double x) { return 40.0 + 0.01 * x - 2e-5 * x * x + 3e-8 * x * x * x; };
  std::vector<double> s, v;
  for (int i = 0; i <= 2000; ++i) {
    s.push_back(0.25 * i);
    v.push_back(cubic(s.back()));
  }
  const auto map = glomap::build_map(s, v, 10.0);
  for (int i = 0; i <= 5000; ++i) {
    const double x = map.s_min + (map.s_max - map.s_min) * i / 5000.0;
    CHECK(std::abs(glomap::eval_map(map, x) - cubic(x)) < 1e-8);
  }
}

TEST_CASE("interior evaluation blends exactly two fits") {
  Rng rng(5);
  std::vector<double> s, v;
  for (int i = 0; i <= 400; ++i) {
    s.push_back(0.25 * i);
    v.push_back(45.0 + std::sin(0.15 * s.back()) + 0.01 * rng.normal());
  }
  const auto map = glomap::build_map(s, v, 10.0);

  // At the center of a window the blend weight is 1 for that fit.
  for (std::size_t k = 0; k + 1 < map.fits.size(); ++k) {
    const double center = map.fits[k].s_start + 0.5 * map.fits[k].s_span;
    CHECK(glomap::eval_map(map, center) ==
          doctest::Approx(map.fits[k].eval(center)).epsilon(1e-10));
  }
  // At an overlap midpoint the value is the mean of the two covering fits.
  const double mid = map.fits[0].s_start + 0.75 * map.fits[0].s_span;
  const double expect = 0.5 * (map.fits[0].eval(mid) + map.fits[1].eval(mid));
  CHECK(glomap::eval_map(map, mid) == doctest::Approx(expect).epsilon(1e-10));

  CHECK_THROWS_AS(glomap::eval_map(map, map.s_min - 1e-6), OutOfMapRange);
  CHECK_THROWS_AS(glomap::eval_map(map, map.s_max + 1e-6), OutOfMapRange);
}

TEST_CASE("eval_map_batch equals pointwise evaluation") {
  std::vector<double> s, v;
  for (int i = 0; i <= 300; ++i) {
    s.push_back(static_cast<double>(i));
    v.push_back(std::cos(0.05 * i));
  }
  const auto map = glomap::build_map(s, v, 10.0);
  const auto batch = glomap::eval_map_batch(map, 12.5, 2.5, 40);
  REQUIRE(batch.size() == 40);
  for (std::size_t i = 0; i < batch.size(); ++i)
    CHECK(batch[i] == glomap::eval_map(map, 12.5 + 2.5 * static_cast<double>(i)));
}

TEST_CASE("map files round-trip bit-exact") {
  Rng rng(17);
  std::vector<double> s, v;
  for (int i = 0; i <= 500; ++i) {
    s.push_back(0.5 * i);
    v.push_back(45.0 + rng.normal());
  }
  auto map = glomap::build_map(s, v, 10.0, "magnitude", "uT");
  const auto path = std::filesystem::temp_directory_path() / "magarc_test_map.csv";
  glomap::save_map(map, path.string());
  const auto back = glomap::load_map(path.string());
  CHECK(back.h == map.h);
  CHECK(back.s_min == map.s_min);
  CHECK(back.s_max == map.s_max);
  CHECK(back.value_label == map.value_label);
  CHECK(back.value_units == map.value_units);
  REQUIRE(back.fits.size() == map.fits.size());
  for (std::size_t k = 0; k < map.fits.size(); ++k) {
    CHECK(back.fits[k].s_start == map.fits[k].s_start);
    CHECK(back.fits[k].s_span == map.fits[k].s_span);
    for (int c = 0; c < 4; ++c) CHECK(back.fits[k].coeffs(c) == map.fits[k].coeffs(c));
  }
  std::filesystem::remove(path);
}

TEST_CASE("corrupted map headers are rejected") {
  const auto path = std::filesystem::temp_directory_path() / "magarc_test_badmap.csv";
  {
    std::ofstream out(path);
    out << "NOT-A-MAP v1 magnitude uT h=10 smin=0 smax=100\n";
  }
  CHECK_THROWS_AS(glomap::load_map(path.string()), MapFormatError);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(glomap::load_map((path.string() + ".missing")), MapFormatError);
}
