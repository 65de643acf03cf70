#include "magarc/glomap.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "magarc/errors.hpp"

namespace magarc::glomap {

namespace {

// Legendre P0..P3 at x in [-1, 1].
Eigen::Vector4d legendre_basis(double x) {
  return {1.0, x, 0.5 * (3.0 * x * x - 1.0), 0.5 * (5.0 * x * x * x - 3.0 * x)};
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_double(const std::string& tok, const std::string& path, std::size_t lineno) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(tok, &pos);
    if (pos != tok.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw MapFormatError(path + ":" + std::to_string(lineno) + ": bad number '" + tok + "'");
  }
}

}  // namespace

double LocalFit::eval(double s) const {
  const double x = 2.0 * (s - s_start) / s_span - 1.0;
  return coeffs.dot(legendre_basis(x));
}

double weight(double s) {
  if (s < -1.0 || s > 1.0) throw DomainError("weight: argument outside [-1, 1]");
  return s <= 0.0 ? 1.0 - s * s * (3.0 + 2.0 * s) : 1.0 - s * s * (3.0 - 2.0 * s);
}

LocalFit fit_local(const std::vector<double>& s, const std::vector<double>& value,
                   double s0, double span) {
  if (s.size() != value.size()) throw DomainError("fit_local: size mismatch");
  if (span <= 0.0) throw DomainError("fit_local: non-positive span");
  const double eps = 1e-9 * std::max(1.0, std::abs(span));
  std::vector<std::size_t> idx;
  std::set<double> distinct;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] >= s0 - eps && s[i] <= s0 + span + eps) {
      idx.push_back(i);
      distinct.insert(s[i]);
    }
  }
  if (distinct.size() < 4)
    throw RankDeficient("fit_local: fewer than 4 distinct abscissae in window");

  Eigen::MatrixXd A(idx.size(), 4);
  Eigen::VectorXd b(idx.size());
  for (std::size_t r = 0; r < idx.size(); ++r) {
    const double x = 2.0 * (s[idx[r]] - s0) / span - 1.0;
    A.row(r) = legendre_basis(x).transpose();
    b(r) = value[idx[r]];
  }
  LocalFit fit;
  fit.s_start = s0;
  fit.s_span = span;
  fit.coeffs = A.colPivHouseholderQr().solve(b);
  return fit;
}

ScalarArcMap build_map(const std::vector<double>& s, const std::vector<double>& value,
                       double h, const std::string& label, const std::string& units) {
  if (h <= 0.0) throw DomainError("build_map: h must be positive");
  if (s.empty()) throw TrackTooShort("build_map: empty track");
  const auto [mn, mx] = std::minmax_element(s.begin(), s.end());
  const double s_min = *mn;
  const double range = *mx - s_min;
  if (range < 2.0 * h) throw TrackTooShort("build_map: track range shorter than 2h");

  // ceil(range/h) - 1 windows of length 2h stepping by h.
  const auto n_fits = static_cast<std::size_t>(std::ceil(range / h - 1e-12)) - 1;
  ScalarArcMap map;
  map.h = h;
  map.s_min = s_min;
  map.s_max = *mx;
  map.value_label = label.empty() ? "value" : label;
  map.value_units = units.empty() ? "-" : units;
  map.fits.reserve(n_fits);
  for (std::size_t k = 0; k < n_fits; ++k)
    map.fits.push_back(fit_local(s, value, s_min + static_cast<double>(k) * h, 2.0 * h));
  return map;
}

double eval_map(const ScalarArcMap& map, double s) {
  const double eps = 1e-9 * std::max(1.0, map.h);
  if (s < map.s_min - eps || s > map.s_max + eps)
    throw OutOfMapRange("eval_map: s outside [s_min, s_max]");
  const auto n = static_cast<long>(map.fits.size());
  const double t = (s - map.s_min) / map.h;
  long j = static_cast<long>(std::floor(t));
  j = std::clamp(j, 0L, n);
  const long lo = j - 1;
  if (lo < 0) return map.fits.front().eval(s);        // leading half-window
  if (j > n - 1) return map.fits.back().eval(s);      // trailing half-window
  const double u = t - static_cast<double>(j);        // overlap coordinate in [0, 1]
  return weight(u) * map.fits[lo].eval(s) + weight(u - 1.0) * map.fits[j].eval(s);
}

std::vector<double> eval_map_batch(const ScalarArcMap& map, double s_start, double spacing,
                                   std::size_t n) {
  std::vector<double> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    out.push_back(eval_map(map, s_start + static_cast<double>(i) * spacing));
  return out;
}

void save_map(const ScalarArcMap& map, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw MapFormatError(path + ": cannot open for writing");
  out << "MAGARC-MAP v1 " << map.value_label << " " << map.value_units
      << " h=" << format_double(map.h) << " smin=" << format_double(map.s_min)
      << " smax=" << format_double(map.s_max) << "\n";
  for (const auto& f : map.fits) {
    out << format_double(f.s_start);
    for (int i = 0; i < 4; ++i) out << " " << format_double(f.coeffs(i));
    out << "\n";
  }
}

ScalarArcMap load_map(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MapFormatError(path + ": cannot open");
  std::string line;
  if (!std::getline(in, line)) throw MapFormatError(path + ":1: empty file");
  std::stringstream hs(line);
  std::string magic, version, label, units, htok, smintok, smaxtok;
  if (!(hs >> magic >> version >> label >> units >> htok >> smintok >> smaxtok) ||
      magic != "MAGARC-MAP" || version != "v1" || htok.rfind("h=", 0) != 0 ||
      smintok.rfind("smin=", 0) != 0 || smaxtok.rfind("smax=", 0) != 0)
    throw MapFormatError(path + ":1: bad header '" + line + "'");

  ScalarArcMap map;
  map.value_label = label;
  map.value_units = units;
  map.h = parse_double(htok.substr(2), path, 1);
  map.s_min = parse_double(smintok.substr(5), path, 1);
  map.s_max = parse_double(smaxtok.substr(5), path, 1);
  if (map.h <= 0.0) throw MapFormatError(path + ":1: non-positive h");

  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ls(line);
    std::string tok;
    std::vector<std::string> toks;
    while (ls >> tok) toks.push_back(tok);
    if (toks.size() != 5)
      throw MapFormatError(path + ":" + std::to_string(lineno) + ": expected 5 fields");
    LocalFit fit;
    fit.s_start = parse_double(toks[0], path, lineno);
    fit.s_span = 2.0 * map.h;
    for (int i = 0; i < 4; ++i) fit.coeffs(i) = parse_double(toks[i + 1], path, lineno);
    map.fits.push_back(fit);
  }
  if (map.fits.empty()) throw MapFormatError(path + ": no fits");
  for (std::size_t k = 1; k < map.fits.size(); ++k) {
    const double step = map.fits[k].s_start - map.fits[k - 1].s_start;
    if (std::abs(step - map.h) > 1e-6 * map.h)
      throw MapFormatError(path + ": fit spacing does not equal h at fit " + std::to_string(k));
  }
  return map;
}

}  // namespace magarc::glomap
