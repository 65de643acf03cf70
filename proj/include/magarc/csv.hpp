#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "magarc/errors.hpp"

namespace magarc::csv {

// Splits one CSV line on commas. No quoting support; the toolkit's formats
// are plain numeric columns.
inline std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  return out;
}

inline double to_double(const std::string& s, const std::string& file, std::size_t lineno) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    if (pos != s.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ParseError(file + ":" + std::to_string(lineno) + ": bad numeric field '" + s + "'");
  }
}

// Reads a CSV with the exact expected header, returning rows of doubles.
inline std::vector<std::vector<double>> read_numeric(const std::string& path,
                                                     const std::string& expected_header) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open");
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path + ":1: empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != expected_header)
    throw ParseError(path + ":1: expected header '" + expected_header + "', got '" + line + "'");
  const std::size_t ncols = split(expected_header).size();
  std::vector<std::vector<double>> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split(line);
    if (fields.size() != ncols)
      throw ParseError(path + ":" + std::to_string(lineno) + ": expected " +
                       std::to_string(ncols) + " fields, got " + std::to_string(fields.size()));
    std::vector<double> row;
    row.reserve(ncols);
    for (const auto& f : fields) row.push_back(to_double(f, path, lineno));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace magarc::csv
