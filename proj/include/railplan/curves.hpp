#pragma once

// Measured load->efficiency curves of power/driver chips: CSV ingestion,
// piecewise-linear interpolation and crossover detection between two chips.

#include <fstream>
#include <istream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "railplan/core.hpp"

namespace railplan {

// Samples of conversion efficiency versus load for one chip at one voltage
// setting. Loads strictly increasing, efficiencies in (0, 1].
struct EfficiencyCurve {
  std::string chip_id;
  std::string voltage_setting;
  std::vector<std::pair<double, double>> points;  // (load mA, efficiency)

  double min_load() const { return points.front().first; }
  double max_load() const { return points.back().first; }

  void validate() const {
    if (points.size() < 2)
      throw InputError("curve '" + chip_id + "': needs at least 2 points");
    for (size_t i = 0; i < points.size(); ++i) {
      const auto& [load, eta] = points[i];
      if (!(eta > 0.0 && eta <= 1.0))
        throw InputError("curve '" + chip_id + "': efficiency out of range (0,1] at load " +
                         std::to_string(load));
      if (i > 0 && !(load > points[i - 1].first))
        throw InputError("curve '" + chip_id + "': loads not strictly increasing at index " +
                         std::to_string(i));
    }
  }
};

// Interpolation result. `extrapolated` is set when the probe load fell
// outside the sampled range and the nearest endpoint value was used.
struct Efficiency {
  double value = 0.0;
  bool extrapolated = false;
};

namespace detail {

inline std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  size_t e = s.find_last_not_of(" \t\r\n");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

inline double parse_number(const std::string& text, const std::string& where) {
  try {
    size_t pos = 0;
    double v = std::stod(text, &pos);
    if (pos != text.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw InputError(where + ": not a number: '" + text + "'");
  }
}

inline std::vector<std::string> split_csv_row(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) out.push_back(trim(field));
  return out;
}

}  // namespace detail

// Reads the curve CSV format: header `load_ma,efficiency`, one sample per
// row, '.' decimal point. Errors carry the 1-based row number.
inline EfficiencyCurve load_curve(std::istream& in, const std::string& source_name,
                                  const std::string& chip_id = "",
                                  const std::string& voltage_setting = "") {
  EfficiencyCurve curve;
  curve.chip_id = chip_id.empty() ? source_name : chip_id;
  curve.voltage_setting = voltage_setting;

  std::string line;
  int row = 0;
  while (std::getline(in, line)) {
    ++row;
    line = detail::trim(line);
    if (line.empty()) continue;
    auto fields = detail::split_csv_row(line);
    if (row == 1) {
      if (fields.size() != 2 || fields[0] != "load_ma" || fields[1] != "efficiency")
        throw InputError(source_name + " row 1: expected header 'load_ma,efficiency'");
      continue;
    }
    std::string where = source_name + " row " + std::to_string(row);
    if (fields.size() != 2) throw InputError(where + ": expected 2 fields");
    double load = detail::parse_number(fields[0], where);
    double eta = detail::parse_number(fields[1], where);
    if (!(eta > 0.0 && eta <= 1.0))
      throw InputError(where + ": efficiency out of range (0,1]");
    if (!curve.points.empty() && !(load > curve.points.back().first))
      throw InputError(where + ": load not strictly increasing");
    curve.points.emplace_back(load, eta);
  }
  if (curve.points.size() < 2)
    throw InputError(source_name + ": curve needs at least 2 samples");
  return curve;
}

inline EfficiencyCurve load_curve_file(const std::string& path,
                                       const std::string& chip_id = "",
                                       const std::string& voltage_setting = "") {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open curve file '" + path + "'");
  return load_curve(in, path, chip_id, voltage_setting);
}

namespace detail {

inline Efficiency interp(const EfficiencyCurve& curve, double load_ma) {
  const auto& pts = curve.points;
  if (load_ma <= pts.front().first)
    return {pts.front().second, load_ma < pts.front().first};
  if (load_ma >= pts.back().first)
    return {pts.back().second, load_ma > pts.back().first};
  size_t hi = 1;
  while (pts[hi].first < load_ma) ++hi;
  const auto& [x0, y0] = pts[hi - 1];
  const auto& [x1, y1] = pts[hi];
  if (load_ma == x0) return {y0, false};
  if (load_ma == x1) return {y1, false};
  double t = (load_ma - x0) / (x1 - x0);
  return {y0 + t * (y1 - y0), false};
}

}  // namespace detail

// Efficiency at an arbitrary load: exact at knots, linear between them,
// clamped to the nearest endpoint outside the sampled range (flagged).
inline Efficiency efficiency_at(const EfficiencyCurve& curve, double load_ma) {
  if (!(load_ma > 0.0))
    throw InputError("efficiency_at: load must be > 0 mA, got " + std::to_string(load_ma));
  return detail::interp(curve, load_ma);
}

// All loads in the overlap of the two sampled ranges where the interpolated
// difference eta_a - eta_b changes sign or touches zero, ascending. Identical
// curves degenerate to the list of shared knots. Disjoint ranges are an error.
inline std::vector<double> crossover(const EfficiencyCurve& a, const EfficiencyCurve& b) {
  double lo = std::max(a.min_load(), b.min_load());
  double hi = std::min(a.max_load(), b.max_load());
  if (lo > hi)
    throw InputError("crossover: curves '" + a.chip_id + "' and '" + b.chip_id +
                     "' have disjoint load ranges");

  // merged breakpoints restricted to the overlap
  std::vector<double> xs{lo, hi};
  for (const auto& [x, y] : a.points)
    if (x > lo && x < hi) xs.push_back(x);
  for (const auto& [x, y] : b.points)
    if (x > lo && x < hi) xs.push_back(x);
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());

  auto diff = [&](double x) {
    return detail::interp(a, x).value - detail::interp(b, x).value;
  };

  std::vector<double> zeros;
  auto push = [&](double x) {
    if (zeros.empty() || std::abs(zeros.back() - x) > 1e-9) zeros.push_back(x);
  };

  for (size_t i = 0; i + 1 < xs.size(); ++i) {
    double x0 = xs[i], x1 = xs[i + 1];
    double d0 = diff(x0), d1 = diff(x1);
    if (d0 == 0.0) push(x0);
    if (d0 * d1 < 0.0) push(x0 + (x1 - x0) * d0 / (d0 - d1));
  }
  if (!xs.empty() && diff(xs.back()) == 0.0) push(xs.back());
  return zeros;
}

}  // namespace railplan
