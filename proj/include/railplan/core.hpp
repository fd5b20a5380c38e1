#pragma once

// Shared domain types for the power-delivery model: panel description,
// operating modes, rail measurements and the itemized power ledger.
//
// Unit conventions, fixed across the whole library:
//   voltage V, current mA, power mW, frequency Hz (osc in MHz),
//   luminance nits (cd/m^2), area mm^2, resistance Ohm.

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace railplan {

// Error taxonomy, aligned with the CLI exit codes:
// InputError -> 2, ConstraintError -> 3, InfeasibleError -> 4.
class InputError : public std::runtime_error {
public:
  explicit InputError(const std::string& what) : std::runtime_error(what) {}
};

class ConstraintError : public std::runtime_error {
public:
  explicit ConstraintError(const std::string& what) : std::runtime_error(what) {}
};

class InfeasibleError : public std::runtime_error {
public:
  explicit InfeasibleError(const std::string& what) : std::runtime_error(what) {}
};

enum class Process { Ltps, Ltpo };

inline const char* to_string(Process p) {
  return p == Process::Ltps ? "LTPS" : "LTPO";
}

inline Process process_from_string(const std::string& s) {
  if (s == "LTPS") return Process::Ltps;
  if (s == "LTPO") return Process::Ltpo;
  throw InputError("unknown process '" + s + "' (expected LTPS or LTPO)");
}

// Canonical operating-mode names. Mode is metadata only: all physics flows
// through the numeric fields of ModeSpec, so custom mode names are allowed.
// "Standby" is special-cased (display and digital logic powered down).
namespace mode_names {
inline constexpr const char* kNormal = "Normal";
inline constexpr const char* kBoost = "Boost";
inline constexpr const char* kIdle = "Idle";
inline constexpr const char* kStandby = "Standby";
}  // namespace mode_names

inline double default_min_refresh_hz(Process p) {
  return p == Process::Ltps ? 10.0 : 1.0;
}

// The rail vocabulary used by driver/power chip configurations.
inline const std::set<std::string>& known_rails() {
  static const std::set<std::string> rails = {
      "VDDIO", "VBT",  "VCI",  "PVDD", "PVEE", "AVDD", "VGMP",
      "VGSP",  "VGH",  "VGHR", "VCL",  "VREF", "VGL",  "VGLR"};
  return rails;
}

// Physical/optical description of one panel. Immutable after construction.
struct PanelSpec {
  std::string name;
  double active_area_mm2 = 0.0;
  double efficacy_cd_per_a = 0.0;  // aggregate white efficacy
  double transmittance = 1.0;      // light-transmitting structure, 0..1
  double emit_area_factor = 1.0;   // PDL aperture, 0..1
  Process process = Process::Ltps;
  double min_refresh_hz = 10.0;
  std::set<std::string> rail_names = known_rails();

  void validate() const {
    if (!(active_area_mm2 > 0.0))
      throw InputError("panel '" + name + "': active_area must be > 0 mm^2");
    if (!(efficacy_cd_per_a > 0.0))
      throw InputError("panel '" + name + "': efficacy must be > 0 cd/A");
    if (!(transmittance > 0.0 && transmittance <= 1.0))
      throw InputError("panel '" + name + "': transmittance must be in (0,1]");
    if (!(emit_area_factor > 0.0 && emit_area_factor <= 1.0))
      throw InputError("panel '" + name + "': emit_area_factor must be in (0,1]");
    if (!(min_refresh_hz > 0.0))
      throw InputError("panel '" + name + "': min_refresh must be > 0 Hz");
  }
};

// One rail's operating point as measured or configured.
struct RailMeasurement {
  std::string rail;
  double voltage_v = 0.0;
  double current_ma = 0.0;

  void validate() const {
    if (!known_rails().count(rail))
      throw InputError("unknown rail identifier '" + rail + "'");
    if (current_ma < 0.0)
      throw InputError("rail " + rail + ": supply current must be >= 0 mA");
    static const std::set<std::string> negative = {"PVEE", "VCL", "VGL", "VGLR"};
    static const std::set<std::string> positive = {"PVDD", "AVDD", "VGH"};
    if (negative.count(rail) && voltage_v > 0.0)
      throw InputError("rail " + rail + ": voltage must be <= 0 V");
    if (positive.count(rail) && voltage_v < 0.0)
      throw InputError("rail " + rail + ": voltage must be >= 0 V");
  }
};

// One operating point of the display: luminance target, pixel-on ratio,
// refresh/oscillator frequencies, enabled digital function modules, and the
// share of wall-clock time this mode holds in a usage scenario.
struct ModeSpec {
  std::string mode = mode_names::kNormal;
  double luminance_nits = 0.0;
  double pixel_on_ratio = 1.0;
  double refresh_hz = 0.0;
  double osc_mhz = 0.0;
  std::set<std::string> modules_enabled;
  double duty = 1.0;

  bool is_standby() const { return mode == mode_names::kStandby; }

  void validate() const {
    if (luminance_nits < 0.0)
      throw InputError("mode '" + mode + "': luminance must be >= 0 nits");
    if (!(pixel_on_ratio >= 0.0 && pixel_on_ratio <= 1.0))
      throw InputError("mode '" + mode + "': pixel_on_ratio must be in [0,1]");
    if (refresh_hz < 0.0 || osc_mhz < 0.0)
      throw InputError("mode '" + mode + "': frequencies must be >= 0");
    if (!(duty >= 0.0 && duty <= 1.0))
      throw InputError("mode '" + mode + "': duty must be in [0,1]");
    if (is_standby() && (luminance_nits != 0.0 || refresh_hz != 0.0))
      throw InputError("Standby requires luminance = 0 and refresh = 0");
    if (luminance_nits > 0.0 && refresh_hz == 0.0)
      throw InputError("mode '" + mode + "': refresh 0 Hz with nonzero luminance");
  }
};

// Frame scanning below the process floor causes flicker/retention; a display
// that is off (refresh 0, dark) scans no frames and is exempt.
inline void check_refresh_floor(const PanelSpec& panel, const ModeSpec& mode) {
  if (mode.refresh_hz > 0.0 && mode.refresh_hz < panel.min_refresh_hz) {
    std::ostringstream os;
    os << "refresh floor violation: " << mode.refresh_hz << " Hz < "
       << panel.min_refresh_hz << " Hz minimum for " << to_string(panel.process)
       << " panel '" << panel.name << "'";
    throw ConstraintError(os.str());
  }
}

// Itemized loss ledger for one evaluated mode. The invariant total == sum of
// items (energy balance) holds by construction; finalize() asserts it.
struct PowerReport {
  double total_mw = 0.0;
  std::vector<std::pair<std::string, double>> items;
  std::string inputs_echo;
  std::vector<std::string> warnings;

  void add_item(const std::string& label, double mw) {
    if (mw < 0.0)
      throw ConstraintError("ledger item '" + label + "' is negative: " +
                            std::to_string(mw) + " mW");
    items.emplace_back(label, mw);
  }

  double item(const std::string& label) const {
    for (const auto& [name, mw] : items)
      if (name == label) return mw;
    return 0.0;
  }

  void finalize() {
    total_mw = 0.0;
    for (const auto& [name, mw] : items) total_mw += mw;
  }

  bool balanced(double rel_tol = 1e-9) const {
    double sum = 0.0;
    for (const auto& [name, mw] : items) sum += mw;
    double scale = std::max({std::abs(sum), std::abs(total_mw), 1e-30});
    return std::abs(sum - total_mw) <= rel_tol * scale;
  }
};

// Duty-weighted scenario power over a set of evaluated modes.
// Duties must sum to 1 (within 1e-9).
inline double weighted_scenario_power(
    const std::vector<std::pair<ModeSpec, PowerReport>>& reports) {
  double duty_sum = 0.0;
  for (const auto& [mode, report] : reports) duty_sum += mode.duty;
  if (std::abs(duty_sum - 1.0) > 1e-9) {
    std::ostringstream os;
    os << "scenario duties sum to " << duty_sum << ", off by "
       << (duty_sum - 1.0) << " from 1.0";
    throw InputError(os.str());
  }
  double total = 0.0;
  for (const auto& [mode, report] : reports) total += mode.duty * report.total_mw;
  return total;
}

}  // namespace railplan
