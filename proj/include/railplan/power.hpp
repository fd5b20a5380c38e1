#pragma once

// Mode-level power evaluation with an itemized, energy-balanced loss ledger,
// the two board-level power accounting methods, inductor conduction loss,
// and least-squares calibration of model coefficients against measured data.

#include <cmath>
#include <functional>
#include <iomanip>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "railplan/chain.hpp"
#include "railplan/core.hpp"
#include "railplan/curves.hpp"
#include "railplan/load.hpp"
#include "railplan/sequence.hpp"

namespace railplan {

// Digital-circuit power, affine in the clock frequencies plus per-module
// adders for enabled image-processing functions. Coefficients are fitted
// against measurements, never asserted.
struct DigitalModel {
  double p_static_mw = 0.0;
  double k_osc_mw_per_mhz = 0.0;
  double k_refresh_mw_per_hz = 0.0;
  std::map<std::string, double> module_power_mw;

  void validate() const {
    if (p_static_mw < 0 || k_osc_mw_per_mhz < 0 || k_refresh_mw_per_hz < 0)
      throw InputError("digital model coefficients must be >= 0");
    for (const auto& [name, mw] : module_power_mw)
      if (mw < 0) throw InputError("module power for '" + name + "' must be >= 0");
  }

  double power_mw(const ModeSpec& mode) const {
    double p = p_static_mw + k_osc_mw_per_mhz * mode.osc_mhz +
               k_refresh_mw_per_hz * mode.refresh_hz;
    for (const auto& m : mode.modules_enabled) {
      auto it = module_power_mw.find(m);
      if (it != module_power_mw.end()) p += it->second;
    }
    return p;
  }
};

struct Inductor {
  std::string part;
  double inductance_uh = 0.0;
  double i_rms_a = 0.0;  // heat rating
  double dcr_ohm = 0.0;

  void validate() const {
    if (!(inductance_uh > 0 && i_rms_a > 0 && dcr_ohm > 0))
      throw InputError("inductor '" + part + "': all parameters must be > 0");
  }
};

// Conduction loss P = i^2 * DCR, in mW. Exceeding the heat rating is flagged
// but still computed.
inline double dcr_loss_mw(const Inductor& ind, double i_a,
                          std::vector<std::string>* warnings = nullptr) {
  ind.validate();
  if (i_a < 0.0) throw InputError("inductor current must be >= 0 A");
  if (i_a > ind.i_rms_a && warnings) {
    std::ostringstream os;
    os << "inductor " << ind.part << ": current " << i_a << " A exceeds rating "
       << ind.i_rms_a << " A";
    warnings->push_back(os.str());
  }
  return i_a * i_a * ind.dcr_ohm * 1e3;
}

// No-load internal draw of one chip, per operating mode, at its supply rail.
struct ChipQuiescent {
  double supply_v = 0.0;
  std::map<std::string, double> ma_by_mode;

  double current_ma(const std::string& mode) const {
    auto it = ma_by_mode.find(mode);
    return it == ma_by_mode.end() ? 0.0 : it->second;
  }
};

struct QuiescentModel {
  std::map<std::string, ChipQuiescent> chips;  // chip name -> draw table

  void validate() const {
    for (const auto& [chip, q] : chips) {
      if (q.supply_v <= 0.0)
        throw InputError("quiescent: chip '" + chip + "' needs a positive supply voltage");
      double standby = q.current_ma(mode_names::kStandby);
      for (const auto& [mode, ma] : q.ma_by_mode) {
        if (ma < 0.0) throw InputError("quiescent: negative current for chip '" + chip + "'");
        if (mode != mode_names::kStandby && standby > ma)
          throw InputError("quiescent: chip '" + chip +
                           "' standby draw exceeds its " + mode + " draw");
      }
    }
  }
};

// Board-level accounting, supply chip on the display module:
//   P = V_DDIO * I_DDIO + V_BT * I_BT
inline double total_power_method1(const RailMeasurement& vddio,
                                  const RailMeasurement& vbt) {
  vddio.validate();
  vbt.validate();
  if (vddio.rail != "VDDIO" || vbt.rail != "VBT")
    throw InputError("method 1 expects rails VDDIO and VBT");
  return vddio.voltage_v * vddio.current_ma + vbt.voltage_v * vbt.current_ma;
}

// Board-level accounting, supply chip on the motherboard:
//   P = V_DDIO * I_DDIO + V_CI * I_CI + (V_PVDD - V_PVEE) * I_PVEE
inline double total_power_method2(const RailMeasurement& vddio,
                                  const RailMeasurement& vci,
                                  const RailMeasurement& pvdd,
                                  const RailMeasurement& pvee) {
  vddio.validate();
  vci.validate();
  pvdd.validate();
  pvee.validate();
  if (vddio.rail != "VDDIO" || vci.rail != "VCI" || pvdd.rail != "PVDD" ||
      pvee.rail != "PVEE")
    throw InputError("method 2 expects rails VDDIO, VCI, PVDD, PVEE");
  return vddio.voltage_v * vddio.current_ma + vci.voltage_v * vci.current_ma +
         (pvdd.voltage_v - pvee.voltage_v) * pvee.current_ma;
}

// --- supply plan -------------------------------------------------------------

enum class EmissionSource { DriverChip, PowerChip };

inline const char* to_string(EmissionSource s) {
  return s == EmissionSource::DriverChip ? "DriverChip" : "PowerChip";
}

enum class RailSymmetry { Symmetric, Asymmetric };

// How the light-emitting structure is powered: which chip sources PVDD/PVEE,
// whether the rails are symmetric around ground, whether a protection diode
// sits in the path, and the programmable PVEE levels available for dynamic
// adjustment. The static operating point uses the last (most negative) step.
struct SupplyPlan {
  EmissionSource emission_source = EmissionSource::PowerChip;
  RailSymmetry rail_symmetry = RailSymmetry::Symmetric;
  DiodeDecision diode = DiodeDecision::removable();
  std::vector<double> pvee_steps_v;         // strictly decreasing, all <= 0
  std::optional<double> pvdd_v;             // defaults to VCI when symmetric
  std::optional<std::string> inductor_key;  // boost inductor on the supply path

  void validate() const {
    if (pvee_steps_v.empty()) throw InputError("supply plan needs at least one PVEE step");
    for (size_t i = 0; i < pvee_steps_v.size(); ++i) {
      if (pvee_steps_v[i] > 0.0)
        throw InputError("PVEE steps must be <= 0 V");
      if (i > 0 && !(pvee_steps_v[i] < pvee_steps_v[i - 1]))
        throw InputError("PVEE steps must be strictly decreasing");
    }
    if (diode.required && !(diode.vf_v > 0.0))
      throw InputError("diode marked required needs a positive forward drop");
  }

  double static_pvee_v() const { return pvee_steps_v.back(); }
};

// Everything evaluate_mode needs besides the panel/config/plan/mode.
struct EvalModels {
  DigitalModel digital;
  QuiescentModel quiescent;
  OledDiodeModel oled;
  TftModel tft;
  std::map<std::string, Inductor> inductors;  // key: supply plan inductor_key
  std::optional<EfficiencyCurve> pmic_curve;  // power chip, emission path
  std::optional<EfficiencyCurve> ddic_curve;  // driver chip, emission path
  double vbt_v = 3.7;
};

inline double resolve_pvdd(const ChainConfig& cfg, const SupplyPlan& plan) {
  if (plan.pvdd_v) return *plan.pvdd_v;
  if (cfg.chains.count("PVDD")) return rail_voltage(cfg, "PVDD");
  if (plan.rail_symmetry == RailSymmetry::Symmetric) return cfg.vci_v;
  throw InputError("asymmetric supply plan needs an explicit PVDD voltage or chain");
}

namespace detail {

inline std::string format_mw(double v) {
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}

}  // namespace detail

// Evaluates one operating mode against a full design: panel, driver-chip
// voltage configuration, supply plan and calibration models. Returns the
// itemized ledger; throws ConstraintError naming the violated rule when the
// configuration cannot support the mode.
//
// Ledger composition:
//   emission        span seen by the OLED x emission current
//   diode           diode forward drop x emission current (when present)
//   conv:supply     conversion loss of the chosen emission source, from its
//                   measured chip-level efficiency curve at the mode's load
//   dcr:supply      conduction loss of the supply boost inductor
//   rail:<R>        static auxiliary load on driver rail R
//   conv:<R>        conversion loss of rail R's chain at its static load
//   quiescent:<chip> per-chip no-load draw for this mode
//   digital         clock-frequency and function-module power
//
// Standby powers the display path and digital logic down entirely: only
// per-chip standby quiescent remains.
inline PowerReport evaluate_mode(const PanelSpec& panel, const ChainConfig& cfg,
                                 const SupplyPlan& plan, const ModeSpec& mode,
                                 const EvalModels& models,
                                 std::optional<double> pvee_override_v = std::nullopt,
                                 bool enforce_span = true) {
  panel.validate();
  mode.validate();
  plan.validate();
  models.digital.validate();
  models.quiescent.validate();
  check_refresh_floor(panel, mode);

  auto violations = validate_config(cfg);
  if (!violations.empty()) {
    std::ostringstream os;
    os << "config violation: '" << cfg.name << "' fails";
    for (size_t i = 0; i < violations.size(); ++i)
      os << (i ? ", " : " ") << violations[i].rule;
    throw ConstraintError(os.str());
  }

  PowerReport report;
  {
    std::ostringstream echo;
    echo << "panel=" << panel.name << ";cfg=" << cfg.name << ";mode=" << mode.mode
         << "@" << mode.refresh_hz << "Hz/" << mode.luminance_nits << "nit;supply="
         << to_string(plan.emission_source)
         << (plan.diode.required ? ";diode" : "");
    report.inputs_echo = echo.str();
  }

  // quiescent draw is the only survivor in standby
  for (const auto& [chip, q] : models.quiescent.chips) {
    double mw = q.current_ma(mode.mode) * q.supply_v;
    if (mw > 0.0) report.add_item("quiescent:" + chip, mw);
  }
  if (mode.is_standby()) {
    report.finalize();
    return report;
  }

  report.add_item("digital", models.digital.power_mw(mode));

  // emission path
  double i_emission = emission_current_ma(panel, mode);
  double pvdd = resolve_pvdd(cfg, plan);
  double pvee = pvee_override_v.value_or(plan.static_pvee_v());
  double span_rail = pvdd - pvee;
  double vf = plan.diode.required ? plan.diode.vf_v : 0.0;
  double span_needed = required_rail_span(models.oled, models.tft, i_emission) + vf;
  if (span_rail + 1e-12 < span_needed) {
    std::ostringstream os;
    os << "rail span violation: PVDD-PVEE = " << span_rail << " V < required "
       << span_needed << " V at " << i_emission << " mA";
    if (enforce_span) throw ConstraintError(os.str());
    report.warnings.push_back(os.str());
  }

  if (i_emission > 0.0) {
    report.add_item("emission", (span_rail - vf) * i_emission);
    if (vf > 0.0) report.add_item("diode", vf * i_emission);

    const std::optional<EfficiencyCurve>& curve =
        plan.emission_source == EmissionSource::PowerChip ? models.pmic_curve
                                                          : models.ddic_curve;
    double path_out = span_rail * i_emission;
    double eta = 1.0;
    if (curve) {
      Efficiency e = efficiency_at(*curve, i_emission);
      eta = e.value;
      if (e.extrapolated)
        report.warnings.push_back("supply curve '" + curve->chip_id +
                                  "' extrapolated at " + detail::format_mw(i_emission) +
                                  " mA");
    } else {
      report.warnings.push_back("no efficiency curve for " +
                                std::string(to_string(plan.emission_source)) +
                                " supply; assuming lossless conversion");
    }
    double path_in = path_out / eta;
    report.add_item("conv:supply", path_in - path_out);

    if (plan.inductor_key) {
      auto it = models.inductors.find(*plan.inductor_key);
      if (it == models.inductors.end())
        throw InputError("supply plan references unknown inductor '" +
                         *plan.inductor_key + "'");
      double i_in_a = path_in / models.vbt_v * 1e-3;
      report.add_item("dcr:supply", dcr_loss_mw(it->second, i_in_a, &report.warnings));
    }
  }

  // auxiliary driver rails at their static loads
  for (const auto& [rail, chain] : cfg.chains) {
    auto load_it = cfg.rail_loads_ma.find(rail);
    double load = load_it == cfg.rail_loads_ma.end() ? 0.0 : load_it->second;
    if (load <= 0.0) continue;
    if (rail == "PVDD" || rail == "PVEE") continue;  // emission path handled above
    double v_out = std::abs(chain.target_voltage_v);
    double out_mw = v_out * load;
    Efficiency eta = chain_efficiency(chain, rail_voltage(cfg, chain.input_rail), load);
    if (eta.extrapolated)
      report.warnings.push_back("chain " + rail + ": boost curve extrapolated");
    report.add_item("rail:" + rail, out_mw);
    report.add_item("conv:" + rail, out_mw * (1.0 / eta.value - 1.0));
  }

  report.finalize();
  return report;
}

// --- calibration -------------------------------------------------------------

// One measured operating point, as read from the measurements CSV.
struct MeasurementRow {
  std::string mode;
  double luminance_nits = 0.0;
  double apl = 0.0;
  double refresh_hz = 0.0;
  double osc_mhz = 0.0;
  double measured_mw = 0.0;
};

// Named basis functions of the linear calibration model. Standby rows predict
// through base_standby only; active rows through the rest.
//   base_active   1 on non-standby rows   (static + active quiescent lump)
//   base_standby  1 on standby rows       (standby quiescent lump)
//   k_refresh     refresh Hz
//   k_osc         oscillator MHz
//   emission      luminance x pixel-on ratio (efficacy lump)
//   module:<m>    reserved for per-module indicators (needs richer rows)
inline double calibration_basis(const std::string& name, const MeasurementRow& row) {
  bool standby = row.mode == mode_names::kStandby;
  if (name == "base_active") return standby ? 0.0 : 1.0;
  if (name == "base_standby") return standby ? 1.0 : 0.0;
  if (name == "k_refresh") return standby ? 0.0 : row.refresh_hz;
  if (name == "k_osc") return standby ? 0.0 : row.osc_mhz;
  if (name == "emission") return standby ? 0.0 : row.luminance_nits * row.apl;
  throw InputError("unknown calibration coefficient '" + name + "'");
}

struct FitResult {
  std::map<std::string, double> coefficients;  // fitted + fixed, all of them
  std::vector<double> residuals;               // measured - predicted, per row
  std::vector<std::string> clipped;            // coefficients clipped at 0

  double predict_mw(const MeasurementRow& row) const {
    double p = 0.0;
    for (const auto& [name, value] : coefficients)
      p += value * calibration_basis(name, row);
    return p;
  }
};

namespace detail {

// Gaussian elimination with fixed partial pivoting; deterministic. Throws
// InputError naming the first unidentifiable column on a singular system.
inline std::vector<double> solve_linear(std::vector<std::vector<double>> a,
                                        std::vector<double> b,
                                        const std::vector<std::string>& names) {
  size_t n = b.size();
  for (size_t col = 0; col < n; ++col) {
    size_t pivot = col;
    for (size_t r = col + 1; r < n; ++r)
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    if (std::abs(a[pivot][col]) < 1e-12)
      throw InputError("calibration system is degenerate: coefficient '" + names[col] +
                       "' is unidentifiable from the given measurements");
    std::swap(a[col], a[pivot]);
    std::swap(b[col], b[pivot]);
    for (size_t r = col + 1; r < n; ++r) {
      double f = a[r][col] / a[col][col];
      for (size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(n);
  for (size_t i = n; i-- > 0;) {
    double s = b[i];
    for (size_t j = i + 1; j < n; ++j) s -= a[i][j] * x[j];
    x[i] = s / a[i][i];
  }
  return x;
}

}  // namespace detail

// Least-squares fit of the named free coefficients against measured rows,
// holding `fixed` coefficients at their supplied values. Coefficients are
// clipped to be non-negative (flagged); residuals are reported per row
// against the final (clipped) model.
inline FitResult fit_calibration(const std::vector<MeasurementRow>& rows,
                                 const std::vector<std::string>& free_names,
                                 const std::map<std::string, double>& fixed = {}) {
  if (free_names.empty()) throw InputError("no free coefficients to fit");
  if (rows.size() < free_names.size())
    throw InputError("need at least as many measurements (" + std::to_string(rows.size()) +
                     ") as free coefficients (" + std::to_string(free_names.size()) + ")");
  for (const auto& name : free_names)
    if (fixed.count(name))
      throw InputError("coefficient '" + name + "' is both free and fixed");

  size_t n = free_names.size();
  // target with the fixed part subtracted
  std::vector<double> y(rows.size());
  for (size_t r = 0; r < rows.size(); ++r) {
    y[r] = rows[r].measured_mw;
    for (const auto& [name, value] : fixed)
      y[r] -= value * calibration_basis(name, rows[r]);
  }

  // normal equations A^T A x = A^T y
  std::vector<std::vector<double>> ata(n, std::vector<double>(n, 0.0));
  std::vector<double> aty(n, 0.0);
  for (size_t r = 0; r < rows.size(); ++r) {
    std::vector<double> phi(n);
    for (size_t j = 0; j < n; ++j) phi[j] = calibration_basis(free_names[j], rows[r]);
    for (size_t j = 0; j < n; ++j) {
      aty[j] += phi[j] * y[r];
      for (size_t k = 0; k < n; ++k) ata[j][k] += phi[j] * phi[k];
    }
  }

  std::vector<double> theta = detail::solve_linear(ata, aty, free_names);

  FitResult result;
  for (const auto& [name, value] : fixed) result.coefficients[name] = value;
  for (size_t j = 0; j < n; ++j) {
    double v = theta[j];
    if (v < 0.0) {
      v = 0.0;
      result.clipped.push_back(free_names[j]);
    }
    result.coefficients[free_names[j]] = v;
  }
  result.residuals.reserve(rows.size());
  for (const auto& row : rows)
    result.residuals.push_back(row.measured_mw - result.predict_mw(row));
  return result;
}

}  // namespace railplan
