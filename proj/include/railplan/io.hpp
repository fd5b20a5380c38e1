#pragma once

// File formats: the design document (panel JSON), chain configurations, mode
// and scenario files, rail timelines, workload traces, measurement sheets and
// search spaces. Schemas are documented in docs/file-formats.md. Unknown JSON
// keys are rejected everywhere.

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "railplan/chain.hpp"
#include "railplan/core.hpp"
#include "railplan/curves.hpp"
#include "railplan/load.hpp"
#include "railplan/optimizer.hpp"
#include "railplan/power.hpp"
#include "railplan/sequence.hpp"

namespace railplan {

using json = nlohmann::json;

namespace io_detail {

inline json parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError(path + ": " + e.what());
  }
}

inline void check_keys(const json& obj, const std::string& where,
                       const std::set<std::string>& allowed) {
  if (!obj.is_object()) throw InputError(where + ": expected a JSON object");
  for (const auto& [key, value] : obj.items())
    if (!allowed.count(key))
      throw InputError(where + ": unknown key '" + key + "'");
}

inline double require_number(const json& obj, const std::string& where,
                             const std::string& key) {
  if (!obj.contains(key)) throw InputError(where + ": missing key '" + key + "'");
  if (!obj[key].is_number()) throw InputError(where + ": '" + key + "' must be a number");
  return obj[key].get<double>();
}

inline double number_or(const json& obj, const std::string& key, double fallback) {
  if (!obj.contains(key)) return fallback;
  return obj[key].get<double>();
}

inline std::string require_string(const json& obj, const std::string& where,
                                  const std::string& key) {
  if (!obj.contains(key)) throw InputError(where + ": missing key '" + key + "'");
  if (!obj[key].is_string()) throw InputError(where + ": '" + key + "' must be a string");
  return obj[key].get<std::string>();
}

inline std::string resolve_path(const std::string& base_file, const std::string& rel) {
  namespace fs = std::filesystem;
  fs::path p(rel);
  if (p.is_absolute()) return rel;
  return (fs::path(base_file).parent_path() / p).string();
}

}  // namespace io_detail

// --- panel / models ----------------------------------------------------------

inline PanelSpec panel_from_json(const json& j, const std::string& where) {
  io_detail::check_keys(j, where,
                        {"name", "active_area_mm2", "efficacy_cd_per_a", "transmittance",
                         "emit_area_factor", "process", "min_refresh_hz", "rail_names"});
  PanelSpec p;
  p.name = io_detail::require_string(j, where, "name");
  p.active_area_mm2 = io_detail::require_number(j, where, "active_area_mm2");
  p.efficacy_cd_per_a = io_detail::require_number(j, where, "efficacy_cd_per_a");
  p.transmittance = io_detail::require_number(j, where, "transmittance");
  p.emit_area_factor = io_detail::number_or(j, "emit_area_factor", 1.0);
  p.process = process_from_string(io_detail::require_string(j, where, "process"));
  p.min_refresh_hz =
      io_detail::number_or(j, "min_refresh_hz", default_min_refresh_hz(p.process));
  if (j.contains("rail_names")) {
    p.rail_names.clear();
    for (const auto& r : j["rail_names"]) p.rail_names.insert(r.get<std::string>());
  }
  p.validate();
  return p;
}

inline ModeSpec mode_from_json(const json& j, const std::string& where) {
  io_detail::check_keys(j, where,
                        {"mode", "luminance_nits", "pixel_on_ratio", "refresh_hz",
                         "osc_mhz", "modules_enabled", "duty"});
  ModeSpec m;
  m.mode = io_detail::require_string(j, where, "mode");
  m.luminance_nits = io_detail::number_or(j, "luminance_nits", 0.0);
  m.pixel_on_ratio = io_detail::number_or(j, "pixel_on_ratio", 1.0);
  m.refresh_hz = io_detail::number_or(j, "refresh_hz", 0.0);
  m.osc_mhz = io_detail::number_or(j, "osc_mhz", 0.0);
  m.duty = io_detail::number_or(j, "duty", 1.0);
  if (j.contains("modules_enabled"))
    for (const auto& x : j["modules_enabled"]) m.modules_enabled.insert(x.get<std::string>());
  m.validate();
  return m;
}

// A mode file holds either a single mode object or {"scenario": [modes...]}.
inline std::vector<ModeSpec> load_scenario(const std::string& path) {
  json j = io_detail::parse_file(path);
  std::vector<ModeSpec> modes;
  if (j.is_object() && j.contains("scenario")) {
    io_detail::check_keys(j, path, {"scenario"});
    for (size_t i = 0; i < j["scenario"].size(); ++i)
      modes.push_back(mode_from_json(j["scenario"][i],
                                     path + " scenario[" + std::to_string(i) + "]"));
  } else {
    modes.push_back(mode_from_json(j, path));
  }
  if (modes.empty()) throw InputError(path + ": scenario has no modes");
  return modes;
}

inline OledDiodeModel oled_from_json(const json& j, const std::string& where) {
  io_detail::check_keys(j, where, {"i_sat_ma", "n_vt_v", "r_series_ohm"});
  OledDiodeModel m;
  m.i_sat_ma = io_detail::require_number(j, where, "i_sat_ma");
  m.n_vt_v = io_detail::require_number(j, where, "n_vt_v");
  m.r_series_ohm = io_detail::number_or(j, "r_series_ohm", 0.0);
  m.validate();
  return m;
}

inline TftModel tft_from_json(const json& j, const std::string& where) {
  io_detail::check_keys(j, where, {"v_sat_margin_v"});
  TftModel m;
  m.v_sat_margin_v = io_detail::require_number(j, where, "v_sat_margin_v");
  m.validate();
  return m;
}

inline DigitalModel digital_from_json(const json& j, const std::string& where) {
  io_detail::check_keys(
      j, where, {"p_static_mw", "k_osc_mw_per_mhz", "k_refresh_mw_per_hz", "module_power_mw"});
  DigitalModel m;
  m.p_static_mw = io_detail::number_or(j, "p_static_mw", 0.0);
  m.k_osc_mw_per_mhz = io_detail::number_or(j, "k_osc_mw_per_mhz", 0.0);
  m.k_refresh_mw_per_hz = io_detail::number_or(j, "k_refresh_mw_per_hz", 0.0);
  if (j.contains("module_power_mw"))
    for (const auto& [name, mw] : j["module_power_mw"].items())
      m.module_power_mw[name] = mw.get<double>();
  m.validate();
  return m;
}

inline QuiescentModel quiescent_from_json(const json& j, const std::string& where) {
  QuiescentModel m;
  for (const auto& [chip, spec] : j.items()) {
    io_detail::check_keys(spec, where + "." + chip, {"supply_v", "ma"});
    ChipQuiescent q;
    q.supply_v = io_detail::require_number(spec, where + "." + chip, "supply_v");
    if (spec.contains("ma"))
      for (const auto& [mode, ma] : spec["ma"].items()) q.ma_by_mode[mode] = ma.get<double>();
    m.chips[chip] = q;
  }
  m.validate();
  return m;
}

// --- chain configuration -----------------------------------------------------

inline std::vector<MarginRule> margins_from_json(const json& j, const std::string& where) {
  if (j.is_string()) {
    if (j.get<std::string>() == "standard") return standard_margin_rules();
    throw InputError(where + ": unknown margin set '" + j.get<std::string>() + "'");
  }
  std::vector<MarginRule> rules;
  for (const auto& r : j) {
    io_detail::check_keys(r, where, {"name", "relation", "lhs", "rhs", "rhs2", "offset_v"});
    MarginRule rule;
    rule.name = io_detail::require_string(r, where, "name");
    std::string rel = io_detail::require_string(r, where, "relation");
    if (rel == "<")
      rule.relation = MarginRelation::LessThan;
    else if (rel == ">")
      rule.relation = MarginRelation::GreaterThan;
    else if (rel == "=diff")
      rule.relation = MarginRelation::EqualDiff;
    else
      throw InputError(where + ": relation must be one of '<', '>', '=diff'");
    rule.lhs = io_detail::require_string(r, where, "lhs");
    rule.rhs = io_detail::require_string(r, where, "rhs");
    if (r.contains("rhs2")) rule.rhs2 = r["rhs2"].get<std::string>();
    rule.offset_v = io_detail::number_or(r, "offset_v", 0.0);
    rules.push_back(rule);
  }
  return rules;
}

// Chain configuration: declared rail voltages first, then the chain specs are
// compiled against them (cross-rail heads need the voltages).
inline ChainConfig chain_config_from_json(const json& j, const std::string& where,
                                          const std::string& base_file) {
  io_detail::check_keys(j, where, {"name", "vci_v", "rails", "margins"});
  ChainConfig cfg;
  cfg.name = j.contains("name") ? j["name"].get<std::string>() : where;
  cfg.vci_v = io_detail::require_number(j, where, "vci_v");
  if (!j.contains("rails")) throw InputError(where + ": missing key 'rails'");

  std::map<std::string, double> declared;
  declared["VCI"] = cfg.vci_v;
  for (const auto& [rail, spec] : j["rails"].items())
    declared[rail] = io_detail::require_number(spec, where + "." + rail, "voltage_v");

  auto rail_volts = [&](const std::string& rail) {
    auto it = declared.find(rail);
    if (it == declared.end())
      throw InputError(where + ": chain references undeclared rail '" + rail + "'");
    return it->second;
  };

  for (const auto& [rail, spec] : j["rails"].items()) {
    io_detail::check_keys(spec, where + "." + rail,
                          {"spec", "voltage_v", "load_ma", "boost_eta", "boost_curve"});
    ConversionChain chain =
        parse_chain_spec(rail, io_detail::require_string(spec, where + "." + rail, "spec"),
                         declared[rail], rail_volts);
    // attach boost efficiency data to any inductive boost stages
    for (auto& stage : chain.stages) {
      if (auto* boost = std::get_if<InductiveBoost>(&stage)) {
        if (spec.contains("boost_curve")) {
          boost->curve = load_curve_file(
              io_detail::resolve_path(base_file, spec["boost_curve"].get<std::string>()));
        } else if (spec.contains("boost_eta")) {
          boost->flat_eta = spec["boost_eta"].get<double>();
        } else {
          boost->flat_eta = kDefaultBoostEta;  // synthetic fallback
        }
      }
    }
    cfg.chains[rail] = chain;
    double load = io_detail::number_or(spec, "load_ma", 0.0);
    if (load > 0.0) cfg.rail_loads_ma[rail] = load;
  }

  cfg.margins = j.contains("margins") ? margins_from_json(j["margins"], where)
                                      : standard_margin_rules();
  return cfg;
}

inline ChainConfig load_chain_config(const std::string& path) {
  json j = io_detail::parse_file(path);
  return chain_config_from_json(j, path, path);
}

// --- supply plan -------------------------------------------------------------

struct SupplySetup {
  SupplyPlan plan;
  std::optional<EfficiencyCurve> pmic_curve;
  std::optional<EfficiencyCurve> ddic_curve;
};

inline SupplySetup supply_from_json(const json& j, const std::string& where,
                                    const std::string& base_file) {
  io_detail::check_keys(j, where,
                        {"emission_source", "rail_symmetry", "pvdd_v", "pvee_steps_v",
                         "diode", "pmic_curve", "ddic_curve", "inductor"});
  SupplySetup setup;
  SupplyPlan& plan = setup.plan;
  std::string src = io_detail::require_string(j, where, "emission_source");
  if (src == "PowerChip")
    plan.emission_source = EmissionSource::PowerChip;
  else if (src == "DriverChip")
    plan.emission_source = EmissionSource::DriverChip;
  else
    throw InputError(where + ": emission_source must be PowerChip or DriverChip");

  if (j.contains("rail_symmetry")) {
    std::string sym = j["rail_symmetry"].get<std::string>();
    if (sym == "Symmetric")
      plan.rail_symmetry = RailSymmetry::Symmetric;
    else if (sym == "Asymmetric")
      plan.rail_symmetry = RailSymmetry::Asymmetric;
    else
      throw InputError(where + ": rail_symmetry must be Symmetric or Asymmetric");
  }
  if (j.contains("pvdd_v")) plan.pvdd_v = j["pvdd_v"].get<double>();
  if (!j.contains("pvee_steps_v")) throw InputError(where + ": missing 'pvee_steps_v'");
  for (const auto& v : j["pvee_steps_v"]) plan.pvee_steps_v.push_back(v.get<double>());

  if (j.contains("diode")) {
    const json& d = j["diode"];
    io_detail::check_keys(d, where + ".diode", {"present", "vf_v"});
    bool present = d.contains("present") && d["present"].get<bool>();
    double vf = io_detail::number_or(d, "vf_v", 0.4);
    plan.diode = present ? DiodeDecision::with_diode(vf) : DiodeDecision::removable();
  }
  if (j.contains("pmic_curve"))
    setup.pmic_curve = load_curve_file(
        io_detail::resolve_path(base_file, j["pmic_curve"].get<std::string>()));
  if (j.contains("ddic_curve"))
    setup.ddic_curve = load_curve_file(
        io_detail::resolve_path(base_file, j["ddic_curve"].get<std::string>()));
  if (j.contains("inductor")) plan.inductor_key = j["inductor"].get<std::string>();
  plan.validate();
  return setup;
}

// --- full design document ----------------------------------------------------

// One self-contained design: panel, device models, calibration, driver-chip
// chain configuration and supply plan.
struct DesignDoc {
  PanelSpec panel;
  EvalModels models;
  std::optional<ChainConfig> chains;
  std::optional<SupplyPlan> supply;
};

inline Inductor inductor_from_json(const json& j, const std::string& where) {
  io_detail::check_keys(j, where, {"part", "inductance_uh", "i_rms_a", "dcr_ohm"});
  Inductor ind;
  ind.part = io_detail::require_string(j, where, "part");
  ind.inductance_uh = io_detail::require_number(j, where, "inductance_uh");
  ind.i_rms_a = io_detail::require_number(j, where, "i_rms_a");
  ind.dcr_ohm = io_detail::require_number(j, where, "dcr_ohm");
  ind.validate();
  return ind;
}

inline DesignDoc load_design_doc(const std::string& path) {
  json j = io_detail::parse_file(path);
  io_detail::check_keys(j, path,
                        {"panel", "oled", "tft", "digital", "quiescent", "chains",
                         "supply", "inductors", "vbt_v"});
  if (!j.contains("panel")) throw InputError(path + ": missing key 'panel'");

  DesignDoc doc;
  doc.panel = panel_from_json(j["panel"], path + ".panel");
  if (j.contains("oled")) doc.models.oled = oled_from_json(j["oled"], path + ".oled");
  if (j.contains("tft")) doc.models.tft = tft_from_json(j["tft"], path + ".tft");
  if (j.contains("digital"))
    doc.models.digital = digital_from_json(j["digital"], path + ".digital");
  if (j.contains("quiescent"))
    doc.models.quiescent = quiescent_from_json(j["quiescent"], path + ".quiescent");
  doc.models.vbt_v = io_detail::number_or(j, "vbt_v", 3.7);
  if (j.contains("inductors"))
    for (const auto& ind : j["inductors"]) {
      Inductor i = inductor_from_json(ind, path + ".inductors");
      doc.models.inductors[i.part] = i;
    }
  if (j.contains("chains"))
    doc.chains = chain_config_from_json(j["chains"], path + ".chains", path);
  if (j.contains("supply")) {
    SupplySetup setup = supply_from_json(j["supply"], path + ".supply", path);
    doc.supply = setup.plan;
    doc.models.pmic_curve = setup.pmic_curve;
    doc.models.ddic_curve = setup.ddic_curve;
  }
  return doc;
}

// --- timeline ----------------------------------------------------------------

// Timeline files are a JSON array of {t_ms, rail, action, source}.
inline RailTimeline load_timeline(const std::string& path) {
  json j = io_detail::parse_file(path);
  if (!j.is_array()) throw InputError(path + ": expected a JSON array of events");
  RailTimeline t;
  for (size_t i = 0; i < j.size(); ++i) {
    const json& e = j[i];
    std::string where = path + " event[" + std::to_string(i) + "]";
    io_detail::check_keys(e, where, {"t_ms", "rail", "action", "source"});
    RailEvent ev;
    ev.t_ms = io_detail::require_number(e, where, "t_ms");
    ev.rail = io_detail::require_string(e, where, "rail");
    std::string action = io_detail::require_string(e, where, "action");
    if (action == "On")
      ev.action = RailAction::On;
    else if (action == "Off")
      ev.action = RailAction::Off;
    else
      throw InputError(where + ": action must be On or Off");
    ev.source = source_from_string(io_detail::require_string(e, where, "source"));
    t.events.push_back(ev);
  }
  t.validate();
  return t;
}

// --- CSV inputs ----------------------------------------------------------------

// Measurements: mode,luminance_nits,apl,refresh_hz,measured_mw
inline std::vector<MeasurementRow> load_measurements(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  std::vector<MeasurementRow> rows;
  std::string line;
  int rownum = 0;
  while (std::getline(in, line)) {
    ++rownum;
    line = detail::trim(line);
    if (line.empty()) continue;
    auto fields = detail::split_csv_row(line);
    if (rownum == 1) {
      if (fields != std::vector<std::string>{"mode", "luminance_nits", "apl", "refresh_hz",
                                             "measured_mw"})
        throw InputError(path +
                         " row 1: expected header 'mode,luminance_nits,apl,refresh_hz,"
                         "measured_mw'");
      continue;
    }
    std::string where = path + " row " + std::to_string(rownum);
    if (fields.size() != 5) throw InputError(where + ": expected 5 fields");
    MeasurementRow r;
    r.mode = fields[0];
    r.luminance_nits = detail::parse_number(fields[1], where);
    r.apl = detail::parse_number(fields[2], where);
    r.refresh_hz = detail::parse_number(fields[3], where);
    r.measured_mw = detail::parse_number(fields[4], where);
    rows.push_back(r);
  }
  if (rows.empty()) throw InputError(path + ": no measurement rows");
  return rows;
}

// Trace: t_ms,mode,max_luminance_nits,apl,refresh_hz,battery_v
inline WorkloadTrace load_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  WorkloadTrace trace;
  std::string line;
  int rownum = 0;
  while (std::getline(in, line)) {
    ++rownum;
    line = detail::trim(line);
    if (line.empty()) continue;
    auto fields = detail::split_csv_row(line);
    if (rownum == 1) {
      if (fields != std::vector<std::string>{"t_ms", "mode", "max_luminance_nits", "apl",
                                             "refresh_hz", "battery_v"})
        throw InputError(path +
                         " row 1: expected header 't_ms,mode,max_luminance_nits,apl,"
                         "refresh_hz,battery_v'");
      continue;
    }
    std::string where = path + " row " + std::to_string(rownum);
    if (fields.size() != 6) throw InputError(where + ": expected 6 fields");
    TraceSample s;
    s.t_ms = detail::parse_number(fields[0], where);
    s.mode = fields[1];
    s.max_luminance_nits = detail::parse_number(fields[2], where);
    s.apl = detail::parse_number(fields[3], where);
    s.refresh_hz = detail::parse_number(fields[4], where);
    s.battery_v = detail::parse_number(fields[5], where);
    trace.samples.push_back(s);
  }
  trace.validate();
  return trace;
}

// --- search space --------------------------------------------------------------

inline SearchSpace load_search_space(const std::string& path) {
  json j = io_detail::parse_file(path);
  io_detail::check_keys(j, path,
                        {"chain_configs", "supply_options", "inductors", "refresh_hz",
                         "osc_mhz", "module_options"});
  SearchSpace space;
  if (j.contains("chain_configs"))
    for (const auto& c : j["chain_configs"]) {
      if (c.is_string())
        space.chain_configs.push_back(
            load_chain_config(io_detail::resolve_path(path, c.get<std::string>())));
      else
        space.chain_configs.push_back(chain_config_from_json(c, path, path));
    }
  if (j.contains("supply_options"))
    for (const auto& s : j["supply_options"]) {
      io_detail::check_keys(s, path + ".supply_options", {"name", "supply"});
      SupplyOption opt;
      opt.name = io_detail::require_string(s, path + ".supply_options", "name");
      SupplySetup setup = supply_from_json(s["supply"], path + ".supply_options", path);
      opt.plan = setup.plan;
      opt.pmic_curve = setup.pmic_curve;
      opt.ddic_curve = setup.ddic_curve;
      space.supply_options.push_back(opt);
    }
  if (j.contains("inductors"))
    for (const auto& i : j["inductors"])
      space.inductors.push_back(inductor_from_json(i, path + ".inductors"));
  if (j.contains("refresh_hz"))
    for (const auto& v : j["refresh_hz"]) space.refresh_hz.push_back(v.get<double>());
  if (j.contains("osc_mhz"))
    for (const auto& v : j["osc_mhz"]) space.osc_mhz.push_back(v.get<double>());
  if (j.contains("module_options"))
    for (const auto& [mode, subsets] : j["module_options"].items()) {
      std::vector<std::set<std::string>> options;
      for (const auto& subset : subsets) {
        std::set<std::string> s;
        for (const auto& m : subset) s.insert(m.get<std::string>());
        options.push_back(s);
      }
      space.module_options[mode] = options;
    }
  space.validate();
  return space;
}

// --- report output -------------------------------------------------------------

inline json report_to_json(const PowerReport& report) {
  json items = json::array();
  for (const auto& [label, mw] : report.items) items.push_back({{"label", label}, {"mw", mw}});
  return json{{"total_mw", report.total_mw},
              {"items", items},
              {"inputs_echo", report.inputs_echo},
              {"warnings", report.warnings}};
}

// Aligned-column text rendering, 6 significant digits.
inline std::string report_to_text(const PowerReport& report) {
  std::ostringstream os;
  os << std::setprecision(6);
  size_t width = 12;
  for (const auto& [label, mw] : report.items) width = std::max(width, label.size() + 2);
  for (const auto& [label, mw] : report.items)
    os << "  " << std::left << std::setw(static_cast<int>(width)) << label << std::right
       << std::setw(12) << mw << " mW\n";
  os << "  " << std::left << std::setw(static_cast<int>(width)) << "total" << std::right
     << std::setw(12) << report.total_mw << " mW\n";
  for (const auto& w : report.warnings) os << "  warning: " << w << "\n";
  return os.str();
}

}  // namespace railplan
