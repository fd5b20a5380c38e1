// Command-line front end: evaluation, validation, optimization, calibration
// fitting and feedback simulation, with machine-readable JSON output.
//
// Exit codes: 0 ok, 2 input error, 3 constraint violation, 4 infeasible
// optimization. Output on stdout is deterministic for identical inputs; the
// wall-clock timestamp goes to stderr only.

#include <chrono>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "railplan/railplan.hpp"

namespace {

using railplan::json;

constexpr const char* kVersion = "0.1.0";

// FNV-1a 64-bit content digest; bookkeeping only, not cryptographic.
std::string file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw railplan::InputError("cannot open '" + path + "'");
  std::uint64_t h = 1469598103934665603ull;
  char c;
  while (in.get(c)) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  std::ostringstream os;
  os << "fnv64:" << std::hex << h;
  return os.str();
}

struct Output {
  std::string command;
  std::vector<std::string> input_files;
  std::string format = "json";
  std::string out_path;

  json manifest() const {
    json inputs = json::object();
    for (const auto& f : input_files) inputs[f] = file_digest(f);
    return json{{"command", command},
                {"inputs", inputs},
                {"version", kVersion},
                {"deterministic", true}};
  }

  void emit(const json& body, const std::string& text_rendering) const {
    std::ostringstream os;
    if (format == "text") {
      os << text_rendering;
    } else {
      json doc = body;
      doc["manifest"] = manifest();
      os << doc.dump(2) << "\n";
    }
    if (out_path.empty()) {
      std::cout << os.str();
    } else {
      std::ofstream f(out_path);
      if (!f) throw railplan::InputError("cannot write '" + out_path + "'");
      f << os.str();
    }
    auto now = std::chrono::system_clock::now().time_since_epoch();
    std::cerr << "# completed at t=" << std::chrono::duration_cast<std::chrono::milliseconds>(now).count()
              << " ms since epoch\n";
  }
};

std::string format_sig6(double v) {
  std::ostringstream os;
  os << std::setprecision(6) << v;
  return os.str();
}

railplan::DesignDoc load_doc_with_overrides(const std::string& panel_path,
                                            const std::string& chains_path) {
  railplan::DesignDoc doc = railplan::load_design_doc(panel_path);
  if (!chains_path.empty()) doc.chains = railplan::load_chain_config(chains_path);
  if (!doc.chains)
    throw railplan::InputError("no chain configuration: provide one in the panel "
                               "document under 'chains' or via --chains");
  return doc;
}

int run_evaluate(const std::string& panel_path, const std::string& chains_path,
                 const std::string& mode_path, Output& out) {
  railplan::DesignDoc doc = load_doc_with_overrides(panel_path, chains_path);
  if (!doc.supply) throw railplan::InputError(panel_path + ": missing 'supply' section");
  auto modes = railplan::load_scenario(mode_path);

  auto violations = railplan::validate_config(*doc.chains);
  if (!violations.empty()) {
    std::ostringstream os;
    os << "configuration '" << doc.chains->name << "' is invalid:\n";
    for (const auto& v : violations)
      os << "  " << v.rule << "  slack " << format_sig6(v.slack_v) << " V  (" << v.detail
         << ")\n";
    throw railplan::ConstraintError(os.str());
  }

  std::vector<std::pair<railplan::ModeSpec, railplan::PowerReport>> reports;
  for (const auto& mode : modes)
    reports.emplace_back(mode, railplan::evaluate_mode(doc.panel, *doc.chains, *doc.supply,
                                                       mode, doc.models));

  json body;
  std::ostringstream text;
  text << std::setprecision(6);
  if (reports.size() == 1) {
    body["report"] = railplan::report_to_json(reports[0].second);
    text << "mode " << reports[0].first.mode << "\n"
         << railplan::report_to_text(reports[0].second);
  } else {
    json arr = json::array();
    for (const auto& [mode, report] : reports) {
      json entry = railplan::report_to_json(report);
      entry["mode"] = mode.mode;
      entry["duty"] = mode.duty;
      arr.push_back(entry);
      text << "mode " << mode.mode << " (duty " << mode.duty << ")\n"
           << railplan::report_to_text(report);
    }
    double scenario = railplan::weighted_scenario_power(reports);
    body["reports"] = arr;
    body["scenario_mw"] = scenario;
    text << "scenario total " << format_sig6(scenario) << " mW\n";
  }
  out.emit(body, text.str());
  return 0;
}

int run_crossover(const std::string& a_path, const std::string& b_path, Output& out) {
  auto a = railplan::load_curve_file(a_path);
  auto b = railplan::load_curve_file(b_path);
  auto loads = railplan::crossover(a, b);
  json body{{"crossovers_ma", loads}};
  std::ostringstream text;
  text << "crossovers_ma:";
  for (double x : loads) text << " " << format_sig6(x);
  text << "\n";
  out.emit(body, text.str());
  return 0;
}

int run_curve_check(const std::string& path, Output& out) {
  auto curve = railplan::load_curve_file(path);
  json body{{"ok", true},
            {"points", curve.points.size()},
            {"load_range_ma", {curve.min_load(), curve.max_load()}}};
  std::ostringstream text;
  text << "ok: " << curve.points.size() << " points, load " << format_sig6(curve.min_load())
       << ".." << format_sig6(curve.max_load()) << " mA\n";
  out.emit(body, text.str());
  return 0;
}

int run_validate_sequence(const std::string& timeline_path, const std::string& net,
                          double vf, Output& out) {
  auto timeline = railplan::load_timeline(timeline_path);
  auto contention = railplan::detect_contention(timeline, net);
  auto decision = railplan::diode_decision(timeline, net, vf);
  json intervals = json::array();
  for (const auto& iv : contention)
    intervals.push_back({{"start_ms", iv.start_ms}, {"end_ms", iv.end_ms}});
  json body{{"net", net},
            {"contention", intervals},
            {"diode", decision.required ? "required" : "removable"}};
  if (decision.required) body["vf_v"] = decision.vf_v;
  std::ostringstream text;
  text << "net " << net << ": " << contention.size() << " contention interval(s), diode "
       << (decision.required ? "required" : "removable") << "\n";
  out.emit(body, text.str());
  return 0;
}

int run_fit(const std::string& meas_path, const std::string& free_arg,
            const std::vector<std::string>& fixed_args, const std::string& panel_path,
            Output& out) {
  auto rows = railplan::load_measurements(meas_path);

  std::vector<std::string> free_names;
  std::istringstream fs(free_arg);
  std::string name;
  while (std::getline(fs, name, ',')) free_names.push_back(name);

  std::map<std::string, double> fixed;
  for (const auto& kv : fixed_args) {
    size_t eq = kv.find('=');
    if (eq == std::string::npos)
      throw railplan::InputError("--fixed expects name=value, got '" + kv + "'");
    fixed[kv.substr(0, eq)] = std::stod(kv.substr(eq + 1));
  }
  // the standby constant comes from the design document's quiescent model
  // unless the caller fits or pins it explicitly
  if (!panel_path.empty() && !fixed.count("base_standby") &&
      std::find(free_names.begin(), free_names.end(), "base_standby") == free_names.end()) {
    railplan::DesignDoc doc = railplan::load_design_doc(panel_path);
    double standby_mw = 0.0;
    for (const auto& [chip, q] : doc.models.quiescent.chips)
      standby_mw += q.current_ma(railplan::mode_names::kStandby) * q.supply_v;
    fixed["base_standby"] = standby_mw;
  }

  auto fit = railplan::fit_calibration(rows, free_names, fixed);

  json residuals = json::array();
  for (size_t i = 0; i < rows.size(); ++i)
    residuals.push_back({{"mode", rows[i].mode},
                         {"measured_mw", rows[i].measured_mw},
                         {"predicted_mw", fit.predict_mw(rows[i])},
                         {"residual_mw", fit.residuals[i]}});
  json body{{"coefficients", fit.coefficients},
            {"clipped", fit.clipped},
            {"rows", residuals}};
  std::ostringstream text;
  text << std::setprecision(6);
  for (const auto& [cname, value] : fit.coefficients)
    text << "  " << cname << " = " << value << "\n";
  for (size_t i = 0; i < rows.size(); ++i)
    text << "  row " << i << " (" << rows[i].mode << "): measured "
         << rows[i].measured_mw << " predicted " << format_sig6(fit.predict_mw(rows[i]))
         << " residual " << format_sig6(fit.residuals[i]) << "\n";
  out.emit(body, text.str());
  return 0;
}

int run_simulate(const std::string& panel_path, const std::string& chains_path,
                 const std::string& trace_path, const std::string& mode_path,
                 bool static_pvee, Output& out) {
  railplan::DesignDoc doc = load_doc_with_overrides(panel_path, chains_path);
  if (!doc.supply) throw railplan::InputError(panel_path + ": missing 'supply' section");
  auto trace = railplan::load_trace(trace_path);
  auto mode_list = railplan::load_scenario(mode_path);
  std::map<std::string, railplan::ModeSpec> table;
  for (const auto& m : mode_list) table[m.mode] = m;

  railplan::SupplyPlan plan = *doc.supply;
  if (static_pvee) plan.pvee_steps_v = {plan.static_pvee_v()};

  auto sim = railplan::simulate_feedback(doc.panel, plan, *doc.chains, trace, doc.models,
                                         table);
  json samples = json::array();
  for (const auto& s : sim.samples)
    samples.push_back({{"t_ms", s.t_ms},
                       {"pvee_v", s.pvee_v},
                       {"power_mw", s.power_mw},
                       {"span_violated", s.span_violated}});
  json body{{"samples", samples},
            {"total_energy_mj", sim.total_energy_mj},
            {"violations", sim.violations}};
  std::ostringstream text;
  text << std::setprecision(6);
  for (const auto& s : sim.samples)
    text << "  t=" << s.t_ms << " ms  PVEE " << s.pvee_v << " V  " << s.power_mw << " mW"
         << (s.span_violated ? "  SPAN VIOLATED" : "") << "\n";
  text << "total energy " << format_sig6(sim.total_energy_mj) << " mJ, " << sim.violations
       << " violation(s)\n";
  out.emit(body, text.str());
  return 0;
}

int run_optimize(const std::string& panel_path, const std::string& space_path,
                 const std::string& mode_path, Output& out) {
  railplan::DesignDoc doc = railplan::load_design_doc(panel_path);
  auto space = railplan::load_search_space(space_path);
  auto modes = railplan::load_scenario(mode_path);

  auto result = railplan::optimize(doc.panel, space, modes, doc.models);

  json mode_reports = json::array();
  for (const auto& [mode, report] : result.mode_reports)
    mode_reports.push_back({{"mode", mode.mode},
                            {"duty", mode.duty},
                            {"refresh_hz", mode.refresh_hz},
                            {"osc_mhz", mode.osc_mhz},
                            {"total_mw", report.total_mw}});
  json body{{"best", {{"id", result.best.id.to_string()},
                      {"description", result.description}}},
            {"mode_reports", mode_reports},
            {"scenario_mw", result.scenario_mw},
            {"candidates", {{"total", result.candidates_total},
                            {"feasible", result.candidates_feasible}}}};
  std::ostringstream text;
  text << "best " << result.description << "\n  scenario "
       << format_sig6(result.scenario_mw) << " mW (" << result.candidates_feasible << "/"
       << result.candidates_total << " candidates feasible)\n";
  out.emit(body, text.str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"power-delivery modeling and optimization for AMOLED wearable displays"};
  app.require_subcommand(1);

  std::string panel, chains, mode, trace, curve_a, curve_b, curve, timeline, net = "PVEE";
  std::string measurements, free_names, space, format = "json", out_path;
  std::vector<std::string> fixed_args;
  double vf = 0.4;
  bool static_pvee = false;

  auto add_io = [&](CLI::App* cmd) {
    cmd->add_option("--format", format, "json or text")
        ->check(CLI::IsMember({"json", "text"}));
    cmd->add_option("--out", out_path, "write output to a file instead of stdout");
  };

  auto* cmd_eval = app.add_subcommand("evaluate", "evaluate mode power for a design");
  cmd_eval->add_option("--panel", panel, "design document JSON")->required();
  cmd_eval->add_option("--chains", chains, "chain configuration JSON (overrides panel's)");
  cmd_eval->add_option("--mode", mode, "mode or scenario JSON")->required();
  add_io(cmd_eval);

  auto* cmd_cross = app.add_subcommand("crossover", "find efficiency-curve intersections");
  cmd_cross->add_option("--curve-a", curve_a, "curve CSV")->required();
  cmd_cross->add_option("--curve-b", curve_b, "curve CSV")->required();
  add_io(cmd_cross);

  auto* cmd_check = app.add_subcommand("curve-check", "validate a curve CSV");
  cmd_check->add_option("--curve", curve, "curve CSV")->required();
  add_io(cmd_check);

  auto* cmd_seq = app.add_subcommand("validate-sequence",
                                     "detect contention and decide the diode");
  cmd_seq->add_option("--timeline", timeline, "timeline JSON")->required();
  cmd_seq->add_option("--net", net, "net to analyze (default PVEE)");
  cmd_seq->add_option("--vf", vf, "diode forward drop in V (default 0.4)");
  add_io(cmd_seq);

  auto* cmd_fit = app.add_subcommand("fit", "least-squares calibration of coefficients");
  cmd_fit->add_option("--measurements", measurements, "measurements CSV")->required();
  cmd_fit->add_option("--free", free_names, "comma-separated coefficient names")->required();
  cmd_fit->add_option("--fixed", fixed_args, "name=value coefficients held fixed");
  cmd_fit->add_option("--panel", panel, "design document (pins base_standby from quiescent)");
  add_io(cmd_fit);

  auto* cmd_sim = app.add_subcommand("simulate", "replay a workload trace with dynamic PVEE");
  cmd_sim->add_option("--panel", panel, "design document JSON")->required();
  cmd_sim->add_option("--chains", chains, "chain configuration JSON (overrides panel's)");
  cmd_sim->add_option("--trace", trace, "trace CSV")->required();
  cmd_sim->add_option("--mode", mode, "mode table (scenario JSON)")->required();
  cmd_sim->add_flag("--static-pvee", static_pvee, "pin PVEE to the deepest step");
  add_io(cmd_sim);

  auto* cmd_opt = app.add_subcommand("optimize", "exhaustive search for minimum power");
  cmd_opt->add_option("--panel", panel, "design document JSON")->required();
  cmd_opt->add_option("--space", space, "search space JSON")->required();
  cmd_opt->add_option("--mode", mode, "scenario JSON with duties")->required();
  add_io(cmd_opt);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  Output out;
  out.format = format;
  out.out_path = out_path;

  try {
    if (cmd_eval->parsed()) {
      out.command = "evaluate";
      out.input_files = {panel, mode};
      if (!chains.empty()) out.input_files.push_back(chains);
      return run_evaluate(panel, chains, mode, out);
    }
    if (cmd_cross->parsed()) {
      out.command = "crossover";
      out.input_files = {curve_a, curve_b};
      return run_crossover(curve_a, curve_b, out);
    }
    if (cmd_check->parsed()) {
      out.command = "curve-check";
      out.input_files = {curve};
      return run_curve_check(curve, out);
    }
    if (cmd_seq->parsed()) {
      out.command = "validate-sequence";
      out.input_files = {timeline};
      return run_validate_sequence(timeline, net, vf, out);
    }
    if (cmd_fit->parsed()) {
      out.command = "fit";
      out.input_files = {measurements};
      if (!panel.empty()) out.input_files.push_back(panel);
      return run_fit(measurements, free_names, fixed_args, panel, out);
    }
    if (cmd_sim->parsed()) {
      out.command = "simulate";
      out.input_files = {panel, trace, mode};
      if (!chains.empty()) out.input_files.push_back(chains);
      return run_simulate(panel, chains, trace, mode, static_pvee, out);
    }
    if (cmd_opt->parsed()) {
      out.command = "optimize";
      out.input_files = {panel, space, mode};
      return run_optimize(panel, space, mode, out);
    }
  } catch (const railplan::ConstraintError& e) {
    std::cerr << "constraint violation: " << e.what() << "\n";
    return 3;
  } catch (const railplan::InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return 4;
  } catch (const railplan::InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
