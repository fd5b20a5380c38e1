#pragma once

// Exhaustive search over discrete design spaces for minimum scenario power,
// supply-source selection by efficiency comparison, and simulation of the
// feedback architecture (dynamic PVEE adjustment) over workload traces.

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "railplan/core.hpp"
#include "railplan/curves.hpp"
#include "railplan/power.hpp"

namespace railplan {

// Picks the more efficient emission supply at a load. Ties go to the power
// chip (it scales better toward heavy loads). Loads outside both sampled
// ranges are a domain error; outside one range the clamped value competes.
inline EmissionSource select_supply(double load_ma, const EfficiencyCurve& ddic,
                                    const EfficiencyCurve& pmic) {
  bool in_ddic = load_ma >= ddic.min_load() && load_ma <= ddic.max_load();
  bool in_pmic = load_ma >= pmic.min_load() && load_ma <= pmic.max_load();
  if (!in_ddic && !in_pmic)
    throw InputError("select_supply: load " + std::to_string(load_ma) +
                     " mA is outside both sampled ranges");
  double eta_d = efficiency_at(ddic, load_ma).value;
  double eta_p = efficiency_at(pmic, load_ma).value;
  return eta_d > eta_p ? EmissionSource::DriverChip : EmissionSource::PowerChip;
}

// One selectable supply arrangement, optionally carrying its own chip curves
// (so spaces can compare chip vendors, not just settings).
struct SupplyOption {
  std::string name;
  SupplyPlan plan;
  std::optional<EfficiencyCurve> pmic_curve;
  std::optional<EfficiencyCurve> ddic_curve;
};

// The discrete space the optimizer enumerates. Every dimension must be
// non-empty; refresh/osc choices apply to all display-on modes of the
// scenario, module subsets are chosen per mode name.
struct SearchSpace {
  std::vector<ChainConfig> chain_configs;
  std::vector<SupplyOption> supply_options;
  std::vector<Inductor> inductors;
  std::vector<double> refresh_hz;
  std::vector<double> osc_mhz;
  std::map<std::string, std::vector<std::set<std::string>>> module_options;

  void validate() const {
    if (chain_configs.empty() || supply_options.empty() || inductors.empty() ||
        refresh_hz.empty() || osc_mhz.empty())
      throw InputError("search space: every dimension must be non-empty");
    for (const auto& [mode, subsets] : module_options)
      if (subsets.empty())
        throw InputError("search space: module options for mode '" + mode +
                         "' must be non-empty");
  }

  size_t candidate_count(size_t n_modes_with_options) const {
    size_t n = chain_configs.size() * supply_options.size() * inductors.size() *
               refresh_hz.size() * osc_mhz.size();
    (void)n_modes_with_options;
    for (const auto& [mode, subsets] : module_options) n *= subsets.size();
    return n;
  }
};

// Index tuple identifying one candidate; lexicographic order is the
// documented tie-break of last resort.
struct CandidateId {
  std::vector<size_t> indices;

  bool operator<(const CandidateId& other) const { return indices < other.indices; }
  bool operator==(const CandidateId& other) const { return indices == other.indices; }

  std::string to_string() const {
    std::ostringstream os;
    for (size_t i = 0; i < indices.size(); ++i) os << (i ? "." : "") << indices[i];
    return os.str();
  }
};

struct Candidate {
  CandidateId id;
  size_t chain_idx = 0, supply_idx = 0, inductor_idx = 0, refresh_idx = 0, osc_idx = 0;
  std::map<std::string, std::set<std::string>> modules_by_mode;
};

struct OptimizeResult {
  Candidate best;
  std::string description;
  std::vector<std::pair<ModeSpec, PowerReport>> mode_reports;
  double scenario_mw = 0.0;
  size_t candidates_total = 0;
  size_t candidates_feasible = 0;
};

namespace detail {

inline ModeSpec apply_candidate_mode(const ModeSpec& base, const SearchSpace& space,
                                     const Candidate& cand) {
  ModeSpec mode = base;
  if (!mode.is_standby() && mode.refresh_hz > 0.0)
    mode.refresh_hz = space.refresh_hz[cand.refresh_idx];
  if (!mode.is_standby() && mode.osc_mhz > 0.0)
    mode.osc_mhz = space.osc_mhz[cand.osc_idx];
  auto it = cand.modules_by_mode.find(mode.mode);
  if (it != cand.modules_by_mode.end()) mode.modules_enabled = it->second;
  return mode;
}

inline EvalModels apply_candidate_models(const EvalModels& base, const SearchSpace& space,
                                         const Candidate& cand) {
  EvalModels models = base;
  const SupplyOption& opt = space.supply_options[cand.supply_idx];
  if (opt.pmic_curve) models.pmic_curve = opt.pmic_curve;
  if (opt.ddic_curve) models.ddic_curve = opt.ddic_curve;
  const Inductor& ind = space.inductors[cand.inductor_idx];
  models.inductors[ind.part] = ind;
  return models;
}

inline SupplyPlan apply_candidate_plan(const SearchSpace& space, const Candidate& cand) {
  SupplyPlan plan = space.supply_options[cand.supply_idx].plan;
  plan.inductor_key = space.inductors[cand.inductor_idx].part;
  return plan;
}

}  // namespace detail

// Evaluates one candidate against every scenario mode; returns nothing when
// any mode is infeasible, recording why.
inline std::optional<OptimizeResult> evaluate_candidate(
    const PanelSpec& panel, const SearchSpace& space, const Candidate& cand,
    const std::vector<ModeSpec>& modes, const EvalModels& base_models,
    std::string* why_infeasible = nullptr) {
  const ChainConfig& cfg = space.chain_configs[cand.chain_idx];
  EvalModels models = detail::apply_candidate_models(base_models, space, cand);
  SupplyPlan plan = detail::apply_candidate_plan(space, cand);

  OptimizeResult r;
  r.best = cand;
  try {
    for (const ModeSpec& base_mode : modes) {
      ModeSpec mode = detail::apply_candidate_mode(base_mode, space, cand);
      r.mode_reports.emplace_back(mode, evaluate_mode(panel, cfg, plan, mode, models));
    }
  } catch (const ConstraintError& e) {
    if (why_infeasible) *why_infeasible = e.what();
    return std::nullopt;
  }
  r.scenario_mw = weighted_scenario_power(r.mode_reports);

  std::ostringstream desc;
  desc << "config=" << cfg.name << " supply=" << space.supply_options[cand.supply_idx].name
       << " inductor=" << space.inductors[cand.inductor_idx].part
       << " refresh=" << space.refresh_hz[cand.refresh_idx] << "Hz"
       << " osc=" << space.osc_mhz[cand.osc_idx] << "MHz";
  r.description = desc.str();
  return r;
}

// Exhaustively enumerates the space, discards infeasible candidates, and
// returns the feasible one minimizing duty-weighted scenario power. Ties
// break toward fewer total conversion stages, then lexicographic candidate
// id. Throws InfeasibleError listing binding constraints when nothing fits.
inline OptimizeResult optimize(const PanelSpec& panel, const SearchSpace& space,
                               const std::vector<ModeSpec>& modes,
                               const EvalModels& base_models) {
  space.validate();
  if (modes.empty()) throw InputError("optimize: scenario has no modes");

  std::vector<std::string> option_modes;  // modes with module choices, sorted
  for (const auto& [mode, subsets] : space.module_options) option_modes.push_back(mode);

  std::optional<OptimizeResult> best;
  size_t best_stages = 0;
  size_t total = 0, feasible = 0;
  std::map<std::string, size_t> rejections;

  std::vector<size_t> module_idx(option_modes.size(), 0);
  // advances the per-mode subset odometer; false once it wraps around
  auto advance_modules = [&]() {
    for (size_t m = option_modes.size(); m-- > 0;) {
      if (++module_idx[m] < space.module_options.at(option_modes[m]).size()) return true;
      module_idx[m] = 0;
    }
    return false;
  };

  for (size_t ci = 0; ci < space.chain_configs.size(); ++ci)
    for (size_t si = 0; si < space.supply_options.size(); ++si)
      for (size_t ii = 0; ii < space.inductors.size(); ++ii)
        for (size_t ri = 0; ri < space.refresh_hz.size(); ++ri)
          for (size_t oi = 0; oi < space.osc_mhz.size(); ++oi) {
            std::fill(module_idx.begin(), module_idx.end(), 0);
            do {
              Candidate cand;
              cand.chain_idx = ci;
              cand.supply_idx = si;
              cand.inductor_idx = ii;
              cand.refresh_idx = ri;
              cand.osc_idx = oi;
              cand.id.indices = {ci, si, ii, ri, oi};
              for (size_t m = 0; m < option_modes.size(); ++m) {
                cand.id.indices.push_back(module_idx[m]);
                cand.modules_by_mode[option_modes[m]] =
                    space.module_options.at(option_modes[m])[module_idx[m]];
              }

              ++total;
              std::string why;
              auto result =
                  evaluate_candidate(panel, space, cand, modes, base_models, &why);
              if (!result) {
                ++rejections[why.substr(0, why.find(':'))];
                continue;
              }
              ++feasible;
              size_t stages = space.chain_configs[ci].total_stages();
              bool better;
              if (!best)
                better = true;
              else if (result->scenario_mw != best->scenario_mw)
                better = result->scenario_mw < best->scenario_mw;
              else if (stages != best_stages)
                better = stages < best_stages;
              else
                better = result->best.id < best->best.id;
              if (better) {
                best = std::move(result);
                best_stages = stages;
              }
            } while (advance_modules());
          }

  if (!best) {
    std::ostringstream os;
    os << "no feasible candidate among " << total << "; binding constraints:";
    for (const auto& [what, count] : rejections)
      os << " [" << what << " x" << count << "]";
    throw InfeasibleError(os.str());
  }
  best->candidates_total = total;
  best->candidates_feasible = feasible;
  return *best;
}

// --- workload trace simulation -----------------------------------------------

struct TraceSample {
  double t_ms = 0.0;
  std::string mode;
  double max_luminance_nits = 0.0;
  double apl = 0.0;
  double refresh_hz = 0.0;
  double battery_v = 0.0;
};

struct WorkloadTrace {
  std::vector<TraceSample> samples;

  void validate() const {
    if (samples.empty()) throw InputError("trace has no samples");
    for (size_t i = 0; i < samples.size(); ++i) {
      if (samples[i].battery_v <= 0.0)
        throw InputError("trace sample " + std::to_string(i) + ": battery_v must be > 0");
      if (i > 0 && !(samples[i].t_ms > samples[i - 1].t_ms))
        throw InputError("trace times must be strictly increasing");
    }
  }
};

struct SimSample {
  double t_ms = 0.0;
  double pvee_v = 0.0;
  double power_mw = 0.0;
  bool span_violated = false;
};

struct SimResult {
  std::vector<SimSample> samples;
  double total_energy_mj = 0.0;
  size_t violations = 0;
};

// Replays a workload trace against the feedback architecture: per sample, the
// driver recognizes the frame's maximum luminance, derives the required rail
// span, and programs the highest (closest to zero) PVEE step that still
// satisfies it. Energy integrates left-rectangle over sample intervals. When
// no step satisfies the span the most negative one is used and the sample is
// flagged; simulation continues.
inline SimResult simulate_feedback(const PanelSpec& panel, const SupplyPlan& plan,
                                   const ChainConfig& cfg, const WorkloadTrace& trace,
                                   const EvalModels& base_models,
                                   const std::map<std::string, ModeSpec>& mode_table) {
  trace.validate();
  plan.validate();

  SimResult result;
  for (const TraceSample& s : trace.samples) {
    auto mode_it = mode_table.find(s.mode);
    if (mode_it == mode_table.end())
      throw InputError("trace references unknown mode '" + s.mode + "'");
    ModeSpec mode = mode_it->second;
    mode.luminance_nits = s.max_luminance_nits;
    mode.pixel_on_ratio = s.apl;
    mode.refresh_hz = s.refresh_hz;

    EvalModels models = base_models;
    models.vbt_v = s.battery_v;

    double pvdd = resolve_pvdd(cfg, plan);
    double vf = plan.diode.required ? plan.diode.vf_v : 0.0;
    double span_needed =
        required_rail_span(models.oled, models.tft,
                           emission_current_ma(panel, mode)) + vf;

    SimSample out;
    out.t_ms = s.t_ms;
    out.pvee_v = plan.pvee_steps_v.back();
    out.span_violated = true;
    for (double step : plan.pvee_steps_v) {
      if (pvdd - step + 1e-12 >= span_needed) {
        out.pvee_v = step;
        out.span_violated = false;
        break;
      }
    }
    if (out.span_violated) ++result.violations;

    // a flagged sample still runs at the deepest available step; the span
    // guard is relaxed because the violation is already recorded
    PowerReport report = evaluate_mode(panel, cfg, plan, mode, models, out.pvee_v,
                                       /*enforce_span=*/!out.span_violated);
    out.power_mw = report.total_mw;
    result.samples.push_back(out);
  }

  for (size_t i = 0; i + 1 < trace.samples.size(); ++i) {
    double dt_ms = trace.samples[i + 1].t_ms - trace.samples[i].t_ms;
    result.total_energy_mj += result.samples[i].power_mw * dt_ms * 1e-3;
  }
  return result;
}

}  // namespace railplan
