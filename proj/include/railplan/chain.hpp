#pragma once

// Converter stages and rail-generation chains inside the power and driver
// chips. Voltage laws run on exact rationals so reachability checks are
// exact; efficiencies are evaluated in floating point.
//
// Stage kinds and their ideal laws:
//   ChargePump(m)        v_out = m * v_in, m in {-2,-1,1,2}
//                        eta   = |v_out| / (|m| * |v_in|)
//   InductiveBoost(r)    v_out = r * v_in, rational r >= 1
//                        eta   = attached measured curve, else flat default
//   LinearRegulator(t,d) v_out = t, requires |t| <= |v_in| - d, same sign
//                        eta   = |v_out| / |v_in|
//   Bypass               v_out = v_in, eta = 1

#include <boost/rational.hpp>

#include <cctype>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "railplan/core.hpp"
#include "railplan/curves.hpp"

namespace railplan {

using Ratio = boost::rational<std::int64_t>;

// Quantizes a decimal voltage/ratio to an exact rational (1e-4 grid).
// All voltages in this domain carry at most a few decimals.
inline Ratio to_ratio(double value) {
  const std::int64_t denom = 10000;
  double scaled = value * static_cast<double>(denom);
  auto num = static_cast<std::int64_t>(scaled >= 0 ? scaled + 0.5 : scaled - 0.5);
  return Ratio(num, denom);
}

inline double to_double(const Ratio& r) {
  return static_cast<double>(r.numerator()) / static_cast<double>(r.denominator());
}

inline constexpr double kDefaultDropoutV = 0.1;
inline constexpr double kDefaultBoostEta = 0.85;

struct InductiveBoost {
  Ratio ratio{1};
  std::optional<EfficiencyCurve> curve;  // measured, load-dependent
  std::optional<double> flat_eta;        // fallback when no curve attached
};

struct ChargePump {
  int multiplier = 1;  // -2, -1, 1 or 2
};

struct LinearRegulator {
  double target_v = 0.0;
  double dropout_v = kDefaultDropoutV;
};

struct Bypass {};

using Stage = std::variant<InductiveBoost, ChargePump, LinearRegulator, Bypass>;

inline std::string stage_name(const Stage& stage) {
  return std::visit(
      [](const auto& s) -> std::string {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, InductiveBoost>) {
          std::ostringstream os;
          os << "Boost(x" << s.ratio.numerator();
          if (s.ratio.denominator() != 1) os << "/" << s.ratio.denominator();
          os << ")";
          return os.str();
        } else if constexpr (std::is_same_v<T, ChargePump>) {
          return "Pump(x" + std::to_string(s.multiplier) + ")";
        } else if constexpr (std::is_same_v<T, LinearRegulator>) {
          std::ostringstream os;
          os << "LDO(" << s.target_v << ")";
          return os.str();
        } else {
          return "Bypass";
        }
      },
      stage);
}

inline void validate_stage(const Stage& stage) {
  std::visit(
      [](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, InductiveBoost>) {
          if (s.ratio < Ratio(1))
            throw InputError("boost ratio must be >= 1 (step-up)");
          if (s.flat_eta && !(*s.flat_eta > 0.0 && *s.flat_eta <= 1.0))
            throw InputError("boost flat efficiency must be in (0,1]");
        } else if constexpr (std::is_same_v<T, ChargePump>) {
          int m = s.multiplier;
          if (m != -2 && m != -1 && m != 1 && m != 2)
            throw InputError("charge pump multiplier must be one of {-2,-1,1,2}");
        } else if constexpr (std::is_same_v<T, LinearRegulator>) {
          if (s.dropout_v < 0.0)
            throw InputError("regulator dropout must be >= 0 V");
        }
      },
      stage);
}

// Ideal stage output voltage, exact arithmetic. Throws ConstraintError when
// a regulator lacks headroom (names the deficit in volts).
inline Ratio stage_output_exact(const Stage& stage, const Ratio& v_in) {
  if (v_in == Ratio(0)) throw InputError("stage input voltage must be nonzero");
  return std::visit(
      [&](const auto& s) -> Ratio {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, InductiveBoost>) {
          return s.ratio * v_in;
        } else if constexpr (std::is_same_v<T, ChargePump>) {
          return Ratio(s.multiplier) * v_in;
        } else if constexpr (std::is_same_v<T, LinearRegulator>) {
          Ratio target = to_ratio(s.target_v);
          Ratio dropout = to_ratio(s.dropout_v);
          bool sign_ok = (target >= Ratio(0)) == (v_in >= Ratio(0));
          Ratio abs_in = v_in < Ratio(0) ? -v_in : v_in;
          Ratio abs_t = target < Ratio(0) ? -target : target;
          if (!sign_ok || abs_t > abs_in - dropout) {
            double deficit = to_double(abs_t - (abs_in - dropout));
            std::ostringstream os;
            os << "regulator headroom violated: target " << s.target_v
               << " V from " << to_double(v_in) << " V input with dropout "
               << s.dropout_v << " V (deficit " << deficit << " V)";
            throw ConstraintError(os.str());
          }
          return target;
        } else {
          return v_in;
        }
      },
      stage);
}

inline double stage_output(const Stage& stage, double v_in_v) {
  return to_double(stage_output_exact(stage, to_ratio(v_in_v)));
}

// Stage efficiency at an operating point consistent with stage_output.
// `load_ma` is only consulted by measured boost curves.
inline Efficiency stage_efficiency(const Stage& stage, double v_in_v, double v_out_v,
                                   double load_ma) {
  return std::visit(
      [&](const auto& s) -> Efficiency {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, InductiveBoost>) {
          if (s.curve) return efficiency_at(*s.curve, load_ma);
          if (s.flat_eta) return {*s.flat_eta, false};
          throw InputError("inductive boost has neither a measured curve nor a flat efficiency");
        } else if constexpr (std::is_same_v<T, ChargePump>) {
          double ideal = std::abs(s.multiplier) * std::abs(v_in_v);
          return {std::abs(v_out_v) / ideal, false};
        } else if constexpr (std::is_same_v<T, LinearRegulator>) {
          return {std::abs(v_out_v) / std::abs(v_in_v), false};
        } else {
          return {1.0, false};
        }
      },
      stage);
}

// One rail-generation chain: ordered stages from an input rail to a declared
// output rail and target voltage.
struct ConversionChain {
  std::string input_rail;
  std::vector<Stage> stages;
  std::string output_rail;
  double target_voltage_v = 0.0;

  void validate() const {
    if (stages.empty())
      throw InputError("chain for " + output_rail + " has no stages");
    for (const auto& s : stages) validate_stage(s);
  }
};

// Chain efficiency: product of stage efficiencies with voltages propagated
// left to right from the given input voltage.
inline Efficiency chain_efficiency(const ConversionChain& chain, double v_in_v,
                                   double load_ma) {
  chain.validate();
  Ratio v = to_ratio(v_in_v);
  double eta = 1.0;
  bool extrapolated = false;
  for (const auto& stage : chain.stages) {
    Ratio v_out = stage_output_exact(stage, v);
    Efficiency e = stage_efficiency(stage, to_double(v), to_double(v_out), load_ma);
    eta *= e.value;
    extrapolated = extrapolated || e.extrapolated;
    v = v_out;
  }
  return {eta, extrapolated};
}

// --- configuration-level validation -----------------------------------------

enum class MarginRelation { LessThan, GreaterThan, EqualDiff };

// A named voltage-margin rule between rails. LessThan: V[lhs] < V[rhs] +
// offset. GreaterThan: V[lhs] > V[rhs] + offset. EqualDiff: V[lhs] ==
// V[rhs] - V[rhs2].
struct MarginRule {
  std::string name;
  MarginRelation relation = MarginRelation::LessThan;
  std::string lhs;
  std::string rhs;
  std::string rhs2;       // EqualDiff only
  double offset_v = 0.0;  // applied to rhs
};

// The standard driver-chip margin rule set.
inline std::vector<MarginRule> standard_margin_rules() {
  return {
      {"VGMP<AVDD-0.3", MarginRelation::LessThan, "VGMP", "AVDD", "", -0.3},
      {"VGHR<VGH-0.3", MarginRelation::LessThan, "VGHR", "VGH", "", -0.3},
      {"VREF>VCL+0.3", MarginRelation::GreaterThan, "VREF", "VCL", "", 0.3},
      {"VGLR>VGL+0.3", MarginRelation::GreaterThan, "VGLR", "VGL", "", 0.3},
      {"VGL=VCL-VCI", MarginRelation::EqualDiff, "VGL", "VCL", "VCI", 0.0},
  };
}

struct Violation {
  std::string rule;
  std::string rail;
  double slack_v = 0.0;  // negative when violated
  std::string detail;
};

// Full internal voltage configuration: VCI input plus one chain per generated
// rail, the margin rules to enforce, and static per-rail loads used by the
// power ledger.
struct ChainConfig {
  std::string name;
  double vci_v = 0.0;
  std::map<std::string, ConversionChain> chains;
  std::vector<MarginRule> margins = standard_margin_rules();
  std::map<std::string, double> rail_loads_ma;

  size_t total_stages() const {
    size_t n = 0;
    for (const auto& [rail, chain] : chains) n += chain.stages.size();
    return n;
  }
};

// Declared voltage of a rail: VCI itself or a chain's declared target.
inline double rail_voltage(const ChainConfig& cfg, const std::string& rail) {
  if (rail == "VCI") return cfg.vci_v;
  auto it = cfg.chains.find(rail);
  if (it == cfg.chains.end())
    throw InputError("config '" + cfg.name + "': no chain generates rail '" + rail + "'");
  return it->second.target_voltage_v;
}

inline bool has_rail(const ChainConfig& cfg, const std::string& rail) {
  return rail == "VCI" || cfg.chains.count(rail) > 0;
}

// Checks every margin rule and every chain's reachability (stage laws applied
// exactly from the input rail must land on the declared target). Violations
// are data, not errors. Deterministic: rules in declared order, then chains
// in rail order.
inline std::vector<Violation> validate_config(const ChainConfig& cfg) {
  std::vector<Violation> out;

  // comparisons run on exact rationals so boundary and equality rules are
  // immune to decimal rounding
  for (const auto& rule : cfg.margins) {
    if (!has_rail(cfg, rule.lhs) || !has_rail(cfg, rule.rhs)) continue;
    if (rule.relation == MarginRelation::EqualDiff && !has_rail(cfg, rule.rhs2)) continue;
    Ratio lhs = to_ratio(rail_voltage(cfg, rule.lhs));
    Ratio rhs = to_ratio(rail_voltage(cfg, rule.rhs));
    switch (rule.relation) {
      case MarginRelation::LessThan: {
        Ratio bound = rhs + to_ratio(rule.offset_v);
        if (lhs >= bound)
          out.push_back({rule.name, rule.lhs, to_double(bound - lhs),
                         rule.lhs + " must be < " + std::to_string(to_double(bound)) + " V"});
        break;
      }
      case MarginRelation::GreaterThan: {
        Ratio bound = rhs + to_ratio(rule.offset_v);
        if (lhs <= bound)
          out.push_back({rule.name, rule.lhs, to_double(lhs - bound),
                         rule.lhs + " must be > " + std::to_string(to_double(bound)) + " V"});
        break;
      }
      case MarginRelation::EqualDiff: {
        Ratio expected = rhs - to_ratio(rail_voltage(cfg, rule.rhs2));
        if (lhs != expected) {
          Ratio diff = lhs - expected;
          if (diff < Ratio(0)) diff = -diff;
          out.push_back({rule.name, rule.lhs, -to_double(diff),
                         rule.lhs + " must equal " + std::to_string(to_double(expected)) + " V"});
        }
        break;
      }
    }
  }

  // reachability, rail order (std::map is sorted)
  for (const auto& [rail, chain] : cfg.chains) {
    try {
      chain.validate();
      if (!has_rail(cfg, chain.input_rail))
        throw InputError("input rail '" + chain.input_rail + "' is not generated");
      Ratio v = to_ratio(rail_voltage(cfg, chain.input_rail));
      for (const auto& stage : chain.stages) v = stage_output_exact(stage, v);
      Ratio target = to_ratio(chain.target_voltage_v);
      if (v != target) {
        std::ostringstream os;
        os << rail << ": declared target " << chain.target_voltage_v
           << " V not reached (stage law yields " << to_double(v) << " V)";
        out.push_back({"reach:" + rail, rail, -std::abs(to_double(v - target)), os.str()});
      }
    } catch (const ConstraintError& e) {
      out.push_back({"headroom:" + rail, rail, 0.0, e.what()});
    } catch (const InputError& e) {
      out.push_back({"reach:" + rail, rail, 0.0, e.what()});
    }
  }
  return out;
}

// --- chain spec grammar ------------------------------------------------------
//
// Textual chain specs mirror the driver-chip datasheet notation:
//
//   spec   := head ( "->" ldo )*
//   head   := RAIL                  bypass from RAIL
//           | "-" RAIL              inverting pump (x-1)
//           | "Boost:" INT "x" RAIL charge pump by INT in {-2,-1,1,2}
//           | "Boost:" DEC "x" RAIL inductive boost, rational ratio >= 1
//           | "Boost:" RAIL "+" RAIL2   inductive boost to V1+V2
//           | "Boost:" RAIL "-" RAIL2   inductive boost to V1-V2
//   ldo    := "LDO(" DEC ")" | "LDO(" DEC "," DEC ")"   target [, dropout]
//
// Cross-rail sum/difference heads compile to an inductive boost with the
// exact ratio (V1 +- V2) / V1, resolved against the declared rail voltages.

inline ConversionChain parse_chain_spec(
    const std::string& output_rail, const std::string& text, double target_voltage_v,
    const std::function<double(const std::string&)>& rail_volts) {
  ConversionChain chain;
  chain.output_rail = output_rail;
  chain.target_voltage_v = target_voltage_v;

  auto fail = [&](const std::string& why) {
    throw InputError("chain spec for " + output_rail + " ('" + text + "'): " + why);
  };

  // split on "->"
  std::vector<std::string> parts;
  size_t pos = 0;
  while (true) {
    size_t arrow = text.find("->", pos);
    if (arrow == std::string::npos) {
      parts.push_back(detail::trim(text.substr(pos)));
      break;
    }
    parts.push_back(detail::trim(text.substr(pos, arrow - pos)));
    pos = arrow + 2;
  }
  if (parts.empty() || parts.front().empty()) fail("empty spec");

  auto is_rail_name = [](const std::string& s) {
    if (s.empty()) return false;
    for (char c : s)
      if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
    return !std::isdigit(static_cast<unsigned char>(s.front()));
  };

  const std::string& head = parts.front();
  if (head.rfind("Boost:", 0) == 0) {
    std::string body = detail::trim(head.substr(6));
    size_t x = body.find('x');
    size_t plus = body.find('+');
    size_t minus = body.find('-', 1);  // skip a leading sign
    if (x != std::string::npos && is_rail_name(detail::trim(body.substr(x + 1)))) {
      std::string factor = detail::trim(body.substr(0, x));
      chain.input_rail = detail::trim(body.substr(x + 1));
      double f = detail::parse_number(factor, "boost factor");
      if (f == static_cast<int>(f) && std::abs(f) <= 2 && f != 0) {
        chain.stages.push_back(ChargePump{static_cast<int>(f)});
      } else {
        chain.stages.push_back(InductiveBoost{to_ratio(f), std::nullopt, std::nullopt});
      }
    } else if (plus != std::string::npos || minus != std::string::npos) {
      size_t op = plus != std::string::npos ? plus : minus;
      bool add = plus != std::string::npos;
      chain.input_rail = detail::trim(body.substr(0, op));
      std::string other = detail::trim(body.substr(op + 1));
      if (!is_rail_name(chain.input_rail) || !is_rail_name(other))
        fail("expected RAIL+RAIL or RAIL-RAIL after Boost:");
      Ratio v1 = to_ratio(rail_volts(chain.input_rail));
      Ratio v2 = to_ratio(rail_volts(other));
      if (v1 == Ratio(0)) fail("input rail " + chain.input_rail + " has zero voltage");
      Ratio ratio = (add ? v1 + v2 : v1 - v2) / v1;
      chain.stages.push_back(InductiveBoost{ratio, std::nullopt, std::nullopt});
    } else {
      fail("unrecognized Boost: form");
    }
  } else if (!head.empty() && head.front() == '-' && is_rail_name(head.substr(1))) {
    chain.input_rail = head.substr(1);
    chain.stages.push_back(ChargePump{-1});
  } else if (is_rail_name(head)) {
    chain.input_rail = head;
    chain.stages.push_back(Bypass{});
  } else {
    fail("unrecognized head '" + head + "'");
  }

  for (size_t i = 1; i < parts.size(); ++i) {
    const std::string& p = parts[i];
    if (p.rfind("LDO(", 0) == 0 && p.back() == ')') {
      std::string args = p.substr(4, p.size() - 5);
      size_t comma = args.find(',');
      LinearRegulator ldo;
      if (comma == std::string::npos) {
        ldo.target_v = detail::parse_number(detail::trim(args), "LDO target");
      } else {
        ldo.target_v = detail::parse_number(detail::trim(args.substr(0, comma)), "LDO target");
        ldo.dropout_v =
            detail::parse_number(detail::trim(args.substr(comma + 1)), "LDO dropout");
      }
      chain.stages.push_back(ldo);
    } else if (p == "Bypass") {
      chain.stages.push_back(Bypass{});
    } else {
      fail("unrecognized stage '" + p + "'");
    }
  }

  chain.validate();
  return chain;
}

}  // namespace railplan
