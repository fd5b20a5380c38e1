#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "railplan/chain.hpp"

using namespace railplan;
using Catch::Approx;

namespace {

ConversionChain chain_of(std::string input, std::vector<Stage> stages, std::string output,
                         double target) {
  ConversionChain c;
  c.input_rail = std::move(input);
  c.stages = std::move(stages);
  c.output_rail = std::move(output);
  c.target_voltage_v = target;
  return c;
}

// the conservative high-boost configuration used across the chain tests
ChainConfig case_a_config() {
  ChainConfig cfg;
  cfg.name = "case-a";
  cfg.vci_v = 3.3;
  auto volts = [&cfg](const std::string& rail) { return rail_voltage(cfg, rail); };
  cfg.chains["AVDD"] = parse_chain_spec("AVDD", "Boost:2xVCI->LDO(6.5)", 6.5, volts);
  cfg.chains["VGMP"] = parse_chain_spec("VGMP", "AVDD->LDO(5.4)", 5.4, volts);
  cfg.chains["VGH"] = parse_chain_spec("VGH", "Boost:AVDD+VCI", 9.8, volts);
  cfg.chains["VGHR"] = parse_chain_spec("VGHR", "VGH->LDO(7)", 7.0, volts);
  cfg.chains["VCL"] = parse_chain_spec("VCL", "Boost:-2xVCI", -6.6, volts);
  cfg.chains["VREF"] = parse_chain_spec("VREF", "VCL->LDO(-3.5)", -3.5, volts);
  cfg.chains["VGL"] = parse_chain_spec("VGL", "Boost:VCL-VCI", -9.9, volts);
  cfg.chains["VGLR"] = parse_chain_spec("VGLR", "VGL->LDO(-6)", -6.0, volts);
  for (auto& [rail, chain] : cfg.chains)
    for (auto& stage : chain.stages)
      if (auto* boost = std::get_if<InductiveBoost>(&stage)) boost->flat_eta = 0.85;
  return cfg;
}

}  // namespace

TEST_CASE("stage voltage laws") {
  CHECK(stage_output(ChargePump{2}, 3.3) == Approx(6.6).epsilon(1e-12));
  CHECK(stage_output(Bypass{}, 3.3) == Approx(3.3));
  CHECK(stage_output(ChargePump{-1}, 3.3) == Approx(-3.3).epsilon(1e-12));
  CHECK(stage_output(InductiveBoost{Ratio(3, 2), {}, 0.85}, -6.6) ==
        Approx(-9.9).epsilon(1e-12));
  CHECK(stage_output(LinearRegulator{6.5, 0.1}, 6.6) == Approx(6.5));
}

TEST_CASE("regulator headroom errors name the deficit") {
  try {
    stage_output(LinearRegulator{3.25, 0.1}, 3.3);
    FAIL("expected ConstraintError");
  } catch (const ConstraintError& e) {
    CHECK_THAT(e.what(), Catch::Matchers::ContainsSubstring("0.05"));
  }
  // sign mismatch is also a headroom violation
  CHECK_THROWS_AS(stage_output(LinearRegulator{-3.0, 0.1}, 6.6), ConstraintError);
  CHECK_THROWS_AS(stage_output(Bypass{}, 0.0), InputError);
}

TEST_CASE("stage efficiencies") {
  CHECK(stage_efficiency(LinearRegulator{1.8, 0.1}, 3.3, 1.8, 1.0).value ==
        Approx(1.8 / 3.3).epsilon(1e-12));
  CHECK(stage_efficiency(Bypass{}, 3.3, 3.3, 1.0).value == 1.0);
  CHECK(stage_efficiency(ChargePump{2}, 3.3, 6.5, 1.0).value ==
        Approx(6.5 / 6.6).epsilon(1e-12));
  CHECK(stage_efficiency(ChargePump{-2}, 3.3, -6.6, 1.0).value == Approx(1.0));

  InductiveBoost bare{Ratio(2), {}, {}};
  CHECK_THROWS_AS(stage_efficiency(bare, 3.3, 6.6, 1.0), InputError);
}

TEST_CASE("stage invariants") {
  CHECK_THROWS_AS(validate_stage(ChargePump{3}), InputError);
  CHECK_THROWS_AS(validate_stage(ChargePump{0}), InputError);
  CHECK_THROWS_AS(validate_stage(InductiveBoost{Ratio(1, 2), {}, 0.9}), InputError);
  CHECK_THROWS_AS(validate_stage(LinearRegulator{1.0, -0.1}), InputError);
  CHECK_NOTHROW(validate_stage(InductiveBoost{Ratio(98, 65), {}, 0.85}));
}

TEST_CASE("chain efficiency composes stage efficiencies with propagated voltages") {
  auto pump_ldo = chain_of("VCI", {ChargePump{2}, LinearRegulator{6.0, 0.3}}, "AVDD", 6.0);
  CHECK(chain_efficiency(pump_ldo, 3.3, 1.0).value == Approx(6.0 / 6.6).epsilon(1e-12));

  auto bypass_only = chain_of("VCI", {Bypass{}}, "PVDD", 3.3);
  CHECK(chain_efficiency(bypass_only, 3.3, 1.0).value == 1.0);

  auto ldo_18 = chain_of("VCI", {LinearRegulator{1.8, 0.1}}, "PVDD", 1.8);
  CHECK(chain_efficiency(ldo_18, 3.3, 1.0).value == Approx(1.8 / 3.3).epsilon(1e-12));
}

TEST_CASE("chain grammar round trips the datasheet notation") {
  auto volts = [](const std::string& rail) -> double {
    if (rail == "VCI") return 3.3;
    if (rail == "AVDD") return 6.5;
    if (rail == "VCL") return -6.6;
    throw InputError("no rail " + rail);
  };

  auto pump_ldo = parse_chain_spec("AVDD", "Boost:2xVCI->LDO(6.0)", 6.0, volts);
  REQUIRE(pump_ldo.stages.size() == 2);
  CHECK(std::get<ChargePump>(pump_ldo.stages[0]).multiplier == 2);
  CHECK(std::get<LinearRegulator>(pump_ldo.stages[1]).target_v == Approx(6.0));
  CHECK(pump_ldo.input_rail == "VCI");

  auto sum = parse_chain_spec("VGH", "Boost:AVDD+VCI", 9.8, volts);
  auto& boost = std::get<InductiveBoost>(sum.stages[0]);
  CHECK(boost.ratio == Ratio(98, 65));

  auto diff = parse_chain_spec("VGL", "Boost:VCL-VCI", -9.9, volts);
  CHECK(std::get<InductiveBoost>(diff.stages[0]).ratio == Ratio(3, 2));

  auto invert = parse_chain_spec("PVEE", "-VCI", -3.3, volts);
  CHECK(std::get<ChargePump>(invert.stages[0]).multiplier == -1);

  auto with_dropout = parse_chain_spec("VGHR", "Boost:1xAVDD->LDO(6,0)", 6.0, volts);
  CHECK(std::get<LinearRegulator>(with_dropout.stages[1]).dropout_v == Approx(0.0));

  CHECK_THROWS_AS(parse_chain_spec("X", "Warp:9xVCI", 1.0, volts), InputError);
  CHECK_THROWS_AS(parse_chain_spec("X", "VCI->Frob(1)", 1.0, volts), InputError);
}

TEST_CASE("the high-boost configuration validates clean") {
  auto cfg = case_a_config();
  auto violations = validate_config(cfg);
  for (const auto& v : violations) UNSCOPED_INFO(v.rule << " " << v.detail);
  CHECK(violations.empty());
}

TEST_CASE("margin mutant reports exactly the mutated rule with its slack") {
  auto cfg = case_a_config();
  auto volts = [&cfg](const std::string& rail) { return rail_voltage(cfg, rail); };
  cfg.chains["VGMP"] = parse_chain_spec("VGMP", "AVDD->LDO(6.4)", 6.4, volts);
  auto violations = validate_config(cfg);
  REQUIRE(violations.size() == 1);
  CHECK(violations[0].rule == "VGMP<AVDD-0.3");
  CHECK(violations[0].slack_v == Approx(-0.2).margin(1e-9));
}

TEST_CASE("reachability mutant is caught by the exact stage law") {
  auto cfg = case_a_config();
  cfg.chains["VGH"].stages[0] = InductiveBoost{Ratio(3, 2), {}, 0.85};  // yields 9.75
  auto violations = validate_config(cfg);
  REQUIRE(violations.size() == 1);
  CHECK(violations[0].rule == "reach:VGH");
}

TEST_CASE("validate_config is order independent") {
  auto cfg = case_a_config();
  ChainConfig reversed = cfg;
  reversed.chains.clear();
  std::vector<std::string> rails;
  for (const auto& [rail, chain] : cfg.chains) rails.push_back(rail);
  for (auto it = rails.rbegin(); it != rails.rend(); ++it)
    reversed.chains[*it] = cfg.chains[*it];
  std::reverse(reversed.margins.begin(), reversed.margins.end());

  auto cfg_bad = cfg;
  auto rev_bad = reversed;
  cfg_bad.chains["VGMP"].target_voltage_v = 6.4;
  std::get<LinearRegulator>(cfg_bad.chains["VGMP"].stages[1]).target_v = 6.4;
  rev_bad.chains["VGMP"].target_voltage_v = 6.4;
  std::get<LinearRegulator>(rev_bad.chains["VGMP"].stages[1]).target_v = 6.4;

  auto v1 = validate_config(cfg_bad);
  auto v2 = validate_config(rev_bad);
  REQUIRE(v1.size() == v2.size());
  for (size_t i = 0; i < v1.size(); ++i) CHECK(v1[i].rule == v2[i].rule);
}

namespace {

// random chain from VCI whose final stage pins the target via an LDO; every
// prefix voltage stays in a sane range
ConversionChain random_chain(std::mt19937& rng) {
  std::uniform_int_distribution<int> nstages(1, 4);
  std::uniform_real_distribution<double> eta(0.5, 1.0);
  ConversionChain chain;
  chain.input_rail = "VCI";
  chain.output_rail = "OUT";
  Ratio v = to_ratio(3.3);
  int n = nstages(rng);
  for (int i = 0; i < n; ++i) {
    switch (rng() % 4) {
      case 0: {
        int mults[] = {-2, -1, 1, 2};
        ChargePump pump{mults[rng() % 4]};
        if (to_double(stage_output_exact(pump, v)) > 40 ||
            to_double(stage_output_exact(pump, v)) < -40)
          continue;
        chain.stages.push_back(pump);
        v = stage_output_exact(pump, v);
        break;
      }
      case 1: {
        Ratio ratios[] = {Ratio(1), Ratio(3, 2), Ratio(2), Ratio(98, 65)};
        InductiveBoost boost{ratios[rng() % 4], {}, eta(rng)};
        if (std::abs(to_double(boost.ratio * v)) > 40) continue;
        chain.stages.push_back(boost);
        v = stage_output_exact(boost, v);
        break;
      }
      case 2: {
        double sign = to_double(v) < 0 ? -1.0 : 1.0;
        double mag = std::abs(to_double(v));
        if (mag < 0.5) continue;
        std::uniform_real_distribution<double> frac(0.3, 0.9);
        LinearRegulator ldo{sign * std::round(frac(rng) * mag * 10) / 10.0, 0.1};
        if (std::abs(ldo.target_v) > mag - 0.1) continue;
        chain.stages.push_back(ldo);
        v = stage_output_exact(ldo, v);
        break;
      }
      default:
        chain.stages.push_back(Bypass{});
        break;
    }
  }
  // terminal LDO pins the declared target so bypass substitutions stay
  // target-preserving
  double mag = std::abs(to_double(v));
  if (mag < 0.4) {
    chain.stages.push_back(ChargePump{2});
    v = stage_output_exact(ChargePump{2}, v);
    mag = std::abs(to_double(v));
  }
  double sign = to_double(v) < 0 ? -1.0 : 1.0;
  LinearRegulator final_ldo{sign * std::round(0.5 * mag * 10) / 10.0, 0.1};
  chain.stages.push_back(final_ldo);
  chain.target_voltage_v = final_ldo.target_v;
  return chain;
}

}  // namespace

TEST_CASE("replacing a stage with Bypass never lowers chain efficiency") {
  std::mt19937 rng(31);
  int tested = 0;
  for (int trial = 0; trial < 400; ++trial) {
    auto chain = random_chain(rng);
    double eta = chain_efficiency(chain, 3.3, 5.0).value;
    for (size_t i = 0; i < chain.stages.size(); ++i) {
      auto modified = chain;
      modified.stages[i] = Bypass{};
      double eta2;
      try {
        Ratio v = to_ratio(3.3);
        for (const auto& s : modified.stages) v = stage_output_exact(s, v);
        if (v != to_ratio(chain.target_voltage_v)) continue;  // target lost
        eta2 = chain_efficiency(modified, 3.3, 5.0).value;
      } catch (const ConstraintError&) {
        continue;  // headroom lost, substitution not reachable
      }
      ++tested;
      CHECK(eta2 >= eta - 1e-12);
    }
  }
  CHECK(tested > 100);
}

TEST_CASE("appending a stage never raises chain efficiency") {
  std::mt19937 rng(37);
  for (int trial = 0; trial < 200; ++trial) {
    auto chain = random_chain(rng);
    double eta = chain_efficiency(chain, 3.3, 5.0).value;

    auto extended = chain;
    double v_out = chain.target_voltage_v;
    double sign = v_out < 0 ? -1.0 : 1.0;
    switch (rng() % 3) {
      case 0:
        extended.stages.push_back(Bypass{});
        break;
      case 1:
        extended.stages.push_back(ChargePump{2});
        break;
      default:
        if (std::abs(v_out) < 0.4) continue;
        extended.stages.push_back(LinearRegulator{sign * std::abs(v_out) * 0.5, 0.0});
        break;
    }
    double eta2 = chain_efficiency(extended, 3.3, 5.0).value;
    CHECK(eta2 <= eta + 1e-12);
  }
}

TEST_CASE("symmetric rails beat an asymmetric realization that needs a boost") {
  // same span: symmetric 3.3/-3.3 needs no boost, asymmetric 4.6/-2.0 boosts PVDD
  std::mt19937 rng(41);
  std::uniform_real_distribution<double> eta(0.05, 0.999);
  for (int trial = 0; trial < 100; ++trial) {
    auto sym_pvdd = chain_of("VCI", {Bypass{}}, "PVDD", 3.3);
    auto asym_pvdd =
        chain_of("VCI", {InductiveBoost{Ratio(46, 33), {}, eta(rng)},
                         LinearRegulator{4.6, 0.0}},
                 "PVDD", 4.6);
    double eta_sym = chain_efficiency(sym_pvdd, 3.3, 10.0).value;
    double eta_asym = chain_efficiency(asym_pvdd, 3.3, 10.0).value;
    CHECK(eta_sym >= eta_asym);
  }
}
