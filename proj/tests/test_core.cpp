#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <random>

#include "railplan/core.hpp"

using namespace railplan;
using Catch::Approx;

namespace {

PowerReport report_of(double total) {
  PowerReport r;
  r.add_item("total", total);
  r.finalize();
  return r;
}

ModeSpec mode_with_duty(const std::string& name, double duty) {
  ModeSpec m;
  m.mode = name;
  m.duty = duty;
  if (name != mode_names::kStandby) {
    m.luminance_nits = 100;
    m.refresh_hz = 60;
  }
  return m;
}

}  // namespace

TEST_CASE("weighted scenario power matches the watch duty mix") {
  std::vector<std::pair<ModeSpec, PowerReport>> reports;
  reports.emplace_back(mode_with_duty("Normal", 0.01), report_of(150.0));
  reports.emplace_back(mode_with_duty("Idle", 0.04), report_of(7.6));
  reports.emplace_back(mode_with_duty("Standby", 0.95), report_of(1.0));
  CHECK(weighted_scenario_power(reports) == Approx(2.754).epsilon(1e-12));
}

TEST_CASE("weighted scenario power identities") {
  std::vector<std::pair<ModeSpec, PowerReport>> single;
  single.emplace_back(mode_with_duty("Normal", 1.0), report_of(13.0));
  CHECK(weighted_scenario_power(single) == Approx(13.0));

  std::vector<std::pair<ModeSpec, PowerReport>> halves;
  halves.emplace_back(mode_with_duty("Normal", 0.5), report_of(10.0));
  halves.emplace_back(mode_with_duty("Idle", 0.5), report_of(20.0));
  CHECK(weighted_scenario_power(halves) == Approx(15.0));
}

TEST_CASE("duty sum violation names the deficit") {
  std::vector<std::pair<ModeSpec, PowerReport>> reports;
  reports.emplace_back(mode_with_duty("Normal", 0.5), report_of(10.0));
  reports.emplace_back(mode_with_duty("Idle", 0.4), report_of(20.0));
  CHECK_THROWS_MATCHES(weighted_scenario_power(reports), InputError,
                       Catch::Matchers::MessageMatches(
                           Catch::Matchers::ContainsSubstring("0.9")));
}

TEST_CASE("scenario power is linear and permutation invariant") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(0.1, 100.0);
  for (int trial = 0; trial < 50; ++trial) {
    int n = 2 + static_cast<int>(rng() % 5);
    std::vector<double> duties(n);
    double sum = 0;
    for (auto& d : duties) sum += (d = u(rng));
    std::vector<std::pair<ModeSpec, PowerReport>> reports;
    for (int i = 0; i < n; ++i)
      reports.emplace_back(mode_with_duty("Normal", duties[i] / sum), report_of(u(rng)));
    // re-normalize the last duty so the sum is exactly 1
    double s = 0;
    for (auto& [m, r] : reports) s += m.duty;
    reports.back().first.duty += 1.0 - s;

    double base = weighted_scenario_power(reports);
    std::shuffle(reports.begin(), reports.end(), rng);
    CHECK(weighted_scenario_power(reports) == Approx(base).epsilon(1e-9));

    // linearity in one mode's total
    auto scaled = reports;
    scaled[0].second = report_of(scaled[0].second.total_mw + 10.0);
    double lifted = weighted_scenario_power(scaled);
    CHECK(lifted - base == Approx(10.0 * scaled[0].first.duty).margin(1e-9));
  }
}

TEST_CASE("panel invariants") {
  PanelSpec p;
  p.name = "t";
  p.active_area_mm2 = 100;
  p.efficacy_cd_per_a = 40;
  p.transmittance = 0.45;
  CHECK_NOTHROW(p.validate());

  auto bad = p;
  bad.transmittance = 1.5;
  CHECK_THROWS_AS(bad.validate(), InputError);
  bad = p;
  bad.active_area_mm2 = 0;
  CHECK_THROWS_AS(bad.validate(), InputError);
  bad = p;
  bad.emit_area_factor = 0;
  CHECK_THROWS_AS(bad.validate(), InputError);
}

TEST_CASE("refresh floor rejects sub-floor scanning, display-off exempt") {
  PanelSpec ltps;
  ltps.name = "ltps";
  ltps.active_area_mm2 = 100;
  ltps.efficacy_cd_per_a = 40;
  ltps.transmittance = 0.45;
  ltps.process = Process::Ltps;
  ltps.min_refresh_hz = 10;

  ModeSpec m;
  m.mode = "Idle";
  m.luminance_nits = 50;
  m.refresh_hz = 5;
  CHECK_THROWS_AS(check_refresh_floor(ltps, m), ConstraintError);
  m.refresh_hz = 10;
  CHECK_NOTHROW(check_refresh_floor(ltps, m));

  ModeSpec standby;
  standby.mode = mode_names::kStandby;
  standby.refresh_hz = 0;
  CHECK_NOTHROW(check_refresh_floor(ltps, standby));
}

TEST_CASE("mode invariants") {
  ModeSpec standby;
  standby.mode = mode_names::kStandby;
  CHECK_NOTHROW(standby.validate());
  standby.luminance_nits = 10;
  standby.refresh_hz = 15;
  CHECK_THROWS_AS(standby.validate(), InputError);

  ModeSpec lit_but_frozen;
  lit_but_frozen.mode = "Idle";
  lit_but_frozen.luminance_nits = 50;
  lit_but_frozen.refresh_hz = 0;
  CHECK_THROWS_AS(lit_but_frozen.validate(), InputError);
}

TEST_CASE("rail measurement sign conventions") {
  RailMeasurement ok{"PVEE", -3.3, 20.0};
  CHECK_NOTHROW(ok.validate());
  RailMeasurement flipped{"PVEE", 3.3, 20.0};
  CHECK_THROWS_AS(flipped.validate(), InputError);
  RailMeasurement unknown{"VXX", 1.0, 1.0};
  CHECK_THROWS_AS(unknown.validate(), InputError);
  RailMeasurement negative_current{"VCI", 3.3, -1.0};
  CHECK_THROWS_AS(negative_current.validate(), InputError);
}

TEST_CASE("power report stays energy balanced") {
  PowerReport r;
  r.add_item("a", 1.5);
  r.add_item("b", 2.5);
  r.finalize();
  CHECK(r.total_mw == Approx(4.0));
  CHECK(r.balanced());
  CHECK_THROWS_AS(r.add_item("neg", -0.1), ConstraintError);
}
