#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <sstream>

#include "railplan/curves.hpp"

using namespace railplan;
using Catch::Approx;

namespace {

EfficiencyCurve make_curve(std::vector<std::pair<double, double>> pts,
                           const std::string& id = "test") {
  EfficiencyCurve c;
  c.chip_id = id;
  c.points = std::move(pts);
  c.validate();
  return c;
}

EfficiencyCurve random_curve(std::mt19937& rng, double lo = 0.5, double hi = 50.0) {
  std::uniform_int_distribution<int> npts(2, 8);
  std::uniform_real_distribution<double> eta(0.05, 1.0);
  int n = npts(rng);
  std::vector<std::pair<double, double>> pts;
  double step = (hi - lo) / n;
  double x = lo;
  for (int i = 0; i < n; ++i) {
    pts.emplace_back(x, eta(rng));
    x += step * (0.5 + std::uniform_real_distribution<double>(0, 1)(rng));
  }
  return make_curve(std::move(pts));
}

}  // namespace

TEST_CASE("curve CSV ingestion") {
  std::istringstream ok("load_ma,efficiency\n10,0.80\n20,0.90\n");
  auto curve = load_curve(ok, "mem");
  REQUIRE(curve.points.size() == 2);
  CHECK(curve.points[0].first == 10.0);
  CHECK(curve.points[1].second == 0.90);

  std::istringstream unordered("load_ma,efficiency\n20,0.90\n10,0.80\n");
  CHECK_THROWS_MATCHES(load_curve(unordered, "mem"), InputError,
                       Catch::Matchers::MessageMatches(
                           Catch::Matchers::ContainsSubstring("row 3")));

  std::istringstream out_of_range("load_ma,efficiency\n10,0.80\n15,1.2\n");
  CHECK_THROWS_MATCHES(load_curve(out_of_range, "mem"), InputError,
                       Catch::Matchers::MessageMatches(
                           Catch::Matchers::ContainsSubstring("efficiency out of range")));

  std::istringstream too_short("load_ma,efficiency\n10,0.80\n");
  CHECK_THROWS_AS(load_curve(too_short, "mem"), InputError);

  std::istringstream bad_header("load,eff\n10,0.8\n20,0.9\n");
  CHECK_THROWS_AS(load_curve(bad_header, "mem"), InputError);
}

TEST_CASE("interpolation is exact at knots, linear between, clamped outside") {
  auto curve = make_curve({{10, 0.80}, {20, 0.90}});

  CHECK(efficiency_at(curve, 15).value == Approx(0.85).epsilon(1e-12));
  CHECK_FALSE(efficiency_at(curve, 15).extrapolated);

  CHECK(efficiency_at(curve, 10).value == 0.80);
  CHECK_FALSE(efficiency_at(curve, 10).extrapolated);

  auto clamped = efficiency_at(curve, 40);
  CHECK(clamped.value == 0.90);
  CHECK(clamped.extrapolated);

  auto low = efficiency_at(curve, 5);
  CHECK(low.value == 0.80);
  CHECK(low.extrapolated);

  CHECK_THROWS_AS(efficiency_at(curve, 0.0), InputError);
  CHECK_THROWS_AS(efficiency_at(curve, -1.0), InputError);
}

TEST_CASE("interpolated values stay within the bracketing knots") {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    auto curve = random_curve(rng);
    std::uniform_real_distribution<double> probe(curve.min_load(), curve.max_load());
    double x = probe(rng);
    double y = efficiency_at(curve, x).value;
    for (size_t i = 0; i + 1 < curve.points.size(); ++i) {
      if (x >= curve.points[i].first && x <= curve.points[i + 1].first) {
        double lo = std::min(curve.points[i].second, curve.points[i + 1].second);
        double hi = std::max(curve.points[i].second, curve.points[i + 1].second);
        CHECK(y >= lo - 1e-12);
        CHECK(y <= hi + 1e-12);
      }
    }
  }
}

TEST_CASE("crossover of two linear curves") {
  auto a = make_curve({{0, 0.5}, {100, 0.9}}, "a");
  auto b = make_curve({{0, 0.7}, {100, 0.8}}, "b");
  auto loads = crossover(a, b);
  REQUIRE(loads.size() == 1);
  CHECK(loads[0] == Approx(66.666667).margin(1e-6));
}

TEST_CASE("crossover degenerate and dominance cases") {
  auto a = make_curve({{1, 0.5}, {10, 0.7}, {20, 0.8}}, "a");

  SECTION("identical curves touch at every knot") {
    auto loads = crossover(a, a);
    REQUIRE(loads.size() == 3);
    CHECK(loads[0] == Approx(1.0));
    CHECK(loads[1] == Approx(10.0));
    CHECK(loads[2] == Approx(20.0));
  }

  SECTION("dominating curve never crosses") {
    auto b = make_curve({{1, 0.2}, {20, 0.4}}, "b");
    CHECK(crossover(a, b).empty());
  }

  SECTION("disjoint ranges are a domain error") {
    auto far = make_curve({{100, 0.5}, {200, 0.6}}, "far");
    CHECK_THROWS_AS(crossover(a, far), InputError);
  }
}

TEST_CASE("crossover is symmetric and sign-consistent") {
  std::mt19937 rng(23);
  for (int trial = 0; trial < 100; ++trial) {
    auto a = random_curve(rng);
    auto b = random_curve(rng);
    if (std::max(a.min_load(), b.min_load()) > std::min(a.max_load(), b.max_load()))
      continue;
    auto ab = crossover(a, b);
    auto ba = crossover(b, a);
    REQUIRE(ab.size() == ba.size());
    for (size_t i = 0; i < ab.size(); ++i) CHECK(ab[i] == Approx(ba[i]).margin(1e-9));

    // strictly between consecutive crossovers the sign cannot flip
    double lo = std::max(a.min_load(), b.min_load());
    double hi = std::min(a.max_load(), b.max_load());
    std::vector<double> fence{lo};
    fence.insert(fence.end(), ab.begin(), ab.end());
    fence.push_back(hi);
    for (size_t i = 0; i + 1 < fence.size(); ++i) {
      if (fence[i + 1] - fence[i] < 1e-6) continue;
      int sign = 0;
      for (int k = 1; k < 8; ++k) {
        double x = fence[i] + (fence[i + 1] - fence[i]) * k / 8.0;
        double d = efficiency_at(a, x).value - efficiency_at(b, x).value;
        if (std::abs(d) < 1e-12) continue;
        int s = d > 0 ? 1 : -1;
        if (sign == 0) sign = s;
        CHECK(s == sign);
      }
    }
  }
}
