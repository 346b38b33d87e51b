#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "rvts/error.hpp"
#include "rvts/estimate.hpp"
#include "rvts/models.hpp"
#include "rvts/tailmeasure.hpp"

using namespace rvts;
using namespace rvts::tailmeasure;
using models::ModelSpec;

namespace {

const auto line = starspace::euclidean(1);

SeriesPath sim(models::Variant v, std::size_t n, std::uint64_t seed, starspace::SpaceHandle sp = line) {
  return models::simulate(ModelSpec{std::move(v), std::move(sp)}, n, seed);
}

SeriesPath from_values(const std::vector<double>& x) {
  SeriesPath p;
  p.space = line;
  p.n = x.size();
  p.coords = x;
  return p;
}

RectangleSet above(int j, double level) { return {{{j, level}}}; }

}  // namespace

TEST_SUITE("tailmeasure") {

TEST_CASE("threshold rules") {
  const std::vector<double> x{5, 1, 4, 2, 3};
  CHECK(resolve_threshold(ThresholdRule::top_k(2), x) == 3.0);
  CHECK(resolve_threshold(ThresholdRule::quantile(0.4), x) == 2.0);
  CHECK(resolve_threshold(ThresholdRule::at(2.5), x) == 2.5);
  CHECK(default_top_k(1000) == static_cast<std::size_t>(std::ceil(std::pow(1000.0, 0.7))));
  CHECK_THROWS_AS(resolve_threshold(ThresholdRule::top_k(5), x), InsufficientData);
  CHECK_THROWS_AS(resolve_threshold(ThresholdRule::quantile(1.0), x), InvalidParameter);
  const std::vector<double> zeros{0, 0, 0, 1};
  CHECK_THROWS_AS(resolve_threshold(ThresholdRule::top_k(1), zeros), NonPositiveThreshold);
}

TEST_CASE("self-normalization and single-set homogeneity on iid data") {
  const auto path = sim(models::IidPareto{1.0}, 1000000, 7);
  const auto rho = path.moduli();
  const double u = resolve_threshold(ThresholdRule::quantile(0.99), rho);
  const auto mu = build_tail_measure(path, 0, u);
  CHECK(mu.mass(above(0, 1.0)) == doctest::Approx(1.0).epsilon(1e-12));
  const double p = mu.mass(above(0, 2.0));
  CHECK(std::fabs(p - 0.5) <= 3 * std::sqrt(0.25 / static_cast<double>(mu.exceedances)));
  CHECK(mu.total_weight() == doctest::Approx(static_cast<double>(mu.atoms()) / mu.exceedances));
  for (std::size_t a = 0; a < std::min<std::size_t>(mu.atoms(), 100); ++a)
    CHECK(mu.entry(a, 0)[0] == doctest::Approx(path.at(mu.anchors[a])[0] / u));
}

TEST_CASE("preconditions") {
  const auto path = from_values({1, 2, 3});
  CHECK_THROWS_AS(build_tail_measure(path, 2, 1.0), InsufficientData);
  CHECK_THROWS_AS(build_tail_measure(path, 1, 10.0), NoExceedances);
  CHECK_THROWS_AS(build_tail_measure(path, 0, 0.0), InvalidParameter);
  const auto mu = build_tail_measure(path, 1, 1.0);
  CHECK_THROWS_AS(project(mu, 2), ShapeMismatch);
  CHECK_THROWS_AS(mu.mass(above(2, 1.0)), ShapeMismatch);
}

TEST_CASE("projection is mass-preserving on cylinder sets") {
  const auto path = sim(models::Ar1Positive{0.5, 1.0}, 100000, 3);
  const double u = resolve_threshold(ThresholdRule::top_k(), path.moduli());
  const auto mu = build_tail_measure(path, 3, u);
  const auto same = project(mu, 3);
  CHECK(same.coords == mu.coords);
  CHECK(same.weights == mu.weights);
  const auto p1 = project(mu, 1);
  CHECK(p1.m == 1);
  CHECK(p1.normalizer == mu.normalizer);
  for (const auto& set : rectangle_catalogue(1)) CHECK(p1.mass(set) == mu.mass(set));
  const auto p0 = project(mu, 0);
  CHECK(p0.mass(above(0, 1.0)) == mu.mass(above(0, 1.0)));
}

TEST_CASE("consistency: n = m is exact") {
  const auto path = sim(models::MaxMovingAverage{{1.0, 1.0}, 1.0}, 20000, 4);
  const double u = resolve_threshold(ThresholdRule::top_k(), path.moduli());
  for (int m : {0, 1, 2}) {
    const auto rep = projection_consistency(path, m, m, u);
    CHECK(rep.max_discrepancy == 0.0);
    CHECK(rep.pass);
  }
}

TEST_CASE("consistency edge bound against brute force on short paths") {
  std::mt19937_64 gen(99);
  std::exponential_distribution<double> ex(1.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> x(100);
    for (auto& v : x) v = std::exp(ex(gen));
    const auto path = from_values(x);
    const double u = 2.0;
    const int n = 1 + trial % 4, m = trial % (n + 1);
    if (std::count_if(x.begin() + n, x.end() - n, [&](double v) { return v > u; }) == 0) continue;
    const auto rep = projection_consistency(path, n, m, u);
    for (const auto& sd : rep.sets) {
      // Recount both measures directly from the raw series.
      auto mass = [&](int h) {
        double a = 0, e = 0;
        for (int s = h; s < 100 - h; ++s) {
          e += x[s] > u;
          bool in = true;
          for (auto [j, lam] : sd.set.bounds) in = in && x[s + j] > lam * u;
          a += in;
        }
        return std::pair{a / e, e};
      };
      const auto [mn, en] = mass(n);
      const auto [mm, em] = mass(m);
      CHECK(sd.mass_n == doctest::Approx(mn).epsilon(1e-12));
      CHECK(sd.mass_m == doctest::Approx(mm).epsilon(1e-12));
      CHECK(std::fabs(mn - mm) <= 2.0 * (n - m) * std::max(1.0, mn) / em + 1e-12);
      CHECK(sd.within);
    }
    CHECK(rep.pass);
  }
}

TEST_CASE("consistency on disjoint halves is within Monte Carlo error") {
  const auto path = sim(models::Ar1Positive{0.5, 1.0}, 400000, 12);
  const double u = resolve_threshold(ThresholdRule::quantile(0.99), path.moduli());
  const auto rep = projection_consistency(path, 3, 1, u, true);
  CHECK(rep.pass);
  for (const auto& sd : rep.sets)
    if (sd.mass_n != 1.0) CHECK(sd.std_error > 0.0);
  CHECK(rep.lag_exceedances.size() == 7);
  CHECK(rep.lag_exceedances[3].second == rep.exceedances_n);
}

TEST_CASE("empirical homogeneity of the tail measure") {
  std::uint64_t seed = 40;
  for (auto v : std::vector<models::Variant>{models::IidPareto{1.0}, models::Ar1Positive{0.5, 1.0},
                                             models::MaxMovingAverage{{1.0, 1.0}, 1.0}}) {
    const auto path = sim(v, 1000000, seed++);
    const auto rho = path.moduli();
    const std::size_t k = 10000;
    const double u = resolve_threshold(ThresholdRule::top_k(k), rho);
    const auto h = estimate::hill(rho, k);
    const auto mu = build_tail_measure(path, 0, u);
    const double base = mu.mass(above(0, 1.0));
    for (double lam : {1.5, 2.0, 4.0}) {
      const double r = mu.mass(above(0, lam)) / base;
      const double target = std::pow(lam, -h.alpha_hat);
      const double se = std::hypot(std::sqrt(r * (1 - r) / static_cast<double>(mu.exceedances)),
                                   target * std::log(lam) * h.std_error);
      CAPTURE(lam);
      CHECK(std::fabs(r - target) <= 3 * se);
    }
  }
}

TEST_CASE("polar check on iid vectors and deterministic angles") {
  const auto plane = starspace::euclidean(2);
  const auto path = sim(models::IidPareto{1.0}, 200000, 8, plane);
  const double u = resolve_threshold(ThresholdRule::quantile(0.9), path.moduli());
  PolarOptions opt;
  opt.seed = 3;
  const auto rep = polar_product_check(path, u, opt);
  CHECK(rep.ks_distance <= rep.ks_critical);
  CHECK(rep.ks_critical == doctest::Approx(1.63 / std::sqrt(static_cast<double>(rep.exceedances))));
  CHECK(rep.p_value > 0.01);
  CHECK(rep.pass);
  CHECK(rep.alpha_hat == doctest::Approx(1.0).epsilon(0.05));

  const auto tent = starspace::path_sup(8);
  const auto amp = sim(models::PathAmplitude{2.0, std::nullopt}, 50000, 9, tent);
  const auto r2 = polar_product_check(amp, resolve_threshold(ThresholdRule::quantile(0.9), amp.moduli()), opt);
  CHECK(r2.homogeneity_pass);
  CHECK(r2.pass);

  const auto scalar = sim(models::IidPareto{2.0}, 50000, 10);
  const auto r3 = polar_product_check(scalar, resolve_threshold(ThresholdRule::quantile(0.9), scalar.moduli()), opt);
  CHECK(r3.degenerate_angle);
  CHECK(r3.pass);
}

TEST_CASE("polar KS check rejects exponential tails") {
  std::mt19937_64 gen(5);
  std::exponential_distribution<double> ex(1.0);
  std::vector<double> x(200000);
  for (auto& v : x) v = ex(gen);
  const auto path = from_values(x);
  const double u = resolve_threshold(ThresholdRule::quantile(0.5), path.moduli());
  const auto rep = polar_product_check(path, u);
  CHECK(rep.exceedances == 100000);
  CHECK_FALSE(rep.ks_pass);
  CHECK_FALSE(rep.pass);
}

TEST_CASE("tail ratio curve") {
  std::vector<double> rho(200000);
  rng::Engine eng(rng::Stream(17, 0));
  for (auto& r : rho) r = 1.0 / (1.0 - eng.uniform());
  const auto c = tail_ratio_curve(rho, 10.0, {1.0, 2.0, 4.0, 1e9});
  CHECK(c.points[0].ratio == 1.0);
  CHECK(std::fabs(c.points[1].ratio - 0.5) <= 3 * c.points[1].std_error);
  CHECK(std::fabs(c.points[2].ratio - 0.25) <= 3 * c.points[2].std_error);
  CHECK(c.points[3].empty);
  CHECK(c.alpha_slope == doctest::Approx(1.0).epsilon(0.1));
  CHECK_THROWS_AS(tail_ratio_curve(rho, 10.0, {0.5}), InvalidParameter);

  const auto ar = sim(models::Ar1Positive{0.5, 2.0}, 1000000, 18);
  const auto m = ar.moduli();
  const double u = resolve_threshold(ThresholdRule::quantile(0.999), m);
  const auto c2 = tail_ratio_curve(m, u, {2.0});
  CHECK(std::fabs(c2.points[0].ratio - 0.25) <= 3 * c2.points[0].std_error);
}

TEST_CASE("finite-u nu_k estimator") {
  // X_1 > u, X_2 > u for iid Pareto(1): ratio of Pr to Pr[X_0 > u] is 1/u.
  const auto path = sim(models::IidPareto{1.0}, 200000, 21);
  const double u = resolve_threshold(ThresholdRule::quantile(0.99), path.moduli());
  const spectral::WindowFunction f = [](const starspace::SeriesWindow& w) { return w.at(1)[0] > 1.0 ? 1.0 : 0.0; };
  const auto e = empirical_nu_k(path, f, 1, u);
  CHECK(std::fabs(e.value - 1.0) <= 4 * e.std_error + 1e-9);
}

}
