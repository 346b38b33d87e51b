#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "doctest.h"
#include "rvts/config.hpp"
#include "rvts/error.hpp"
#include "rvts/estimate.hpp"
#include "rvts/models.hpp"
#include "rvts/tailmeasure.hpp"

using namespace rvts;
using namespace rvts::models;

namespace {

const auto line = starspace::euclidean(1);

std::vector<ModelSpec> builtin() {
  return {{IidPareto{1.0}, line},
          {Ar1Positive{0.5, 2.0}, line},
          {MaxMovingAverage{{1.0, 1.0}, 1.0}, line},
          {PathAmplitude{1.5, std::nullopt}, starspace::path_sup(8)}};
}

}  // namespace

TEST_SUITE("models") {

TEST_CASE("iid pareto values are at least one") {
  const auto p = simulate({IidPareto{1.0}, line}, 3, 17);
  REQUIRE(p.n == 3);
  for (std::size_t t = 0; t < 3; ++t) CHECK(p.at(t)[0] >= 1.0);
}

TEST_CASE("simulation is reproducible given the seed") {
  const ModelSpec m{Ar1Positive{0.5, 2.0}, line};
  const auto a = simulate(m, 5000, 3), b = simulate(m, 5000, 3), c = simulate(m, 5000, 4);
  CHECK(a.coords == b.coords);
  CHECK(a.coords != c.coords);
  setenv("RVTS_THREADS", "4", 1);
  const auto d = simulate({IidPareto{1.0}, starspace::euclidean(2)}, 200000, 3);
  setenv("RVTS_THREADS", "1", 1);
  const auto e = simulate({IidPareto{1.0}, starspace::euclidean(2)}, 200000, 3);
  unsetenv("RVTS_THREADS");
  CHECK(d.coords == e.coords);
}

TEST_CASE("max moving average dominates its innovations") {
  const ModelSpec mma{MaxMovingAverage{{1.0, 1.0}, 1.0}, line};
  const auto p = simulate(mma, 20000, 8);
  // With unit coefficients and positive Pareto innovations X_t >= max(Z_t, Z_{t-1}) >= 1.
  for (std::size_t t = 0; t < p.n; ++t) CHECK(p.at(t)[0] >= 1.0);
  // The recursion against the same innovations of an iid model.
  const auto z = simulate({IidPareto{1.0}, line}, 20001, 8, 0);
  const auto q = simulate(mma, 20000, 8, 1);
  for (std::size_t t = 0; t < q.n; ++t) CHECK(q.at(t)[0] == std::max(z.at(t + 1)[0], z.at(t)[0]));
}

TEST_CASE("ar1 recursion matches the innovations") {
  const ModelSpec ar{Ar1Positive{0.5, 2.0}, line};
  const auto z = simulate({IidPareto{2.0}, line}, 100, 5, 0);
  const auto x = simulate(ar, 99, 5, 1);
  double prev = z.at(0)[0];
  for (std::size_t t = 0; t < x.n; ++t) {
    prev = 0.5 * prev + z.at(t + 1)[0];
    CHECK(x.at(t)[0] == prev);
  }
}

TEST_CASE("burn-in rule") {
  CHECK(burn_in({Ar1Positive{0.5, 1.0}, line}) == static_cast<std::size_t>(std::ceil(std::log(1e-12) / std::log(0.5))));
  CHECK(burn_in({Ar1Positive{0.5, 1.0}, line}) == 40);
  CHECK(burn_in({MaxMovingAverage{{1, 0.5, 0.25}, 1.0}, line}) == 2);
  CHECK(burn_in({IidPareto{1.0}, line}) == 0);
  CHECK(simulate({Ar1Positive{0.9, 1.0}, line}, 10, 1).burn_in == 263);
}

TEST_CASE("invalid parameters are rejected") {
  CHECK_THROWS_AS(simulate({Ar1Positive{1.0, 1.0}, line}, 10, 1), InvalidParameter);
  CHECK_THROWS_AS(simulate({Ar1Positive{0.0, 1.0}, line}, 10, 1), InvalidParameter);
  CHECK_THROWS_AS(simulate({IidPareto{0.0}, line}, 10, 1), InvalidParameter);
  CHECK_THROWS_AS(simulate({IidPareto{-1.0}, line}, 10, 1), InvalidParameter);
  CHECK_THROWS_AS(simulate({MaxMovingAverage{{1.0, -0.5}, 1.0}, line}, 10, 1), InvalidParameter);
  CHECK_THROWS_AS(simulate({IidPareto{1.0}, line}, 0, 1), InvalidParameter);
  CHECK_THROWS_AS(simulate({PathAmplitude{1.0, std::nullopt}, line}, 10, 1), InvalidParameter);
  CHECK_THROWS_AS(simulate({IidPareto{1.0}, starspace::weighted_hilbert(10)}, 10, 1), InvalidParameter);
}

TEST_CASE("path amplitude paths are scaled copies of the unit path") {
  const auto sp = starspace::path_sup(7);
  const auto p = simulate({PathAmplitude{1.0, std::nullopt}, sp}, 50, 2);
  const auto psi = starspace::unit_path(7);
  for (std::size_t t = 0; t < p.n; ++t) {
    const double r = sp->modulus(p.at(t));
    CHECK(r >= 1.0);
    for (std::size_t j = 0; j < 7; ++j) CHECK(p.at(t)[j] == doctest::Approx(r * psi[j]).epsilon(1e-15));
  }
}

TEST_CASE("forward spectral laws") {
  rng::Engine eng(rng::Stream(1, 1));
  starspace::SeriesWindow w;
  SUBCASE("iid: Theta_1 is the origin") {
    const auto law = true_forward_spectral({IidPareto{1.0}, line});
    for (int i = 0; i < 100; ++i) {
      law->sample_forward(3, eng, w);
      CHECK(starspace::entry_modulus(*line, w, 0) == 1.0);
      CHECK(w.is_zero(1));
    }
  }
  SUBCASE("ar1: rho(Theta_3) = phi^3") {
    const auto law = true_forward_spectral({Ar1Positive{0.5, 2.0}, line});
    law->sample_forward(3, eng, w);
    CHECK(starspace::entry_modulus(*line, w, 3) == 0.125);
  }
  SUBCASE("mma: J uniform on {0, 1} for equal coefficients") {
    const auto law = true_forward_spectral({MaxMovingAverage{{1.0, 1.0}, 1.0}, line});
    int ones = 0;
    const int n = 40000;
    for (int i = 0; i < n; ++i) {
      law->sample_forward(2, eng, w);
      const double r1 = starspace::entry_modulus(*line, w, 1);
      CHECK((r1 == 1.0 || r1 == 0.0));
      ones += r1 == 1.0;
      CHECK(w.is_zero(2));
    }
    CHECK(std::fabs(ones / static_cast<double>(n) - 0.5) < 4 * std::sqrt(0.25 / n));
  }
  SUBCASE("path amplitude: Theta_0 is the unit path") {
    const auto sp = starspace::path_sup(5);
    const auto law = true_forward_spectral({PathAmplitude{1.0, std::nullopt}, sp});
    law->sample_forward(1, eng, w);
    CHECK(std::vector<double>(w.at(0).begin(), w.at(0).end()) == starspace::unit_path(5));
    CHECK(w.is_zero(1));
  }
}

TEST_CASE("true extremogram closed forms") {
  CHECK(true_extremogram({Ar1Positive{0.5, 1.0}, line}, 1) == 0.5);
  CHECK(true_extremogram({Ar1Positive{0.5, 2.0}, line}, 2) == 0.0625);
  CHECK(true_extremogram({IidPareto{1.0}, line}, 2) == 0.0);
  for (const auto& m : builtin()) CHECK(true_extremogram(m, 0) == 1.0);
  for (double a : {0.5, 1.0, 3.0}) CHECK(true_extremogram({MaxMovingAverage{{1.0, 1.0}, a}, line}, 1) == doctest::Approx(0.5));
  // c = (1, 0.5): J = 0 w.p. 1/(1 + 0.5^a) carries ratio 0.5 at lag 1.
  const double a = 2.0;
  const double p0 = 1.0 / (1.0 + std::pow(0.5, a));
  CHECK(true_extremogram({MaxMovingAverage{{1.0, 0.5}, a}, line}, 1) == doctest::Approx(p0 * std::pow(0.5, a)));
  CHECK(true_extremogram({MaxMovingAverage{{1.0, 0.5}, a}, line}, -1) == true_extremogram({MaxMovingAverage{{1.0, 0.5}, a}, line}, 1));
}

TEST_CASE("hill recovers the declared index for every variant") {
  for (const auto& m : builtin()) {
    CAPTURE(m.name());
    const auto p = simulate(m, 1000000, 2024);
    const auto h = estimate::hill(p.moduli(), 5000);
    CHECK(std::fabs(h.alpha_hat - m.alpha()) <= 0.1 * m.alpha());
  }
}

TEST_CASE("empirical lag-1 spectral law converges to the closed form") {
  // Total variation between binned rho(Theta_1) laws at n = 1e6, u the 99.9th percentile.
  const std::vector<double> edges{0.0, 0.2, 0.4, 0.7, 0.9, 1.1, INFINITY};
  auto binned = [&](const std::vector<double>& r) {
    std::vector<double> h(edges.size() - 1, 0.0);
    for (double v : r)
      for (std::size_t b = 0; b + 1 < edges.size(); ++b)
        if (v >= edges[b] && v < edges[b + 1]) {
          h[b] += 1.0 / static_cast<double>(r.size());
          break;
        }
    return h;
  };
  for (const auto& m : builtin()) {
    CAPTURE(m.name());
    const auto p = simulate(m, 1000000, 77);
    const double u = tailmeasure::resolve_threshold(tailmeasure::ThresholdRule::quantile(0.999), p.moduli());
    const auto emp = estimate::empirical_spectral(p, 1, u);
    const auto law = true_forward_spectral(m);
    rng::Engine eng(rng::Stream(9, 9));
    starspace::SeriesWindow w;
    std::vector<double> truth(20000);
    for (auto& v : truth) {
      law->sample_forward(1, eng, w);
      v = starspace::entry_modulus(law->space(), w, 1);
    }
    const auto a = binned(emp.lag_moduli(1)), b = binned(truth);
    double tv = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) tv += 0.5 * std::fabs(a[i] - b[i]);
    CHECK(tv <= 0.05);
  }
}

TEST_CASE("stationarity: windows at different offsets agree") {
  const ModelSpec m{Ar1Positive{0.5, 3.0}, line};
  const auto p = simulate(m, 400000, 31);
  auto stats = [&](std::size_t from, std::size_t len) {
    RunningMoments acc;
    std::size_t above = 0;
    for (std::size_t t = from; t < from + len; ++t) {
      acc.push(std::log(p.at(t)[0]));
      above += p.at(t)[0] > 3.0;
    }
    return std::pair{MCEstimate::from(acc), static_cast<double>(above) / static_cast<double>(len)};
  };
  const auto [a, pa] = stats(0, 100000);
  const auto [b, pb] = stats(300000, 100000);
  // Serial dependence inflates the iid se; 6 se still separates real drift.
  CHECK(std::fabs(a.value - b.value) <= 6 * std::hypot(a.std_error, b.std_error));
  CHECK(std::fabs(pa - pb) <= 6 * std::sqrt((pa * (1 - pa) + pb * (1 - pb)) / 100000));
}

TEST_CASE("model blocks from config") {
  const auto doc = config::Document::parse("[model]\nkind = \"max_moving_average\"\ncoefficients = [1, 0.5]\nalpha = 2\n");
  const auto m = make_model(doc.section("model"), line);
  CHECK(m.name() == "max_moving_average");
  CHECK(m.alpha() == 2.0);
  const auto bad = config::Document::parse("[model]\nkind = \"garch\"\n");
  CHECK_THROWS_AS(make_model(bad.section("model"), line), ConfigError);
  const auto phi = config::Document::parse("[model]\nkind = \"ar1_positive\"\nphi = 1.5\n");
  CHECK_THROWS_AS(make_model(phi.section("model"), line), ConfigError);
}

}
