#include <cmath>
#include <numeric>

#include "doctest.h"
#include "rvts/error.hpp"
#include "rvts/starspace.hpp"

using namespace rvts;
using namespace rvts::starspace;

namespace {

double l2(const Point& x) {
  double s = 0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

Point random_point(rng::Engine& e, std::size_t dim) {
  Point x(dim);
  for (auto& v : x) v = e.normal() * std::exp(e.normal());
  return x;
}

}  // namespace

TEST_SUITE("starspace") {

TEST_CASE("euclidean and sup moduli") {
  const auto e2 = euclidean(2);
  CHECK(e2->modulus(Point{3, 4}) == 5.0);
  CHECK(e2->distance(Point{1, 1}, Point{4, 5}) == 5.0);
  const auto einf = euclidean(3, INFINITY);
  CHECK(einf->modulus(Point{-7, 2, 3}) == 7.0);
  const auto e1 = euclidean(2, 1.0);
  CHECK(e1->modulus(Point{-1, 2}) == doctest::Approx(3.0));
  const auto ps = path_sup(5);
  CHECK(ps->modulus(Point{0, 0.5, -2, 1, 0}) == 2.0);
  CHECK(ps->modulus(unit_path(5)) == 1.0);
  CHECK(unit_path(5) == Point{0, 0.5, 1, 0.5, 0});
}

TEST_CASE("snowflake gauge modulus equals the euclidean norm") {
  // d(x / l, 0) = (|x| / l)^beta <= 1 exactly when l >= |x|.
  const auto sf = snowflake_gauge(3, 0.5);
  rng::Engine e(rng::Stream(1, 2));
  for (int i = 0; i < 200; ++i) {
    const auto x = random_point(e, 3);
    CHECK(sf->modulus(x) == doctest::Approx(l2(x)).epsilon(1e-13));
    CHECK(sf->distance(x, Point(3, 0.0)) == doctest::Approx(std::pow(l2(x), 0.5)).epsilon(1e-14));
  }
}

TEST_CASE("gauge modulus on a normed space recovers the norm") {
  const auto e3 = euclidean(3);
  rng::Engine e(rng::Stream(4, 2));
  for (int i = 0; i < 100; ++i) {
    const auto x = random_point(e, 3);
    CHECK(gauge_modulus(*e3, x) == doctest::Approx(l2(x)).epsilon(1e-13));
  }
  CHECK_THROWS_AS(gauge_modulus(*e3, Point{1e30, 0, 0}), BracketFailure);
}

TEST_CASE("weighted hilbert modulus and metric") {
  const auto wh = weighted_hilbert(4);
  const Point x{1, 2, 3, 4};
  CHECK(wh->modulus(x) == doctest::Approx(std::sqrt(1 + 4 / 2.0 + 9 / 3.0 + 16 / 4.0)));
  CHECK(wh->distance(x, Point(4, 0.0)) == doctest::Approx(std::sqrt(30.0)));
  CHECK_FALSE(wh->supports_angles());
  Point e4{0, 0, 0, 1};
  CHECK(wh->modulus(e4) == doctest::Approx(0.5));
}

TEST_CASE("polar decomposition round trip") {
  for (const auto& sp : {euclidean(2), euclidean(4, INFINITY), path_sup(9), snowflake_gauge(2, 0.3)}) {
    rng::Engine e(rng::Stream(7, sp->dim()));
    for (int i = 0; i < 100; ++i) {
      const auto x = random_point(e, sp->dim());
      const auto p = polar_decompose(*sp, x);
      CHECK(p.r == doctest::Approx(sp->modulus(x)).epsilon(1e-14));
      CHECK(sp->modulus(p.theta) == doctest::Approx(1.0).epsilon(1e-12));
      const auto back = reconstruct(*sp, p);
      for (std::size_t j = 0; j < x.size(); ++j) CHECK(back[j] == doctest::Approx(x[j]).epsilon(1e-13));
    }
    CHECK_THROWS_AS(polar_decompose(*sp, sp->origin()), OriginPoint);
  }
}

TEST_CASE("make_space from blocks and descriptors") {
  const auto sp = make_space(R"({ kind = "snowflake_gauge", dim = 2, beta = 0.25 })");
  CHECK(sp->kind() == "snowflake_gauge");
  const auto again = make_space(sp->descriptor());
  CHECK(again->descriptor() == sp->descriptor());
  CHECK(make_space("{ kind = \"path_sup\", grid = 8 }")->dim() == 8);
  CHECK_THROWS_AS(make_space("{ kind = \"torus\" }"), ConfigError);
  CHECK_THROWS_AS(make_space("{ kind = \"euclidean\", dim = 0 }"), ConfigError);
  CHECK_THROWS_AS(euclidean(2)->check_point(Point{1, 2, 3}), ShapeMismatch);
}

TEST_CASE("series windows and zero markers") {
  SeriesWindow w(-1, 3, 2);
  CHECK(w.is_zero(-1));
  CHECK(w.last() == 1);
  w.set(0, Point{3, 4});
  CHECK_FALSE(w.is_zero(0));
  const auto sp = euclidean(2);
  CHECK(entry_modulus(*sp, w, 0) == 5.0);
  CHECK(entry_modulus(*sp, w, 1) == 0.0);
  w.set_zero(0);
  CHECK(w.is_zero(0));
  CHECK(w.at(0)[0] == 0.0);
  CHECK_THROWS(w.at(2));
}

TEST_CASE("sequence metric truncation bound") {
  const auto sp = euclidean(1);
  rng::Engine e(rng::Stream(3, 3));
  const int big = 40;
  SeriesWindow x(-big, 2 * big + 1, 1), y(-big, 2 * big + 1, 1);
  for (int t = -big; t <= big; ++t) {
    x.set(t, Point{e.normal() * 10});
    y.set(t, Point{e.normal() * 10});
  }
  const double full = seq_metric(*sp, x, y, big);
  for (int m = 0; m < 10; ++m) {
    SeriesWindow xm(-m, 2 * m + 1, 1), ym(-m, 2 * m + 1, 1);
    for (int t = -m; t <= m; ++t) {
      xm.set(t, x.at(t));
      ym.set(t, y.at(t));
    }
    const double dm = seq_metric(*sp, xm, ym, m);
    CHECK(dm <= full);
    CHECK(full - dm <= seq_metric_truncation_bound(m));
  }
  CHECK(seq_metric(*sp, x, x, big) == 0.0);
  CHECK_THROWS_AS(seq_metric(*sp, x, y, 3), ShapeMismatch);
}

TEST_CASE("validator passes genuine star-shaped spaces") {
  for (const auto& sp : {euclidean(1), euclidean(3), euclidean(2, INFINITY), path_sup(16), snowflake_gauge(2, 0.5)}) {
    CAPTURE(sp->descriptor());
    const auto rep = validate_axioms(sp, default_sampler(sp), 10000, 1e-12);
    CHECK(rep.exact_axioms_pass());
    CHECK_FALSE(rep.condition_iii_flagged);
    for (const char* name : {"scaling_identity", "scaling_associativity", "zero_scaling", "radial_monotonicity",
                             "modulus_homogeneity", "modulus_separation"})
      CHECK(rep.axiom(name).pass);
  }
}

TEST_CASE("modulus homogeneity is exact for sup moduli") {
  for (const auto& sp : {path_sup(8), euclidean(3, INFINITY)}) {
    const auto rep = validate_axioms(sp, default_sampler(sp), 5000, 0.0);
    CHECK(rep.axiom("modulus_homogeneity").worst_violation == 0.0);
  }
}

TEST_CASE("weighted hilbert is flagged with the basis witness") {
  // rho(e_N) = N^{-1/2} while d(e_N, 0) = 1, so rho is not bounded below on
  // the unit shell as N grows: at N = 100 the witness has rho = 0.1.
  const auto wh = weighted_hilbert(100);
  const auto rep = validate_axioms(wh, default_sampler(wh), 10000, 1e-12);
  CHECK(rep.exact_axioms_pass());
  CHECK(rep.condition_iii_flagged);
  const ShellEvidence* unit = nullptr;
  for (const auto& s : rep.condition_iii)
    if (s.eps == 1.0) unit = &s;
  REQUIRE(unit != nullptr);
  CHECK(unit->flagged);
  CHECK(unit->witness_modulus == doctest::Approx(1.0 / std::sqrt(100.0)).epsilon(1e-12));
  CHECK(unit->witness_distance == doctest::Approx(1.0).epsilon(1e-12));
  REQUIRE(unit->witness.size() == 100);
  CHECK(unit->witness[99] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::accumulate(unit->witness.begin(), unit->witness.end() - 1, 0.0, [](double a, double v) { return a + std::fabs(v); }) == 0.0);
  const auto j = to_json(rep);
  CHECK(j["condition_iii"]["label"] == "sampled evidence");
}

TEST_CASE("validator catches a broken modulus") {
  // A "modulus" that is not homogeneous.
  class Broken final : public Space {
   public:
    Broken() : Space(1, kDefaultOriginFloor) {}
    std::string kind() const override { return "broken"; }
    std::string descriptor() const override { return "{ kind = \"broken\" }"; }
    double distance(Coords x, Coords y) const override { return std::fabs(x[0] - y[0]); }
    double modulus(Coords x) const override { return x[0] * x[0]; }
  };
  const SpaceHandle sp = std::make_shared<Broken>();
  const auto rep = validate_axioms(sp, default_sampler(sp), 2000, 1e-12);
  CHECK_FALSE(rep.axiom("modulus_homogeneity").pass);
  CHECK(rep.axiom("modulus_homogeneity").worst_violation > 0.1);
}

}
