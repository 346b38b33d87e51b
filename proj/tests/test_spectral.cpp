#include <cmath>

#include "doctest.h"
#include "rvts/catalogue.hpp"
#include "rvts/error.hpp"
#include "rvts/models.hpp"
#include "rvts/spectral.hpp"

using namespace rvts;
using namespace rvts::spectral;
using models::ModelSpec;

namespace {

const auto line = starspace::euclidean(1);

LawHandle law_of(models::Variant v, starspace::SpaceHandle sp = line) {
  return models::true_forward_spectral(ModelSpec{std::move(v), std::move(sp)});
}

WindowFunction exceed(int j, double c) {
  return catalogue::parse_function("indicator_exceed(" + std::to_string(j) + ", " + std::to_string(c) + ")", line, 1.0).window;
}

bool within(const MCEstimate& e, double target, double k) {
  return std::fabs(e.value - target) <= std::max(k * e.std_error, 1e-12);
}

}  // namespace

TEST_SUITE("spectral") {

TEST_CASE("moments of rho(Theta_t)^alpha") {
  const rng::Stream s(11, 0);
  CHECK(within(spectral_moment(*law_of(models::Ar1Positive{0.5, 2.0}), 1, 50000, s), 0.25, 3));
  CHECK(within(spectral_moment(*law_of(models::Ar1Positive{0.5, 1.0}), 4, 50000, s), 0.0625, 3));
  CHECK(within(spectral_moment(*law_of(models::IidPareto{1.0}), 2, 50000, s), 0.0, 3));
  const auto mma = spectral_moment(*law_of(models::MaxMovingAverage{{1.0, 1.0}, 1.0}), 1, 50000, s);
  CHECK(within(mma, 0.5, 3));
  for (int t = 0; t <= 10; ++t) {
    const auto e = spectral_moment(*law_of(models::MaxMovingAverage{{1.0, 2.0, 0.5}, 1.5}), t, 20000, s);
    CHECK(e.value <= 1.0 + 3 * e.std_error);
    if (t == 0) CHECK(e.value == 1.0);
  }
}

TEST_CASE("custom laws from a forward sampler") {
  const auto law = make_law(line, 1.0, "halving", [](int h, rng::Engine&, starspace::SeriesWindow& w) {
    w.reset(0, static_cast<std::size_t>(h + 1), 1);
    for (int t = 0; t <= h; ++t) w.mut(t)[0] = std::ldexp(1.0, -t);
  });
  CHECK(spectral_moment(*law, 3, 1000, rng::Stream(1, 1)).value == 0.125);
  CHECK_FALSE(law->has_two_sided());
  starspace::SeriesWindow w;
  rng::Engine eng(rng::Stream(1, 1));
  CHECK_THROWS_AS(law->sample_two_sided(1, 1, eng, w), NoClosedForm);
}

TEST_CASE("telescoping with s = 0 is the plain forward functional") {
  const auto law = law_of(models::MaxMovingAverage{{1.0, 0.7, 0.2}, 1.3});
  Telescoper tel(*law, 0, 2);
  rng::Engine eng(rng::Stream(2, 3));
  starspace::SeriesWindow w;
  const WindowFunction g = [](const starspace::SeriesWindow& x) { return x.at(1)[0] + 2 * x.at(2)[0]; };
  for (int i = 0; i < 200; ++i) {
    law->sample_forward(2, eng, w);
    CHECK(tel.evaluate(w, g) == g(w));
  }
}

TEST_CASE("backward one-step law of ar1") {
  // Theta_{-1} = 1/phi with probability phi^alpha, else the origin.
  const auto law = law_of(models::Ar1Positive{0.5, 2.0});
  const auto nz = catalogue::parse_function("indicator_nonzero(-1)", line, 2.0).window;
  const auto tel = backward_expectation(*law, nz, 1, 0, 100000, rng::Stream(4, 4));
  CHECK(within(tel, 0.25, 3));
  TimeChangeOptions opt;
  opt.route = BackwardRoute::TwoSided;
  const auto two = time_change_residual(*law, nz, 1, 0, 100000, rng::Stream(4, 5), opt);
  CHECK(within(two.lhs, 0.25, 3));
  CHECK(within(two.rhs, 0.25, 3));
}

TEST_CASE("time-change identity on the builtin laws") {
  std::uint64_t k = 0;
  for (auto v : std::vector<models::Variant>{models::Ar1Positive{0.5, 1.0}, models::Ar1Positive{0.5, 2.0},
                                             models::MaxMovingAverage{{1.0, 1.0}, 1.0}, models::IidPareto{1.0},
                                             models::MaxMovingAverage{{0.5, 1.0, 0.8}, 1.5}}) {
    const auto law = law_of(v);
    for (int s : {1, 2})
      for (int t : {0, 1})
        for (double c : {0.5, 1.0, 2.0}) {
          CAPTURE(law->name());
          CAPTURE(s);
          CAPTURE(c);
          for (auto route : {BackwardRoute::TwoSided, BackwardRoute::Telescoping}) {
            TimeChangeOptions opt;
            opt.route = route;
            const auto r = time_change_residual(*law, exceed(-s, c), s, t, 30000, rng::Stream(6, k++), opt);
            CHECK(std::fabs(r.z_score) <= 4.0);
          }
        }
  }
}

TEST_CASE("shared stream with s = 0 gives identical sides") {
  const auto law = law_of(models::MaxMovingAverage{{1.0, 1.0}, 1.0});
  TimeChangeOptions opt;
  opt.shared_stream = true;
  const auto r = time_change_residual(*law, exceed(0, 0.5), 0, 1, 10000, rng::Stream(1, 2), opt);
  CHECK(r.lhs.value == r.rhs.value);
  CHECK(r.z_score == 0.0);
  CHECK(r.route == BackwardRoute::Telescoping);
}

TEST_CASE("contract: f must vanish at a zero first argument") {
  const auto law = law_of(models::Ar1Positive{0.5, 1.0});
  const WindowFunction one = [](const starspace::SeriesWindow&) { return 1.0; };
  CHECK_THROWS_AS(time_change_residual(*law, one, 1, 0, 100, rng::Stream(1, 1)), ContractViolation);
  CHECK_THROWS_AS(time_change_residual(*law_of(models::IidPareto{1.0}), exceed(0, 0.5), 1, 0, 100, rng::Stream(1, 1),
                                       {BackwardRoute::TwoSided, false, 64}),
                  ContractViolation);
}

TEST_CASE("backward law of a single coordinate") {
  const auto ar = law_of(models::Ar1Positive{0.5, 2.0});
  const PointFunction one = [](starspace::Coords, bool) { return 1.0; };
  CHECK(theta_backward_law(*ar, 1, one, 1000, rng::Stream(1, 1)).value == 1.0);
  const PointFunction big = [](starspace::Coords x, bool zero) { return !zero && x[0] > 1.5 ? 1.0 : 0.0; };
  CHECK(within(theta_backward_law(*ar, 1, big, 20000, rng::Stream(1, 2)), 0.25, 3));
  CHECK(within(theta_backward_law(*ar, 2, big, 20000, rng::Stream(1, 3)), 0.0625, 3));
  const PointFunction is_zero = [](starspace::Coords, bool zero) { return zero ? 1.0 : 0.0; };
  CHECK(within(theta_backward_law(*ar, 1, is_zero, 20000, rng::Stream(1, 4)), 0.75, 3));
  // Equal-weight mma: Theta_{-1} is 1 or 0 with probability 1/2 each.
  const auto mma = law_of(models::MaxMovingAverage{{1.0, 1.0}, 1.0});
  const PointFunction unit = [](starspace::Coords x, bool zero) { return !zero && x[0] > 0.5 ? 1.0 : 0.0; };
  CHECK(within(theta_backward_law(*mma, 1, unit, 40000, rng::Stream(1, 5)), 0.5, 4));
}

TEST_CASE("nu_k against closed-form tail measures") {
  // nu_2{x1 > 1, x2 > 1} = lim Pr[X_2 > u | X_1 > u] = phi^alpha for ar1.
  const auto ar = law_of(models::Ar1Positive{0.5, 1.0});
  const auto both = catalogue::parse_function("product_exceed(1, 1)", line, 1.0);
  for (auto route : {BackwardRoute::Telescoping, BackwardRoute::TwoSided}) {
    const auto e = nu_k_integral(*ar, both.window, 2, *both.support_radius, 100000, rng::Stream(3, 1), route);
    CHECK(within(e, 0.5, 3));
  }
  // Homogeneity: nu_1{x1 > c} = c^{-alpha}.
  const auto c2 = catalogue::parse_function("indicator_exceed(1, 2)", line, 1.0);
  CHECK(within(nu_k_integral(*ar, c2.window, 1, 2.0, 100000, rng::Stream(3, 2)), 0.5, 3));
  const auto iid = law_of(models::IidPareto{1.0});
  CHECK(within(nu_k_integral(*iid, both.window, 2, 1.0, 50000, rng::Stream(3, 3)), 0.0, 3));
  const auto x2 = catalogue::parse_function("indicator_exceed(2, 1)", line, 1.0);
  CHECK(within(nu_k_integral(*iid, x2.window, 2, 1.0, 50000, rng::Stream(3, 4)), 1.0, 3));
  const auto mma = law_of(models::MaxMovingAverage{{1.0, 1.0}, 1.0});
  CHECK(within(nu_k_integral(*mma, both.window, 2, 1.0, 100000, rng::Stream(3, 5)), 0.5, 3));
}

TEST_CASE("nu_k support contract") {
  const auto ar = law_of(models::Ar1Positive{0.5, 1.0});
  const auto f = catalogue::parse_function("indicator_exceed(1, 0.5)", line, 1.0);
  CHECK_THROWS_AS(nu_k_integral(*ar, f.window, 1, 1.0, 5000, rng::Stream(1, 1)), SupportViolation);
}

}
