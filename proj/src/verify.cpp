#include "rvts/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>

#include "rvts/catalogue.hpp"
#include "rvts/error.hpp"
#include "rvts/estimate.hpp"
#include "rvts/models.hpp"
#include "rvts/spectral.hpp"
#include "rvts/tailmeasure.hpp"

namespace rvts::verify {

namespace {

using models::ModelSpec;
using starspace::SpaceHandle;

struct Named {
  std::string label;
  ModelSpec spec;
};

std::vector<Named> battery_models() {
  const auto line = starspace::euclidean(1);
  return {{"ar1(0.5,1)", {models::Ar1Positive{0.5, 1.0}, line}},
          {"ar1(0.5,2)", {models::Ar1Positive{0.5, 2.0}, line}},
          {"mma((1,1),1)", {models::MaxMovingAverage{{1.0, 1.0}, 1.0}, line}},
          {"iid(1)", {models::IidPareto{1.0}, line}}};
}

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

Check against(std::string identity, const MCEstimate& e, double target, double k) {
  Check c;
  c.identity = std::move(identity);
  c.value = e.value;
  c.target = target;
  const double tol = std::max(k * e.std_error, 1e-12);
  c.z = e.std_error > 0 ? (e.value - target) / e.std_error : (e.value == target ? 0.0 : HUGE_VAL);
  c.pass = std::fabs(e.value - target) <= tol;
  c.detail = {{"std_error", e.std_error}, {"n", e.n}, {"tolerance", tol}};
  return c;
}

// ---- suites ---------------------------------------------------------------------

void suite_axioms(SuiteResult& out, std::uint64_t seed, std::size_t n) {
  starspace::ValidateOptions opt;
  opt.seed = seed;
  const std::vector<SpaceHandle> good{starspace::euclidean(1), starspace::euclidean(3),
                                      starspace::euclidean(2, INFINITY), starspace::path_sup(16),
                                      starspace::snowflake_gauge(2, 0.5)};
  for (const auto& sp : good) {
    const auto rep = starspace::validate_axioms(sp, starspace::default_sampler(sp), n, 1e-12, opt);
    Check c;
    c.identity = "axioms pass on " + sp->descriptor();
    c.pass = rep.all_pass();
    for (const auto& a : rep.axioms) c.z = std::max(c.z, a.worst_violation);
    c.detail = starspace::to_json(rep);
    out.checks.push_back(std::move(c));
  }

  const auto wh = starspace::weighted_hilbert(100);
  const auto rep = starspace::validate_axioms(wh, starspace::default_sampler(wh), n, 1e-12, opt);
  Check c;
  c.identity = "weighted_hilbert(100) flagged with witness rho(e_100) = 0.1 at dist 1";
  const auto shell = std::find_if(rep.condition_iii.begin(), rep.condition_iii.end(),
                                  [](const auto& s) { return s.eps == 1.0; });
  if (shell != rep.condition_iii.end()) {
    c.value = shell->witness_modulus;
    c.target = 0.1;
    c.z = std::fabs(shell->witness_modulus - 0.1);
    c.pass = rep.exact_axioms_pass() && rep.condition_iii_flagged && shell->flagged &&
             c.z <= 1e-12 && std::fabs(shell->witness_distance - 1.0) <= 1e-12;
    c.detail = {{"witness_distance", shell->witness_distance},
                {"witness_index", shell->witness_index},
                {"anisotropy", shell->anisotropy}};
  }
  out.checks.push_back(std::move(c));
}

void suite_timechange(SuiteResult& out, std::uint64_t seed, std::size_t n) {
  const rng::Stream base = rng::Stream::named(seed, "verify-timechange");
  std::uint64_t stream_index = 0;
  for (const auto& m : battery_models()) {
    const auto law = models::true_forward_spectral(m.spec);
    for (int s : {1, 2})
      for (int t : {0, 1})
        for (double level : {0.5, 1.0, 2.0}) {
          const auto f = catalogue::parse_function(fmt("indicator_exceed(%g, %g)", -s, level), m.spec.space,
                                                   law->alpha());
          const auto r = spectral::time_change_residual(*law, f.window, s, t, n, base.child(stream_index++));
          Check c;
          c.identity = m.label + " time change s=" + std::to_string(s) + " t=" + std::to_string(t) + " f=" + f.text;
          c.value = r.lhs.value;
          c.target = r.rhs.value;
          c.z = r.z_score;
          c.pass = std::fabs(r.z_score) <= 4.0;
          c.detail = {{"lhs_se", r.lhs.std_error}, {"rhs_se", r.rhs.std_error}, {"route", spectral::route_name(r.route)}};
          out.checks.push_back(std::move(c));
        }
  }

  // Pr[Theta_{-1} != 0] = phi^alpha for ar1(0.5, 2).
  {
    const ModelSpec spec{models::Ar1Positive{0.5, 2.0}, starspace::euclidean(1)};
    const auto law = models::true_forward_spectral(spec);
    const auto f = catalogue::parse_function("indicator_nonzero(-1)", spec.space, 2.0);
    spectral::TimeChangeOptions opt;
    opt.route = spectral::BackwardRoute::TwoSided;
    const auto r = spectral::time_change_residual(*law, f.window, 1, 0, n, base.child("nonzero"), opt);
    out.checks.push_back(against("ar1(0.5,2) Pr[Theta_-1 != 0] = 0.25", r.lhs, 0.25, 3.0));
  }

  // Moment bound and exact moments.
  std::uint64_t k = 0;
  for (const auto& m : battery_models()) {
    const auto law = models::true_forward_spectral(m.spec);
    for (int t = 0; t <= 10; ++t) {
      const auto e = spectral::spectral_moment(*law, t, n, base.child("moment").child(k++));
      double exact = 0.0;
      if (t == 0) exact = 1.0;
      else if (const auto* a = std::get_if<models::Ar1Positive>(&m.spec.variant)) exact = std::pow(a->phi, t * a->alpha);
      else if (std::holds_alternative<models::IidPareto>(m.spec.variant)) exact = 0.0;
      else exact = NAN;
      Check c;
      c.identity = m.label + " E[rho(Theta_" + std::to_string(t) + ")^alpha] <= 1";
      c.value = e.value;
      c.target = 1.0;
      c.pass = e.value <= 1.0 + 3.0 * e.std_error + 1e-12;
      if (!std::isnan(exact)) {
        const auto ex = against("", e, exact, 3.0);
        c.identity += " and = " + fmt("%.6g", exact);
        c.target = exact;
        c.z = ex.z;
        c.pass = c.pass && ex.pass;
      }
      c.detail = {{"std_error", e.std_error}};
      out.checks.push_back(std::move(c));
    }
  }
}

void suite_nuk(SuiteResult& out, std::uint64_t seed, std::size_t draws, std::size_t path_n) {
  const ModelSpec spec{models::Ar1Positive{0.5, 1.0}, starspace::euclidean(1)};
  const auto law = models::true_forward_spectral(spec);
  const auto f = catalogue::parse_function("product_exceed(1, 1)", spec.space, 1.0);
  const auto formula = spectral::nu_k_integral(*law, f.window, 2, *f.support_radius, draws,
                                               rng::Stream::named(seed, "verify-nuk"));
  out.checks.push_back(against("ar1(0.5,1) nu_2 formula = 0.5", formula, 0.5, 3.0));

  const auto path = models::simulate(spec, path_n, seed);
  const double u = tailmeasure::resolve_threshold(tailmeasure::ThresholdRule::quantile(0.999), path.moduli());
  const auto emp = tailmeasure::empirical_nu_k(path, f.window, 2, u);
  Check c;
  c.identity = "ar1(0.5,1) finite-u nu_2 agrees with the formula";
  c.value = emp.value;
  c.target = formula.value;
  c.z = spectral::z_score(emp, formula);
  c.pass = std::fabs(c.z) <= 3.0;
  c.detail = {{"u", u}, {"empirical_se", emp.std_error}, {"formula_se", formula.std_error}};
  out.checks.push_back(std::move(c));
}

void suite_estimator_oracle(SuiteResult& out, std::uint64_t seed, std::size_t n, std::size_t long_n) {
  const auto line = starspace::euclidean(1);
  for (double alpha : {1.0, 2.0}) {
    const auto path = models::simulate({models::IidPareto{alpha}, line}, n, seed);
    const auto h = estimate::hill(path.moduli(), 1000);
    Check c;
    c.identity = fmt("Hill recovers alpha = %g within 10%%", alpha);
    c.value = h.alpha_hat;
    c.target = alpha;
    c.z = (h.alpha_hat - alpha) / h.std_error;
    c.pass = std::fabs(h.alpha_hat - alpha) <= 0.1 * alpha;
    out.checks.push_back(std::move(c));
  }
  {
    const auto path = models::simulate({models::Ar1Positive{0.5, 2.0}, line}, long_n, seed);
    const double u = tailmeasure::resolve_threshold(tailmeasure::ThresholdRule::quantile(0.999), path.moduli());
    const auto emp = estimate::empirical_spectral(path, 1, u);
    auto lag = emp.lag_moduli(1);
    std::sort(lag.begin(), lag.end());
    const double median = lag.size() % 2 ? lag[lag.size() / 2] : 0.5 * (lag[lag.size() / 2 - 1] + lag[lag.size() / 2]);
    Check c;
    c.identity = "ar1(0.5,2) empirical spectral lag-1 median in [0.45, 0.55]";
    c.value = median;
    c.target = 0.5;
    c.pass = median >= 0.45 && median <= 0.55;
    c.detail = {{"draws", emp.draws()}, {"u", u}};
    out.checks.push_back(std::move(c));
  }
  {
    const ModelSpec spec{models::Ar1Positive{0.5, 1.0}, line};
    const auto path = models::simulate(spec, long_n, seed);
    const double u = tailmeasure::resolve_threshold(tailmeasure::ThresholdRule::quantile(0.999), path.moduli());
    const auto curve = estimate::extremogram(path, {0, 1}, u);
    const MCEstimate e{curve.values[1], curve.std_errors[1], curve.exceedances[1]};
    out.checks.push_back(against("ar1(0.5,1) extremogram lag 1 = 0.5", e, models::true_extremogram(spec, 1), 3.0));
  }
  {
    const auto plane = starspace::euclidean(2);
    const auto path = models::simulate({models::IidPareto{1.0}, plane}, 10 * (long_n / 10), seed);
    const double u = tailmeasure::resolve_threshold(tailmeasure::ThresholdRule::quantile(0.9), path.moduli());
    tailmeasure::PolarOptions opt;
    opt.seed = seed;
    const auto rep = tailmeasure::polar_product_check(path, u, opt);
    Check c;
    c.identity = "iid_pareto on euclidean(2): Pareto KS and angle homogeneity";
    c.value = rep.ks_distance;
    c.target = rep.ks_critical;
    c.z = rep.p_value;
    c.pass = rep.pass;
    c.detail = tailmeasure::to_json(rep);
    out.checks.push_back(std::move(c));
  }
  {
    const auto path = models::simulate({models::Ar1Positive{0.5, 1.0}, line}, n, seed);
    const double u = tailmeasure::resolve_threshold(tailmeasure::ThresholdRule::quantile(0.99), path.moduli());
    const auto shared = tailmeasure::projection_consistency(path, 2, 1, u);
    const auto same = tailmeasure::projection_consistency(path, 1, 1, u);
    Check c;
    c.identity = "projection consistency within the edge bound; exact for n = m";
    c.value = shared.max_discrepancy;
    c.pass = shared.pass && same.max_discrepancy == 0.0;
    c.detail = tailmeasure::to_json(shared);
    out.checks.push_back(std::move(c));
  }
}

}  // namespace

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"axioms", "timechange", "nuk", "estimator_oracle"};
  return names;
}

nlohmann::json SuiteResult::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& c : checks) {
    nlohmann::json r{{"identity", c.identity}, {"pass", c.pass}, {"value", c.value}, {"target", c.target},
                     {"z_or_violation", std::isfinite(c.z) ? nlohmann::json(c.z) : nlohmann::json(nullptr)}};
    if (!c.detail.empty()) r["detail"] = c.detail;
    rows.push_back(r);
  }
  return {{"suite", suite}, {"seed", seed}, {"scale", scale}, {"pass", pass},
          {"wall_time", wall_time}, {"checks", rows}};
}

SuiteResult run_suite(std::string_view name, std::uint64_t seed, Scale scale) {
  const auto t0 = std::chrono::steady_clock::now();
  const bool desk = scale == Scale::Desk;
  SuiteResult out;
  out.suite = std::string(name);
  out.seed = seed;
  out.scale = desk ? "desk" : "smoke";
  if (name == "axioms") suite_axioms(out, seed, desk ? 100000 : 10000);
  else if (name == "timechange") suite_timechange(out, seed, desk ? 100000 : 20000);
  else if (name == "nuk") suite_nuk(out, seed, desk ? 400000 : 100000, desk ? 1000000 : 200000);
  else if (name == "estimator_oracle") suite_estimator_oracle(out, seed, 100000, desk ? 1000000 : 200000);
  else throw UnknownSuite("unknown verify suite '" + std::string(name) + "'");
  for (const auto& c : out.checks) out.pass = out.pass && c.pass;
  out.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

}  // namespace rvts::verify
