#include "rvts/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rvts/error.hpp"

namespace rvts::spectral {

namespace {

class FunctionLaw final : public SpectralLaw {
 public:
  FunctionLaw(SpaceHandle space, double alpha, std::string name,
              std::function<void(int, rng::Engine&, SeriesWindow&)> forward)
      : SpectralLaw(std::move(space), alpha), name_(std::move(name)), forward_(std::move(forward)) {}

  std::string name() const override { return name_; }
  void sample_forward(int horizon, rng::Engine& eng, SeriesWindow& out) const override {
    forward_(horizon, eng, out);
  }

 private:
  std::string name_;
  std::function<void(int, rng::Engine&, SeriesWindow&)> forward_;
};

void ensure_shape(SeriesWindow& w, int first, std::size_t length, std::size_t dim) {
  if (w.first() != first || w.length() != length || w.dim() != dim) w.reset(first, length, dim);
}

double power(double base, double alpha) { return base == 1.0 ? 1.0 : std::pow(base, alpha); }

void check_horizon(const SeriesWindow& forward, int horizon) {
  if (forward.first() != 0 || forward.last() < horizon)
    throw ShapeMismatch("forward draw does not cover {0, ..., " + std::to_string(horizon) + "}");
}

}  // namespace

SpectralLaw::SpectralLaw(SpaceHandle space, double alpha) : space_(std::move(space)), alpha_(alpha) {
  if (!space_) throw InvalidParameter("spectral law needs a space");
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw InvalidParameter("tail index must be positive");
}

void SpectralLaw::sample_two_sided(int, int, rng::Engine&, SeriesWindow&) const {
  throw NoClosedForm("law '" + name() + "' has no closed-form two-sided sampler");
}

LawHandle make_law(SpaceHandle space, double alpha, std::string name,
                   std::function<void(int, rng::Engine&, SeriesWindow&)> forward) {
  return std::make_shared<FunctionLaw>(std::move(space), alpha, std::move(name), std::move(forward));
}

bool time_changed(const Space& space, double alpha, const SeriesWindow& forward, int s, int t,
                  int j, int cutoff, WeightedWindow& out) {
  check_horizon(forward, t + j);
  const double rho_j = starspace::entry_modulus(space, forward, j);
  if (!(rho_j > 0.0)) {
    out.weight = 0.0;
    return false;
  }
  ensure_shape(out.window, -s, static_cast<std::size_t>(s + t + 1), space.dim());
  const double inv = 1.0 / rho_j;
  for (int u = -s; u <= t; ++u) {
    const int m = u + j;
    if (m < cutoff || forward.is_zero(m)) {
      out.window.set_zero(u);
    } else {
      space.scale(inv, forward.at(m), out.window.mut(u));
    }
  }
  out.weight = power(rho_j, alpha);
  return true;
}

Telescoper::Telescoper(const SpectralLaw& law, int s, int t) : law_(law), s_(s), t_(t) {
  if (s < 0 || t < 0) throw InvalidParameter("telescoping needs s, t >= 0");
}

double Telescoper::evaluate(const SeriesWindow& forward, const WindowFunction& g) {
  const Space& space = law_.space();
  double total = 0.0;
  for (int j = s_; j >= 1; --j) {
    if (!time_changed(space, law_.alpha(), forward, s_, t_, j, 0, a_)) continue;
    time_changed(space, law_.alpha(), forward, s_, t_, j, 1, b_);
    total += (g(a_.window) - g(b_.window)) * a_.weight;
  }
  check_horizon(forward, t_);
  ensure_shape(base_, -s_, static_cast<std::size_t>(s_ + t_ + 1), space.dim());
  for (int u = -s_; u <= t_; ++u) {
    if (u < 0 || forward.is_zero(u)) {
      base_.set_zero(u);
    } else {
      base_.set(u, forward.at(u));
    }
  }
  return total + g(base_);
}

MCEstimate spectral_moment(const SpectralLaw& law, int t, std::size_t n, const rng::Stream& stream) {
  if (t < 0) throw InvalidParameter("spectral_moment: t must be >= 0");
  return monte_carlo(n, stream, [&law, t] {
    return [&law, t, w = SeriesWindow()](rng::Engine& eng) mutable {
      law.sample_forward(t, eng, w);
      const double rho = starspace::entry_modulus(law.space(), w, t);
      return rho > 0.0 ? power(rho, law.alpha()) : 0.0;
    };
  });
}

MCEstimate backward_expectation(const SpectralLaw& law, const WindowFunction& g, int s, int t,
                                std::size_t n, const rng::Stream& stream) {
  if (s < 0 || t < 0) throw InvalidParameter("backward_expectation: s, t must be >= 0");
  return monte_carlo(n, stream, [&law, &g, s, t] {
    return [&law, &g, s, t, tel = Telescoper(law, s, t), w = SeriesWindow()](rng::Engine& eng) mutable {
      law.sample_forward(t + s, eng, w);
      return tel.evaluate(w, g);
    };
  });
}

double z_score(const MCEstimate& a, const MCEstimate& b) {
  const double diff = a.value - b.value;
  if (diff == 0.0) return 0.0;
  const double se = std::sqrt(a.std_error * a.std_error + b.std_error * b.std_error);
  if (se == 0.0) return diff > 0 ? std::numeric_limits<double>::infinity()
                                 : -std::numeric_limits<double>::infinity();
  return diff / se;
}

TimeChangeResult time_change_residual(const SpectralLaw& law, const WindowFunction& f, int s,
                                      int t, std::size_t n, const rng::Stream& stream,
                                      const TimeChangeOptions& opt) {
  if (s < 0 || t < 0) throw InvalidParameter("time_change_residual: s, t must be >= 0");
  BackwardRoute route = opt.route;
  if (opt.shared_stream) route = BackwardRoute::Telescoping;
  if (route == BackwardRoute::Auto)
    route = law.has_two_sided() ? BackwardRoute::TwoSided : BackwardRoute::Telescoping;
  if (route == BackwardRoute::TwoSided && !law.has_two_sided())
    throw NoClosedForm("law '" + law.name() + "' has no closed-form two-sided sampler");

  // Sampled check of the zero-first-argument contract.
  {
    rng::Engine eng(stream.child("contract"));
    SeriesWindow w;
    WeightedWindow tw;
    for (std::size_t i = 0; i < opt.contract_checks; ++i) {
      law.sample_forward(t + s, eng, w);
      const int j = static_cast<int>(i % static_cast<std::size_t>(s + 1));
      if (time_changed(law.space(), law.alpha(), w, s, t, j, 0, tw) ||
          time_changed(law.space(), law.alpha(), w, s, t, 0, 0, tw)) {
        tw.window.set_zero(-s);
        if (f(tw.window) != 0.0)
          throw ContractViolation("f is nonzero although its first argument is the origin");
      }
    }
  }

  const rng::Stream lhs_stream = opt.shared_stream ? stream : stream.child("spectral-lhs");
  const rng::Stream rhs_stream = opt.shared_stream ? stream : stream.child("spectral-rhs");

  TimeChangeResult out;
  out.route = route;
  if (route == BackwardRoute::TwoSided) {
    out.lhs = monte_carlo(n, lhs_stream, [&law, &f, s, t] {
      return [&law, &f, s, t, w = SeriesWindow()](rng::Engine& eng) mutable {
        law.sample_two_sided(s, t, eng, w);
        return f(w);
      };
    });
  } else {
    out.lhs = backward_expectation(law, f, s, t, n, lhs_stream);
  }
  out.rhs = monte_carlo(n, rhs_stream, [&law, &f, s, t] {
    return [&law, &f, s, t, w = SeriesWindow(), tw = WeightedWindow()](rng::Engine& eng) mutable {
      law.sample_forward(t + s, eng, w);
      if (!time_changed(law.space(), law.alpha(), w, s, t, s, 0, tw)) return 0.0;
      return f(tw.window) * tw.weight;
    };
  });
  out.z_score = z_score(out.lhs, out.rhs);
  return out;
}

MCEstimate theta_backward_law(const SpectralLaw& law, int t, const PointFunction& g, std::size_t n,
                              const rng::Stream& stream) {
  if (t < 0) throw InvalidParameter("theta_backward_law: t must be >= 0");
  const starspace::Point zero = law.space().origin();
  const double g0 = g(zero, true);
  MCEstimate e = monte_carlo(n, stream, [&law, &g, t, g0] {
    return [&law, &g, t, g0, w = SeriesWindow(),
            theta = starspace::Point(law.space().dim())](rng::Engine& eng) mutable {
      law.sample_forward(t, eng, w);
      const double rho = starspace::entry_modulus(law.space(), w, t);
      if (!(rho > 0.0)) return 0.0;
      law.space().scale(1.0 / rho, w.at(0), theta);
      return (g(theta, false) - g0) * power(rho, law.alpha());
    };
  });
  // g(0) + E[(g(Theta_0/rho_t) - g(0)) rho_t^alpha]: the g(0) mass terms cancel
  // analytically, so g == 1 integrates to exactly 1.
  e.value = g0 + e.value;
  return e;
}

namespace {

// Evaluates f on {1..k} with the support contract checked.
class SupportCheckedF {
 public:
  SupportCheckedF(const Space& space, const WindowFunction& f, double radius)
      : space_(space), f_(f), radius_(radius) {}

  double operator()(const SeriesWindow& w) const {
    const double v = f_(w);
    if (v != 0.0) {
      double m = 0.0;
      for (int p = w.first(); p <= w.last(); ++p) m = std::max(m, starspace::entry_modulus(space_, w, p));
      if (m <= radius_)
        throw SupportViolation("f is nonzero at a window whose entries all have modulus <= " +
                               std::to_string(radius_));
    }
    return v;
  }

 private:
  const Space& space_;
  const WindowFunction& f_;
  double radius_;
};

}  // namespace

MCEstimate nu_k_integral(const SpectralLaw& law, const WindowFunction& f, int k,
                         double support_radius, std::size_t n, const rng::Stream& stream,
                         BackwardRoute route) {
  if (k < 1) throw InvalidParameter("nu_k_integral: k must be >= 1");
  if (!(support_radius > 0.0)) throw InvalidParameter("nu_k_integral: support radius must be > 0");
  if (route == BackwardRoute::Auto)
    route = law.has_two_sided() ? BackwardRoute::TwoSided : BackwardRoute::Telescoping;
  if (route == BackwardRoute::TwoSided && !law.has_two_sided())
    throw NoClosedForm("law '" + law.name() + "' has no closed-form two-sided sampler");

  const Space& space = law.space();
  const double alpha = law.alpha();
  const SupportCheckedF checked(space, f, support_radius);

  // For a source window with entries theta_u (u in [-s, t]), the i-th term of
  // the sum reads f(0, ..., 0, z theta_0, ..., z theta_{k-i}) times the
  // indicator that theta_{-1}, ..., theta_{1-i} are all zero.
  struct Scratch {
    SeriesWindow fwin;
    starspace::Point buf;
  };
  auto term = [&space, &checked, k](const SeriesWindow& src, int i, double z, Scratch& sc) {
    for (int u = -(i - 1); u <= -1; ++u)
      if (!src.is_zero(u)) return 0.0;
    ensure_shape(sc.fwin, 1, static_cast<std::size_t>(k), space.dim());
    for (int p = 1; p <= k; ++p) {
      const int u = p - i;
      if (u < 0 || src.is_zero(u)) {
        sc.fwin.set_zero(p);
      } else {
        space.scale(z, src.at(u), sc.fwin.mut(p));
      }
    }
    return checked(sc.fwin);
  };

  // Probe: scaled forward draws with every entry inside the support radius.
  {
    rng::Engine eng(stream.child("support"));
    SeriesWindow fw, probe;
    for (int i = 0; i < 64; ++i) {
      law.sample_forward(k - 1, eng, fw);
      double top = 0.0;
      for (int m = 0; m < k; ++m) top = std::max(top, starspace::entry_modulus(space, fw, m));
      if (!(top > 0.0)) continue;
      const double z = support_radius / top * eng.uniform_pos();
      ensure_shape(probe, 1, static_cast<std::size_t>(k), space.dim());
      for (int p = 1; p <= k; ++p) {
        if (fw.is_zero(p - 1)) probe.set_zero(p);
        else space.scale(z, fw.at(p - 1), probe.mut(p));
      }
      checked(probe);
    }
  }

  // The z-integral over d(-z^{-alpha}) is sampled as z = a U^{-1/alpha} with
  // weight a^{-alpha}, where a = r0 / M and M bounds the modulus of every
  // entry that gets multiplied by z, so the integrand vanishes below a.
  return monte_carlo(n, stream, [&, route] {
    return [&, route, fw = SeriesWindow(), sc = Scratch()](rng::Engine& eng) mutable {
      double bound = 0.0;
      if (route == BackwardRoute::TwoSided) {
        law.sample_two_sided(k - 1, k - 1, eng, fw);
        for (int m = 0; m <= k - 1; ++m) bound = std::max(bound, starspace::entry_modulus(space, fw, m));
      } else {
        law.sample_forward(k - 1, eng, fw);
        std::vector<double> rho(static_cast<std::size_t>(k));
        for (int m = 0; m < k; ++m) rho[static_cast<std::size_t>(m)] = starspace::entry_modulus(space, fw, m);
        const double top = *std::max_element(rho.begin(), rho.end());
        for (double r : rho)
          if (r > 0.0) bound = std::max(bound, top / r);
      }
      if (!(bound > 0.0)) return 0.0;
      const double a = support_radius / bound;
      const double z = a * std::pow(eng.uniform_pos(), -1.0 / alpha);
      const double weight = std::pow(a, -alpha);

      double total = 0.0;
      if (route == BackwardRoute::TwoSided) {
        for (int i = 1; i <= k; ++i) total += term(fw, i, z, sc);
      } else {
        for (int i = 1; i <= k; ++i) {
          Telescoper tel(law, i - 1, k - i);
          const WindowFunction gi = [&, i, z](const SeriesWindow& w) { return term(w, i, z, sc); };
          total += tel.evaluate(fw, gi);
        }
      }
      return total * weight;
    };
  });
}

nlohmann::json to_json(const MCEstimate& e, std::uint64_t seed) {
  return {{"value", e.value}, {"std_error", e.std_error}, {"n", e.n}, {"seed", seed}};
}

const char* route_name(BackwardRoute route) {
  switch (route) {
    case BackwardRoute::Auto: return "auto";
    case BackwardRoute::TwoSided: return "two_sided";
    case BackwardRoute::Telescoping: return "telescoping";
  }
  return "?";
}

}  // namespace rvts::spectral
