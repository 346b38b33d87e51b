#include "rvts/models.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rvts/config.hpp"
#include "rvts/error.hpp"
#include "rvts/parallel.hpp"

namespace rvts::models {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

void check_alpha(double alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha))
    throw InvalidParameter("alpha must be a positive finite number");
}

Point resolved_path(const PathAmplitude& m, const starspace::Space& space) {
  return m.path ? *m.path : starspace::unit_path(space.dim());
}

std::vector<double> mma_probabilities(const MaxMovingAverage& m) {
  std::vector<double> p(m.coefficients.size());
  for (std::size_t j = 0; j < p.size(); ++j) p[j] = std::pow(m.coefficients[j], m.alpha);
  const double total = std::accumulate(p.begin(), p.end(), 0.0);
  for (double& v : p) v /= total;
  return p;
}

// ---- spectral laws -------------------------------------------------------------

// Theta_0 = W (a random angle, or a fixed unit point), Theta_t = 0 otherwise.
class SingleSpikeLaw final : public spectral::SpectralLaw {
 public:
  SingleSpikeLaw(SpaceHandle space, double alpha, std::optional<Point> fixed, std::string name)
      : SpectralLaw(std::move(space), alpha), fixed_(std::move(fixed)), name_(std::move(name)) {}

  std::string name() const override { return name_; }
  void sample_forward(int horizon, rng::Engine& eng, starspace::SeriesWindow& out) const override {
    fill(0, horizon, eng, out);
  }
  bool has_two_sided() const override { return true; }
  void sample_two_sided(int s, int t, rng::Engine& eng, starspace::SeriesWindow& out) const override {
    fill(-s, t, eng, out);
  }

 private:
  void fill(int first, int last, rng::Engine& eng, starspace::SeriesWindow& out) const {
    out.reset(first, static_cast<std::size_t>(last - first + 1), space().dim());
    auto dst = out.mut(0);
    if (fixed_) {
      std::copy(fixed_->begin(), fixed_->end(), dst.begin());
    } else {
      space().sample_angle(eng, dst);
    }
  }

  std::optional<Point> fixed_;
  std::string name_;
};

// Theta_t = phi^t W for t >= -J with P(J >= j) = phi^{j alpha}; the forward
// part is the deterministic ray phi^t W.
class Ar1Law final : public spectral::SpectralLaw {
 public:
  Ar1Law(SpaceHandle space, Ar1Positive m) : SpectralLaw(std::move(space), m.alpha), m_(m) {}

  std::string name() const override { return "ar1_positive"; }
  void sample_forward(int horizon, rng::Engine& eng, starspace::SeriesWindow& out) const override {
    fill(0, horizon, 0, eng, out);
  }
  bool has_two_sided() const override { return true; }
  void sample_two_sided(int s, int t, rng::Engine& eng, starspace::SeriesWindow& out) const override {
    // J = floor(log U / log q), q = phi^alpha, so P(J >= j) = q^j.
    const double q = std::pow(m_.phi, m_.alpha);
    const double j = std::floor(std::log(eng.uniform_pos()) / std::log(q));
    const int reach = j >= static_cast<double>(s) ? s : static_cast<int>(j);
    fill(-s, t, reach, eng, out);
  }

 private:
  void fill(int first, int last, int reach, rng::Engine& eng, starspace::SeriesWindow& out) const {
    out.reset(first, static_cast<std::size_t>(last - first + 1), space().dim());
    Point w(space().dim());
    space().sample_angle(eng, w);
    for (int t = std::max(first, -reach); t <= last; ++t)
      space().scale(std::pow(m_.phi, t), w, out.mut(t));
  }

  Ar1Positive m_;
};

// The extreme is carried by the innovation at lag J, P(J = j) proportional to
// c_j^alpha; Theta_t = (c_{J+t} / c_J) W while 0 <= J + t <= q.
class MmaLaw final : public spectral::SpectralLaw {
 public:
  MmaLaw(SpaceHandle space, MaxMovingAverage m)
      : SpectralLaw(std::move(space), m.alpha), m_(std::move(m)), prob_(mma_probabilities(m_)) {
    cumulative_.resize(prob_.size());
    std::partial_sum(prob_.begin(), prob_.end(), cumulative_.begin());
  }

  std::string name() const override { return "max_moving_average"; }
  void sample_forward(int horizon, rng::Engine& eng, starspace::SeriesWindow& out) const override {
    fill(0, horizon, eng, out);
  }
  bool has_two_sided() const override { return true; }
  void sample_two_sided(int s, int t, rng::Engine& eng, starspace::SeriesWindow& out) const override {
    fill(-s, t, eng, out);
  }

 private:
  void fill(int first, int last, rng::Engine& eng, starspace::SeriesWindow& out) const {
    const double u = eng.uniform();
    std::size_t j = 0;
    while (j + 1 < cumulative_.size() && !(u < cumulative_[j])) ++j;
    while (prob_[j] == 0.0) --j;  // u landed on the top edge past trailing zeros
    out.reset(first, static_cast<std::size_t>(last - first + 1), space().dim());
    Point w(space().dim());
    space().sample_angle(eng, w);
    const int q = static_cast<int>(m_.coefficients.size()) - 1;
    const double cj = m_.coefficients[j];
    for (int t = first; t <= last; ++t) {
      const int idx = static_cast<int>(j) + t;
      if (idx < 0 || idx > q) continue;
      const double c = m_.coefficients[static_cast<std::size_t>(idx)];
      if (c == 0.0) continue;
      space().scale(c / cj, w, out.mut(t));
    }
  }

  MaxMovingAverage m_;
  std::vector<double> prob_;
  std::vector<double> cumulative_;
};

}  // namespace

double ModelSpec::alpha() const {
  return std::visit([](const auto& m) { return m.alpha; }, variant);
}

std::string ModelSpec::name() const {
  return std::visit(overloaded{[](const IidPareto&) { return std::string("iid_pareto"); },
                               [](const Ar1Positive&) { return std::string("ar1_positive"); },
                               [](const MaxMovingAverage&) { return std::string("max_moving_average"); },
                               [](const PathAmplitude&) { return std::string("path_amplitude"); }},
                    variant);
}

void ModelSpec::validate() const {
  if (!space) throw InvalidParameter("model has no space");
  check_alpha(alpha());
  std::visit(overloaded{
                 [](const IidPareto&) {},
                 [](const Ar1Positive& m) {
                   if (!(m.phi > 0.0 && m.phi < 1.0))
                     throw InvalidParameter("ar1_positive: phi must lie in (0, 1)");
                 },
                 [](const MaxMovingAverage& m) {
                   if (m.coefficients.empty())
                     throw InvalidParameter("max_moving_average: needs at least one coefficient");
                   for (double c : m.coefficients)
                     if (!(c >= 0.0) || !std::isfinite(c))
                       throw InvalidParameter("max_moving_average: coefficients must be >= 0");
                   if (*std::max_element(m.coefficients.begin(), m.coefficients.end()) <= 0.0)
                     throw InvalidParameter("max_moving_average: some coefficient must be > 0");
                 },
                 [this](const PathAmplitude& m) {
                   if (space->kind() != "path_sup")
                     throw InvalidParameter("path_amplitude: requires a path_sup space");
                   if (m.path) {
                     space->check_point(*m.path);
                     if (std::fabs(space->modulus(*m.path) - 1.0) > 1e-12)
                       throw InvalidParameter("path_amplitude: path must have unit modulus");
                   }
                 }},
             variant);
  if (!std::holds_alternative<PathAmplitude>(variant) && !space->supports_angles())
    throw InvalidParameter(name() + ": space " + space->descriptor() + " has no angular law");
}

ModelSpec make_model(const config::Document& s, SpaceHandle space) {
  const std::string kind = s.string("kind");
  const double alpha = s.number_or("alpha", 1.0);
  ModelSpec spec;
  spec.space = std::move(space);
  if (kind == "iid_pareto") {
    spec.variant = IidPareto{alpha};
  } else if (kind == "ar1_positive") {
    spec.variant = Ar1Positive{s.number("phi"), alpha};
  } else if (kind == "max_moving_average") {
    spec.variant = MaxMovingAverage{s.numbers("coefficients"), alpha};
  } else if (kind == "path_amplitude") {
    PathAmplitude m{alpha, std::nullopt};
    if (s.has("path")) m.path = s.numbers("path");
    spec.variant = m;
  } else {
    throw ConfigError("model.kind", "unknown model kind '" + kind + "'");
  }
  try {
    spec.validate();
  } catch (const InvalidParameter& e) {
    throw ConfigError("model", e.what());
  }
  return spec;
}

std::vector<double> SeriesPath::moduli() const {
  std::vector<double> out(n);
  space->moduli(coords, out);
  return out;
}

std::size_t burn_in(const ModelSpec& model) {
  return std::visit(overloaded{[](const Ar1Positive& m) {
                                 return static_cast<std::size_t>(
                                     std::ceil(std::log(1e-12) / std::log(m.phi)));
                               },
                               [](const MaxMovingAverage& m) { return m.coefficients.size() - 1; },
                               [](const auto&) { return std::size_t{0}; }},
                    model.variant);
}

namespace {

constexpr std::size_t kStepsPerChunk = 1 << 16;

// Innovations Y_t W_t for t in [0, total), generated in fixed chunks so the
// result does not depend on the number of workers.
void innovations(const ModelSpec& model, std::size_t total, std::uint64_t seed,
                 std::vector<double>& amp, std::vector<double>& dir) {
  const auto& space = *model.space;
  const std::size_t dim = space.dim();
  const bool fixed_dir = std::holds_alternative<PathAmplitude>(model.variant);
  const Point psi = fixed_dir ? resolved_path(std::get<PathAmplitude>(model.variant), space) : Point{};
  amp.resize(total);
  dir.resize(total * dim);
  const double alpha = model.alpha();
  const rng::Stream base = rng::Stream::named(seed, "model");
  const std::size_t chunks = (total + kStepsPerChunk - 1) / kStepsPerChunk;
  parallel_for(chunks, [&](std::size_t c) {
    rng::Engine eng(base.child(c));
    const std::size_t begin = c * kStepsPerChunk;
    const std::size_t end = std::min(total, begin + kStepsPerChunk);
    for (std::size_t t = begin; t < end; ++t) {
      amp[t] = eng.pareto(alpha);
      std::span<double> w(dir.data() + t * dim, dim);
      if (fixed_dir) {
        std::copy(psi.begin(), psi.end(), w.begin());
      } else {
        space.sample_angle(eng, w);
      }
    }
  });
}

}  // namespace

SeriesPath simulate(const ModelSpec& model, std::size_t n, std::uint64_t seed,
                    std::optional<std::size_t> burn_override) {
  if (n < 1) throw InvalidParameter("simulate: n must be >= 1");
  model.validate();
  const auto& space = *model.space;
  const std::size_t dim = space.dim();
  const std::size_t burn = burn_override.value_or(burn_in(model));
  const std::size_t total = n + burn;

  std::vector<double> amp, dir;
  innovations(model, total, seed, amp, dir);

  SeriesPath path;
  path.space = model.space;
  path.n = n;
  path.seed = seed;
  path.burn_in = burn;
  path.coords.assign(n * dim, 0.0);

  std::visit(overloaded{
                 [&](const Ar1Positive& m) {
                   std::vector<double> x(dim, 0.0);
                   for (std::size_t t = 0; t < total; ++t) {
                     for (std::size_t j = 0; j < dim; ++j)
                       x[j] = m.phi * x[j] + amp[t] * dir[t * dim + j];
                     if (t >= burn) std::copy(x.begin(), x.end(), path.coords.begin() + (t - burn) * dim);
                   }
                 },
                 [&](const MaxMovingAverage& m) {
                   const std::size_t q = m.coefficients.size() - 1;
                   parallel_for((n + kStepsPerChunk - 1) / kStepsPerChunk, [&](std::size_t c) {
                     const std::size_t end = std::min(n, (c + 1) * kStepsPerChunk);
                     for (std::size_t i = c * kStepsPerChunk; i < end; ++i) {
                       const std::size_t t = i + burn;
                       double best = -1.0;
                       std::size_t arg = 0;
                       for (std::size_t j = 0; j <= std::min(q, t); ++j) {
                         const double v = m.coefficients[j] * amp[t - j];
                         if (v > best) {
                           best = v;
                           arg = j;
                         }
                       }
                       for (std::size_t d = 0; d < dim; ++d)
                         path.coords[i * dim + d] = best * dir[(t - arg) * dim + d];
                     }
                   });
                 },
                 [&](const auto&) {
                   for (std::size_t i = 0; i < n; ++i)
                     for (std::size_t d = 0; d < dim; ++d)
                       path.coords[i * dim + d] = amp[i + burn] * dir[(i + burn) * dim + d];
                 }},
             model.variant);
  return path;
}

spectral::LawHandle true_forward_spectral(const ModelSpec& model) {
  model.validate();
  return std::visit(
      overloaded{[&](const IidPareto& m) -> spectral::LawHandle {
                   return std::make_shared<SingleSpikeLaw>(model.space, m.alpha, std::nullopt,
                                                           "iid_pareto");
                 },
                 [&](const Ar1Positive& m) -> spectral::LawHandle {
                   return std::make_shared<Ar1Law>(model.space, m);
                 },
                 [&](const MaxMovingAverage& m) -> spectral::LawHandle {
                   return std::make_shared<MmaLaw>(model.space, m);
                 },
                 [&](const PathAmplitude& m) -> spectral::LawHandle {
                   return std::make_shared<SingleSpikeLaw>(model.space, m.alpha,
                                                           resolved_path(m, *model.space),
                                                           "path_amplitude");
                 }},
      model.variant);
}

double true_extremogram(const ModelSpec& model, int lag) {
  model.validate();
  const int t = std::abs(lag);  // stationarity makes the extremogram symmetric
  return std::visit(overloaded{[&](const Ar1Positive& m) { return std::pow(m.phi, t * m.alpha); },
                               [&](const MaxMovingAverage& m) {
                                 const auto p = mma_probabilities(m);
                                 const int q = static_cast<int>(m.coefficients.size()) - 1;
                                 double sum = 0.0;
                                 for (int j = 0; j <= q; ++j) {
                                   if (p[static_cast<std::size_t>(j)] == 0.0 || j + t > q) continue;
                                   const double ratio = m.coefficients[static_cast<std::size_t>(j + t)] /
                                                        m.coefficients[static_cast<std::size_t>(j)];
                                   sum += p[static_cast<std::size_t>(j)] *
                                          std::pow(std::min(ratio, 1.0), m.alpha);
                                 }
                                 return sum;
                               },
                               [&](const auto&) { return t == 0 ? 1.0 : 0.0; }},
                    model.variant);
}

}  // namespace rvts::models
