#include "rvts/starspace.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "rvts/config.hpp"
#include "rvts/error.hpp"
#include "rvts/kernels.hpp"

namespace rvts::starspace {

namespace {

std::string fmt_number(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

// ---- euclidean -------------------------------------------------------------

class EuclideanSpace final : public Space {
 public:
  EuclideanSpace(std::size_t dim, double p, double floor) : Space(dim, floor), p_(p) {
    if (dim == 0) throw InvalidParameter("euclidean: dim must be >= 1");
    if (!(p >= 1.0)) throw InvalidParameter("euclidean: p must be >= 1");
  }

  std::string kind() const override { return "euclidean"; }
  std::string descriptor() const override {
    return "{ kind = \"euclidean\", dim = " + std::to_string(dim()) +
           ", p = " + (std::isinf(p_) ? std::string("inf") : fmt_number(p_)) + " }";
  }

  double distance(Coords x, Coords y) const override {
    double s = 0.0;
    if (p_ == 2.0) {
      for (std::size_t j = 0; j < x.size(); ++j) {
        const double d = x[j] - y[j];
        s = s + d * d;
      }
      return std::sqrt(s);
    }
    if (std::isinf(p_)) {
      for (std::size_t j = 0; j < x.size(); ++j) s = std::max(s, std::fabs(x[j] - y[j]));
      return s;
    }
    for (std::size_t j = 0; j < x.size(); ++j) s += std::pow(std::fabs(x[j] - y[j]), p_);
    return std::pow(s, 1.0 / p_);
  }

  double distance_to_origin(Coords x) const override { return modulus(x); }

  double modulus(Coords x) const override {
    double out = 0.0;
    moduli(x, {&out, 1});
    return out;
  }

  void moduli(Coords rows, std::span<double> out) const override {
    if (p_ == 2.0) {
      kernels::row_norm2(rows, dim(), out);
    } else if (std::isinf(p_)) {
      kernels::row_max_abs(rows, dim(), out);
    } else {
      for (std::size_t r = 0; r < out.size(); ++r) {
        double s = 0.0;
        for (std::size_t j = 0; j < dim(); ++j) s += std::pow(std::fabs(rows[r * dim() + j]), p_);
        out[r] = std::pow(s, 1.0 / p_);
      }
    }
  }

  void sample_angle(rng::Engine& eng, std::span<double> out) const override {
    if (dim() == 1) {
      out[0] = 1.0;  // positive data: the angle is degenerate
      return;
    }
    sample_direction(eng, out);
  }

 private:
  double p_;
};

// ---- path space with sup modulus ---------------------------------------------

class PathSupSpace final : public Space {
 public:
  PathSupSpace(std::size_t grid, double floor) : Space(grid, floor), unit_(unit_path(grid)) {}

  std::string kind() const override { return "path_sup"; }
  std::string descriptor() const override {
    return "{ kind = \"path_sup\", grid = " + std::to_string(dim()) + " }";
  }

  double distance(Coords x, Coords y) const override {
    double s = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double a = std::fabs(x[j] - y[j]);
      s = a > s ? a : s;
    }
    return s;
  }
  double distance_to_origin(Coords x) const override { return modulus(x); }
  double modulus(Coords x) const override {
    double out = 0.0;
    kernels::row_max_abs(x, dim(), {&out, 1});
    return out;
  }
  void moduli(Coords rows, std::span<double> out) const override {
    kernels::row_max_abs(rows, dim(), out);
  }

  void sample_angle(rng::Engine&, std::span<double> out) const override {
    std::copy(unit_.begin(), unit_.end(), out.begin());
  }

  // Random-walk paths scaled to a log-uniform sup norm.
  void sample_point(rng::Engine& eng, std::size_t, std::span<double> out) const override {
    double level = 0.0;
    for (double& v : out) {
      level += eng.normal();
      v = level;
    }
    const double m = modulus(out);
    const double radius = std::pow(10.0, 6.0 * eng.uniform() - 3.0);
    if (m > 0.0) scale(radius / m, out, out);
  }

 private:
  Point unit_;
};

// ---- snowflake metric with gauge modulus ---------------------------------------

class SnowflakeGaugeSpace final : public Space {
 public:
  SnowflakeGaugeSpace(std::size_t dim, double beta, double floor) : Space(dim, floor), beta_(beta) {
    if (dim == 0) throw InvalidParameter("snowflake_gauge: dim must be >= 1");
    if (!(beta > 0.0 && beta <= 1.0)) throw InvalidParameter("snowflake_gauge: beta must lie in (0, 1]");
  }

  std::string kind() const override { return "snowflake_gauge"; }
  std::string descriptor() const override {
    return "{ kind = \"snowflake_gauge\", dim = " + std::to_string(dim()) +
           ", beta = " + fmt_number(beta_) + " }";
  }

  double distance(Coords x, Coords y) const override {
    double s = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double d = x[j] - y[j];
      s = s + d * d;
    }
    return std::pow(std::sqrt(s), beta_);
  }

  double modulus(Coords x) const override { return gauge_modulus(*this, x); }

  void sample_angle(rng::Engine& eng, std::span<double> out) const override {
    if (dim() == 1) {
      out[0] = 1.0;
      return;
    }
    sample_direction(eng, out);
  }

 private:
  double beta_;
};

// ---- truncated weighted Hilbert space ------------------------------------------

class WeightedHilbertSpace final : public Space {
 public:
  WeightedHilbertSpace(std::size_t n, double floor) : Space(n, floor), weights_(n) {
    if (n == 0) throw InvalidParameter("weighted_hilbert: truncation must be >= 1");
    for (std::size_t i = 0; i < n; ++i) weights_[i] = 1.0 / static_cast<double>(i + 1);
  }

  std::string kind() const override { return "weighted_hilbert"; }
  std::string descriptor() const override {
    return "{ kind = \"weighted_hilbert\", truncation = " + std::to_string(dim()) + " }";
  }

  double distance(Coords x, Coords y) const override {
    double s = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double d = x[j] - y[j];
      s = s + d * d;
    }
    return std::sqrt(s);
  }
  double modulus(Coords x) const override {
    double out = 0.0;
    kernels::row_weighted_norm2(x, dim(), weights_, {&out, 1});
    return out;
  }
  void moduli(Coords rows, std::span<double> out) const override {
    kernels::row_weighted_norm2(rows, dim(), weights_, out);
  }

  bool supports_angles() const override { return false; }
  void sample_angle(rng::Engine&, std::span<double>) const override {
    throw InvalidParameter("weighted_hilbert: no angular law (modulus is not bounded below on shells)");
  }

  // The first `truncation` samples are the basis vectors e_1..e_N with a
  // random scale in [1/2, 2]; later samples are random directions.
  void sample_point(rng::Engine& eng, std::size_t index, std::span<double> out) const override {
    if (index < dim()) {
      std::fill(out.begin(), out.end(), 0.0);
      out[index] = 0.5 + 1.5 * eng.uniform();
      return;
    }
    Space::sample_point(eng, index, out);
  }

 private:
  std::vector<double> weights_;
};

}  // namespace

// ---- Space defaults ------------------------------------------------------------

double Space::distance_to_origin(Coords x) const {
  const Point zero = origin();
  return distance(x, zero);
}

void Space::moduli(Coords rows, std::span<double> out) const {
  for (std::size_t r = 0; r < out.size(); ++r) out[r] = modulus(rows.subspan(r * dim_, dim_));
}

void Space::scale(double lambda, Coords x, std::span<double> out) const {
  kernels::scale(x, lambda, out);
}

Point Space::scaled(double lambda, Coords x) const {
  Point out(x.size());
  scale(lambda, x, out);
  return out;
}

void Space::sample_direction(rng::Engine& eng, std::span<double> out) const {
  double m = 0.0;
  do {
    for (double& v : out) v = eng.normal();
    m = modulus(out);
  } while (!(m > 0.0));
  scale(1.0 / m, out, out);
}

void Space::sample_angle(rng::Engine& eng, std::span<double> out) const {
  sample_direction(eng, out);
}

void Space::sample_point(rng::Engine& eng, std::size_t, std::span<double> out) const {
  double m = 0.0;
  do {
    for (double& v : out) v = eng.normal();
    m = modulus(out);
  } while (!(m > 0.0));
  const double radius = std::pow(10.0, 6.0 * eng.uniform() - 3.0);
  scale(radius / m, out, out);
}

void Space::check_point(Coords x) const {
  if (x.size() != dim_)
    throw ShapeMismatch("point has " + std::to_string(x.size()) + " coordinates, space " +
                        descriptor() + " expects " + std::to_string(dim_));
  for (double v : x)
    if (!std::isfinite(v)) throw InvalidParameter("point has a non-finite coordinate");
}

// ---- construction ----------------------------------------------------------------

SpaceHandle euclidean(std::size_t dim, double p, double floor) {
  return std::make_shared<EuclideanSpace>(dim, p, floor);
}
SpaceHandle path_sup(std::size_t grid, double floor) {
  if (grid == 0) throw InvalidParameter("path_sup: grid must be >= 1");
  return std::make_shared<PathSupSpace>(grid, floor);
}
SpaceHandle snowflake_gauge(std::size_t dim, double beta, double floor) {
  return std::make_shared<SnowflakeGaugeSpace>(dim, beta, floor);
}
SpaceHandle weighted_hilbert(std::size_t n, double floor) {
  return std::make_shared<WeightedHilbertSpace>(n, floor);
}

SpaceHandle make_space(const config::Document& s) {
  const std::string kind = s.string("kind");
  const double floor = s.number_or("origin_floor", kDefaultOriginFloor);
  auto positive_count = [&](const std::string& key, std::int64_t fallback) {
    const std::int64_t v = s.integer_or(key, fallback);
    if (v < 1) throw ConfigError("space." + key, "must be >= 1");
    return static_cast<std::size_t>(v);
  };
  if (kind == "euclidean") return euclidean(positive_count("dim", 1), s.number_or("p", 2.0), floor);
  if (kind == "path_sup") return path_sup(positive_count("grid", 16), floor);
  if (kind == "snowflake_gauge")
    return snowflake_gauge(positive_count("dim", 1), s.number_or("beta", 0.5), floor);
  if (kind == "weighted_hilbert") return weighted_hilbert(positive_count("truncation", 100), floor);
  throw ConfigError("space.kind", "unknown space kind '" + kind + "'");
}

SpaceHandle make_space(std::string_view block) {
  return make_space(config::Document::parse_block(block, "space").section("space"));
}

Point unit_path(std::size_t grid) {
  Point psi(grid, 1.0);
  if (grid == 1) return psi;
  for (std::size_t i = 0; i < grid; ++i)
    psi[i] = 1.0 - std::fabs(2.0 * static_cast<double>(i) / static_cast<double>(grid - 1) - 1.0);
  const double peak = *std::max_element(psi.begin(), psi.end());
  for (double& v : psi) v /= peak;
  return psi;
}

// ---- polar decomposition -------------------------------------------------------------

PolarCoordinates polar_decompose(const Space& space, Coords x) {
  space.check_point(x);
  const double r = space.modulus(x);
  if (r <= space.origin_floor())
    throw OriginPoint("polar decomposition is undefined at the origin (modulus " +
                      fmt_number(r) + ")");
  if (r == 1.0) return {1.0, Point(x.begin(), x.end())};
  return {r, space.scaled(1.0 / r, x)};
}

Point reconstruct(const Space& space, const PolarCoordinates& polar) {
  return space.scaled(polar.r, polar.theta);
}

double gauge_modulus(const Space& space, Coords x, const GaugeOptions& opt) {
  if (std::all_of(x.begin(), x.end(), [](double v) { return v == 0.0; })) return 0.0;
  Point buf(x.size());
  auto inside = [&](double lambda) {  // d(x / lambda, 0) <= 1
    space.scale(1.0 / lambda, x, buf);
    return space.distance_to_origin(buf) <= 1.0;
  };
  double lo = 1.0;
  double hi = 1.0;
  if (inside(1.0)) {
    do {
      hi = lo;
      lo = hi * 0.5;
      if (lo < opt.lambda_min)
        throw BracketFailure("gauge modulus: no bracket above lambda_min; the metric does not "
                             "grow uniformly along rays");
    } while (inside(lo));
  } else {
    do {
      lo = hi;
      hi = lo * 2.0;
      if (hi > opt.lambda_max)
        throw BracketFailure("gauge modulus: no bracket below lambda_max; the metric does not "
                             "grow uniformly along rays");
    } while (!inside(hi));
  }
  while (hi - lo > opt.rel_tol * hi) {
    const double mid = lo + 0.5 * (hi - lo);
    if (mid <= lo || mid >= hi) break;
    (inside(mid) ? hi : lo) = mid;
  }
  return hi;
}

// ---- windows -------------------------------------------------------------------

void SeriesWindow::reset(int first, std::size_t length, std::size_t dim) {
  first_ = first;
  length_ = length;
  dim_ = dim;
  coords_.assign(length * dim, 0.0);
  zero_.assign(length, 1);
}

std::size_t SeriesWindow::slot(int t) const {
  if (!contains(t))
    throw ShapeMismatch("window index " + std::to_string(t) + " outside [" +
                        std::to_string(first_) + ", " + std::to_string(last()) + "]");
  return static_cast<std::size_t>(t - first_);
}

void SeriesWindow::set(int t, Coords x) {
  if (x.size() != dim_) throw ShapeMismatch("window entry has the wrong dimension");
  auto dst = mut(t);
  std::copy(x.begin(), x.end(), dst.begin());
}

void SeriesWindow::set_zero(int t) {
  const std::size_t s = slot(t);
  zero_[s] = 1;
  std::fill_n(coords_.begin() + static_cast<std::ptrdiff_t>(s * dim_), dim_, 0.0);
}

double entry_modulus(const Space& space, const SeriesWindow& w, int t) {
  return w.is_zero(t) ? 0.0 : space.modulus(w.at(t));
}

double seq_metric(const Space& space, const SeriesWindow& x, const SeriesWindow& y, int m) {
  if (m < 0) throw ShapeMismatch("seq_metric: m must be >= 0");
  const auto expected = static_cast<std::size_t>(2 * m + 1);
  if (x.first() != -m || y.first() != -m || x.length() != expected || y.length() != expected)
    throw ShapeMismatch("seq_metric: windows must cover {-m, ..., m} with m = " + std::to_string(m));
  if (x.dim() != space.dim() || y.dim() != space.dim())
    throw ShapeMismatch("seq_metric: window dimension does not match the space");
  double total = 0.0;
  for (int t = -m; t <= m; ++t) {
    const double d = space.distance(x.at(t), y.at(t));
    total += std::ldexp(1.0, -std::abs(t)) * d / (1.0 + d);
  }
  return total;
}

double seq_metric_truncation_bound(int m) { return 2.0 * std::ldexp(1.0, -m); }

// ---- axiom validation --------------------------------------------------------------

PointSampler default_sampler(SpaceHandle space) {
  return [space = std::move(space)](rng::Engine& eng, std::size_t index, std::span<double> out) {
    space->sample_point(eng, index, out);
  };
}

const AxiomResult& AxiomReport::axiom(std::string_view name) const {
  for (const auto& a : axioms)
    if (a.axiom == name) return a;
  throw InvalidParameter("no axiom named '" + std::string(name) + "' in report");
}

bool AxiomReport::exact_axioms_pass() const {
  return std::all_of(axioms.begin(), axioms.end(), [](const AxiomResult& a) { return a.pass; });
}

namespace {

double rel_coord_diff(Coords a, Coords b) {
  double diff = 0.0;
  double size = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff = std::max(diff, std::fabs(a[i] - b[i]));
    size = std::max(size, std::fabs(b[i]));
  }
  if (diff == 0.0) return 0.0;
  return diff / std::max(size, std::numeric_limits<double>::min());
}

// Scales the ray through x onto {d(., 0) = eps}, returning lambda with
// d(lambda x, 0) >= eps and within a relative 1e-13 of the crossing.
double shell_scale(const Space& space, Coords x, double eps, Point& buf) {
  auto dist_at = [&](double lambda) {
    space.scale(lambda, x, buf);
    return space.distance_to_origin(buf);
  };
  double lo = 1.0;
  double hi = 1.0;
  if (dist_at(1.0) > eps) {
    for (int i = 0; i < 2100 && dist_at(lo) > eps; ++i) {
      hi = lo;
      lo *= 0.5;
    }
  } else {
    for (int i = 0; i < 2100 && dist_at(hi) <= eps; ++i) {
      lo = hi;
      hi *= 2.0;
    }
  }
  for (int i = 0; i < 200 && hi - lo > 1e-13 * hi; ++i) {
    const double mid = lo + 0.5 * (hi - lo);
    if (mid <= lo || mid >= hi) break;
    (dist_at(mid) > eps ? hi : lo) = mid;
  }
  return hi;
}

}  // namespace

AxiomReport validate_axioms(const SpaceHandle& space_handle, const PointSampler& sampler,
                            std::size_t n, double tol, const ValidateOptions& opt) {
  const Space& space = *space_handle;
  const std::size_t dim = space.dim();
  AxiomReport report;
  report.space = space.descriptor();

  AxiomResult identity{"scaling_identity", true, 0.0, n};
  AxiomResult assoc{"scaling_associativity", true, 0.0, n};
  AxiomResult zero{"zero_scaling", true, 0.0, n};
  AxiomResult monotone{"radial_monotonicity", true, 0.0, n};
  AxiomResult homog{"modulus_homogeneity", true, 0.0, n};
  AxiomResult separation{"modulus_separation", true, 0.0, n};

  rng::Engine eng(rng::Stream::named(opt.seed, "axioms"));
  std::vector<Point> rays;
  std::vector<std::size_t> ray_index;
  std::vector<double> sample_dist(n), sample_rho(n);
  Point x(dim), a(dim), b(dim), c(dim);

  const double rho_origin = space.modulus(space.origin());
  separation.worst_violation = rho_origin;

  for (std::size_t i = 0; i < n; ++i) {
    sampler(eng, i, x);
    const double l1 = std::pow(10.0, 4.0 * eng.uniform() - 2.0);
    const double l2 = std::pow(10.0, 4.0 * eng.uniform() - 2.0);

    space.scale(1.0, x, a);
    identity.worst_violation = std::max(identity.worst_violation, rel_coord_diff(a, x));

    space.scale(l2, x, a);
    space.scale(l1, a, b);
    space.scale(l1 * l2, x, c);
    assoc.worst_violation = std::max(assoc.worst_violation, rel_coord_diff(b, c));

    space.scale(0.0, x, a);
    double zmax = 0.0;
    for (double v : a) zmax = std::max(zmax, std::fabs(v));
    zero.worst_violation = std::max(zero.worst_violation, zmax);

    const double rho_x = space.modulus(x);
    const double d_x = space.distance_to_origin(x);
    sample_dist[i] = d_x;
    sample_rho[i] = rho_x;
    if (rho_x <= 0.0 && d_x > 0.0) separation.worst_violation = std::max(separation.worst_violation, d_x);

    if (d_x > 0.0) {
      const double lo = std::min(l1, l2);
      const double hi = std::max(l1, l2);
      if (lo < hi) {
        space.scale(lo, x, a);
        space.scale(hi, x, b);
        const double da = space.distance_to_origin(a);
        const double db = space.distance_to_origin(b);
        if (!(da < db)) monotone.worst_violation = std::max(monotone.worst_violation, (da - db) / db);
        // the origin end of the ray: d(0 x, 0) = 0 < d(lo x, 0)
        if (!(da > 0.0)) monotone.worst_violation = std::max(monotone.worst_violation, 1.0);
      }
      space.scale(l1, x, a);
      const double lhs = space.modulus(a);
      const double rhs = l1 * rho_x;
      if (rhs > 0.0) homog.worst_violation = std::max(homog.worst_violation, std::fabs(lhs - rhs) / rhs);
      if (rays.size() < opt.shell_rays) {
        rays.push_back(x);
        ray_index.push_back(i);
      }
    }
  }

  for (AxiomResult* r : {&identity, &assoc, &zero, &monotone, &homog})
    r->pass = r->worst_violation <= tol;
  separation.pass = separation.worst_violation == 0.0;
  report.axioms = {identity, assoc, zero, monotone, homog, separation};

  Point buf(dim);
  for (double eps : opt.eps_grid) {
    ShellEvidence ev;
    ev.eps = eps;
    ev.sampled_inf = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      if (sample_dist[i] > eps) {
        ++ev.n_beyond;
        ev.sampled_inf = std::min(ev.sampled_inf, sample_rho[i]);
      }
    }
    ev.shell_inf = std::numeric_limits<double>::infinity();
    ev.shell_sup = 0.0;
    for (std::size_t r = 0; r < rays.size(); ++r) {
      const double lambda = shell_scale(space, rays[r], eps, buf);
      space.scale(lambda, rays[r], buf);
      const double rho = space.modulus(buf);
      ev.shell_sup = std::max(ev.shell_sup, rho);
      if (rho < ev.shell_inf) {
        ev.shell_inf = rho;
        ev.witness = buf;
        ev.witness_modulus = rho;
        ev.witness_distance = space.distance_to_origin(buf);
        ev.witness_index = ray_index[r];
      }
    }
    if (!rays.empty()) {
      ev.anisotropy = ev.shell_sup > 0.0 ? ev.shell_inf / ev.shell_sup : 0.0;
      ev.flagged = ev.anisotropy < opt.anisotropy_threshold || !(ev.shell_inf > 0.0);
    }
    report.condition_iii_flagged = report.condition_iii_flagged || ev.flagged;
    report.condition_iii.push_back(std::move(ev));
  }
  return report;
}

nlohmann::json to_json(const AxiomReport& report) {
  nlohmann::json j;
  j["space"] = report.space;
  j["axioms"] = nlohmann::json::array();
  for (const auto& a : report.axioms)
    j["axioms"].push_back({{"axiom", a.axiom},
                           {"pass", a.pass},
                           {"worst_violation", a.worst_violation},
                           {"n_samples", a.n_samples}});
  auto shells = nlohmann::json::array();
  for (const auto& e : report.condition_iii) {
    shells.push_back({{"eps", e.eps},
                      {"sampled_inf", std::isfinite(e.sampled_inf) ? nlohmann::json(e.sampled_inf)
                                                                   : nlohmann::json(nullptr)},
                      {"n_beyond", e.n_beyond},
                      {"shell_inf", e.shell_inf},
                      {"shell_sup", e.shell_sup},
                      {"anisotropy", e.anisotropy},
                      {"flagged", e.flagged},
                      {"witness_modulus", e.witness_modulus},
                      {"witness_distance", e.witness_distance},
                      {"witness_index", e.witness_index}});
  }
  j["axioms"].push_back({{"axiom", "condition_iii"},
                         {"pass", !report.condition_iii_flagged},
                         {"worst_violation",
                          report.condition_iii.empty()
                              ? 0.0
                              : 1.0 - std::min_element(report.condition_iii.begin(),
                                                       report.condition_iii.end(),
                                                       [](const auto& l, const auto& r) {
                                                         return l.anisotropy < r.anisotropy;
                                                       })->anisotropy},
                         {"n_samples", report.axioms.empty() ? 0 : report.axioms.front().n_samples},
                         {"evidence", "sampled evidence"}});
  j["condition_iii"] = {{"label", "sampled evidence"},
                        {"flagged", report.condition_iii_flagged},
                        {"shells", shells}};
  j["all_pass"] = report.all_pass();
  return j;
}

}  // namespace rvts::starspace
