#include "rvts/tailmeasure.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <numeric>

#include "rvts/error.hpp"
#include "rvts/parallel.hpp"

namespace rvts::tailmeasure {

using starspace::SeriesWindow;

std::string ThresholdRule::describe() const {
  char buf[64];
  switch (kind) {
    case Kind::Value:
      std::snprintf(buf, sizeof buf, "value(%.17g)", value);
      break;
    case Kind::Quantile:
      std::snprintf(buf, sizeof buf, "quantile(%.17g)", value);
      break;
    case Kind::TopK:
      if (k == 0) return "top_k(default)";
      std::snprintf(buf, sizeof buf, "top_k(%zu)", k);
      break;
  }
  return buf;
}

std::size_t default_top_k(std::size_t n) {
  return static_cast<std::size_t>(std::ceil(std::pow(static_cast<double>(n), 0.7)));
}

double resolve_threshold(const ThresholdRule& rule, std::span<const double> moduli) {
  const std::size_t n = moduli.size();
  double u = 0.0;
  switch (rule.kind) {
    case ThresholdRule::Kind::Value:
      u = rule.value;
      break;
    case ThresholdRule::Kind::Quantile: {
      if (!(rule.value > 0.0 && rule.value < 1.0))
        throw InvalidParameter("threshold quantile must lie in (0, 1)");
      if (n == 0) throw InsufficientData("threshold: no data");
      std::vector<double> v(moduli.begin(), moduli.end());
      auto idx = static_cast<std::size_t>(std::ceil(rule.value * static_cast<double>(n)));
      idx = std::clamp<std::size_t>(idx, 1, n) - 1;
      std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(idx), v.end());
      u = v[idx];
      break;
    }
    case ThresholdRule::Kind::TopK: {
      const std::size_t k = rule.k ? rule.k : default_top_k(n);
      if (k >= n) throw InsufficientData("threshold: top_k needs k < n");
      std::vector<double> v(moduli.begin(), moduli.end());
      const std::size_t idx = n - k - 1;
      std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(idx), v.end());
      u = v[idx];
      break;
    }
  }
  if (!(u > 0.0) || !std::isfinite(u))
    throw NonPositiveThreshold("threshold resolved to a non-positive value");
  return u;
}

// ---- rectangle sets ------------------------------------------------------------

std::string RectangleSet::describe() const {
  std::string out = "{";
  char buf[64];
  for (std::size_t i = 0; i < bounds.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%srho(x%d)>%g", i ? ", " : "", bounds[i].first, bounds[i].second);
    out += buf;
  }
  return out + "}";
}

int RectangleSet::reach() const {
  int r = 0;
  for (const auto& b : bounds) r = std::max(r, std::abs(b.first));
  return r;
}

double RectangleSet::max_level() const {
  double v = 0.0;
  for (const auto& b : bounds) v = std::max(v, b.second);
  return v;
}

bool RectangleSet::contains(const starspace::Space& space, const SeriesWindow& w) const {
  for (const auto& [j, level] : bounds)
    if (!(starspace::entry_modulus(space, w, j) > level)) return false;
  return true;
}

std::vector<RectangleSet> rectangle_catalogue(int m, const std::vector<double>& levels) {
  std::vector<RectangleSet> out;
  for (double level : levels)
    for (int j = -m; j <= m; ++j) out.push_back({{{j, level}}});
  if (m >= 1)
    for (double level : levels) out.push_back({{{0, level}, {1, level}}});
  return out;
}

// ---- empirical tail measure ----------------------------------------------------

Coords EmpiricalTailMeasure::entry(std::size_t atom, int j) const {
  const std::size_t d = space->dim();
  return {coords.data() + (atom * width() + static_cast<std::size_t>(j + m)) * d, d};
}

SeriesWindow EmpiricalTailMeasure::window(std::size_t atom) const {
  SeriesWindow w(-m, width(), space->dim());
  for (int j = -m; j <= m; ++j) w.set(j, entry(atom, j));
  return w;
}

namespace {

bool atom_in(const EmpiricalTailMeasure& mu, std::size_t atom, const RectangleSet& set) {
  for (const auto& [j, level] : set.bounds)
    if (!(mu.space->modulus(mu.entry(atom, j)) > level)) return false;
  return true;
}

void check_set(const EmpiricalTailMeasure& mu, const RectangleSet& set) {
  if (set.reach() > mu.m) throw ShapeMismatch("set " + set.describe() + " reaches beyond the window");
  if (set.bounds.empty() || set.max_level() < mu.atom_floor)
    throw InvalidParameter("set " + set.describe() + " is not bounded away from the atom floor");
}

}  // namespace

std::size_t EmpiricalTailMeasure::hits(const RectangleSet& set) const {
  check_set(*this, set);
  std::size_t c = 0;
  for (std::size_t a = 0; a < atoms(); ++a) c += atom_in(*this, a, set);
  return c;
}

namespace {

// Neumaier summation: equal weights 1/e summed e times give 1 to the last bit.
struct CompensatedSum {
  double sum = 0.0, c = 0.0;
  void add(double x) {
    const double t = sum + x;
    c += std::fabs(sum) >= std::fabs(x) ? (sum - t) + x : (x - t) + sum;
    sum = t;
  }
  double value() const { return sum + c; }
};

}  // namespace

double EmpiricalTailMeasure::mass(const RectangleSet& set) const {
  check_set(*this, set);
  CompensatedSum total;
  for (std::size_t a = 0; a < atoms(); ++a)
    if (atom_in(*this, a, set)) total.add(weights[a]);
  return total.value();
}

double EmpiricalTailMeasure::total_weight() const {
  CompensatedSum total;
  for (double w : weights) total.add(w);
  return total.value();
}

EmpiricalTailMeasure build_tail_measure(const SeriesPath& path, int m, double u,
                                        const BuildOptions& options) {
  if (m < 0) throw InvalidParameter("tail measure: m must be >= 0");
  if (!(u > 0.0)) throw InvalidParameter("tail measure: u must be > 0");
  const std::size_t width = static_cast<std::size_t>(2 * m + 1);
  if (path.n < width) throw InsufficientData("tail measure: path shorter than 2m+1");
  const auto& space = *path.space;
  const std::size_t d = space.dim();
  const auto rho = path.moduli();

  const std::size_t lo = std::max<std::size_t>(static_cast<std::size_t>(m), options.first);
  const std::size_t hi = std::min(path.n - static_cast<std::size_t>(m), options.last);
  if (lo >= hi) throw InsufficientData("tail measure: no full windows in the anchor range");

  EmpiricalTailMeasure mu;
  mu.space = path.space;
  mu.m = m;
  mu.u = u;
  mu.atom_floor = options.atom_floor;
  mu.count = hi - lo;
  mu.first_anchor = lo;
  mu.end_anchor = hi;
  for (std::size_t s = lo; s < hi; ++s) mu.exceedances += rho[s] > u;
  if (mu.exceedances == 0) throw NoExceedances("tail measure: no modulus exceeds u");
  mu.normalizer = static_cast<double>(mu.exceedances) / static_cast<double>(mu.count);
  const double weight = 1.0 / static_cast<double>(mu.exceedances);
  const double cut = options.atom_floor * u;

  for (std::size_t s = lo; s < hi; ++s) {
    double top = 0.0;
    for (std::size_t i = s - static_cast<std::size_t>(m); i <= s + static_cast<std::size_t>(m); ++i)
      top = std::max(top, rho[i]);
    if (!(top > cut)) continue;
    const std::size_t base = mu.coords.size();
    mu.coords.resize(base + width * d);
    for (std::size_t i = 0; i < width; ++i)
      space.scale(1.0 / u, path.at(s - static_cast<std::size_t>(m) + i),
                  std::span<double>(mu.coords.data() + base + i * d, d));
    mu.weights.push_back(weight);
    mu.anchors.push_back(s);
  }
  return mu;
}

EmpiricalTailMeasure project(const EmpiricalTailMeasure& measure, int m) {
  if (m < 0 || m > measure.m) throw ShapeMismatch("project: target half-width exceeds the measure's");
  if (m == measure.m) return measure;
  EmpiricalTailMeasure out = measure;
  out.m = m;
  const std::size_t d = measure.space->dim();
  const std::size_t w_in = measure.width(), w_out = out.width();
  out.coords.assign(measure.atoms() * w_out * d, 0.0);
  for (std::size_t a = 0; a < measure.atoms(); ++a) {
    const double* src = measure.coords.data() + (a * w_in + static_cast<std::size_t>(measure.m - m)) * d;
    std::copy(src, src + w_out * d, out.coords.data() + a * w_out * d);
  }
  return out;
}

double ratio_std_error(double a, double e, double aa, double ae, std::size_t count) {
  if (!(e > 0.0) || count == 0) return 0.0;
  const double n = static_cast<double>(count);
  const double ma = a / n, me = e / n, r = a / e;
  const double var_a = aa / n - ma * ma;
  const double var_e = me - me * me;
  const double cov = ae / n - ma * me;
  const double v = (var_a - 2.0 * r * cov + r * r * var_e) / (n * me * me);
  return v > 0.0 ? std::sqrt(v) : 0.0;
}

ConsistencyReport projection_consistency(const SeriesPath& path, int n, int m, double u,
                                         bool disjoint_halves, std::vector<RectangleSet> sets) {
  if (m < 0 || n < m) throw InvalidParameter("projection_consistency: need n >= m >= 0");
  if (sets.empty()) sets = rectangle_catalogue(m);
  double floor = sets.front().max_level();
  for (const auto& s : sets) {
    if (s.reach() > m) throw ShapeMismatch("set " + s.describe() + " reaches beyond m");
    floor = std::min(floor, s.max_level());
  }

  BuildOptions opt_n, opt_m;
  opt_n.atom_floor = opt_m.atom_floor = floor;
  if (disjoint_halves) {
    opt_n.last = path.n / 2;
    opt_m.first = path.n / 2;
  }
  const auto mu_n = build_tail_measure(path, n, u, opt_n);
  const auto mu_m = build_tail_measure(path, m, u, opt_m);
  const auto proj = project(mu_n, m);

  ConsistencyReport rep;
  rep.n = n;
  rep.m = m;
  rep.u = u;
  rep.disjoint_halves = disjoint_halves;
  rep.exceedances_n = mu_n.exceedances;
  rep.exceedances_m = mu_m.exceedances;

  auto se_of = [](const EmpiricalTailMeasure& mu, const RectangleSet& set) {
    // Atoms in `set` that are themselves exceedance anchors.
    std::size_t a = 0, both = 0;
    for (std::size_t i = 0; i < mu.atoms(); ++i) {
      if (!atom_in(mu, i, set)) continue;
      ++a;
      both += mu.space->modulus(mu.entry(i, 0)) > 1.0;
    }
    return ratio_std_error(static_cast<double>(a), static_cast<double>(mu.exceedances),
                           static_cast<double>(a), static_cast<double>(both), mu.count);
  };

  for (const auto& set : sets) {
    SetDiscrepancy sd;
    sd.set = set;
    sd.mass_n = proj.mass(set);
    sd.mass_m = mu_m.mass(set);
    sd.discrepancy = std::fabs(sd.mass_n - sd.mass_m);
    if (disjoint_halves) {
      sd.std_error = std::hypot(se_of(proj, set), se_of(mu_m, set));
      sd.bound = std::max(4.0 * sd.std_error, 1e-12);
    } else {
      sd.bound = 2.0 * n * std::max(1.0, sd.mass_n) / static_cast<double>(mu_n.exceedances);
    }
    sd.within = sd.discrepancy <= sd.bound;
    rep.max_discrepancy = std::max(rep.max_discrepancy, sd.discrepancy);
    rep.pass = rep.pass && sd.within;
    rep.sets.push_back(std::move(sd));
  }

  const auto rho = path.moduli();
  for (int j = -n; j <= n; ++j) {
    std::size_t c = 0;
    for (std::size_t s = mu_n.first_anchor; s < mu_n.end_anchor; ++s)
      c += rho[static_cast<std::size_t>(static_cast<long>(s) + j)] > u;
    rep.lag_exceedances.emplace_back(j, c);
  }
  return rep;
}

// ---- polar product -------------------------------------------------------------

PolarReport polar_product_check(const SeriesPath& path, double u, const PolarOptions& opt) {
  if (!(u > 0.0)) throw InvalidParameter("polar_product_check: u must be > 0");
  const auto& space = *path.space;
  const auto rho = path.moduli();
  std::vector<std::size_t> idx;
  for (std::size_t s = 0; s < path.n; ++s)
    if (rho[s] > u) idx.push_back(s);
  if (idx.empty()) throw NoExceedances("polar_product_check: no modulus exceeds u");
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return rho[a] < rho[b]; });

  PolarReport rep;
  rep.u = u;
  const std::size_t ne = idx.size();
  rep.exceedances = ne;
  std::vector<double> r(ne);
  for (std::size_t i = 0; i < ne; ++i) r[i] = rho[idx[i]] / u;

  double log_sum = 0.0;
  for (double v : r) log_sum += std::log(v);
  rep.alpha_hat = opt.alpha ? *opt.alpha : static_cast<double>(ne) / log_sum;
  const double nd = static_cast<double>(ne);
  for (std::size_t i = 0; i < ne; ++i) {
    const double F = 1.0 - std::pow(r[i], -rep.alpha_hat);
    rep.ks_distance = std::max({rep.ks_distance, static_cast<double>(i + 1) / nd - F,
                                F - static_cast<double>(i) / nd});
  }
  rep.ks_critical = opt.ks_level_coefficient / std::sqrt(nd);
  rep.ks_pass = rep.ks_distance <= rep.ks_critical;

  // Angle test functions theta_i and theta_i theta_j on the leading coordinates.
  const std::size_t dc = std::min(space.dim(), opt.max_angle_coords);
  std::vector<std::pair<std::size_t, std::size_t>> fns;
  if (space.dim() > 1) {
    for (std::size_t i = 0; i < dc; ++i) fns.emplace_back(i, dc);
    for (std::size_t i = 0; i < dc; ++i)
      for (std::size_t j = i; j < dc; ++j) fns.emplace_back(i, j);
  }
  const std::size_t nf = fns.size();
  std::vector<double> values(ne * nf);
  std::vector<double> theta(space.dim());
  for (std::size_t e = 0; e < ne; ++e) {
    space.scale(1.0 / rho[idx[e]], path.at(idx[e]), theta);
    for (std::size_t f = 0; f < nf; ++f) {
      const auto [i, j] = fns[f];
      values[e * nf + f] = j == dc ? theta[i] : theta[i] * theta[j];
    }
  }
  std::vector<double> mean(nf, 0.0), var(nf, 0.0);
  for (std::size_t f = 0; f < nf; ++f) {
    RunningMoments acc;
    for (std::size_t e = 0; e < ne; ++e) acc.push(values[e * nf + f]);
    mean[f] = acc.mean;
    var[f] = acc.variance();
  }
  std::vector<std::size_t> active;
  for (std::size_t f = 0; f < nf; ++f)
    if (var[f] > 1e-24) active.push_back(f);
  rep.test_functions = active.size();
  rep.degenerate_angle = active.empty();

  rep.bins = std::max<std::size_t>(1, std::min(opt.modulus_bins, ne / std::max<std::size_t>(opt.min_bin, 1)));
  if (rep.degenerate_angle || rep.bins < 2) {
    rep.homogeneity_pass = true;
    rep.p_value = 1.0;
    rep.pass = rep.ks_pass;
    return rep;
  }

  const std::size_t B = rep.bins;
  auto statistic = [&](const std::vector<std::size_t>& order) {
    double stat = 0.0;
    std::vector<double> sums(active.size());
    for (std::size_t b = 0; b < B; ++b) {
      const std::size_t lo = b * ne / B, hi = (b + 1) * ne / B;
      std::fill(sums.begin(), sums.end(), 0.0);
      for (std::size_t p = lo; p < hi; ++p)
        for (std::size_t a = 0; a < active.size(); ++a) sums[a] += values[order[p] * nf + active[a]];
      const double nb = static_cast<double>(hi - lo);
      for (std::size_t a = 0; a < active.size(); ++a) {
        const double dev = sums[a] / nb - mean[active[a]];
        stat += nb * dev * dev / var[active[a]];
      }
    }
    return stat;
  };
  std::vector<std::size_t> identity(ne);
  std::iota(identity.begin(), identity.end(), 0);
  rep.statistic = statistic(identity);

  const rng::Stream base = rng::Stream::named(opt.seed, "permutation-test");
  std::vector<unsigned char> exceeds(opt.permutations, 0);
  parallel_for(opt.permutations, [&](std::size_t p) {
    rng::Engine eng(base.child(p));
    std::vector<std::size_t> order = identity;
    for (std::size_t i = ne - 1; i > 0; --i) std::swap(order[i], order[eng.below(i + 1)]);
    exceeds[p] = statistic(order) >= rep.statistic;
  });
  const std::size_t count = std::accumulate(exceeds.begin(), exceeds.end(), std::size_t{0});
  rep.p_value = static_cast<double>(1 + count) / static_cast<double>(opt.permutations + 1);
  rep.homogeneity_pass = rep.p_value > opt.p_threshold;
  rep.pass = rep.ks_pass && rep.homogeneity_pass;
  return rep;
}

// ---- tail ratios -----------------------------------------------------------------

TailRatioCurve tail_ratio_curve(std::span<const double> moduli, double u,
                                const std::vector<double>& lambdas) {
  if (!(u > 0.0)) throw InvalidParameter("tail_ratio_curve: u must be > 0");
  TailRatioCurve c;
  c.u = u;
  for (double v : moduli) c.base_count += v > u;
  if (c.base_count == 0) throw NoExceedances("tail_ratio_curve: no modulus exceeds u");
  const double base = static_cast<double>(c.base_count);
  double num = 0.0, den = 0.0;
  for (double lambda : lambdas) {
    if (!(lambda >= 1.0)) throw InvalidParameter("tail_ratio_curve: lambda must be >= 1");
    RatioPoint p;
    p.lambda = lambda;
    const double level = lambda * u;
    for (double v : moduli) p.count += v > level;
    p.ratio = static_cast<double>(p.count) / base;
    p.std_error = std::sqrt(p.ratio * (1.0 - p.ratio) / base);
    p.empty = p.count == 0;
    if (!p.empty && lambda > 1.0) {
      const double x = std::log(lambda);
      num += x * std::log(p.ratio);
      den += x * x;
    }
    c.points.push_back(p);
  }
  c.alpha_slope = den > 0.0 ? -num / den : 0.0;
  return c;
}

MCEstimate empirical_nu_k(const SeriesPath& path, const spectral::WindowFunction& f, int k, double u) {
  if (k < 1) throw InvalidParameter("empirical_nu_k: k must be >= 1");
  if (!(u > 0.0)) throw InvalidParameter("empirical_nu_k: u must be > 0");
  const std::size_t ku = static_cast<std::size_t>(k);
  if (path.n <= ku) throw InsufficientData("empirical_nu_k: path shorter than k+1");
  const auto& space = *path.space;
  const auto rho = path.moduli();
  const std::size_t anchors = path.n - ku;
  const std::size_t chunks = (anchors + kDrawsPerChunk - 1) / kDrawsPerChunk;
  struct Sums {
    double a = 0, e = 0, aa = 0, ae = 0;
  };
  std::vector<Sums> parts(chunks);
  parallel_for(chunks, [&](std::size_t c) {
    SeriesWindow w(1, ku, space.dim());
    Sums acc;
    const std::size_t end = std::min(anchors, (c + 1) * kDrawsPerChunk);
    for (std::size_t s = c * kDrawsPerChunk; s < end; ++s) {
      for (int j = 1; j <= k; ++j)
        space.scale(1.0 / u, path.at(s + static_cast<std::size_t>(j)), w.mut(j));
      const double a = f(w);
      const double e = rho[s] > u ? 1.0 : 0.0;
      acc.a += a;
      acc.e += e;
      acc.aa += a * a;
      acc.ae += a * e;
    }
    parts[c] = acc;
  });
  Sums total;
  for (const auto& p : parts) {
    total.a += p.a;
    total.e += p.e;
    total.aa += p.aa;
    total.ae += p.ae;
  }
  if (total.e == 0.0) throw NoExceedances("empirical_nu_k: no modulus exceeds u");
  return {total.a / total.e, ratio_std_error(total.a, total.e, total.aa, total.ae, anchors), anchors};
}

// ---- export ----------------------------------------------------------------

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using File = std::unique_ptr<std::FILE, FileCloser>;

File open_out(const std::string& path) {
  File f(std::fopen(path.c_str(), "w"));
  if (!f) throw IoError("cannot write " + path);
  return f;
}

}  // namespace

void write_atoms_csv(const EmpiricalTailMeasure& mu, const std::string& path) {
  auto f = open_out(path);
  const std::size_t d = mu.space->dim();
  for (int j = -mu.m; j <= mu.m; ++j)
    for (std::size_t c = 0; c < d; ++c) std::fprintf(f.get(), "x%d_%zu,", j, c);
  std::fprintf(f.get(), "weight\n");
  for (std::size_t a = 0; a < mu.atoms(); ++a) {
    for (int j = -mu.m; j <= mu.m; ++j)
      for (double v : mu.entry(a, j)) std::fprintf(f.get(), "%.17g,", v);
    std::fprintf(f.get(), "%.17g\n", mu.weights[a]);
  }
}

nlohmann::json sidecar_json(const EmpiricalTailMeasure& mu) {
  return {{"m", mu.m},
          {"u", mu.u},
          {"normalizer", mu.normalizer},
          {"count", mu.count},
          {"exceedances", mu.exceedances},
          {"atoms", mu.atoms()},
          {"atom_floor", mu.atom_floor},
          {"space", mu.space->descriptor()}};
}

nlohmann::json to_json(const ConsistencyReport& r) {
  nlohmann::json sets = nlohmann::json::array();
  for (const auto& s : r.sets)
    sets.push_back({{"set", s.set.describe()},
                    {"mass_n", s.mass_n},
                    {"mass_m", s.mass_m},
                    {"discrepancy", s.discrepancy},
                    {"bound", s.bound},
                    {"std_error", s.std_error},
                    {"within", s.within}});
  nlohmann::json lags = nlohmann::json::array();
  for (const auto& [j, c] : r.lag_exceedances) lags.push_back({{"lag", j}, {"exceedances", c}});
  return {{"n", r.n},
          {"m", r.m},
          {"u", r.u},
          {"mode", r.disjoint_halves ? "disjoint_halves" : "shared_path"},
          {"exceedances_n", r.exceedances_n},
          {"exceedances_m", r.exceedances_m},
          {"max_discrepancy", r.max_discrepancy},
          {"pass", r.pass},
          {"sets", sets},
          {"lag_exceedances", lags}};
}

nlohmann::json to_json(const PolarReport& r) {
  return {{"exceedances", r.exceedances},
          {"u", r.u},
          {"alpha_hat", r.alpha_hat},
          {"ks_distance", r.ks_distance},
          {"ks_critical", r.ks_critical},
          {"ks_pass", r.ks_pass},
          {"degenerate_angle", r.degenerate_angle},
          {"bins", r.bins},
          {"test_functions", r.test_functions},
          {"statistic", r.statistic},
          {"p_value", r.p_value},
          {"homogeneity_pass", r.homogeneity_pass},
          {"pass", r.pass}};
}

nlohmann::json to_json(const TailRatioCurve& c) {
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& p : c.points)
    pts.push_back({{"lambda", p.lambda},
                   {"count", p.count},
                   {"ratio", p.ratio},
                   {"se", p.std_error},
                   {"empty", p.empty}});
  return {{"u", c.u}, {"base_count", c.base_count}, {"alpha_slope", c.alpha_slope}, {"points", pts}};
}

void write_ratio_csv(const TailRatioCurve& c, const std::string& path) {
  auto f = open_out(path);
  std::fprintf(f.get(), "lambda,count,ratio,se\n");
  for (const auto& p : c.points)
    std::fprintf(f.get(), "%.17g,%zu,%.17g,%.17g\n", p.lambda, p.count, p.ratio, p.std_error);
}

}  // namespace rvts::tailmeasure
