#include "rvts/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <memory>

#include "rvts/error.hpp"

namespace rvts::estimate {

using starspace::SeriesWindow;

TailIndexEstimate hill(std::span<const double> moduli, std::size_t k) {
  if (k < 1) throw InvalidParameter("hill: k must be >= 1");
  if (k >= moduli.size()) throw InsufficientData("hill: k must be smaller than the sample size");
  std::vector<double> top(moduli.begin(), moduli.end());
  std::partial_sort(top.begin(), top.begin() + static_cast<std::ptrdiff_t>(k + 1), top.end(),
                    std::greater<>());
  const double threshold = top[k];
  if (!(threshold > 0.0)) throw NonPositiveThreshold("hill: X_(k+1) is not positive");
  double sum = 0.0;
  for (std::size_t i = 0; i < k; ++i) sum += std::log(top[i] / threshold);
  if (!(sum > 0.0)) throw InsufficientData("hill: top order statistics are all tied");
  TailIndexEstimate e;
  e.k = k;
  e.alpha_hat = static_cast<double>(k) / sum;
  e.std_error = e.alpha_hat / std::sqrt(static_cast<double>(k));
  e.threshold = threshold;
  return e;
}

// ---- empirical spectral process --------------------------------------------------

Coords EmpiricalSpectral::entry(std::size_t draw, int j) const {
  const std::size_t d = space->dim();
  return {coords.data() + (draw * width() + static_cast<std::size_t>(j + m)) * d, d};
}

SeriesWindow EmpiricalSpectral::window(std::size_t draw) const {
  SeriesWindow w(-m, width(), space->dim());
  for (int j = -m; j <= m; ++j) w.set(j, entry(draw, j));
  return w;
}

std::vector<double> EmpiricalSpectral::lag_moduli(int j) const {
  if (j < -m || j > m) throw ShapeMismatch("lag outside the spectral window");
  std::vector<double> out(draws());
  for (std::size_t i = 0; i < draws(); ++i) out[i] = space->modulus(entry(i, j));
  return out;
}

EmpiricalSpectral empirical_spectral(const SeriesPath& path, int m, double u) {
  if (m < 0) throw InvalidParameter("empirical_spectral: m must be >= 0");
  if (!(u > 0.0)) throw InvalidParameter("empirical_spectral: u must be > 0");
  const std::size_t mu = static_cast<std::size_t>(m);
  EmpiricalSpectral e;
  e.space = path.space;
  e.m = m;
  e.u = u;
  if (path.n < 2 * mu + 1) throw NoExceedances("empirical_spectral: path shorter than one window");
  const auto rho = path.moduli();
  const std::size_t d = path.dim();
  e.anchors = path.n - 2 * mu;
  for (std::size_t s = mu; s + mu < path.n; ++s) {
    if (!(rho[s] > u)) continue;
    const std::size_t base = e.coords.size();
    e.coords.resize(base + e.width() * d);
    const double inv = 1.0 / rho[s];
    for (std::size_t i = 0; i < e.width(); ++i)
      path.space->scale(inv, path.at(s - mu + i), std::span<double>(e.coords.data() + base + i * d, d));
    e.at.push_back(s);
  }
  if (e.at.empty()) throw NoExceedances("empirical_spectral: no full-window anchor exceeds u");
  return e;
}

EmpiricalSpectral sample_law(const spectral::SpectralLaw& law, int m, std::size_t n,
                             const rng::Stream& stream) {
  if (!law.has_two_sided())
    throw NoClosedForm("sample_law: law '" + law.name() + "' has no two-sided sampler");
  EmpiricalSpectral e;
  e.space = law.space_handle();
  e.m = m;
  e.u = 1.0;
  e.anchors = n;
  const std::size_t d = law.space().dim();
  const std::size_t stride = e.width() * d;
  e.coords.resize(n * stride);
  e.at.resize(n);
  const std::size_t chunks = (n + kDrawsPerChunk - 1) / kDrawsPerChunk;
  parallel_for(chunks, [&](std::size_t c) {
    rng::Engine eng(stream.child(c));
    SeriesWindow w;
    const std::size_t end = std::min(n, (c + 1) * kDrawsPerChunk);
    for (std::size_t i = c * kDrawsPerChunk; i < end; ++i) {
      law.sample_two_sided(m, m, eng, w);
      std::copy(w.coords().begin(), w.coords().end(), e.coords.begin() + static_cast<std::ptrdiff_t>(i * stride));
      e.at[i] = i;
    }
  });
  return e;
}

// ---- extremogram ------------------------------------------------------------------

ExtremogramCurve extremogram(const SeriesPath& path, const std::vector<int>& lags, double u) {
  if (!(u > 0.0)) throw InvalidParameter("extremogram: u must be > 0");
  const auto rho = path.moduli();
  ExtremogramCurve c;
  c.u = u;
  std::size_t total = 0;
  for (double v : rho) total += v > u;
  if (total == 0) throw NoExceedances("extremogram: no modulus exceeds u");
  c.exceedance_rate = static_cast<double>(total) / static_cast<double>(path.n);
  for (int lag : lags) {
    if (lag < 0) throw InvalidParameter("extremogram: lags must be >= 0");
    const std::size_t t = static_cast<std::size_t>(lag);
    std::size_t base = 0, joint = 0;
    for (std::size_t s = 0; s + t < path.n; ++s) {
      if (!(rho[s] > u)) continue;
      ++base;
      joint += rho[s + t] > u;
    }
    if (base == 0) throw NoExceedances("extremogram: no anchor exceeds u at lag " + std::to_string(lag));
    const double p = static_cast<double>(joint) / static_cast<double>(base);
    c.lags.push_back(lag);
    c.values.push_back(p);
    c.std_errors.push_back(std::sqrt(p * (1.0 - p) / static_cast<double>(base)));
    c.exceedances.push_back(base);
  }
  return c;
}

// ---- comparison ----------------------------------------------------------------------

namespace {

using ModulusFn = std::function<double(double)>;

// E[g(rho(Theta_lag))] under the law.
MCEstimate law_summary(const spectral::SpectralLaw& law, int lag, const ModulusFn& g,
                       std::size_t n, const rng::Stream& stream) {
  const auto& space = law.space();
  if (lag >= 0) {
    return monte_carlo(n, stream, [&] {
      return [&, w = SeriesWindow()](rng::Engine& eng) mutable {
        law.sample_forward(lag, eng, w);
        return g(starspace::entry_modulus(space, w, lag));
      };
    });
  }
  if (law.has_two_sided()) {
    return monte_carlo(n, stream, [&] {
      return [&, w = SeriesWindow()](rng::Engine& eng) mutable {
        law.sample_two_sided(-lag, 0, eng, w);
        return g(starspace::entry_modulus(space, w, lag));
      };
    });
  }
  spectral::WindowFunction f = [&](const SeriesWindow& w) {
    return g(starspace::entry_modulus(space, w, lag));
  };
  return spectral::backward_expectation(law, f, -lag, 0, n, stream);
}

MCEstimate empirical_summary(const std::vector<double>& moduli, const ModulusFn& g) {
  RunningMoments acc;
  for (double r : moduli) acc.push(g(r));
  return MCEstimate::from(acc);
}

}  // namespace

CompareReport compare_spectral(const EmpiricalSpectral& emp, const spectral::SpectralLaw& law,
                               const CompareOptions& opt) {
  if (emp.space->dim() != law.space().dim() || emp.space->descriptor() != law.space().descriptor())
    throw ShapeMismatch("compare_spectral: empirical and law spaces differ");
  if (emp.draws() == 0) throw NoExceedances("compare_spectral: no empirical draws");

  struct Summary {
    std::string name;
    ModulusFn g;
  };
  std::vector<Summary> summaries;
  const double alpha = opt.alpha;
  summaries.push_back({"capped_moment", [alpha](double r) { return std::pow(std::min(r, 1.0), alpha); }});
  for (double c : opt.exceed_levels) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "exceed(%g)", c);
    summaries.push_back({buf, [c](double r) { return r > c ? 1.0 : 0.0; }});
  }
  const double eta = opt.eta;
  summaries.push_back({"zero_mass", [eta](double r) { return r <= eta ? 1.0 : 0.0; }});

  const rng::Stream base = rng::Stream::named(opt.seed, "compare");
  CompareReport rep;
  const int lo = opt.backward ? -emp.m : 0;
  for (int lag = lo; lag <= emp.m; ++lag) {
    if (lag == 0) continue;
    const auto moduli = emp.lag_moduli(lag);
    for (std::size_t i = 0; i < summaries.size(); ++i) {
      SummaryComparison row;
      row.summary = summaries[i].name;
      row.lag = lag;
      const auto e = empirical_summary(moduli, summaries[i].g);
      const auto l = law_summary(law, lag, summaries[i].g, opt.law_draws,
                                 base.child(static_cast<std::uint64_t>(lag + 1024)).child(i));
      row.empirical = e.value;
      row.empirical_se = e.std_error;
      row.law = l.value;
      row.law_se = l.std_error;
      row.z = spectral::z_score(e, l);
      row.pass = std::fabs(row.z) <= opt.z_max;
      rep.max_abs_z = std::max(rep.max_abs_z, std::fabs(row.z));
      rep.pass = rep.pass && row.pass;
      rep.rows.push_back(row);
    }
  }
  return rep;
}

// ---- export ------------------------------------------------------------------------

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};

std::unique_ptr<std::FILE, FileCloser> open_out(const std::string& path) {
  std::unique_ptr<std::FILE, FileCloser> f(std::fopen(path.c_str(), "w"));
  if (!f) throw IoError("cannot write " + path);
  return f;
}

}  // namespace

nlohmann::json to_json(const TailIndexEstimate& e) {
  return {{"alpha_hat", e.alpha_hat}, {"k", e.k}, {"se", e.std_error}, {"threshold", e.threshold}};
}

nlohmann::json to_json(const ExtremogramCurve& c) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < c.lags.size(); ++i)
    rows.push_back({{"lag", c.lags[i]},
                    {"value", c.values[i]},
                    {"se", c.std_errors[i]},
                    {"exceedances", c.exceedances[i]}});
  return {{"u", c.u}, {"exceedance_rate", c.exceedance_rate}, {"lags", rows}};
}

nlohmann::json to_json(const CompareReport& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : r.rows)
    rows.push_back({{"summary", row.summary},
                    {"lag", row.lag},
                    {"empirical", row.empirical},
                    {"empirical_se", row.empirical_se},
                    {"law", row.law},
                    {"law_se", row.law_se},
                    {"z", row.z},
                    {"pass", row.pass}});
  return {{"pass", r.pass}, {"max_abs_z", r.max_abs_z}, {"rows", rows}};
}

nlohmann::json sidecar_json(const EmpiricalSpectral& e) {
  return {{"m", e.m},
          {"u", e.u},
          {"anchors", e.anchors},
          {"draws", e.draws()},
          {"space", e.space->descriptor()}};
}

void write_extremogram_csv(const ExtremogramCurve& c, const std::string& path) {
  auto f = open_out(path);
  std::fprintf(f.get(), "lag,value,se\n");
  for (std::size_t i = 0; i < c.lags.size(); ++i)
    std::fprintf(f.get(), "%d,%.17g,%.17g\n", c.lags[i], c.values[i], c.std_errors[i]);
}

void write_compare_csv(const CompareReport& r, const std::string& path) {
  auto f = open_out(path);
  std::fprintf(f.get(), "summary,lag,empirical,empirical_se,law,law_se,z\n");
  for (const auto& row : r.rows)
    std::fprintf(f.get(), "%s,%d,%.17g,%.17g,%.17g,%.17g,%.17g\n", row.summary.c_str(), row.lag,
                 row.empirical, row.empirical_se, row.law, row.law_se, row.z);
}

void write_spectral_csv(const EmpiricalSpectral& e, const std::string& path) {
  auto f = open_out(path);
  const std::size_t d = e.space->dim();
  for (int j = -e.m; j <= e.m; ++j)
    for (std::size_t c = 0; c < d; ++c) std::fprintf(f.get(), "x%d_%zu,", j, c);
  std::fprintf(f.get(), "anchor\n");
  for (std::size_t i = 0; i < e.draws(); ++i) {
    for (int j = -e.m; j <= e.m; ++j)
      for (double v : e.entry(i, j)) std::fprintf(f.get(), "%.17g,", v);
    std::fprintf(f.get(), "%zu\n", e.at[i]);
  }
}

}  // namespace rvts::estimate
