#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "rvts/models.hpp"
#include "rvts/parallel.hpp"
#include "rvts/rng.hpp"
#include "rvts/spectral.hpp"

namespace rvts::estimate {

using models::SeriesPath;
using starspace::Coords;
using starspace::SpaceHandle;

struct TailIndexEstimate {
  double alpha_hat = 0.0;
  std::size_t k = 0;
  double std_error = 0.0;  // alpha_hat / sqrt(k)
  double threshold = 0.0;  // X_(k+1)
};

// alpha_hat = k / sum_{i<=k} log(X_(i) / X_(k+1)) over descending order statistics.
TailIndexEstimate hill(std::span<const double> moduli, std::size_t k);

// Windows (X_{s-m}, ..., X_{s+m}) / rho(X_s) for every anchor with rho(X_s) > u.
struct EmpiricalSpectral {
  SpaceHandle space;
  int m = 0;
  double u = 0.0;
  std::size_t anchors = 0;       // anchors with a full window
  std::vector<double> coords;    // draw, entry in [-m, m], row-major
  std::vector<std::size_t> at;   // anchor index of each draw

  std::size_t draws() const { return at.size(); }
  std::size_t width() const { return static_cast<std::size_t>(2 * m + 1); }
  Coords entry(std::size_t draw, int j) const;
  starspace::SeriesWindow window(std::size_t draw) const;
  // rho of entry j for every draw.
  std::vector<double> lag_moduli(int j) const;
};

EmpiricalSpectral empirical_spectral(const SeriesPath& path, int m, double u);

// Draws of the law itself over {-m, ..., m}; requires a two-sided sampler.
EmpiricalSpectral sample_law(const spectral::SpectralLaw& law, int m, std::size_t n,
                             const rng::Stream& stream);

struct ExtremogramCurve {
  double u = 0.0;
  double exceedance_rate = 0.0;  // V(u): fraction of all times with rho > u
  std::vector<int> lags;
  std::vector<double> values;
  std::vector<double> std_errors;  // binomial, ignoring serial dependence
  std::vector<std::size_t> exceedances;
};

ExtremogramCurve extremogram(const SeriesPath& path, const std::vector<int>& lags, double u);

struct SummaryComparison {
  std::string summary;  // capped_moment, exceed(c), zero_mass
  int lag = 0;
  double empirical = 0.0, empirical_se = 0.0;
  double law = 0.0, law_se = 0.0;
  double z = 0.0;
  bool pass = true;
};

struct CompareOptions {
  double alpha = 1.0;  // exponent of the capped moment
  double eta = 0.1;    // zero-mass cut
  std::vector<double> exceed_levels{1.0};
  std::size_t law_draws = 100000;
  std::uint64_t seed = 0;
  double z_max = 4.0;
  bool backward = true;  // also compare negative lags
};

struct CompareReport {
  std::vector<SummaryComparison> rows;
  double max_abs_z = 0.0;
  bool pass = true;
};

// Summaries at each lag: E[min(rho(Theta_t), 1)^alpha], Pr[rho(Theta_t) > c]
// and Pr[rho(Theta_t) <= eta], empirical against the law.
CompareReport compare_spectral(const EmpiricalSpectral& emp, const spectral::SpectralLaw& law,
                               const CompareOptions& options);

nlohmann::json to_json(const TailIndexEstimate& e);
nlohmann::json to_json(const ExtremogramCurve& c);
nlohmann::json to_json(const CompareReport& r);
nlohmann::json sidecar_json(const EmpiricalSpectral& e);
void write_extremogram_csv(const ExtremogramCurve& c, const std::string& path);
void write_compare_csv(const CompareReport& r, const std::string& path);
void write_spectral_csv(const EmpiricalSpectral& e, const std::string& path);

}  // namespace rvts::estimate
