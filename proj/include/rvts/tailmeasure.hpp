#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "rvts/models.hpp"
#include "rvts/rng.hpp"
#include "rvts/spectral.hpp"
#include "rvts/starspace.hpp"

namespace rvts::tailmeasure {

using models::SeriesPath;
using starspace::Coords;
using starspace::SpaceHandle;

// Threshold given directly, as an empirical quantile of the moduli, or by the
// order-statistic rule: u is the (k+1)-th largest modulus, so exactly k
// values exceed it when there are no ties.
struct ThresholdRule {
  enum class Kind { Value, Quantile, TopK };
  Kind kind = Kind::TopK;
  double value = 0.0;  // threshold, or quantile level in (0, 1)
  std::size_t k = 0;   // 0 selects ceil(n^0.7)

  static ThresholdRule at(double u) { return {Kind::Value, u, 0}; }
  static ThresholdRule quantile(double q) { return {Kind::Quantile, q, 0}; }
  static ThresholdRule top_k(std::size_t k = 0) { return {Kind::TopK, 0.0, k}; }
  std::string describe() const;
};

std::size_t default_top_k(std::size_t n);
double resolve_threshold(const ThresholdRule& rule, std::span<const double> moduli);

// {x : rho(x_j) > lambda_j for every constrained index j}.
struct RectangleSet {
  std::vector<std::pair<int, double>> bounds;

  std::string describe() const;
  int reach() const;             // max |j|
  double max_level() const;
  bool contains(const starspace::Space& space, const starspace::SeriesWindow& w) const;
};

// Modulus-exceedance rectangles used for measure comparisons: single-index
// sets {rho(x_j) > lambda} for |j| <= m and the joint set over {0, 1}.
std::vector<RectangleSet> rectangle_catalogue(int m, const std::vector<double>& levels = {1.0, 2.0});

// Weighted atoms approximating mu^(m): every full window (X_{s-m}, ..., X_{s+m}) / u
// carries weight 1 / #{s : rho(X_s) > u}.
class EmpiricalTailMeasure {
 public:
  SpaceHandle space;
  int m = 0;
  double u = 0.0;
  double normalizer = 0.0;      // fraction of full-window anchors with rho(X_s) > u
  std::size_t count = 0;        // full-window anchors
  std::size_t exceedances = 0;  // anchors with rho(X_s) > u
  std::size_t first_anchor = 0, end_anchor = 0;
  double atom_floor = 0.0;      // atoms with window max modulus <= floor are dropped
  std::vector<double> coords;   // atom a, entry j in [-m, m], row-major
  std::vector<double> weights;
  std::vector<std::size_t> anchors;

  std::size_t atoms() const { return weights.size(); }
  std::size_t width() const { return static_cast<std::size_t>(2 * m + 1); }
  Coords entry(std::size_t atom, int j) const;
  starspace::SeriesWindow window(std::size_t atom) const;
  // Sum of weights of atoms in `set`. The set must lie beyond the atom floor.
  double mass(const RectangleSet& set) const;
  // Number of atoms in `set`.
  std::size_t hits(const RectangleSet& set) const;
  double total_weight() const;
};

struct BuildOptions {
  double atom_floor = 0.0;
  std::size_t first = 0;  // anchors restricted to [first, last)
  std::size_t last = static_cast<std::size_t>(-1);
};

EmpiricalTailMeasure build_tail_measure(const SeriesPath& path, int m, double u,
                                        const BuildOptions& options = {});

// Truncates atom windows to {-m, ..., m}; weights and normalizer unchanged.
EmpiricalTailMeasure project(const EmpiricalTailMeasure& measure, int m);

struct SetDiscrepancy {
  RectangleSet set;
  double mass_n = 0.0;
  double mass_m = 0.0;
  double discrepancy = 0.0;
  double bound = 0.0;     // edge bound (shared path) or 3 se (disjoint halves)
  double std_error = 0.0; // disjoint halves only
  bool within = true;
};

struct ConsistencyReport {
  int n = 0, m = 0;
  double u = 0.0;
  bool disjoint_halves = false;
  std::size_t exceedances_n = 0, exceedances_m = 0;
  std::vector<SetDiscrepancy> sets;
  double max_discrepancy = 0.0;
  bool pass = true;
  // Anchors with rho(X_{s+j}) > u per lag j: the finite-sample trace of the
  // x_0 != 0 condition.
  std::vector<std::pair<int, std::size_t>> lag_exceedances;
};

// Compares mu^(n) projected to {-m, ..., m} with mu^(m) on sets over the
// retained indices. On a shared path the anchor sets differ by at most
// 2(n - m) windows, giving |mass_n - mass_m| <= 2n max(1, mass_n) / e_n with
// e_n the exceedance count of the n-measure.
ConsistencyReport projection_consistency(const SeriesPath& path, int n, int m, double u,
                                         bool disjoint_halves = false,
                                         std::vector<RectangleSet> sets = {});

// se of a ratio of anchor means sum(a) / sum(e) by the delta method; `ae` is
// sum(a * e), `aa` sum(a^2) over `count` anchors.
double ratio_std_error(double a, double e, double aa, double ae, std::size_t count);

struct PolarOptions {
  std::size_t modulus_bins = 5;
  std::size_t min_bin = 30;
  std::size_t permutations = 199;
  std::size_t max_angle_coords = 4;
  double ks_level_coefficient = 1.63;  // 99% KS band
  double p_threshold = 0.01;
  std::uint64_t seed = 0;
  std::optional<double> alpha;  // fit Pareto to exceedances when absent
};

struct PolarReport {
  std::size_t exceedances = 0;
  double u = 0.0;
  double alpha_hat = 0.0;
  double ks_distance = 0.0;
  double ks_critical = 0.0;
  bool ks_pass = false;
  bool degenerate_angle = false;
  std::size_t bins = 0;
  std::size_t test_functions = 0;
  double statistic = 0.0;
  double p_value = 1.0;
  bool homogeneity_pass = true;
  bool pass = false;
};

// Splits exceedances by quantile bins of rho(X_s)/u and tests whether the
// angle law is the same in each bin (permutation test on bin labels), plus a
// KS test of rho(X_s)/u against the fitted Pareto law.
PolarReport polar_product_check(const SeriesPath& path, double u, const PolarOptions& options = {});

struct RatioPoint {
  double lambda = 1.0;
  std::size_t count = 0;
  double ratio = 0.0;
  double std_error = 0.0;
  bool empty = false;
};

struct TailRatioCurve {
  double u = 0.0;
  std::size_t base_count = 0;
  std::vector<RatioPoint> points;
  double alpha_slope = 0.0;  // -slope of log ratio on log lambda through the origin
};

// V(lambda u) / V(u) with binomial standard errors.
TailRatioCurve tail_ratio_curve(std::span<const double> moduli, double u,
                                const std::vector<double>& lambdas);

// Finite-u value of nu_k(f): sum_s f(X_{s+1}/u, ..., X_{s+k}/u) / #{s : rho(X_s) > u}.
MCEstimate empirical_nu_k(const SeriesPath& path, const spectral::WindowFunction& f, int k,
                          double u);

// ---- export ----------------------------------------------------------------

// CSV of atoms: one row per atom with columns x{j}_{c} for entry j, coordinate c,
// then weight.
void write_atoms_csv(const EmpiricalTailMeasure& measure, const std::string& path);
nlohmann::json sidecar_json(const EmpiricalTailMeasure& measure);
nlohmann::json to_json(const ConsistencyReport& report);
nlohmann::json to_json(const PolarReport& report);
nlohmann::json to_json(const TailRatioCurve& curve);
void write_ratio_csv(const TailRatioCurve& curve, const std::string& path);

}  // namespace rvts::tailmeasure
