#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "rvts/rng.hpp"

namespace rvts::config {
class Document;
}

namespace rvts::starspace {

// Points are dense coordinate vectors; the owning space fixes the length.
using Point = std::vector<double>;
using Coords = std::span<const double>;

// A star-shaped metric space: metric, origin, scalar multiplication and a
// modulus. Implementations are immutable and safe to share across threads.
class Space {
 public:
  Space(std::size_t dim, double origin_floor) : dim_(dim), origin_floor_(origin_floor) {}
  virtual ~Space() = default;

  std::size_t dim() const noexcept { return dim_; }
  // Points with modulus at or below this value are treated as the origin.
  double origin_floor() const noexcept { return origin_floor_; }

  virtual std::string kind() const = 0;
  // Config block that rebuilds this space, e.g. `{ kind = "euclidean", dim = 2, p = 2 }`.
  virtual std::string descriptor() const = 0;

  virtual double distance(Coords x, Coords y) const = 0;
  virtual double distance_to_origin(Coords x) const;
  virtual double modulus(Coords x) const = 0;
  // Moduli of consecutive rows of `rows` (row-major, dim() columns).
  virtual void moduli(Coords rows, std::span<double> out) const;
  // out = lambda * x; out may alias x.
  virtual void scale(double lambda, Coords x, std::span<double> out) const;

  Point scaled(double lambda, Coords x) const;
  Point origin() const { return Point(dim_, 0.0); }
  bool is_origin(Coords x) const { return modulus(x) <= origin_floor_; }

  // Whether the space provides a law on the unit sphere for model innovations.
  virtual bool supports_angles() const { return true; }
  virtual void sample_angle(rng::Engine& eng, std::span<double> out) const;
  // Default sampler for the axiom validator; `index` is the sample's position.
  virtual void sample_point(rng::Engine& eng, std::size_t index, std::span<double> out) const;

  // Throws ShapeMismatch or InvalidParameter for malformed points.
  void check_point(Coords x) const;

 protected:
  void sample_direction(rng::Engine& eng, std::span<double> out) const;

 private:
  std::size_t dim_;
  double origin_floor_;
};

using SpaceHandle = std::shared_ptr<const Space>;

inline constexpr double kDefaultOriginFloor = 1e-12;

SpaceHandle euclidean(std::size_t dim, double p = 2.0, double origin_floor = kDefaultOriginFloor);
// Paths on a fixed grid of `grid` points with the sup distance and sup modulus.
SpaceHandle path_sup(std::size_t grid, double origin_floor = kDefaultOriginFloor);
// R^dim with the snowflake metric |x-y|^beta and the gauge modulus.
SpaceHandle snowflake_gauge(std::size_t dim, double beta,
                            double origin_floor = kDefaultOriginFloor);
// Truncated l2 with modulus (sum_i x_i^2 / i)^{1/2}: homogeneous and positive
// off the origin, but not bounded below on distance shells as N grows.
SpaceHandle weighted_hilbert(std::size_t truncation, double origin_floor = kDefaultOriginFloor);

// Builds a space from the entries of a `space` section (kind, dim, p, grid,
// beta, truncation, origin_floor).
SpaceHandle make_space(const config::Document& section);
// Builds a space from a block such as `{ kind = "path_sup", grid = 16 }`.
SpaceHandle make_space(std::string_view block);

// Unit-modulus tent path used as the default angle on path spaces.
Point unit_path(std::size_t grid);

struct PolarCoordinates {
  double r = 0.0;
  Point theta;
};

// x -> (rho(x), x / rho(x)). Throws OriginPoint when rho(x) <= origin floor.
PolarCoordinates polar_decompose(const Space& space, Coords x);
Point reconstruct(const Space& space, const PolarCoordinates& polar);

struct GaugeOptions {
  double rel_tol = 1e-14;
  double lambda_min = 0x1p-60;
  double lambda_max = 0x1p60;
};

// inf{lambda > 0 : d(x / lambda, 0) <= 1} by doubling/halving from 1 and
// bisection. Only the metric and the scaling of `space` are used.
double gauge_modulus(const Space& space, Coords x, const GaugeOptions& options = {});

// ---- finite windows --------------------------------------------------------

// Points indexed by a contiguous integer range [first, first + length). An
// entry may carry the exact-zero marker: it then denotes the origin
// structurally, with all coordinates zero.
class SeriesWindow {
 public:
  SeriesWindow() = default;
  SeriesWindow(int first, std::size_t length, std::size_t dim) { reset(first, length, dim); }

  // Resizes and marks every entry zero.
  void reset(int first, std::size_t length, std::size_t dim);

  int first() const noexcept { return first_; }
  int last() const noexcept { return first_ + static_cast<int>(length_) - 1; }
  std::size_t length() const noexcept { return length_; }
  std::size_t dim() const noexcept { return dim_; }
  bool contains(int t) const noexcept { return t >= first_ && t <= last(); }

  bool is_zero(int t) const { return zero_[slot(t)] != 0; }
  Coords at(int t) const { return {coords_.data() + slot(t) * dim_, dim_}; }
  // Writable coordinates; clears the zero marker.
  std::span<double> mut(int t) {
    zero_[slot(t)] = 0;
    return {coords_.data() + slot(t) * dim_, dim_};
  }
  void set(int t, Coords x);
  void set_zero(int t);

  Coords coords() const noexcept { return coords_; }

 private:
  std::size_t slot(int t) const;

  int first_ = 0;
  std::size_t length_ = 0;
  std::size_t dim_ = 0;
  std::vector<double> coords_;
  std::vector<unsigned char> zero_;
};

// rho of entry t, exactly 0 for zero-marked entries.
double entry_modulus(const Space& space, const SeriesWindow& w, int t);

// d_m(x, y) = sum_{|t|<=m} 2^{-|t|} d(x_t, y_t) / (1 + d(x_t, y_t)).
// Both windows must cover exactly {-m, ..., m}.
double seq_metric(const Space& space, const SeriesWindow& x, const SeriesWindow& y, int m);
// |d_inf - d_m| <= 2 * 2^{-m}.
double seq_metric_truncation_bound(int m);

// ---- axiom validation ------------------------------------------------------

using PointSampler = std::function<void(rng::Engine&, std::size_t, std::span<double>)>;

PointSampler default_sampler(SpaceHandle space);

struct AxiomResult {
  std::string axiom;
  bool pass = true;
  double worst_violation = 0.0;
  std::size_t n_samples = 0;
};

// Sampled evidence on the shell {d(x, 0) = eps}: each sampled ray is scaled
// onto the shell and its modulus recorded. A modulus that is bounded below on
// shells keeps inf/sup bounded away from zero.
struct ShellEvidence {
  double eps = 0.0;
  double sampled_inf = 0.0;      // inf rho over raw samples with d(x, 0) > eps
  std::size_t n_beyond = 0;      // number of such samples
  double shell_inf = 0.0;
  double shell_sup = 0.0;
  double anisotropy = 1.0;       // shell_inf / shell_sup
  bool flagged = false;
  double witness_modulus = 0.0;  // shell point attaining shell_inf
  double witness_distance = 0.0;
  std::size_t witness_index = 0; // sample index of its ray
  Point witness;
};

struct AxiomReport {
  std::string space;
  std::vector<AxiomResult> axioms;
  std::vector<ShellEvidence> condition_iii;
  bool condition_iii_flagged = false;

  const AxiomResult& axiom(std::string_view name) const;
  bool exact_axioms_pass() const;
  bool all_pass() const { return exact_axioms_pass() && !condition_iii_flagged; }
};

struct ValidateOptions {
  std::vector<double> eps_grid{0.01, 0.1, 1.0, 10.0};
  std::size_t shell_rays = 1024;
  double anisotropy_threshold = 0.25;
  std::uint64_t seed = 0x5eed;
};

AxiomReport validate_axioms(const SpaceHandle& space, const PointSampler& sampler,
                            std::size_t n_samples, double tol,
                            const ValidateOptions& options = {});

nlohmann::json to_json(const AxiomReport& report);

}  // namespace rvts::starspace
