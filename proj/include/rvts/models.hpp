#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "rvts/spectral.hpp"
#include "rvts/starspace.hpp"

namespace rvts::config {
class Document;
}

namespace rvts::models {

using starspace::Coords;
using starspace::Point;
using starspace::SpaceHandle;

// X_t = Y_t W_t with Y_t iid Pareto(alpha) and W_t iid angles of the space.
struct IidPareto {
  double alpha = 1.0;
};

// X_t = phi X_{t-1} + Y_t W_t, phi in (0, 1).
struct Ar1Positive {
  double phi = 0.5;
  double alpha = 1.0;
};

// X_t = c_J Y_{t-J} W_{t-J} for the j maximizing c_j Y_{t-j}; on positive
// scalars this is max_j c_j Z_{t-j}.
struct MaxMovingAverage {
  std::vector<double> coefficients{1.0, 1.0};
  double alpha = 1.0;
};

// X_t = R_t psi: iid Pareto(alpha) amplitudes of one deterministic unit path.
struct PathAmplitude {
  double alpha = 1.0;
  std::optional<Point> path;  // defaults to the space's unit tent path
};

using Variant = std::variant<IidPareto, Ar1Positive, MaxMovingAverage, PathAmplitude>;

struct ModelSpec {
  Variant variant;
  SpaceHandle space;

  double alpha() const;
  std::string name() const;
  // Throws InvalidParameter for out-of-range parameters.
  void validate() const;
};

ModelSpec make_model(const config::Document& section, SpaceHandle space);

struct SeriesPath {
  SpaceHandle space;
  std::size_t n = 0;
  std::vector<double> coords;  // row-major, n rows of space->dim()
  std::uint64_t seed = 0;
  std::size_t burn_in = 0;

  std::size_t dim() const { return space->dim(); }
  Coords at(std::size_t t) const { return {coords.data() + t * dim(), dim()}; }
  std::vector<double> moduli() const;
};

// ceil(log(1e-12) / log(phi)) for AR(1), q for max-moving-average, else 0.
std::size_t burn_in(const ModelSpec& model);

SeriesPath simulate(const ModelSpec& model, std::size_t n, std::uint64_t seed,
                    std::optional<std::size_t> burn_in_override = std::nullopt);

// Closed-form forward spectral tail process; laws also sample the two-sided
// process over {-s, ..., t}.
spectral::LawHandle true_forward_spectral(const ModelSpec& model);

// lim Pr[rho(X_t) > u | rho(X_0) > u] = E[min(rho(Theta_t), 1)^alpha].
double true_extremogram(const ModelSpec& model, int lag);

}  // namespace rvts::models
