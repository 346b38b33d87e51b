#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string>

#include "json.hpp"
#include "rvts/parallel.hpp"
#include "rvts/rng.hpp"
#include "rvts/starspace.hpp"

namespace rvts::spectral {

using starspace::Coords;
using starspace::SeriesWindow;
using starspace::Space;
using starspace::SpaceHandle;

// A samplable forward spectral tail process (Theta_0, ..., Theta_T) with tail
// index alpha. Every draw has rho(Theta_0) = 1. Structurally-zero entries use
// the window's exact-zero marker.
class SpectralLaw {
 public:
  SpectralLaw(SpaceHandle space, double alpha);
  virtual ~SpectralLaw() = default;

  double alpha() const noexcept { return alpha_; }
  const Space& space() const noexcept { return *space_; }
  const SpaceHandle& space_handle() const noexcept { return space_; }
  virtual std::string name() const = 0;

  // Fills `out` with a draw over indices {0, ..., horizon}.
  virtual void sample_forward(int horizon, rng::Engine& eng, SeriesWindow& out) const = 0;

  // Laws derived from a model may also sample the two-sided process over
  // {-s, ..., t} directly; the default throws NoClosedForm.
  virtual bool has_two_sided() const { return false; }
  virtual void sample_two_sided(int s, int t, rng::Engine& eng, SeriesWindow& out) const;

 private:
  SpaceHandle space_;
  double alpha_;
};

using LawHandle = std::shared_ptr<const SpectralLaw>;

// Law from a user-supplied forward sampler (library use).
LawHandle make_law(SpaceHandle space, double alpha, std::string name,
                   std::function<void(int, rng::Engine&, SeriesWindow&)> forward);

// f and g act on windows; a window entry may be the exact-zero marker.
using WindowFunction = std::function<double(const SeriesWindow&)>;
// g on single points; `is_zero` is set for the structural origin.
using PointFunction = std::function<double(Coords, bool is_zero)>;

// The forward draw re-indexed by shift j and rescaled by rho(Theta_j):
// entry u holds Theta_{u+j} / rho(Theta_j), with weight rho(Theta_j)^alpha.
struct WeightedWindow {
  SeriesWindow window;
  double weight = 0.0;
};

// Builds the time-changed window over {-s, ..., t} for shift j from a forward
// draw covering {0, ..., t + j}. Entries whose source index is below `cutoff`
// are zero-marked. Returns false (weight 0, window untouched) when
// rho(Theta_j) = 0, so no division by zero is ever evaluated.
bool time_changed(const Space& space, double alpha, const SeriesWindow& forward, int s, int t,
                  int j, int cutoff, WeightedWindow& out);

// One forward draw's contribution to E[g(Theta_{-s}, ..., Theta_t)] via the
// (s+1)-term telescoping sum; averaging it over draws is unbiased.
class Telescoper {
 public:
  Telescoper(const SpectralLaw& law, int s, int t);
  double evaluate(const SeriesWindow& forward, const WindowFunction& g);

 private:
  const SpectralLaw& law_;
  int s_, t_;
  WeightedWindow a_, b_;
  SeriesWindow base_;
};

// E[rho(Theta_t)^alpha]
MCEstimate spectral_moment(const SpectralLaw& law, int t, std::size_t n, const rng::Stream& stream);

// E[g(Theta_{-s}, ..., Theta_t)] from forward draws only.
MCEstimate backward_expectation(const SpectralLaw& law, const WindowFunction& g, int s, int t,
                                std::size_t n, const rng::Stream& stream);

enum class BackwardRoute {
  Auto,        // two-sided sampler when the law has one, else telescoping
  TwoSided,    // the law's closed-form two-sided sampler
  Telescoping  // forward draws through the telescoping identity
};

struct TimeChangeOptions {
  BackwardRoute route = BackwardRoute::Auto;
  // lhs and rhs draw from one stream; forces the telescoping route.
  bool shared_stream = false;
  std::size_t contract_checks = 64;
};

struct TimeChangeResult {
  MCEstimate lhs;
  MCEstimate rhs;
  double z_score = 0.0;
  BackwardRoute route = BackwardRoute::Telescoping;
};

// lhs = E[f(Theta_{-s}, ..., Theta_t)],
// rhs = E[f(Theta_0/rho(Theta_s), ..., Theta_{t+s}/rho(Theta_s)) rho(Theta_s)^alpha].
// f must vanish when its first argument is the zero marker (ContractViolation).
TimeChangeResult time_change_residual(const SpectralLaw& law, const WindowFunction& f, int s,
                                      int t, std::size_t n, const rng::Stream& stream,
                                      const TimeChangeOptions& options = {});

// Integral of g against the limit law of X_{-t} / rho(X_0):
// g(0) (1 - E[rho(Theta_t)^alpha]) + E[g(Theta_0 / rho(Theta_t)) rho(Theta_t)^alpha].
MCEstimate theta_backward_law(const SpectralLaw& law, int t, const PointFunction& g, std::size_t n,
                              const rng::Stream& stream);

// Integral of f against the tail measure nu_k of (X_1, ..., X_k). f acts on
// windows over {1, ..., k} and must vanish when every entry has modulus
// <= support_radius (SupportViolation otherwise).
MCEstimate nu_k_integral(const SpectralLaw& law, const WindowFunction& f, int k,
                         double support_radius, std::size_t n, const rng::Stream& stream,
                         BackwardRoute route = BackwardRoute::Telescoping);

double z_score(const MCEstimate& a, const MCEstimate& b);

nlohmann::json to_json(const MCEstimate& e, std::uint64_t seed);
const char* route_name(BackwardRoute route);

}  // namespace rvts::spectral
