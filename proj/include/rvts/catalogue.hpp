#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rvts/spectral.hpp"

namespace rvts::catalogue {

// A named test function usable on windows and on single points.
//
//   indicator_exceed(j, c)      1{rho(x_j) > c}
//   indicator_nonzero(j)        1{x_j is not the origin}
//   product_exceed(c1, ..., ck) prod_i 1{rho(x_{first + i - 1}) > c_i}
//   min_alpha_power(j)          min(rho(x_j), 1)^alpha
//
// Point versions ignore the index. `support_radius` is set when the function
// vanishes whenever every entry has modulus <= that radius.
struct TestFunction {
  std::string text;
  std::string name;
  std::vector<double> args;
  spectral::WindowFunction window;
  spectral::PointFunction point;
  std::optional<double> support_radius;
  // Index read by single-index functions.
  std::optional<int> index;
};

// Throws InvalidParameter on unknown names or malformed arguments.
TestFunction parse_function(std::string_view text, const starspace::SpaceHandle& space, double alpha);

}  // namespace rvts::catalogue
