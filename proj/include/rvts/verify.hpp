#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace rvts::verify {

enum class Scale { Smoke, Desk };

struct Check {
  std::string identity;
  bool pass = false;
  double value = 0.0;
  double target = 0.0;
  double z = 0.0;  // z-score, or violation magnitude for exact checks
  nlohmann::json detail = nlohmann::json::object();
};

struct SuiteResult {
  std::string suite;
  std::uint64_t seed = 0;
  std::string scale;
  std::vector<Check> checks;
  double wall_time = 0.0;
  bool pass = true;

  nlohmann::json to_json() const;
};

const std::vector<std::string>& suite_names();

// Runs one battery: axioms, timechange, nuk or estimator_oracle. Throws
// UnknownSuite for anything else.
SuiteResult run_suite(std::string_view name, std::uint64_t seed, Scale scale);

}  // namespace rvts::verify
