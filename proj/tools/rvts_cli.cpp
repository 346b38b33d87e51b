#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rvts/error.hpp"
#include "rvts/estimate.hpp"
#include "rvts/runner.hpp"
#include "rvts/series_io.hpp"
#include "rvts/verify.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kFailed = 1;
constexpr int kConfigOrIo = 2;

int cmd_run(const std::string& config, const std::vector<std::string>& overrides) {
  const auto cfg = rvts::runner::load(config, overrides);
  const auto report = rvts::runner::run(cfg);
  std::cout << report.to_json().dump(2) << '\n';
  if (report.ok) return kOk;
  for (const auto& t : report.tasks)
    if (t.status == "io_error") return kConfigOrIo;
  return kFailed;
}

int cmd_verify(const std::string& suite, std::uint64_t seed, const std::string& scale) {
  const auto result = rvts::verify::run_suite(
      suite, seed, scale == "desk" ? rvts::verify::Scale::Desk : rvts::verify::Scale::Smoke);
  std::cout << result.to_json().dump(2) << '\n';
  return result.pass ? kOk : kFailed;
}

int cmd_ingest(const std::string& csv, const std::string& space, std::size_t k) {
  const auto path = rvts::series_io::ingest(csv, space.empty() ? std::nullopt : std::optional<std::string_view>(space));
  nlohmann::json j{{"n", path.n}, {"space", path.space->descriptor()}};
  if (k > 0 && k < path.n) j["hill"] = rvts::estimate::to_json(rvts::estimate::hill(path.moduli(), k));
  std::cout << j.dump(2) << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Regularly varying time series on star-shaped metric spaces"};
  app.require_subcommand(1);

  std::string config;
  std::vector<std::string> overrides;
  auto* run = app.add_subcommand("run", "Run the tasks of an experiment config");
  run->add_option("config", config, "Config file")->required();
  run->add_option("--set", overrides, "Override a config entry, key=value")->take_all();

  std::string suite, scale = "desk";
  std::uint64_t seed = 20240101;
  auto* verify = app.add_subcommand("verify", "Run a verification battery");
  verify->add_option("suite", suite, "axioms | timechange | nuk | estimator_oracle")->required();
  verify->add_option("--seed", seed, "Top-level seed");
  verify->add_option("--scale", scale, "smoke | desk")->check(CLI::IsMember({"smoke", "desk"}));

  std::string csv, space;
  std::size_t hill_k = 0;
  auto* ingest = app.add_subcommand("ingest", "Read a path CSV and report its shape");
  ingest->add_option("csv", csv, "Path CSV")->required();
  ingest->add_option("--space", space, "Space block, e.g. '{ kind = \"euclidean\", dim = 2 }'");
  ingest->add_option("--hill", hill_k, "Also report a Hill estimate with this k");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigOrIo;
  }

  try {
    if (*run) return cmd_run(config, overrides);
    if (*verify) return cmd_verify(suite, seed, scale);
    if (*ingest) return cmd_ingest(csv, space, hill_k);
  } catch (const rvts::ConfigError& e) {
    std::cerr << e.what() << '\n';
    return kConfigOrIo;
  } catch (const rvts::IoError& e) {
    std::cerr << "io error: " << e.what() << '\n';
    return kConfigOrIo;
  } catch (const rvts::ParseError& e) {
    std::cerr << e.what() << '\n';
    return kConfigOrIo;
  } catch (const rvts::UnknownSuite& e) {
    std::cerr << e.what() << '\n';
    return kConfigOrIo;
  } catch (const rvts::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailed;
  }
  return kOk;
}
