#include "rvts/runner.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>

#include "rvts/catalogue.hpp"
#include "rvts/error.hpp"
#include "rvts/estimate.hpp"
#include "rvts/series_io.hpp"
#include "rvts/spectral.hpp"

namespace rvts::runner {

namespace fs = std::filesystem;
using config::Document;

std::string default_output_dir() {
  const char* env = std::getenv("RVTS_OUTPUT_DIR");
  return env && *env ? env : "rvts-out";
}

namespace {

const std::set<std::string> kTasks{"simulate",          "hill",       "spectral",
                                   "extremogram",       "tailmeasure", "verify_timechange",
                                   "verify_nuk",        "validate_space"};
const std::set<std::string> kNeedsPath{"hill", "spectral", "extremogram", "tailmeasure", "verify_nuk"};
const std::set<std::string> kNeedsModel{"simulate", "verify_timechange", "verify_nuk"};

std::size_t count_field(const Document& d, const std::string& key, std::int64_t fallback,
                        std::int64_t min = 1) {
  const std::int64_t v = d.integer_or(key, fallback);
  if (v < min) throw ConfigError(key, "must be >= " + std::to_string(min), d.has(key) ? d.at(key).line : 0);
  return static_cast<std::size_t>(v);
}

spectral::BackwardRoute route_field(const Document& d, const std::string& key) {
  const std::string r = d.string_or(key, "auto");
  if (r == "auto") return spectral::BackwardRoute::Auto;
  if (r == "two_sided") return spectral::BackwardRoute::TwoSided;
  if (r == "telescoping") return spectral::BackwardRoute::Telescoping;
  throw ConfigError(key, "route must be auto, two_sided or telescoping", d.at(key).line);
}

catalogue::TestFunction function_field(const Document& d, const std::string& key, const std::string& text,
                                       const starspace::SpaceHandle& space, double alpha) {
  try {
    return catalogue::parse_function(text, space, alpha);
  } catch (const InvalidParameter& e) {
    throw ConfigError(key, e.what(), d.has(key) ? d.at(key).line : 0);
  }
}

// ---- task parameters (parsed once for the type check, again when run) ----

struct SpectralParams {
  int m = 2;
  bool oracle_alpha = false;
  estimate::CompareOptions compare;
  std::size_t hill_k = 0;
};

SpectralParams spectral_params(const Document& d) {
  SpectralParams p;
  p.m = static_cast<int>(count_field(d, "spectral.m", 2, 0));
  const std::string a = d.string_or("spectral.alpha", "hill");
  if (a != "hill" && a != "oracle") throw ConfigError("spectral.alpha", "must be hill or oracle", d.at("spectral.alpha").line);
  p.oracle_alpha = a == "oracle";
  p.compare.eta = d.number_or("spectral.eta", 0.1);
  if (!(p.compare.eta > 0.0)) throw ConfigError("spectral.eta", "must be > 0");
  if (d.has("spectral.exceed_levels")) p.compare.exceed_levels = d.numbers("spectral.exceed_levels");
  p.compare.law_draws = count_field(d, "spectral.law_draws", 100000);
  p.compare.z_max = d.number_or("spectral.z_max", 4.0);
  p.hill_k = count_field(d, "spectral.hill_k", 0, 0);
  return p;
}

struct TailParams {
  int m = 1;
  std::vector<double> lambdas{1.0, 1.5, 2.0, 4.0};
  tailmeasure::PolarOptions polar;
  int consistency_n = 2, consistency_m = 1;
  bool disjoint_halves = false;
  bool export_atoms = true;
};

TailParams tail_params(const Document& d) {
  TailParams p;
  p.m = static_cast<int>(count_field(d, "tailmeasure.m", 1, 0));
  if (d.has("tailmeasure.lambdas")) p.lambdas = d.numbers("tailmeasure.lambdas");
  for (double l : p.lambdas)
    if (!(l >= 1.0)) throw ConfigError("tailmeasure.lambdas", "every lambda must be >= 1", d.at("tailmeasure.lambdas").line);
  p.polar.modulus_bins = count_field(d, "tailmeasure.bins", 5);
  p.polar.permutations = count_field(d, "tailmeasure.permutations", 199);
  p.consistency_n = static_cast<int>(count_field(d, "tailmeasure.consistency_n", 2, 0));
  p.consistency_m = static_cast<int>(count_field(d, "tailmeasure.consistency_m", 1, 0));
  if (p.consistency_m > p.consistency_n)
    throw ConfigError("tailmeasure.consistency_m", "must not exceed consistency_n");
  p.disjoint_halves = d.boolean_or("tailmeasure.disjoint_halves", false);
  p.export_atoms = d.boolean_or("tailmeasure.export_atoms", true);
  return p;
}

struct TimeChangeParams {
  int s = 1, t = 0;
  std::vector<std::string> functions{"indicator_exceed(-1, 0.5)", "indicator_exceed(-1, 1)",
                                     "indicator_exceed(-1, 2)"};
  std::size_t n = 100000;
  spectral::BackwardRoute route = spectral::BackwardRoute::Auto;
  double z_max = 4.0;
};

TimeChangeParams timechange_params(const Document& d, const ExperimentConfig& c) {
  TimeChangeParams p;
  p.s = static_cast<int>(count_field(d, "verify_timechange.s", 1, 0));
  p.t = static_cast<int>(count_field(d, "verify_timechange.t", 0, 0));
  if (d.has("verify_timechange.functions")) p.functions = d.strings("verify_timechange.functions");
  p.n = count_field(d, "verify_timechange.n", 100000, 2);
  p.route = route_field(d, "verify_timechange.route");
  p.z_max = d.number_or("verify_timechange.z_max", 4.0);
  for (const auto& f : p.functions) function_field(d, "verify_timechange.functions", f, c.space, c.model->alpha());
  return p;
}

struct NukParams {
  int k = 2;
  std::string function = "product_exceed(1, 1)";
  std::size_t n = 100000;
  spectral::BackwardRoute route = spectral::BackwardRoute::Telescoping;
  double z_max = 3.0;
};

NukParams nuk_params(const Document& d, const ExperimentConfig& c) {
  NukParams p;
  p.k = static_cast<int>(count_field(d, "verify_nuk.k", 2));
  p.function = d.string_or("verify_nuk.function", p.function);
  p.n = count_field(d, "verify_nuk.n", 100000, 2);
  p.route = route_field(d, "verify_nuk.route");
  if (!d.has("verify_nuk.route")) p.route = spectral::BackwardRoute::Telescoping;
  p.z_max = d.number_or("verify_nuk.z_max", 3.0);
  const auto f = function_field(d, "verify_nuk.function", p.function, c.space, c.model->alpha());
  if (!f.support_radius)
    throw ConfigError("verify_nuk.function", "function does not vanish near the origin");
  return p;
}

tailmeasure::ThresholdRule threshold_rule(const Document& d) {
  const std::string rule = d.string_or("threshold.rule", "top_k");
  if (rule == "top_k") {
    return tailmeasure::ThresholdRule::top_k(count_field(d, "threshold.k", 0, 0));
  }
  if (rule == "quantile") {
    const double q = d.number("threshold.q");
    if (!(q > 0.0 && q < 1.0)) throw ConfigError("threshold.q", "must lie in (0, 1)", d.at("threshold.q").line);
    return tailmeasure::ThresholdRule::quantile(q);
  }
  if (rule == "value") {
    const double u = d.number("threshold.u");
    if (!(u > 0.0)) throw ConfigError("threshold.u", "must be > 0", d.at("threshold.u").line);
    return tailmeasure::ThresholdRule::at(u);
  }
  throw ConfigError("threshold.rule", "must be top_k, quantile or value", d.at("threshold.rule").line);
}

std::string hex(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

ExperimentConfig ExperimentConfig::from(const Document& doc) {
  ExperimentConfig c;
  c.doc = doc;

  const std::string space_section =
      doc.has("run.space") ? "spaces." + doc.string("run.space") : std::string("space");
  if (!doc.has_section(space_section))
    throw ConfigError(doc.has("run.space") ? "run.space" : "space",
                      "undefined space block '" + space_section + "'",
                      doc.has("run.space") ? doc.at("run.space").line : 0);
  try {
    c.space = starspace::make_space(doc.section(space_section));
  } catch (const ConfigError& e) {
    throw ConfigError(space_section + "." + e.field(), e.what());
  }

  c.model_section = doc.has("run.model") ? "models." + doc.string("run.model") : std::string("model");
  if (doc.has_section(c.model_section)) {
    try {
      c.model = models::make_model(doc.section(c.model_section), c.space);
    } catch (const ConfigError& e) {
      throw ConfigError(c.model_section, e.what());
    }
  } else if (doc.has("run.model")) {
    throw ConfigError("run.model", "undefined model '" + doc.string("run.model") + "'",
                      doc.at("run.model").line);
  }

  c.tasks = doc.strings("run.tasks");
  if (c.tasks.empty()) throw ConfigError("run.tasks", "no tasks given", doc.at("run.tasks").line);
  if (doc.has("run.input")) c.input = doc.string("run.input");
  c.seed = static_cast<std::uint64_t>(count_field(doc, "run.seed", 1, 0));
  if (doc.has("run.burn_in")) c.burn_in = count_field(doc, "run.burn_in", 0, 0);
  c.output_dir = doc.string_or("run.output", default_output_dir());
  c.threshold = threshold_rule(doc);

  bool have_path = c.input.has_value();
  for (const auto& task : c.tasks) {
    if (!kTasks.count(task))
      throw ConfigError("run.tasks", "unknown task '" + task + "'", doc.at("run.tasks").line);
    if (kNeedsModel.count(task) && !c.model && !(task == "simulate" && c.input))
      throw ConfigError("model", "task '" + task + "' needs a model block, none is defined");
    if (task == "simulate") {
      if (c.input) throw ConfigError("run.input", "simulate and run.input are mutually exclusive");
      c.n = count_field(doc, "run.n", 0);
      have_path = true;
    }
    if (kNeedsPath.count(task) && !have_path)
      throw ConfigError("run.tasks", "task '" + task + "' needs a path: run simulate first or set run.input");
    if (task == "hill") count_field(doc, "hill.k", 0, 0);
    if (task == "spectral") spectral_params(doc);
    if (task == "extremogram" && doc.has("extremogram.lags"))
      for (double l : doc.numbers("extremogram.lags"))
        if (l < 0 || l != std::floor(l)) throw ConfigError("extremogram.lags", "lags must be integers >= 0");
    if (task == "tailmeasure") tail_params(doc);
    if (task == "verify_timechange") timechange_params(doc, c);
    if (task == "verify_nuk") nuk_params(doc, c);
    if (task == "validate_space") {
      count_field(doc, "validate_space.samples", 100000);
      doc.number_or("validate_space.tol", 1e-12);
    }
  }
  return c;
}

ExperimentConfig load(const std::string& path, const std::vector<std::string>& overrides) {
  Document doc = Document::parse_file(path);
  for (const auto& o : overrides) doc.set_override(o);
  return ExperimentConfig::from(doc);
}

nlohmann::json RunReport::to_json() const {
  nlohmann::json tasks_json = nlohmann::json::array();
  for (const auto& t : tasks) {
    nlohmann::json j{{"task", t.name}, {"status", t.status}, {"outputs", t.outputs},
                     {"wall_time", t.wall_time}, {"summary", t.summary}};
    if (!t.error.empty()) j["error"] = t.error;
    tasks_json.push_back(j);
  }
  return {{"ok", ok},
          {"version", version},
          {"seed", seed},
          {"config_hash", config_hash},
          {"output_dir", output_dir},
          {"wall_time", wall_time},
          {"tasks", tasks_json}};
}

namespace {

struct Context {
  const ExperimentConfig& cfg;
  const Document& d;
  fs::path dir;
  std::optional<models::SeriesPath> path;
  spectral::LawHandle law;

  std::string out(TaskRecord& rec, const std::string& name) {
    const auto p = (dir / name).string();
    rec.outputs.push_back(p);
    return p;
  }

  void write_json(TaskRecord& rec, const std::string& name, const nlohmann::json& j) {
    const auto p = out(rec, name);
    std::ofstream f(p);
    if (!f) throw IoError("cannot write " + p);
    f << j.dump(2) << '\n';
    if (!f) throw IoError("write failed for " + p);
  }

  double threshold() const {
    const auto rho = path->moduli();
    return tailmeasure::resolve_threshold(cfg.threshold, rho);
  }

  const spectral::SpectralLaw& true_law() {
    if (!law) law = models::true_forward_spectral(*cfg.model);
    return *law;
  }
};

void task_simulate(Context& cx, TaskRecord& rec) {
  cx.path = models::simulate(*cx.cfg.model, cx.cfg.n, cx.cfg.seed, cx.cfg.burn_in);
  series_io::write_path_csv(*cx.path, cx.out(rec, "path.csv"));
  rec.summary = {{"n", cx.path->n}, {"burn_in", cx.path->burn_in}, {"model", cx.cfg.model->name()}};
}

void task_hill(Context& cx, TaskRecord& rec) {
  const auto rho = cx.path->moduli();
  std::size_t k = count_field(cx.d, "hill.k", 0, 0);
  if (k == 0)
    k = cx.cfg.threshold.kind == tailmeasure::ThresholdRule::Kind::TopK && cx.cfg.threshold.k
            ? cx.cfg.threshold.k
            : tailmeasure::default_top_k(rho.size());
  const auto e = estimate::hill(rho, k);
  rec.summary = estimate::to_json(e);
  if (cx.cfg.model) rec.summary["declared_alpha"] = cx.cfg.model->alpha();
  cx.write_json(rec, "hill.json", rec.summary);
}

void task_spectral(Context& cx, TaskRecord& rec) {
  auto p = spectral_params(cx.d);
  const double u = cx.threshold();
  const auto emp = estimate::empirical_spectral(*cx.path, p.m, u);
  estimate::write_spectral_csv(emp, cx.out(rec, "spectral_draws.csv"));
  nlohmann::json j = estimate::sidecar_json(emp);
  j["threshold_rule"] = cx.cfg.threshold.describe();
  if (cx.cfg.model) {
    if (p.oracle_alpha) {
      p.compare.alpha = cx.cfg.model->alpha();
    } else {
      const auto rho = cx.path->moduli();
      p.compare.alpha = estimate::hill(rho, p.hill_k ? p.hill_k : tailmeasure::default_top_k(rho.size())).alpha_hat;
    }
    p.compare.seed = cx.cfg.seed;
    const auto rep = estimate::compare_spectral(emp, cx.true_law(), p.compare);
    estimate::write_compare_csv(rep, cx.out(rec, "spectral_compare.csv"));
    j["alpha_used"] = p.compare.alpha;
    j["alpha_source"] = p.oracle_alpha ? "oracle" : "hill";
    j["comparison"] = estimate::to_json(rep);
  }
  cx.write_json(rec, "spectral.json", j);
  rec.summary = {{"draws", emp.draws()}, {"u", u}};
  if (j.contains("comparison")) rec.summary["max_abs_z"] = j["comparison"]["max_abs_z"];
}

void task_extremogram(Context& cx, TaskRecord& rec) {
  std::vector<int> lags{0, 1, 2, 3, 4, 5};
  if (cx.d.has("extremogram.lags")) {
    lags.clear();
    for (double l : cx.d.numbers("extremogram.lags")) lags.push_back(static_cast<int>(l));
  }
  const auto curve = estimate::extremogram(*cx.path, lags, cx.threshold());
  estimate::write_extremogram_csv(curve, cx.out(rec, "extremogram.csv"));
  nlohmann::json j = estimate::to_json(curve);
  if (cx.cfg.model) {
    nlohmann::json truth = nlohmann::json::array();
    for (int l : lags) truth.push_back(models::true_extremogram(*cx.cfg.model, l));
    j["true_values"] = truth;
  }
  cx.write_json(rec, "extremogram.json", j);
  rec.summary = {{"u", curve.u}, {"lags", lags.size()}};
}

void task_tailmeasure(Context& cx, TaskRecord& rec) {
  const auto p = tail_params(cx.d);
  const double u = cx.threshold();
  const auto mu = tailmeasure::build_tail_measure(*cx.path, p.m, u);
  if (p.export_atoms) tailmeasure::write_atoms_csv(mu, cx.out(rec, "tail_atoms.csv"));
  cx.write_json(rec, "tail_measure.json", tailmeasure::sidecar_json(mu));

  const auto cons = tailmeasure::projection_consistency(*cx.path, p.consistency_n, p.consistency_m, u,
                                                        p.disjoint_halves);
  cx.write_json(rec, "consistency.json", tailmeasure::to_json(cons));

  auto polar_opt = p.polar;
  polar_opt.seed = cx.cfg.seed;
  const auto polar = tailmeasure::polar_product_check(*cx.path, u, polar_opt);
  cx.write_json(rec, "polar.json", tailmeasure::to_json(polar));

  const auto rho = cx.path->moduli();
  const auto curve = tailmeasure::tail_ratio_curve(rho, u, p.lambdas);
  tailmeasure::write_ratio_csv(curve, cx.out(rec, "tail_ratio.csv"));
  cx.write_json(rec, "tail_ratio.json", tailmeasure::to_json(curve));
  rec.summary = {{"u", u},
                 {"atoms", mu.atoms()},
                 {"consistency_pass", cons.pass},
                 {"polar_pass", polar.pass},
                 {"alpha_slope", curve.alpha_slope}};
}

bool task_verify_timechange(Context& cx, TaskRecord& rec) {
  const auto p = timechange_params(cx.d, cx.cfg);
  const auto& law = cx.true_law();
  spectral::TimeChangeOptions opt;
  opt.route = p.route;
  const rng::Stream base = rng::Stream::named(cx.cfg.seed, "verify_timechange");
  nlohmann::json rows = nlohmann::json::array();
  bool pass = true;
  for (std::size_t i = 0; i < p.functions.size(); ++i) {
    const auto f = catalogue::parse_function(p.functions[i], cx.cfg.space, law.alpha());
    const auto r = spectral::time_change_residual(law, f.window, p.s, p.t, p.n, base.child(i), opt);
    const bool ok = std::fabs(r.z_score) <= p.z_max;
    pass = pass && ok;
    rows.push_back({{"function", f.text},
                    {"lhs", spectral::to_json(r.lhs, cx.cfg.seed)},
                    {"rhs", spectral::to_json(r.rhs, cx.cfg.seed)},
                    {"z", r.z_score},
                    {"route", spectral::route_name(r.route)},
                    {"pass", ok}});
  }
  rec.summary = {{"s", p.s}, {"t", p.t}, {"pass", pass}, {"checks", rows}};
  cx.write_json(rec, "timechange.json", rec.summary);
  return pass;
}

bool task_verify_nuk(Context& cx, TaskRecord& rec) {
  const auto p = nuk_params(cx.d, cx.cfg);
  const auto& law = cx.true_law();
  const auto f = catalogue::parse_function(p.function, cx.cfg.space, law.alpha());
  const auto formula = spectral::nu_k_integral(law, f.window, p.k, *f.support_radius, p.n,
                                               rng::Stream::named(cx.cfg.seed, "verify_nuk"), p.route);
  const double u = cx.threshold();
  const auto empirical = tailmeasure::empirical_nu_k(*cx.path, f.window, p.k, u);
  const double z = spectral::z_score(empirical, formula);
  const bool pass = std::fabs(z) <= p.z_max;
  rec.summary = {{"function", f.text},
                 {"k", p.k},
                 {"u", u},
                 {"formula", spectral::to_json(formula, cx.cfg.seed)},
                 {"empirical", spectral::to_json(empirical, cx.cfg.seed)},
                 {"z", z},
                 {"pass", pass}};
  cx.write_json(rec, "nuk.json", rec.summary);
  return pass;
}

bool task_validate_space(Context& cx, TaskRecord& rec) {
  const std::size_t n = count_field(cx.d, "validate_space.samples", 100000);
  const double tol = cx.d.number_or("validate_space.tol", 1e-12);
  starspace::ValidateOptions opt;
  opt.seed = cx.cfg.seed;
  const auto report = starspace::validate_axioms(cx.cfg.space, starspace::default_sampler(cx.cfg.space), n, tol, opt);
  const auto j = starspace::to_json(report);
  cx.write_json(rec, "axioms.json", j);
  rec.summary = {{"exact_axioms_pass", report.exact_axioms_pass()},
                 {"condition_iii_flagged", report.condition_iii_flagged}};
  return report.exact_axioms_pass();
}

}  // namespace

RunReport run(const ExperimentConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  RunReport report;
  report.seed = cfg.seed;
  report.config_hash = hex(cfg.doc.hash());
  report.output_dir = cfg.output_dir;

  Context cx{cfg, cfg.doc, fs::path(cfg.output_dir), std::nullopt, nullptr};
  std::error_code ec;
  fs::create_directories(cx.dir, ec);
  if (ec) throw IoError("cannot create output directory " + cfg.output_dir + ": " + ec.message());
  if (cfg.input) cx.path = series_io::ingest(*cfg.input, cfg.space->descriptor());

  bool aborted = false;
  for (const auto& name : cfg.tasks) {
    TaskRecord rec;
    rec.name = name;
    if (aborted) {
      rec.status = "skipped";
      report.tasks.push_back(std::move(rec));
      continue;
    }
    const auto t0 = std::chrono::steady_clock::now();
    try {
      bool pass = true;
      if (name == "simulate") task_simulate(cx, rec);
      else if (name == "hill") task_hill(cx, rec);
      else if (name == "spectral") task_spectral(cx, rec);
      else if (name == "extremogram") task_extremogram(cx, rec);
      else if (name == "tailmeasure") task_tailmeasure(cx, rec);
      else if (name == "verify_timechange") pass = task_verify_timechange(cx, rec);
      else if (name == "verify_nuk") pass = task_verify_nuk(cx, rec);
      else if (name == "validate_space") pass = task_validate_space(cx, rec);
      rec.status = pass ? "ok" : "check_failed";
      report.ok = report.ok && pass;
    } catch (const IoError& e) {
      rec.status = "io_error";
      rec.error = e.what();
    } catch (const Error& e) {
      rec.status = "error";
      rec.error = TaskError(name, e.what()).what();
    }
    if (rec.status == "io_error" || rec.status == "error") {
      report.ok = false;
      aborted = true;
    }
    rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report.tasks.push_back(std::move(rec));
  }
  report.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  const auto path = (cx.dir / "report.json").string();
  std::ofstream f(path);
  if (!f) throw IoError("cannot write " + path);
  f << report.to_json().dump(2) << '\n';
  return report;
}

}  // namespace rvts::runner
