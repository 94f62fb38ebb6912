#include "skewdrift/cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iostream>
#include <sstream>

#include "skewdrift/builtin_models.hpp"
#include "skewdrift/errors.hpp"

#ifndef SKEWDRIFT_VERSION
#define SKEWDRIFT_VERSION "0.0.0"
#endif

namespace skewdrift {

using nlohmann::json;

namespace {

std::string expected_table(ExperimentName name) {
  switch (name) {
    case ExperimentName::MultVolWeakError:
    case ExperimentName::OuWeakOrder: return "weak_error.csv";
    case ExperimentName::QuarticMoments: return "moments.csv";
    case ExperimentName::PoissonMse: return "mse.csv";
    case ExperimentName::SoftSpheresGrid: return "explosion.csv";
    case ExperimentName::MeanIncrementCheck: return "increment.csv";
  }
  return "";
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) parts.push_back(item);
  return parts;
}

double parse_double(const std::string& text, const std::string& what) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    throw ConfigError("cannot parse " + what + " value '" + text + "'");
  }
  if (used != text.size() || !std::isfinite(v)) {
    throw ConfigError("cannot parse " + what + " value '" + text + "'");
  }
  return v;
}

unsigned resolve_threads(int flag) {
  if (flag > 0) return static_cast<unsigned>(flag);
  return default_thread_count();
}

int cmd_run(const std::string& config_path, bool force, int thread_flag, std::ostream& out) {
  const RunConfig config = load_run_config(config_path);
  const auto summary_path = config.output_dir / "summary.json";
  if (!force) {
    for (const auto& p : {config.output_dir / expected_table(config.experiment.name), summary_path}) {
      if (std::filesystem::exists(p)) {
        throw ConfigError("output file " + p.string() + " already exists (use --force to overwrite)");
      }
    }
  }

  const auto start = std::chrono::steady_clock::now();
  const auto result = run_experiment(config.experiment, config.master_seed,
                                     resolve_threads(thread_flag));
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  const auto written = write_tables(result.tables, config.output_dir, true);
  json summary;
  summary["experiment"] = experiment_name(config.experiment.name);
  summary["master_seed"] = config.master_seed;
  summary["parameters"] = result.parameters;
  summary["version"] = SKEWDRIFT_VERSION;
  summary["wall_time_seconds"] = wall;
  summary["timestamp"] = utc_timestamp();
  summary["reproducibility_hash"] = reproducibility_hash(result.tables);
  summary["csv_files"] = json::array();
  for (std::size_t i = 0; i < written.size(); ++i) {
    summary["csv_files"].push_back(
        {{"path", written[i].filename().string()}, {"rows", result.tables[i].rows.size()}});
  }
  summary["details"] = result.details;
  std::ofstream file(summary_path, std::ios::trunc);
  if (!file) throw Error("cannot open " + summary_path.string() + " for writing");
  // NaN is not valid JSON; nlohmann writes it as null.
  file << summary.dump(2) << '\n';
  if (!file) throw Error("failed writing " + summary_path.string());

  for (const auto& p : written) out << p.string() << '\n';
  out << summary_path.string() << '\n';
  out << "reproducibility_hash " << summary["reproducibility_hash"].get<std::string>() << '\n';
  return kExitOk;
}

struct SimulateFlags {
  std::string model;
  std::vector<std::string> params;
  std::string scheme = "skew";
  std::string skew_function = "logistic";
  double dt = 0.0;
  long long steps = 0;
  std::uint64_t seed = 0;
  std::string x0;
  std::string out_path;
  double alpha = 1.0;
  double theta = 0.2;
  double fp_tol = 1e-3;
  int fp_max_iters = 500;
  bool force = false;
};

int cmd_simulate(const SimulateFlags& f, std::ostream& out) {
  if (f.steps < 1) throw ConfigError("--steps must be at least 1");
  ParamMap params;
  for (const auto& kv : f.params) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("--param expects key=value, got '" + kv + "'");
    params[kv.substr(0, eq)] = parse_double(kv.substr(eq + 1), "--param " + kv.substr(0, eq));
  }

  SdeModel<double> model = [&] {
    try {
      return builtin_model(f.model, params);
    } catch (const InvalidArgument& e) {
      throw ConfigError(e.what());
    }
  }();

  SchemeSpec<double> spec;
  try {
    spec.kind = scheme_from_name(f.scheme);
    spec.dt = f.dt;
    if (spec.kind == SchemeKind::SkewSymmetric) {
      spec.skew = SkewFunction<double>::from_name(f.skew_function);
    }
    spec.taming_alpha = f.alpha;
    spec.theta = f.theta;
    spec.fp_tolerance = f.fp_tol;
    spec.fp_max_iters = f.fp_max_iters;
    spec.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }

  Eigen::VectorXd x0 = Eigen::VectorXd::Zero(model.dim());
  if (!f.x0.empty()) {
    const auto parts = split(f.x0, ',');
    if (parts.size() == 1) {
      x0.setConstant(parse_double(parts[0], "--x0"));
    } else if (static_cast<Index>(parts.size()) == model.dim()) {
      for (Index i = 0; i < model.dim(); ++i) x0[i] = parse_double(parts[static_cast<std::size_t>(i)], "--x0");
    } else {
      throw ConfigError("--x0 has " + std::to_string(parts.size()) + " entries, model dimension is " +
                        std::to_string(model.dim()));
    }
  }

  std::ofstream file;
  std::ostream* sink = &out;
  if (!f.out_path.empty() && f.out_path != "-") {
    if (!f.force && std::filesystem::exists(f.out_path)) {
      throw ConfigError("output file " + f.out_path + " already exists (use --force to overwrite)");
    }
    file.open(f.out_path, std::ios::trunc);
    if (!file) throw Error("cannot open " + f.out_path + " for writing");
    sink = &file;
  }

  const auto path = simulate_path(model, spec, x0, static_cast<std::size_t>(f.steps), f.seed);
  std::string text = "step,t";
  for (Index i = 1; i <= model.dim(); ++i) text += ",x" + std::to_string(i);
  text += ",exploded\n";
  for (Index n = 0; n < path.states.cols(); ++n) {
    text += std::to_string(n) + "," + format_number(static_cast<double>(n) * f.dt);
    for (Index i = 0; i < model.dim(); ++i) text += "," + format_number(path.states(i, n));
    const bool exploded = path.explosion_step && static_cast<std::size_t>(n) >= *path.explosion_step;
    text += exploded ? ",true\n" : ",false\n";
  }
  *sink << text;
  if (!*sink) throw Error("failed writing trajectory");
  return kExitOk;
}

void cmd_list(std::ostream& out) {
  out << "models:\n";
  for (const auto& m : builtin_model_names()) out << "  " << m << '\n';
  out << "schemes:\n";
  for (auto k : {SchemeKind::SkewSymmetric, SchemeKind::EulerMaruyama, SchemeKind::TamedEuler,
                 SchemeKind::SemiImplicitEuler}) {
    out << "  " << scheme_name(k) << '\n';
  }
  out << "skew functions:\n";
  for (const auto& s : {SkewFunction<double>::logistic(), SkewFunction<double>::gaussian()}) {
    out << "  " << s.name() << '\n';
  }
  out << "experiments:\n";
  for (const auto& e : experiment_names()) out << "  " << e << '\n';
}

}  // namespace

RunConfig parse_run_config(const json& document) {
  if (!document.is_object()) throw ConfigError("config must be a JSON object");
  RunConfig config;
  bool have_experiment = false;
  for (const auto& [key, value] : document.items()) {
    if (key == "experiment") {
      if (!value.is_string()) throw ConfigError("config key 'experiment' must be a string");
      try {
        config.experiment.name = experiment_from_name(value.get<std::string>());
      } catch (const InvalidArgument& e) {
        throw ConfigError(e.what());
      }
      have_experiment = true;
    } else if (key == "master_seed") {
      if (!value.is_number_unsigned()) {
        throw ConfigError("config key 'master_seed' must be a non-negative integer");
      }
      config.master_seed = value.get<std::uint64_t>();
    } else if (key == "overrides") {
      if (!value.is_object()) throw ConfigError("config key 'overrides' must be an object");
      config.experiment.overrides = value;
    } else if (key == "output_dir") {
      if (!value.is_string()) throw ConfigError("config key 'output_dir' must be a string");
      config.output_dir = value.get<std::string>();
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
  if (!have_experiment) throw ConfigError("config is missing 'experiment'");
  // Validate overrides now so typos fail before any simulation starts.
  const auto defaults = experiment_defaults(config.experiment.name);
  for (const auto& [key, value] : config.experiment.overrides.items()) {
    if (!defaults.contains(key)) {
      throw ConfigError("unknown override '" + key + "' for experiment '" +
                        std::string(experiment_name(config.experiment.name)) + "'");
    }
  }
  return config;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  json document;
  try {
    document = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("invalid JSON in " + path.string() + ": " + e.what());
  }
  auto config = parse_run_config(document);
  if (config.output_dir.is_relative()) config.output_dir = path.parent_path() / config.output_dir;
  return config;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Skew-symmetric SDE schemes and Monte Carlo experiments", "skewdrift"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run an experiment from a JSON config");
  std::string config_path;
  bool run_force = false;
  int threads = 0;
  run->add_option("config", config_path, "Config file")->required();
  run->add_flag("--force", run_force, "Overwrite existing outputs");
  run->add_option("--threads", threads, "Worker threads (default SKEWDRIFT_THREADS or all cores)")
      ->check(CLI::NonNegativeNumber);

  auto* sim = app.add_subcommand("simulate", "Simulate one trajectory to CSV");
  SimulateFlags f;
  sim->add_option("--model", f.model, "Model name")->required();
  sim->add_option("--param", f.params, "Model parameter key=value (repeatable)");
  sim->add_option("--scheme", f.scheme, "skew | em | tamed | semi_implicit");
  sim->add_option("--skew-function", f.skew_function, "logistic | gaussian");
  sim->add_option("--dt", f.dt, "Step size")->required();
  sim->add_option("--steps", f.steps, "Number of steps")->required();
  sim->add_option("--seed", f.seed, "Seed");
  sim->add_option("--x0", f.x0, "Initial state: comma list or one value for every coordinate");
  sim->add_option("--out", f.out_path, "Output CSV (default stdout)");
  sim->add_option("--alpha", f.alpha, "Taming exponent");
  sim->add_option("--theta", f.theta, "Semi-implicit weight");
  sim->add_option("--fp-tol", f.fp_tol, "Fixed-point tolerance");
  sim->add_option("--fp-max-iters", f.fp_max_iters, "Fixed-point iteration cap");
  sim->add_flag("--force", f.force, "Overwrite an existing output file");

  auto* list = app.add_subcommand("list", "List models, schemes, skew functions and experiments");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfigError;
  }

  try {
    if (run->parsed()) return cmd_run(config_path, run_force, threads, out);
    if (sim->parsed()) return cmd_simulate(f, out);
    if (list->parsed()) {
      cmd_list(out);
      return kExitOk;
    }
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntimeError;
  }
  return kExitConfigError;
}

}  // namespace skewdrift
