#include "skewdrift/experiments.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>

#include "skewdrift/builtin_models.hpp"
#include "skewdrift/errors.hpp"

namespace skewdrift {

using nlohmann::json;

namespace {

constexpr std::uint64_t kDefaultPoissonDataSeed = 20240501;

const std::vector<ExperimentName>& all_experiments() {
  static const std::vector<ExperimentName> all{
      ExperimentName::MultVolWeakError, ExperimentName::OuWeakOrder,
      ExperimentName::QuarticMoments,   ExperimentName::PoissonMse,
      ExperimentName::SoftSpheresGrid,  ExperimentName::MeanIncrementCheck};
  return all;
}

/// Defaults merged with validated overrides.
class Params {
 public:
  Params(ExperimentName name, const json& overrides) : values_(experiment_defaults(name)) {
    if (!overrides.is_object()) throw InvalidArgument("overrides must be a JSON object");
    for (const auto& [key, value] : overrides.items()) {
      if (!values_.contains(key)) {
        throw InvalidArgument("experiment '" + std::string(experiment_name(name)) +
                              "' has no override '" + key + "'");
      }
      if (value.type() != values_[key].type() &&
          !(value.is_number() && values_[key].is_number())) {
        throw InvalidArgument("override '" + key + "' has the wrong type");
      }
      values_[key] = value;
    }
  }

  const json& all() const { return values_; }

  double number(const std::string& key) const { return get<double>(key); }

  std::size_t count(const std::string& key, std::size_t min = 1) const {
    const double v = number(key);
    if (!(v >= static_cast<double>(min)) || v != std::floor(v)) {
      throw InvalidArgument("override '" + key + "' must be an integer >= " +
                            std::to_string(min));
    }
    return static_cast<std::size_t>(v);
  }

  std::string text(const std::string& key) const { return get<std::string>(key); }

  std::vector<double> numbers(const std::string& key) const {
    auto v = get<std::vector<double>>(key);
    if (v.empty()) throw InvalidArgument("override '" + key + "' must not be empty");
    return v;
  }

  std::vector<std::string> texts(const std::string& key) const {
    auto v = get<std::vector<std::string>>(key);
    if (v.empty()) throw InvalidArgument("override '" + key + "' must not be empty");
    return v;
  }

 private:
  template <typename T>
  T get(const std::string& key) const {
    try {
      return values_.at(key).get<T>();
    } catch (const json::exception&) {
      throw InvalidArgument("override '" + key + "' has the wrong type");
    }
  }

  json values_;
};

SchemeSpec<double> make_spec(const std::string& scheme, double dt, const Params& p) {
  SchemeSpec<double> spec;
  spec.kind = scheme_from_name(scheme);
  spec.dt = dt;
  if (spec.kind == SchemeKind::SkewSymmetric) {
    spec.skew = SkewFunction<double>::from_name(p.all().value("skew_function", "logistic"));
  }
  if (p.all().contains("alpha")) spec.taming_alpha = p.number("alpha");
  if (p.all().contains("theta")) spec.theta = p.number("theta");
  if (p.all().contains("fp_tol")) spec.fp_tolerance = p.number("fp_tol");
  if (p.all().contains("fp_max_iters")) spec.fp_max_iters = static_cast<int>(p.count("fp_max_iters"));
  spec.validate();
  return spec;
}

std::string cell_label(const std::vector<std::pair<std::string, std::string>>& parts) {
  std::string s = "cell (";
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) s += ", ";
    s += parts[i].first + "=" + parts[i].second;
  }
  return s + ")";
}

template <typename Fn>
auto in_cell(const std::vector<std::pair<std::string, std::string>>& parts, Fn&& fn) {
  try {
    return fn();
  } catch (const InvalidArgument&) {
    throw;
  } catch (const std::exception& e) {
    throw CellError(cell_label(parts) + ": " + e.what());
  }
}

const std::vector<std::string> kWeakErrorHeader{
    "experiment", "model", "scheme", "param_a", "x0", "dt", "n_samples",
    "estimate", "exact", "abs_error", "std_error", "n_exploded"};

std::vector<std::string> weak_error_row(std::string_view experiment, std::string_view model,
                                        std::string_view scheme, const std::string& param_a,
                                        double x0, double dt, std::size_t n,
                                        const WeakErrorResult& r) {
  return {std::string(experiment), std::string(model), std::string(scheme), param_a,
          format_number(x0), format_number(dt), std::to_string(n), format_number(r.estimate),
          format_number(r.exact), format_number(r.abs_error), format_number(r.std_error),
          std::to_string(r.n_exploded)};
}

/// weak_error, mapping "every trajectory exploded" to a NaN row.
WeakErrorResult weak_error_or_nan(const SdeModel<double>& model, const SchemeSpec<double>& spec,
                                  const Eigen::VectorXd& x0, double horizon,
                                  const ScalarFunction& f, std::size_t n, double exact,
                                  std::uint64_t seed, unsigned threads) {
  try {
    return weak_error(model, spec, x0, horizon, f, n, exact, seed, threads);
  } catch (const AllExploded&) {
    WeakErrorResult r;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    r.estimate = r.abs_error = r.std_error = nan;
    r.exact = exact;
    r.n_samples = n;
    r.n_exploded = n;
    return r;
  }
}

ExperimentResult run_mult_vol(const Params& p, std::uint64_t seed, unsigned threads) {
  ExperimentResult out;
  CsvTable table{"weak_error.csv", kWeakErrorHeader, {}};
  const auto x0s = p.numbers("x0_list");
  const auto as = p.numbers("a_list");
  const auto dts = p.numbers("dt_grid");
  const auto schemes = p.texts("schemes");
  const double horizon = p.number("horizon");
  const std::size_t n = p.count("n_samples", 2);
  const ScalarFunction identity = [](const Eigen::VectorXd& x) { return x[0]; };

  std::uint64_t cell = 0;
  json cells = json::array();
  for (double x0 : x0s) {
    for (double a : as) {
      const auto model = mult_vol_model(a);
      const double exact = model.reference()->transient_moment(x0, horizon, 1);
      for (double dt : dts) {
        // Same seed for every scheme in a cell: common random numbers.
        const std::uint64_t cell_seed = derive_seed(seed, cell++);
        for (const auto& scheme : schemes) {
          const auto r = in_cell({{"scheme", scheme}, {"a", format_number(a)},
                                  {"x0", format_number(x0)}, {"dt", format_number(dt)}},
                                 [&] {
                                   const auto spec = make_spec(scheme, dt, p);
                                   return weak_error_or_nan(model, spec, Eigen::VectorXd::Constant(1, x0),
                                                            horizon, identity, n, exact,
                                                            cell_seed, threads);
                                 });
          table.rows.push_back(weak_error_row("mult_vol_weak_error", "mult_vol", scheme,
                                              format_number(a), x0, dt, n, r));
          cells.push_back({{"scheme", scheme}, {"a", a}, {"x0", x0}, {"dt", dt},
                           {"std_error", r.std_error}, {"n_exploded", r.n_exploded}});
        }
      }
    }
  }
  out.tables.push_back(std::move(table));
  out.details["cells"] = std::move(cells);
  return out;
}

ExperimentResult run_ou(const Params& p, std::uint64_t seed, unsigned threads) {
  ExperimentResult out;
  CsvTable table{"weak_error.csv", kWeakErrorHeader, {}};
  const auto model = ou_model(p.number("theta_ou"), p.number("mean"), p.number("s"));
  const double x0 = p.number("x0");
  const double horizon = p.number("horizon");
  const std::size_t n = p.count("n_samples", 2);
  const auto dts = p.numbers("dt_grid");
  const auto schemes = p.texts("schemes");
  const double exact = model.reference()->transient_moment(x0, horizon, 2);
  const ScalarFunction square = [](const Eigen::VectorXd& x) { return x[0] * x[0]; };

  json slopes = json::object();
  json cells = json::array();
  for (const auto& scheme : schemes) {
    std::vector<std::pair<double, double>> errors;
    for (std::size_t c = 0; c < dts.size(); ++c) {
      const double dt = dts[c];
      const auto r = in_cell({{"scheme", scheme}, {"dt", format_number(dt)}}, [&] {
        return weak_error_or_nan(model, make_spec(scheme, dt, p),
                                 Eigen::VectorXd::Constant(1, x0), horizon, square, n, exact,
                                 derive_seed(seed, c), threads);
      });
      table.rows.push_back(weak_error_row("ou_weak_order", "ou", scheme, "", x0, dt, n, r));
      cells.push_back({{"scheme", scheme}, {"dt", dt}, {"std_error", r.std_error},
                       {"n_exploded", r.n_exploded}});
      errors.emplace_back(dt, r.abs_error);
    }
    try {
      slopes[scheme] = weak_order_fit(errors);
    } catch (const Error& e) {
      slopes[scheme] = nullptr;
      out.details["slope_errors"][scheme] = e.what();
    }
  }
  out.tables.push_back(std::move(table));
  out.details["slopes"] = std::move(slopes);
  out.details["cells"] = std::move(cells);
  return out;
}

ExperimentResult run_quartic(const Params& p, std::uint64_t seed, unsigned threads) {
  ExperimentResult out;
  CsvTable table{"moments.csv",
                 {"model", "scheme", "dt", "moment_order", "estimate", "target", "abs_bias",
                  "std_error"},
                 {}};
  const auto model = quartic_langevin_model();
  const auto dts = p.numbers("dt_grid");
  std::vector<int> orders;
  for (double k : p.numbers("orders")) {
    if (k < 0 || k != std::floor(k)) throw InvalidArgument("moment orders must be integers");
    orders.push_back(static_cast<int>(k));
  }
  const std::string scheme = p.text("scheme");
  const auto prototype = make_spec(scheme, dts.front(), p);
  const auto rows = in_cell({{"scheme", scheme}}, [&] {
    return equilibrium_bias_curve(model, prototype, dts, orders,
                                  Eigen::VectorXd::Constant(1, p.number("x0")),
                                  p.count("burn_in", 0), p.count("n_kept"),
                                  p.count("n_replicates"), seed, threads);
  });
  for (const auto& r : rows) {
    table.rows.push_back({"quartic_langevin", scheme, format_number(r.dt),
                          std::to_string(r.order), format_number(r.estimate),
                          format_number(r.exact), format_number(r.abs_bias),
                          format_number(r.std_error)});
  }
  json ratios = json::object();
  for (int k : orders) ratios[std::to_string(k)] = bias_ratios(rows, k);
  out.details["bias_ratios"] = std::move(ratios);
  out.tables.push_back(std::move(table));
  return out;
}

ExperimentResult run_poisson(const Params& p, std::uint64_t seed, unsigned threads) {
  ExperimentResult out;
  CsvTable table{"mse.csv", {"model", "scheme", "dt", "n_replicates", "mse", "n_excluded"}, {}};
  const int n_groups = static_cast<int>(p.count("I"));
  const int n_obs = static_cast<int>(p.count("J"));
  const double true_mean = p.number("true_mean");
  const double data_seed = p.number("data_seed");
  if (data_seed < 0 || data_seed != std::floor(data_seed)) {
    throw InvalidArgument("override 'data_seed' must be a non-negative integer");
  }
  const auto data = poisson_re_simulate_data(true_mean, n_groups, n_obs,
                                             static_cast<std::uint64_t>(data_seed));
  const auto model = poisson_re_model(data.counts, p.number("sigma_m"));

  const std::string init = p.text("init");
  if (init != "true_value" && init != "warm_start") {
    throw InvalidArgument("override 'init' must be 'true_value' or 'warm_start'");
  }
  const std::string penalty_name = p.text("penalty");
  if (penalty_name != "exclude" && penalty_name != "infinite") {
    throw InvalidArgument("override 'penalty' must be 'exclude' or 'infinite'");
  }
  const auto penalty = penalty_name == "exclude" ? ExplosionPenalty::ExcludeAndReport
                                                 : ExplosionPenalty::CountAsInfinite;
  const bool warm = init == "warm_start";
  const double warm_sd = p.number("warm_sd");

  ErgodicProtocol protocol;
  protocol.burn_in = p.count("burn_in", 0);
  protocol.n_kept = p.count("n_kept");
  protocol.f = [](const Eigen::VectorXd& x) { return x[0]; };
  protocol.init = [=](RandomStream& rng) {
    Eigen::VectorXd x(n_groups + 1);
    x[0] = warm ? true_mean + warm_sd * rng.normal() : true_mean;
    for (int i = 1; i <= n_groups; ++i) x[i] = x[0] + rng.normal();
    return x;
  };

  std::size_t n_reps = p.count("n_replicates", 2);
  if (p.all().at("paper_exact").get<bool>()) n_reps = 100;
  const auto dts = p.numbers("dt_grid");
  const auto schemes = p.texts("schemes");
  json cells = json::array();
  for (const auto& scheme : schemes) {
    for (std::size_t c = 0; c < dts.size(); ++c) {
      const double dt = dts[c];
      const auto r = in_cell({{"scheme", scheme}, {"dt", format_number(dt)}}, [&] {
        return replicate_mse(model, make_spec(scheme, dt, p), protocol, n_reps, true_mean,
                             derive_seed(seed, c), penalty, threads);
      });
      table.rows.push_back({"poisson_re", scheme, format_number(dt), std::to_string(n_reps),
                            format_number(r.mse), std::to_string(r.n_excluded)});
      cells.push_back({{"scheme", scheme}, {"dt", dt}, {"mse", r.mse},
                       {"n_excluded", r.n_excluded}});
    }
  }
  out.details["cells"] = std::move(cells);
  out.details["init"] = init;
  out.details["data_seed"] = static_cast<std::uint64_t>(data_seed);
  out.tables.push_back(std::move(table));
  return out;
}

ExperimentResult run_soft_spheres(const Params& p, std::uint64_t seed, unsigned threads) {
  ExperimentResult out;
  CsvTable table{"explosion.csv",
                 {"model", "scheme", "B", "dt", "n_reps", "n_steps", "explosion_frequency"},
                 {}};
  SoftSphereParams base;
  base.A = p.number("A");
  base.r = p.number("r");
  base.D = p.number("D");
  base.N = static_cast<int>(p.count("N"));
  const std::size_t n_reps = p.count("n_reps");
  const std::size_t n_steps = p.count("n_steps");
  const auto bs = p.numbers("B_grid");
  const auto dts = p.numbers("dt_grid");
  std::vector<std::pair<double, double>> grid;
  for (double b : bs) {
    for (double dt : dts) grid.emplace_back(b, dt);
  }
  const int n_particles = base.N;
  const InitSampler init = [n_particles](RandomStream& rng) {
    Eigen::VectorXd x(2 * n_particles);
    for (Index i = 0; i < x.size(); ++i) x[i] = 2.0 * rng.uniform() - 1.0;
    return x;
  };
  const auto family = [base](double b) {
    SoftSphereParams q = base;
    q.B = b;
    return soft_spheres_model(q);
  };

  json counts = json::array();
  for (const auto& scheme : p.texts("schemes")) {
    make_spec(scheme, dts.front(), p);
    const auto cells = in_cell({{"scheme", scheme}}, [&] {
      return explosion_grid(family, [&](double dt) { return make_spec(scheme, dt, p); }, grid,
                            n_reps, n_steps, init, seed, threads);
    });
    for (const auto& c : cells) {
      table.rows.push_back({"soft_spheres", scheme, format_number(c.param), format_number(c.dt),
                            std::to_string(c.n_reps), std::to_string(c.n_steps),
                            format_number(c.frequency)});
      counts.push_back({{"scheme", scheme}, {"B", c.param}, {"dt", c.dt},
                        {"n_exploded", c.n_exploded}});
    }
  }
  out.details["explosion_counts"] = std::move(counts);
  out.tables.push_back(std::move(table));
  return out;
}

ExperimentResult run_mean_increment(const Params& p, std::uint64_t seed, unsigned threads) {
  ExperimentResult out;
  CsvTable table{"increment.csv", {"dt", "mu_over_sigma", "closed_form", "mc_mean", "mc_se", "z"},
                 {}};
  const auto dts = p.numbers("dt_grid");
  const auto ratios = p.numbers("mu_over_sigma_grid");
  const auto rows = in_cell({{"experiment", "mean_increment_check"}}, [&] {
    return mean_increment_check(dts, ratios, p.count("n_steps", 2), seed, threads);
  });
  double max_abs_z = 0.0;
  for (const auto& r : rows) {
    table.rows.push_back({format_number(r.dt), format_number(r.mu_over_sigma),
                          format_number(r.closed_form), format_number(r.mc_mean),
                          format_number(r.mc_se), format_number(r.z)});
    max_abs_z = std::max(max_abs_z, std::abs(r.z));
  }
  out.details["max_abs_z"] = max_abs_z;
  out.tables.push_back(std::move(table));
  return out;
}

}  // namespace

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (auto e : all_experiments()) v.emplace_back(experiment_name(e));
    return v;
  }();
  return names;
}

std::string_view experiment_name(ExperimentName name) {
  switch (name) {
    case ExperimentName::MultVolWeakError: return "mult_vol_weak_error";
    case ExperimentName::OuWeakOrder: return "ou_weak_order";
    case ExperimentName::QuarticMoments: return "quartic_moments";
    case ExperimentName::PoissonMse: return "poisson_mse";
    case ExperimentName::SoftSpheresGrid: return "soft_spheres_grid";
    case ExperimentName::MeanIncrementCheck: return "mean_increment_check";
  }
  return "unknown";
}

ExperimentName experiment_from_name(std::string_view name) {
  for (auto e : all_experiments()) {
    if (experiment_name(e) == name) return e;
  }
  throw InvalidArgument("unknown experiment '" + std::string(name) + "'");
}

json experiment_defaults(ExperimentName name) {
  switch (name) {
    case ExperimentName::MultVolWeakError:
      return {{"x0_list", {0.1, 1.0, 10.0}},
              {"a_list", {0.5, 2.0}},
              {"dt_grid", {0.2, 0.1, 0.05, 0.02, 0.01}},
              {"n_samples", 100000},
              {"horizon", 5.0},
              {"schemes", {"skew", "em", "tamed"}},
              {"skew_function", "logistic"},
              {"alpha", 1.0}};
    case ExperimentName::OuWeakOrder:
      return {{"dt_grid", {0.32, 0.16, 0.08, 0.04}},
              {"n_samples", 1000000},
              {"horizon", 5.0},
              {"x0", 1.0},
              {"theta_ou", 1.0},
              {"mean", 0.0},
              {"s", std::numbers::sqrt2},
              {"schemes", {"skew", "em", "tamed"}},
              {"skew_function", "logistic"},
              {"alpha", 1.0}};
    case ExperimentName::QuarticMoments:
      return {{"dt_grid", {0.2, 0.1, 0.05, 0.02}},
              {"orders", {2, 4, 6}},
              {"burn_in", 10000},
              {"n_kept", 1000000},
              {"n_replicates", 4},
              {"x0", 0.0},
              {"scheme", "skew"},
              {"skew_function", "logistic"}};
    case ExperimentName::PoissonMse:
      // The paper repeats 100 times; 50 keeps the default run short.
      return {{"dt_grid", {0.001, 0.005, 0.01, 0.02, 0.03, 0.04, 0.05}},
              {"schemes", {"skew", "em", "semi_implicit"}},
              {"n_replicates", 50},
              {"paper_exact", false},
              {"burn_in", 10000},
              {"n_kept", 50000},
              {"init", "true_value"},
              {"warm_sd", 10.0},
              {"I", 50},
              {"J", 5},
              {"true_mean", 5.0},
              {"sigma_m", 10.0},
              {"data_seed", kDefaultPoissonDataSeed},
              {"penalty", "exclude"},
              {"skew_function", "logistic"},
              {"theta", 0.2},
              {"fp_tol", 1e-3},
              {"fp_max_iters", 500}};
    case ExperimentName::SoftSpheresGrid:
      return {{"B_grid", {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0}},
              {"dt_grid", {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0}},
              {"n_reps", 100},
              {"n_steps", 10},
              {"schemes", {"skew", "em", "semi_implicit"}},
              {"A", 30.0},
              {"r", 0.15},
              {"D", 0.25},
              {"N", 50},
              {"skew_function", "logistic"},
              {"theta", 0.2},
              {"fp_tol", 1e-3},
              {"fp_max_iters", 500}};
    case ExperimentName::MeanIncrementCheck:
      return {{"dt_grid", {0.001, 0.01, 0.05, 0.1, 0.5}},
              {"mu_over_sigma_grid", {0.0, 0.5, 1.0, 5.0, 100.0}},
              {"n_steps", 10000000}};
  }
  throw InvalidArgument("unknown experiment");
}

ExperimentResult run_experiment(const ExperimentSpec& spec, std::uint64_t master_seed,
                                unsigned threads) {
  const Params params(spec.name, spec.overrides);
  ExperimentResult result;
  switch (spec.name) {
    case ExperimentName::MultVolWeakError: result = run_mult_vol(params, master_seed, threads); break;
    case ExperimentName::OuWeakOrder: result = run_ou(params, master_seed, threads); break;
    case ExperimentName::QuarticMoments: result = run_quartic(params, master_seed, threads); break;
    case ExperimentName::PoissonMse: result = run_poisson(params, master_seed, threads); break;
    case ExperimentName::SoftSpheresGrid: result = run_soft_spheres(params, master_seed, threads); break;
    case ExperimentName::MeanIncrementCheck: result = run_mean_increment(params, master_seed, threads); break;
  }
  result.parameters = params.all();
  return result;
}

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", value);
  return buf;
}

std::string CsvTable::to_string() const {
  std::string s;
  auto append = [&s](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) s += ',';
      s += cells[i];
    }
    s += '\n';
  };
  append(header);
  for (const auto& r : rows) append(r);
  return s;
}

std::string reproducibility_hash(const std::vector<CsvTable>& tables) {
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (ctx == nullptr) throw Error("cannot allocate digest context");
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  for (const auto& t : tables) {
    const std::string body = t.to_string();
    EVP_DigestUpdate(ctx, t.file_name.data(), t.file_name.size());
    EVP_DigestUpdate(ctx, "\0", 1);
    EVP_DigestUpdate(ctx, body.data(), body.size());
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  EVP_DigestFinal_ex(ctx, digest, &length);
  EVP_MD_CTX_free(ctx);
  std::ostringstream hex;
  for (unsigned int i = 0; i < length; ++i) {
    hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  }
  return hex.str();
}

std::vector<std::filesystem::path> write_tables(const std::vector<CsvTable>& tables,
                                                const std::filesystem::path& dir, bool force) {
  std::vector<std::filesystem::path> paths;
  for (const auto& t : tables) {
    paths.push_back(dir / t.file_name);
    if (!force && std::filesystem::exists(paths.back())) {
      throw ConfigError("output file " + paths.back().string() +
                        " already exists (use --force to overwrite)");
    }
  }
  std::filesystem::create_directories(dir);
  for (std::size_t i = 0; i < tables.size(); ++i) {
    std::ofstream out(paths[i], std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + paths[i].string() + " for writing");
    out << tables[i].to_string();
    if (!out) throw Error("failed writing " + paths[i].string());
  }
  return paths;
}

double skew_normal_mean_increment(double dt, double mu, double sigma) {
  return dt * mu / std::sqrt(1.0 + dt * (std::numbers::pi / 2.0) * mu * mu / (sigma * sigma));
}

std::vector<IncrementRow> mean_increment_check(std::span<const double> dt_grid,
                                               std::span<const double> mu_over_sigma_grid,
                                               std::size_t n_steps, std::uint64_t master_seed,
                                               unsigned threads) {
  std::vector<IncrementRow> rows;
  std::uint64_t cell = 0;
  for (double dt : dt_grid) {
    for (double ratio : mu_over_sigma_grid) {
      const auto model = SdeModel<double>::additive(
          "constant_drift", 1,
          [ratio](const Eigen::VectorXd& x) { return Eigen::VectorXd::Constant(x.size(), ratio); },
          1.0);
      const auto spec = SchemeSpec<double>::skew_symmetric(dt, SkewFunction<double>::gaussian());
      const auto mc = one_step_increment_mean(model, spec, Eigen::VectorXd::Zero(1), 0, n_steps,
                                              derive_seed(master_seed, cell++), threads);
      IncrementRow row;
      row.dt = dt;
      row.mu_over_sigma = ratio;
      row.closed_form = skew_normal_mean_increment(dt, ratio, 1.0);
      row.mc_mean = mc.mean;
      row.mc_se = mc.std_error;
      row.z = (mc.mean - row.closed_form) / mc.std_error;
      rows.push_back(row);
    }
  }
  return rows;
}

}  // namespace skewdrift
