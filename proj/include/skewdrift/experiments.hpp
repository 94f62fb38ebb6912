#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "skewdrift/monte_carlo.hpp"

namespace skewdrift {

enum class ExperimentName {
  MultVolWeakError,
  OuWeakOrder,
  QuarticMoments,
  PoissonMse,
  SoftSpheresGrid,
  MeanIncrementCheck,
};

const std::vector<std::string>& experiment_names();
std::string_view experiment_name(ExperimentName name);
ExperimentName experiment_from_name(std::string_view name);

struct ExperimentSpec {
  ExperimentName name = ExperimentName::QuarticMoments;
  /// Keys depend on the experiment; unknown keys are rejected. See
  /// experiment_defaults for the accepted keys and their default values.
  nlohmann::json overrides = nlohmann::json::object();
};

/// Default protocol of an experiment as a JSON object of override keys.
nlohmann::json experiment_defaults(ExperimentName name);

/// Header row plus formatted data rows.
struct CsvTable {
  std::string file_name;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::string to_string() const;
};

struct ExperimentResult {
  std::vector<CsvTable> tables;
  /// Experiment-specific diagnostics (per-cell errors, explosion counts, fits).
  nlohmann::json details = nlohmann::json::object();
  /// Effective parameters after applying overrides.
  nlohmann::json parameters = nlohmann::json::object();
};

/// Runs an experiment fully in memory. Throws InvalidArgument on bad
/// overrides and CellError when a grid cell fails.
ExperimentResult run_experiment(const ExperimentSpec& spec, std::uint64_t master_seed,
                                unsigned threads = 1);

/// Engine failure attributed to one grid cell.
class CellError : public Error {
 public:
  using Error::Error;
};

/// SHA-256 (hex) over the tables' file names and CSV bytes, in order.
std::string reproducibility_hash(const std::vector<CsvTable>& tables);

/// Writes every table into `dir`. Existing files are an error unless `force`.
std::vector<std::filesystem::path> write_tables(const std::vector<CsvTable>& tables,
                                                const std::filesystem::path& dir, bool force);

/// Mean one-step increment of the Gaussian-skew scheme for constant mu, sigma:
///   dt mu / sqrt(1 + dt (pi/2) mu^2 / sigma^2).
double skew_normal_mean_increment(double dt, double mu, double sigma);

struct IncrementRow {
  double dt = 0.0;
  double mu_over_sigma = 0.0;
  double closed_form = 0.0;
  double mc_mean = 0.0;
  double mc_se = 0.0;
  double z = 0.0;
};

/// Monte Carlo one-step mean of the Gaussian-skew scheme (sigma = 1,
/// mu = ratio) against the closed form, for every (dt, ratio) pair.
std::vector<IncrementRow> mean_increment_check(std::span<const double> dt_grid,
                                               std::span<const double> mu_over_sigma_grid,
                                               std::size_t n_steps, std::uint64_t master_seed,
                                               unsigned threads = 1);

/// Number formatting shared by every CSV ("%.12g"; nan/inf spelled out).
std::string format_number(double value);

}  // namespace skewdrift
