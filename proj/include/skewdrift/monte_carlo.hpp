#pragma once

// Ensemble simulation and the statistics built on it.
//
// Reproducibility contract: item k of any ensemble (trajectory, replicate or
// chunk) runs on RandomStream(derive_seed(master_seed, k)) and writes into
// slot k of a result buffer. Reductions walk the buffer in index order with
// pairwise summation, so results do not depend on the worker count.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "skewdrift/integrators.hpp"
#include "skewdrift/model.hpp"
#include "skewdrift/random.hpp"

namespace skewdrift {

using ScalarFunction = std::function<double(const Eigen::VectorXd&)>;
using VectorFunction = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
using InitSampler = std::function<Eigen::VectorXd(RandomStream&)>;

/// SKEWDRIFT_THREADS if set and positive, otherwise the hardware concurrency.
unsigned default_thread_count();

/// Runs body(0..n-1) on up to `threads` workers. If any call throws, the
/// exception of the lowest failing index is rethrown after all workers stop.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& body);

/// Streaming pairwise (cascade) summation; the result depends only on the
/// sequence of values added.
class PairwiseSum {
 public:
  void add(double value);
  double total() const;
  std::size_t count() const noexcept { return count_; }

 private:
  static constexpr std::size_t kBlock = 64;
  double block_ = 0.0;
  std::size_t in_block_ = 0;
  std::size_t count_ = 0;
  // levels_[k] holds the sum of 2^k blocks when occupied_[k] is set.
  std::vector<double> levels_;
  std::vector<bool> occupied_;
};

double pairwise_sum(std::span<const double> values);

struct SampleSummary {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t count = 0;
};

/// Mean and standard error (sample std / sqrt(count)) by pairwise summation.
SampleSummary summarize(std::span<const double> values);

/// N = floor(T / dt), tolerant to dt values that are not exactly representable.
std::size_t steps_for_horizon(double horizon, double dt);

struct EnsembleResult {
  std::size_t n_trajectories = 0;
  std::size_t n_steps = 0;
  /// f(X^N) per trajectory; NaN for exploded trajectories.
  std::vector<double> terminal_values;
  std::vector<char> exploded;
  std::vector<std::uint64_t> seeds;
  /// Over non-exploded trajectories.
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t n_used = 0;
  std::size_t n_exploded = 0;
  std::size_t fp_max_iters_hits = 0;
};

EnsembleResult run_ensemble(const SdeModel<double>& model, const SchemeSpec<double>& spec,
                            const Eigen::VectorXd& x0, std::size_t n_steps,
                            const ScalarFunction& f, std::size_t n_trajectories,
                            std::uint64_t master_seed, unsigned threads = 1);

struct WeakErrorResult {
  double estimate = 0.0;
  double exact = 0.0;
  double abs_error = 0.0;
  double std_error = 0.0;
  std::size_t n_steps = 0;
  std::size_t n_samples = 0;
  std::size_t n_used = 0;
  std::size_t n_exploded = 0;
};

/// |mean of f(X^N) - exact| with N = floor(T/dt). Throws AllExploded.
WeakErrorResult weak_error(const SdeModel<double>& model, const SchemeSpec<double>& spec,
                           const Eigen::VectorXd& x0, double horizon, const ScalarFunction& f,
                           std::size_t n_samples, double exact, std::uint64_t master_seed,
                           unsigned threads = 1);

/// Least-squares slope of log(error) against log(dt). Needs >= 3 points.
/// Throws NonPositiveError when an error is <= 0.
double weak_order_fit(std::span<const std::pair<double, double>> dt_and_error);

struct ErgodicAverageResult {
  std::size_t burn_in = 0;
  std::size_t n_kept = 0;
  Eigen::VectorXd average;
  /// Batch-means error for one chain, spread across chains when replicated.
  Eigen::VectorXd std_error;
  std::vector<Eigen::VectorXd> replicate_averages;
};

/// Time average of f over X^{burn_in+1} .. X^{burn_in+n_kept} of one chain.
/// Throws ChainExploded carrying the step index.
ErgodicAverageResult ergodic_average(const SdeModel<double>& model,
                                     const SchemeSpec<double>& spec, const Eigen::VectorXd& x0,
                                     std::size_t burn_in, std::size_t n_kept,
                                     const VectorFunction& f, std::uint64_t master_seed);

/// Independent chains k = 0..R-1; chain k is ergodic_average with
/// derive_seed(master_seed, k). Averages and errors are taken across chains.
ErgodicAverageResult ergodic_average_replicated(const SdeModel<double>& model,
                                                const SchemeSpec<double>& spec,
                                                const Eigen::VectorXd& x0, std::size_t burn_in,
                                                std::size_t n_kept, const VectorFunction& f,
                                                std::size_t n_replicates,
                                                std::uint64_t master_seed, unsigned threads = 1);

enum class ExplosionPenalty { ExcludeAndReport, CountAsInfinite };

struct ErgodicProtocol {
  /// Draws the starting state of each replicate.
  InitSampler init;
  std::size_t burn_in = 10000;
  std::size_t n_kept = 50000;
  ScalarFunction f;
};

struct MseResult {
  double mse = 0.0;
  /// Empty for replicates whose chain exploded.
  std::vector<std::optional<double>> estimates;
  std::size_t n_excluded = 0;
};

/// Mean of (estimate - truth)^2. Missing estimates are dropped and counted
/// (ExcludeAndReport) or make the result +inf (CountAsInfinite). With no
/// estimate left the result is +inf.
MseResult mean_squared_error(std::vector<std::optional<double>> estimates, double true_value,
                             ExplosionPenalty penalty = ExplosionPenalty::ExcludeAndReport);

MseResult replicate_mse(const SdeModel<double>& model, const SchemeSpec<double>& spec,
                        const ErgodicProtocol& protocol, std::size_t n_replicates,
                        double true_value, std::uint64_t master_seed,
                        ExplosionPenalty penalty = ExplosionPenalty::ExcludeAndReport,
                        unsigned threads = 1);

struct ExplosionCell {
  double param = 0.0;
  double dt = 0.0;
  std::size_t n_reps = 0;
  std::size_t n_steps = 0;
  std::size_t n_exploded = 0;
  double frequency = 0.0;
};

/// For each (param, dt) cell, the fraction of n_reps runs of n_steps that
/// produced a non-finite coordinate. Rep k of cell c starts from
/// init(stream) and runs on derive_seed(derive_seed(master_seed, c), k), so
/// two schemes given the same master seed share starts and noise.
std::vector<ExplosionCell> explosion_grid(
    const std::function<SdeModel<double>(double)>& model_family,
    const std::function<SchemeSpec<double>(double)>& spec_family,
    std::span<const std::pair<double, double>> grid, std::size_t n_reps, std::size_t n_steps,
    const InitSampler& init, std::uint64_t master_seed, unsigned threads = 1);

struct BiasRow {
  double dt = 0.0;
  int order = 0;
  double estimate = 0.0;
  double exact = 0.0;
  double abs_bias = 0.0;
  double std_error = 0.0;
};

/// Ergodic estimates of E[X_0^order] for every (dt, order), compared with the
/// model's stationary moments. `prototype` fixes everything but dt.
std::vector<BiasRow> equilibrium_bias_curve(const SdeModel<double>& model,
                                            const SchemeSpec<double>& prototype,
                                            std::span<const double> dt_list,
                                            std::span<const int> orders,
                                            const Eigen::VectorXd& x0, std::size_t burn_in,
                                            std::size_t n_kept, std::size_t n_replicates,
                                            std::uint64_t master_seed, unsigned threads = 1);

/// abs_bias(dt_k) / abs_bias(dt_{k+1}) for one moment order, in dt_list order.
std::vector<double> bias_ratios(std::span<const BiasRow> rows, int order);

/// Mean and standard error of the coordinate-i increment of one step from x,
/// over n_samples independent steps. Samples are split into fixed chunks,
/// chunk c using derive_seed(master_seed, c).
SampleSummary one_step_increment_mean(const SdeModel<double>& model,
                                      const SchemeSpec<double>& spec, const Eigen::VectorXd& x,
                                      Index coordinate, std::size_t n_samples,
                                      std::uint64_t master_seed, unsigned threads = 1);

}  // namespace skewdrift
