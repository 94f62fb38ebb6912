#include "skewdrift/monte_carlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <string>
#include <thread>

#include "skewdrift/errors.hpp"

namespace skewdrift {

unsigned default_thread_count() {
  if (const char* env = std::getenv("SKEWDRIFT_THREADS")) {
    char* end = nullptr;
    const long value = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && value > 0) return static_cast<unsigned>(value);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& body) {
  if (n == 0) return;
  const std::size_t workers = std::min<std::size_t>(std::max(1u, threads), n);

  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::size_t error_index = std::numeric_limits<std::size_t>::max();
  std::exception_ptr error;

  auto worker = [&] {
    for (std::size_t k = next.fetch_add(1); k < n; k = next.fetch_add(1)) {
      try {
        body(k);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (k < error_index) {
          error_index = k;
          error = std::current_exception();
        }
      }
    }
  };

  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  if (error) std::rethrow_exception(error);
}

void PairwiseSum::add(double value) {
  block_ += value;
  ++count_;
  if (++in_block_ < kBlock) return;
  double carry = block_;
  block_ = 0.0;
  in_block_ = 0;
  std::size_t level = 0;
  while (level < occupied_.size() && occupied_[level]) {
    carry = levels_[level] + carry;
    occupied_[level] = false;
    ++level;
  }
  if (level == occupied_.size()) {
    levels_.push_back(0.0);
    occupied_.push_back(false);
  }
  levels_[level] = carry;
  occupied_[level] = true;
}

double PairwiseSum::total() const {
  double sum = block_;
  for (std::size_t level = 0; level < levels_.size(); ++level) {
    if (occupied_[level]) sum = levels_[level] + sum;
  }
  return sum;
}

double pairwise_sum(std::span<const double> values) {
  PairwiseSum acc;
  for (double v : values) acc.add(v);
  return acc.total();
}

SampleSummary summarize(std::span<const double> values) {
  SampleSummary s;
  s.count = values.size();
  if (s.count == 0) {
    s.mean = std::numeric_limits<double>::quiet_NaN();
    s.std_error = std::numeric_limits<double>::quiet_NaN();
    return s;
  }
  s.mean = pairwise_sum(values) / static_cast<double>(s.count);
  if (s.count < 2) {
    s.std_error = std::numeric_limits<double>::quiet_NaN();
    return s;
  }
  PairwiseSum sq;
  for (double v : values) sq.add((v - s.mean) * (v - s.mean));
  const double variance = sq.total() / static_cast<double>(s.count - 1);
  s.std_error = std::sqrt(variance / static_cast<double>(s.count));
  return s;
}

std::size_t steps_for_horizon(double horizon, double dt) {
  if (!(horizon > 0.0) || !(dt > 0.0)) throw InvalidArgument("horizon and dt must be positive");
  const double ratio = horizon / dt;
  // 5 / 0.01 evaluates to 499.99999999999994; do not lose that step.
  const auto n = static_cast<std::size_t>(std::floor(ratio * (1.0 + 1e-12)));
  if (n < 1) throw InvalidArgument("horizon shorter than one step");
  return n;
}

EnsembleResult run_ensemble(const SdeModel<double>& model, const SchemeSpec<double>& spec,
                            const Eigen::VectorXd& x0, std::size_t n_steps,
                            const ScalarFunction& f, std::size_t n_trajectories,
                            std::uint64_t master_seed, unsigned threads) {
  spec.validate();
  if (x0.size() != model.dim()) throw InvalidArgument("initial state has wrong dimension");
  if (n_trajectories == 0) throw InvalidArgument("ensemble needs at least one trajectory");

  EnsembleResult result;
  result.n_trajectories = n_trajectories;
  result.n_steps = n_steps;
  result.terminal_values.assign(n_trajectories, std::numeric_limits<double>::quiet_NaN());
  result.exploded.assign(n_trajectories, 0);
  result.seeds.resize(n_trajectories);
  std::vector<std::size_t> fp_hits(n_trajectories, 0);

  parallel_for(n_trajectories, threads, [&](std::size_t k) {
    const std::uint64_t seed = derive_seed(master_seed, k);
    result.seeds[k] = seed;
    RandomStream rng(seed);
    const auto run = propagate(model, spec, x0, n_steps, rng);
    fp_hits[k] = run.fp_max_iters_hits;
    if (run.exploded) {
      result.exploded[k] = 1;
    } else {
      result.terminal_values[k] = f(run.state);
    }
  });

  std::vector<double> used;
  used.reserve(n_trajectories);
  for (std::size_t k = 0; k < n_trajectories; ++k) {
    result.fp_max_iters_hits += fp_hits[k];
    if (result.exploded[k]) {
      ++result.n_exploded;
    } else {
      used.push_back(result.terminal_values[k]);
    }
  }
  const auto summary = summarize(used);
  result.n_used = summary.count;
  result.mean = summary.mean;
  result.std_error = summary.std_error;
  return result;
}

WeakErrorResult weak_error(const SdeModel<double>& model, const SchemeSpec<double>& spec,
                           const Eigen::VectorXd& x0, double horizon, const ScalarFunction& f,
                           std::size_t n_samples, double exact, std::uint64_t master_seed,
                           unsigned threads) {
  const std::size_t n_steps = steps_for_horizon(horizon, spec.dt);
  const auto ensemble = run_ensemble(model, spec, x0, n_steps, f, n_samples, master_seed, threads);
  if (ensemble.n_used == 0) {
    throw AllExploded("all " + std::to_string(n_samples) + " trajectories exploded");
  }
  WeakErrorResult r;
  r.estimate = ensemble.mean;
  r.exact = exact;
  r.abs_error = std::abs(ensemble.mean - exact);
  r.std_error = ensemble.n_used > 1 ? ensemble.std_error : 0.0;
  r.n_steps = n_steps;
  r.n_samples = n_samples;
  r.n_used = ensemble.n_used;
  r.n_exploded = ensemble.n_exploded;
  return r;
}

double weak_order_fit(std::span<const std::pair<double, double>> dt_and_error) {
  if (dt_and_error.size() < 3) throw InvalidArgument("weak order fit needs at least 3 points");
  std::vector<double> lx, ly;
  for (const auto& [dt, err] : dt_and_error) {
    if (!(dt > 0.0)) throw InvalidArgument("step sizes must be positive");
    if (!(err > 0.0)) {
      throw NonPositiveError("error " + std::to_string(err) + " at dt " + std::to_string(dt) +
                             " is not positive; increase the sample count");
    }
    lx.push_back(std::log(dt));
    ly.push_back(std::log(err));
  }
  const double n = static_cast<double>(lx.size());
  const double mx = pairwise_sum(lx) / n;
  const double my = pairwise_sum(ly) / n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  if (!(sxx > 0.0)) throw InvalidArgument("weak order fit needs distinct step sizes");
  return sxy / sxx;
}

namespace {

constexpr std::size_t kBatches = 32;
constexpr std::uint64_t kInitStreamTag = 0x1417;

struct ChainOutcome {
  bool exploded = false;
  std::size_t explosion_step = 0;
  Eigen::VectorXd average;
  Eigen::VectorXd batch_std_error;
};

ChainOutcome run_chain(const SdeModel<double>& model, const SchemeSpec<double>& spec,
                       const Eigen::VectorXd& x0, std::size_t burn_in, std::size_t n_kept,
                       const VectorFunction& f, std::uint64_t seed) {
  RandomStream rng(seed);
  ChainOutcome out;
  std::vector<PairwiseSum> totals;
  std::vector<std::vector<PairwiseSum>> batches;
  const std::size_t n_batches = std::min(kBatches, n_kept);
  std::size_t batch = 0;

  const auto run = propagate(model, spec, x0, burn_in + n_kept, rng,
                             [&](std::size_t n, const Eigen::VectorXd& x) {
                               if (n <= burn_in || !x.allFinite()) return;
                               const Eigen::VectorXd value = f(x);
                               if (totals.empty()) {
                                 totals.resize(value.size());
                                 batches.assign(n_batches, std::vector<PairwiseSum>(value.size()));
                               }
                               const std::size_t kept_index = n - burn_in - 1;
                               while (batch + 1 < n_batches &&
                                      kept_index >= (batch + 1) * n_kept / n_batches) {
                                 ++batch;
                               }
                               for (Index j = 0; j < value.size(); ++j) {
                                 totals[j].add(value[j]);
                                 batches[batch][j].add(value[j]);
                               }
                             });
  if (run.exploded) {
    out.exploded = true;
    out.explosion_step = run.steps_taken;
    return out;
  }
  const Index width = static_cast<Index>(totals.size());
  out.average.resize(width);
  out.batch_std_error.resize(width);
  for (Index j = 0; j < width; ++j) {
    out.average[j] = totals[j].total() / static_cast<double>(n_kept);
    std::vector<double> means;
    for (const auto& b : batches) {
      if (b[j].count() > 0) means.push_back(b[j].total() / static_cast<double>(b[j].count()));
    }
    out.batch_std_error[j] = means.size() > 1 ? summarize(means).std_error : 0.0;
  }
  return out;
}

void check_chain_args(const SdeModel<double>& model, const SchemeSpec<double>& spec,
                      const Eigen::VectorXd& x0, std::size_t n_kept) {
  spec.validate();
  if (x0.size() != model.dim()) throw InvalidArgument("initial state has wrong dimension");
  if (n_kept < 1) throw InvalidArgument("n_kept must be at least 1");
}

}  // namespace

ErgodicAverageResult ergodic_average(const SdeModel<double>& model,
                                     const SchemeSpec<double>& spec, const Eigen::VectorXd& x0,
                                     std::size_t burn_in, std::size_t n_kept,
                                     const VectorFunction& f, std::uint64_t master_seed) {
  check_chain_args(model, spec, x0, n_kept);
  const auto chain = run_chain(model, spec, x0, burn_in, n_kept, f, derive_seed(master_seed, 0));
  if (chain.exploded) {
    throw ChainExploded("chain exploded at step " + std::to_string(chain.explosion_step),
                        chain.explosion_step);
  }
  ErgodicAverageResult r;
  r.burn_in = burn_in;
  r.n_kept = n_kept;
  r.average = chain.average;
  r.std_error = chain.batch_std_error;
  return r;
}

ErgodicAverageResult ergodic_average_replicated(const SdeModel<double>& model,
                                                const SchemeSpec<double>& spec,
                                                const Eigen::VectorXd& x0, std::size_t burn_in,
                                                std::size_t n_kept, const VectorFunction& f,
                                                std::size_t n_replicates,
                                                std::uint64_t master_seed, unsigned threads) {
  check_chain_args(model, spec, x0, n_kept);
  if (n_replicates < 1) throw InvalidArgument("need at least one replicate");
  std::vector<ChainOutcome> chains(n_replicates);
  parallel_for(n_replicates, threads, [&](std::size_t k) {
    chains[k] = run_chain(model, spec, x0, burn_in, n_kept, f, derive_seed(master_seed, k));
  });
  for (std::size_t k = 0; k < n_replicates; ++k) {
    if (chains[k].exploded) {
      throw ChainExploded("replicate " + std::to_string(k) + " exploded at step " +
                              std::to_string(chains[k].explosion_step),
                          chains[k].explosion_step);
    }
  }
  ErgodicAverageResult r;
  r.burn_in = burn_in;
  r.n_kept = n_kept;
  const Index width = chains.front().average.size();
  r.average.resize(width);
  r.std_error.resize(width);
  for (Index j = 0; j < width; ++j) {
    std::vector<double> values;
    for (const auto& c : chains) values.push_back(c.average[j]);
    const auto s = summarize(values);
    r.average[j] = s.mean;
    r.std_error[j] = n_replicates > 1 ? s.std_error : chains.front().batch_std_error[j];
  }
  for (auto& c : chains) r.replicate_averages.push_back(std::move(c.average));
  return r;
}

MseResult mean_squared_error(std::vector<std::optional<double>> estimates, double true_value,
                             ExplosionPenalty penalty) {
  MseResult r;
  std::vector<double> sq;
  for (const auto& e : estimates) {
    if (e) {
      sq.push_back((*e - true_value) * (*e - true_value));
    } else {
      ++r.n_excluded;
    }
  }
  if (sq.empty() || (penalty == ExplosionPenalty::CountAsInfinite && r.n_excluded > 0)) {
    r.mse = std::numeric_limits<double>::infinity();
  } else {
    r.mse = pairwise_sum(sq) / static_cast<double>(sq.size());
  }
  r.estimates = std::move(estimates);
  return r;
}

MseResult replicate_mse(const SdeModel<double>& model, const SchemeSpec<double>& spec,
                        const ErgodicProtocol& protocol, std::size_t n_replicates,
                        double true_value, std::uint64_t master_seed, ExplosionPenalty penalty,
                        unsigned threads) {
  spec.validate();
  if (n_replicates < 2) throw InvalidArgument("replicate_mse needs at least 2 replicates");
  if (!protocol.init || !protocol.f) throw InvalidArgument("protocol needs init and f");
  if (protocol.n_kept < 1) throw InvalidArgument("n_kept must be at least 1");

  std::vector<std::optional<double>> estimates(n_replicates);
  parallel_for(n_replicates, threads, [&](std::size_t k) {
    const std::uint64_t seed = derive_seed(master_seed, k);
    RandomStream init_rng(derive_seed(seed, kInitStreamTag));
    const Eigen::VectorXd x0 = protocol.init(init_rng);
    if (x0.size() != model.dim()) throw InvalidArgument("init produced wrong dimension");
    const auto chain =
        run_chain(model, spec, x0, protocol.burn_in, protocol.n_kept,
                  [&](const Eigen::VectorXd& x) {
                    return Eigen::VectorXd::Constant(1, protocol.f(x));
                  },
                  seed);
    if (!chain.exploded) estimates[k] = chain.average[0];
  });
  return mean_squared_error(std::move(estimates), true_value, penalty);
}

std::vector<ExplosionCell> explosion_grid(
    const std::function<SdeModel<double>(double)>& model_family,
    const std::function<SchemeSpec<double>(double)>& spec_family,
    std::span<const std::pair<double, double>> grid, std::size_t n_reps, std::size_t n_steps,
    const InitSampler& init, std::uint64_t master_seed, unsigned threads) {
  if (grid.empty()) throw InvalidArgument("explosion grid is empty");
  if (n_reps < 1 || n_steps < 1) throw InvalidArgument("n_reps and n_steps must be positive");

  std::vector<SdeModel<double>> models;
  std::vector<SchemeSpec<double>> specs;
  for (const auto& [param, dt] : grid) {
    models.push_back(model_family(param));
    specs.push_back(spec_family(dt));
    specs.back().validate();
  }

  std::vector<char> exploded(grid.size() * n_reps, 0);
  parallel_for(exploded.size(), threads, [&](std::size_t flat) {
    const std::size_t cell = flat / n_reps;
    const std::size_t rep = flat % n_reps;
    const std::uint64_t seed = derive_seed(derive_seed(master_seed, cell), rep);
    RandomStream init_rng(derive_seed(seed, kInitStreamTag));
    const Eigen::VectorXd x0 = init(init_rng);
    RandomStream rng(seed);
    exploded[flat] = propagate(models[cell], specs[cell], x0, n_steps, rng).exploded ? 1 : 0;
  });

  std::vector<ExplosionCell> cells;
  for (std::size_t c = 0; c < grid.size(); ++c) {
    ExplosionCell cell;
    cell.param = grid[c].first;
    cell.dt = grid[c].second;
    cell.n_reps = n_reps;
    cell.n_steps = n_steps;
    for (std::size_t k = 0; k < n_reps; ++k) cell.n_exploded += exploded[c * n_reps + k];
    cell.frequency = static_cast<double>(cell.n_exploded) / static_cast<double>(n_reps);
    cells.push_back(cell);
  }
  return cells;
}

std::vector<BiasRow> equilibrium_bias_curve(const SdeModel<double>& model,
                                            const SchemeSpec<double>& prototype,
                                            std::span<const double> dt_list,
                                            std::span<const int> orders,
                                            const Eigen::VectorXd& x0, std::size_t burn_in,
                                            std::size_t n_kept, std::size_t n_replicates,
                                            std::uint64_t master_seed, unsigned threads) {
  if (!model.reference() || model.reference()->stationary_moments.empty()) {
    throw InvalidArgument("model '" + model.name() + "' has no exact stationary moments");
  }
  const auto& exact = model.reference()->stationary_moments;
  for (int k : orders) {
    if (!exact.contains(k)) {
      throw InvalidArgument("no exact stationary moment of order " + std::to_string(k));
    }
  }
  std::vector<int> order_list(orders.begin(), orders.end());
  const VectorFunction moments = [order_list](const Eigen::VectorXd& x) {
    Eigen::VectorXd out(static_cast<Index>(order_list.size()));
    for (std::size_t j = 0; j < order_list.size(); ++j) {
      out[static_cast<Index>(j)] = std::pow(x[0], order_list[j]);
    }
    return out;
  };

  std::vector<BiasRow> rows;
  for (std::size_t c = 0; c < dt_list.size(); ++c) {
    SchemeSpec<double> spec = prototype;
    spec.dt = dt_list[c];
    const auto avg = ergodic_average_replicated(model, spec, x0, burn_in, n_kept, moments,
                                                n_replicates, derive_seed(master_seed, c),
                                                threads);
    for (std::size_t j = 0; j < order_list.size(); ++j) {
      BiasRow row;
      row.dt = spec.dt;
      row.order = order_list[j];
      row.estimate = avg.average[static_cast<Index>(j)];
      row.exact = exact.at(row.order);
      row.abs_bias = std::abs(row.estimate - row.exact);
      row.std_error = avg.std_error[static_cast<Index>(j)];
      rows.push_back(row);
    }
  }
  return rows;
}

std::vector<double> bias_ratios(std::span<const BiasRow> rows, int order) {
  std::vector<double> biases;
  for (const auto& r : rows) {
    if (r.order == order) biases.push_back(r.abs_bias);
  }
  std::vector<double> ratios;
  for (std::size_t k = 0; k + 1 < biases.size(); ++k) ratios.push_back(biases[k] / biases[k + 1]);
  return ratios;
}

SampleSummary one_step_increment_mean(const SdeModel<double>& model,
                                      const SchemeSpec<double>& spec, const Eigen::VectorXd& x,
                                      Index coordinate, std::size_t n_samples,
                                      std::uint64_t master_seed, unsigned threads) {
  spec.validate();
  if (coordinate < 0 || coordinate >= model.dim()) throw InvalidArgument("bad coordinate");
  if (n_samples < 2) throw InvalidArgument("need at least two samples");
  constexpr std::size_t kChunk = 100000;
  const std::size_t n_chunks = (n_samples + kChunk - 1) / kChunk;

  struct Chunk {
    std::size_t count = 0;
    double mean = 0.0;
    double m2 = 0.0;
  };
  std::vector<Chunk> chunks(n_chunks);
  parallel_for(n_chunks, threads, [&](std::size_t c) {
    const std::size_t count = std::min(kChunk, n_samples - c * kChunk);
    RandomStream rng(derive_seed(master_seed, c));
    std::vector<double> values(count);
    for (std::size_t k = 0; k < count; ++k) {
      values[k] = step(model, spec, x, rng).next_state[coordinate] - x[coordinate];
    }
    Chunk& out = chunks[c];
    out.count = count;
    out.mean = pairwise_sum(values) / static_cast<double>(count);
    PairwiseSum m2;
    for (double v : values) m2.add((v - out.mean) * (v - out.mean));
    out.m2 = m2.total();
  });

  // Chan et al. merge, in chunk order.
  Chunk total;
  for (const auto& c : chunks) {
    if (total.count == 0) {
      total = c;
      continue;
    }
    const double n_a = static_cast<double>(total.count);
    const double n_b = static_cast<double>(c.count);
    const double delta = c.mean - total.mean;
    const double n = n_a + n_b;
    total.mean += delta * n_b / n;
    total.m2 += c.m2 + delta * delta * n_a * n_b / n;
    total.count += c.count;
  }
  SampleSummary s;
  s.count = total.count;
  s.mean = total.mean;
  s.std_error = std::sqrt(total.m2 / static_cast<double>(total.count - 1) /
                          static_cast<double>(total.count));
  return s;
}

}  // namespace skewdrift
