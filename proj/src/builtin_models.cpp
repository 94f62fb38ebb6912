#include "skewdrift/builtin_models.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "skewdrift/errors.hpp"
#include "skewdrift/random.hpp"

namespace skewdrift {

namespace {

class ParamReader {
 public:
  ParamReader(std::string_view model, const ParamMap& params,
              std::initializer_list<const char*> allowed)
      : model_(model), params_(params) {
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, value] : params_) {
      if (!ok.contains(key)) {
        throw InvalidArgument("model '" + model_ + "' has no parameter '" + key + "'");
      }
      if (!std::isfinite(value)) {
        throw InvalidArgument("parameter '" + key + "' of model '" + model_ + "' is not finite");
      }
    }
  }

  double required(const std::string& key) const {
    const auto it = params_.find(key);
    if (it == params_.end()) {
      throw InvalidArgument("model '" + model_ + "' requires parameter '" + key + "'");
    }
    return it->second;
  }

  double get(const std::string& key, double fallback) const {
    const auto it = params_.find(key);
    return it == params_.end() ? fallback : it->second;
  }

  double positive(const std::string& key, double value) const {
    if (!(value > 0.0)) {
      throw InvalidArgument("parameter '" + key + "' of model '" + model_ + "' must be positive");
    }
    return value;
  }

  int positive_int(const std::string& key, double value) const {
    if (!(value >= 1.0) || value != std::floor(value) || value > 1e6) {
      throw InvalidArgument("parameter '" + key + "' of model '" + model_ +
                            "' must be a positive integer");
    }
    return static_cast<int>(value);
  }

 private:
  std::string model_;
  const ParamMap& params_;
};

double ou_transient_moment(double theta, double mean, double s, double x0, double t, int order) {
  const double m_t = mean + (x0 - mean) * std::exp(-theta * t);
  const double v_t = s * s / (2.0 * theta) * (1.0 - std::exp(-2.0 * theta * t));
  switch (order) {
    case 0: return 1.0;
    case 1: return m_t;
    case 2: return m_t * m_t + v_t;
    case 3: return m_t * m_t * m_t + 3.0 * m_t * v_t;
    case 4: return std::pow(m_t, 4) + 6.0 * m_t * m_t * v_t + 3.0 * v_t * v_t;
    default: break;
  }
  throw InvalidArgument("OU transient moment only available up to order 4");
}

}  // namespace

const std::vector<std::string>& builtin_model_names() {
  static const std::vector<std::string> names{"ou", "mult_vol", "quartic_langevin", "poisson_re",
                                              "soft_spheres"};
  return names;
}

SdeModel<double> ou_model(double theta, double mean, double s) {
  if (!(theta > 0.0) || !(s > 0.0)) throw InvalidArgument("ou needs theta > 0 and s > 0");
  auto model = SdeModel<double>::additive(
      "ou", 1, [theta, mean](const Eigen::VectorXd& x) -> Eigen::VectorXd {
        return theta * (Eigen::VectorXd::Constant(x.size(), mean) - x);
      },
      s);
  AnalyticReference<double> ref;
  ref.transient_moment = [theta, mean, s](double x0, double t, int order) {
    return ou_transient_moment(theta, mean, s, x0, t, order);
  };
  const double v = s * s / (2.0 * theta);
  ref.stationary_moments = {{1, mean},
                            {2, mean * mean + v},
                            {4, std::pow(mean, 4) + 6.0 * mean * mean * v + 3.0 * v * v}};
  return model.with_reference(std::move(ref));
}

SdeModel<double> mult_vol_model(double a) {
  if (!(a > 0.0)) throw InvalidArgument("mult_vol needs a > 0");
  auto model = SdeModel<double>::diagonal(
      "mult_vol", 1, [](const Eigen::VectorXd& x) -> Eigen::VectorXd { return -x; },
      [a](const Eigen::VectorXd& x) -> Eigen::VectorXd { return a * x; });
  AnalyticReference<double> ref;
  // Geometric Brownian motion: E[Y_t^k] = x0^k exp(k(-1 + (k-1) a^2 / 2) t).
  ref.transient_moment = [a](double x0, double t, int order) {
    const double k = order;
    return std::pow(x0, k) * std::exp(k * (-1.0 + 0.5 * (k - 1.0) * a * a) * t);
  };
  return model.with_reference(std::move(ref));
}

double quartic_stationary_moment(int order) {
  if (order < 0) throw InvalidArgument("moment order must be non-negative");
  if (order % 2 == 1) return 0.0;
  // E|X|^k = 4^{k/4} Gamma((k+1)/4) / Gamma(1/4).
  const double k = order;
  return std::pow(4.0, k / 4.0) * std::exp(std::lgamma((k + 1.0) / 4.0) - std::lgamma(0.25));
}

SdeModel<double> quartic_langevin_model() {
  LangevinModel<double> langevin{
      "quartic_langevin", 1,
      [](const Eigen::VectorXd& x) -> Eigen::VectorXd { return -x.array().cube().matrix(); }};
  AnalyticReference<double> ref;
  for (int k : {1, 2, 3, 4, 6, 8}) ref.stationary_moments[k] = quartic_stationary_moment(k);
  return langevin.to_sde().with_reference(std::move(ref));
}

PoissonData poisson_re_simulate_data(double true_mean, int n_groups, int n_obs,
                                     std::uint64_t seed) {
  if (n_groups < 1 || n_obs < 1) throw InvalidArgument("poisson data needs I, J >= 1");
  RandomStream rng(seed);
  PoissonData data;
  data.eta.resize(n_groups);
  data.counts.resize(n_groups, n_obs);
  for (int i = 0; i < n_groups; ++i) {
    data.eta[i] = true_mean + rng.normal();
    std::poisson_distribution<long long> poisson(std::exp(data.eta[i]));
    for (int j = 0; j < n_obs; ++j) {
      data.counts(i, j) = static_cast<double>(poisson(rng.noise_engine()));
    }
  }
  return data;
}

namespace {

void check_poisson_shapes(const Eigen::VectorXd& state, const Eigen::MatrixXd& data,
                          double sigma_m) {
  if (state.size() != data.rows() + 1) {
    throw InvalidArgument("poisson_re state has length " + std::to_string(state.size()) +
                          ", expected I + 1 = " + std::to_string(data.rows() + 1));
  }
  if (!(sigma_m > 0.0)) throw InvalidArgument("sigma_m must be positive");
}

}  // namespace

double poisson_re_potential(const Eigen::VectorXd& state, const Eigen::MatrixXd& data,
                            double sigma_m) {
  check_poisson_shapes(state, data, sigma_m);
  const double m = state[0];
  const auto eta = state.tail(data.rows()).array();
  const double n_obs = static_cast<double>(data.cols());
  return n_obs * eta.exp().sum() - (data.rowwise().sum().array() * eta).sum() +
         0.5 * (eta - m).square().sum() + m * m / (2.0 * sigma_m * sigma_m);
}

Eigen::VectorXd poisson_re_gradient(const Eigen::VectorXd& state, const Eigen::MatrixXd& data,
                                    double sigma_m) {
  check_poisson_shapes(state, data, sigma_m);
  const Index n_groups = data.rows();
  const double m = state[0];
  const auto eta = state.tail(n_groups).array();
  const double n_obs = static_cast<double>(data.cols());
  Eigen::VectorXd grad(state.size());
  grad[0] = (eta - m).sum() - m / (sigma_m * sigma_m);
  grad.tail(n_groups) =
      -(n_obs * eta.exp() - data.rowwise().sum().array() + (eta - m)).matrix();
  return grad;
}

SdeModel<double> poisson_re_model(Eigen::MatrixXd data, double sigma_m) {
  if (!(sigma_m > 0.0)) throw InvalidArgument("sigma_m must be positive");
  if ((data.array() < 0.0).any()) throw InvalidArgument("poisson counts must be non-negative");
  const Index dim = data.rows() + 1;
  LangevinModel<double> langevin{
      "poisson_re", dim, [data = std::move(data), sigma_m](const Eigen::VectorXd& x) {
        return poisson_re_gradient(x, data, sigma_m);
      }};
  return langevin.to_sde();
}

Eigen::VectorXd soft_spheres_drift(const Eigen::VectorXd& state, const SoftSphereParams& p) {
  if (state.size() != 2 * p.N) {
    throw InvalidArgument("soft_spheres state must have length 2N");
  }
  const Eigen::Map<const Eigen::Matrix2Xd> pos(state.data(), 2, p.N);
  Eigen::VectorXd out(state.size());
  Eigen::Map<Eigen::Matrix2Xd> drift(out.data(), 2, p.N);
  const double coupling = p.A / (p.N * p.r * p.r);
  const double inv_two_r2 = 1.0 / (2.0 * p.r * p.r);
  for (int i = 0; i < p.N; ++i) {
    const Eigen::Vector2d offset = pos.col(i) - p.beta;
    Eigen::Vector2d value = -4.0 * p.B * offset * offset.squaredNorm();
    Eigen::Vector2d repulsion = Eigen::Vector2d::Zero();
    for (int j = 0; j < p.N; ++j) {
      const Eigen::Vector2d diff = pos.col(i) - pos.col(j);
      repulsion += diff * std::exp(-diff.squaredNorm() * inv_two_r2);
    }
    drift.col(i) = value + coupling * repulsion;
  }
  return out;
}

SdeModel<double> soft_spheres_model(const SoftSphereParams& p) {
  if (!(p.B > 0.0) || !(p.A > 0.0) || !(p.r > 0.0) || !(p.D > 0.0) || p.N < 1) {
    throw InvalidArgument("soft_spheres needs B, A, r, D > 0 and N >= 1");
  }
  return SdeModel<double>::additive(
      "soft_spheres", 2 * p.N,
      [p](const Eigen::VectorXd& x) { return soft_spheres_drift(x, p); }, std::sqrt(2.0 * p.D));
}

SdeModel<double> builtin_model(std::string_view name, const ParamMap& params) {
  if (name == "ou") {
    ParamReader r(name, params, {"theta", "mean", "s"});
    return ou_model(r.positive("theta", r.get("theta", 1.0)), r.get("mean", 0.0),
                    r.positive("s", r.get("s", std::numbers::sqrt2)));
  }
  if (name == "mult_vol") {
    ParamReader r(name, params, {"a"});
    return mult_vol_model(r.positive("a", r.required("a")));
  }
  if (name == "quartic_langevin") {
    ParamReader r(name, params, {});
    return quartic_langevin_model();
  }
  if (name == "poisson_re") {
    ParamReader r(name, params, {"I", "J", "true_mean", "sigma_m", "data_seed"});
    const int n_groups = r.positive_int("I", r.get("I", 50));
    const int n_obs = r.positive_int("J", r.get("J", 5));
    const double seed = r.get("data_seed", 20240501);
    if (!(seed >= 0.0) || seed != std::floor(seed)) {
      throw InvalidArgument("parameter 'data_seed' must be a non-negative integer");
    }
    auto data = poisson_re_simulate_data(r.get("true_mean", 5.0), n_groups, n_obs,
                                         static_cast<std::uint64_t>(seed));
    return poisson_re_model(std::move(data.counts),
                            r.positive("sigma_m", r.get("sigma_m", 10.0)));
  }
  if (name == "soft_spheres") {
    ParamReader r(name, params, {"B", "A", "r", "D", "N", "beta_x", "beta_y"});
    SoftSphereParams p;
    p.B = r.positive("B", r.required("B"));
    p.A = r.positive("A", r.get("A", p.A));
    p.r = r.positive("r", r.get("r", p.r));
    p.D = r.positive("D", r.get("D", p.D));
    p.N = r.positive_int("N", r.get("N", p.N));
    p.beta = Eigen::Vector2d(r.get("beta_x", 0.0), r.get("beta_y", 0.0));
    return soft_spheres_model(p);
  }
  throw InvalidArgument("unknown model '" + std::string(name) + "'");
}

}  // namespace skewdrift
