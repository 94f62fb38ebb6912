#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "skewdrift/model.hpp"

namespace skewdrift {

using ParamMap = std::map<std::string, double>;

/// Names accepted by builtin_model, in listing order.
const std::vector<std::string>& builtin_model_names();

/// Builds a model from the zoo. Parameters (defaults in brackets):
///   ou                dY = theta (mean - Y) dt + s dW      theta [1], mean [0], s [sqrt 2]
///   mult_vol          dY = -Y dt + a Y dW                  a (required)
///   quartic_langevin  dY = -Y^3 dt + sqrt 2 dW             none
///   poisson_re        Langevin posterior of the Poisson random-effects model;
///                     data regenerated from a seed:        I [50], J [5], true_mean [5],
///                                                          sigma_m [10], data_seed [20240501]
///   soft_spheres      N particles in R^2, trap + soft repulsion:
///                                                          B (required), A [30], r [0.15],
///                                                          D [0.25], N [50], beta_x [0], beta_y [0]
/// Throws InvalidArgument on an unknown name, an unknown/missing parameter or
/// an out-of-range value.
SdeModel<double> builtin_model(std::string_view name, const ParamMap& params);

// Ornstein-Uhlenbeck.
SdeModel<double> ou_model(double theta, double mean, double s);

SdeModel<double> mult_vol_model(double a);

SdeModel<double> quartic_langevin_model();

/// E[X^order] under pi(x) proportional to exp(-x^4/4); zero for odd orders.
double quartic_stationary_moment(int order);

// Poisson random effects.
// State layout: x = (m, eta_1, ..., eta_I); data is I x J counts.

struct PoissonData {
  Eigen::MatrixXd counts;
  Eigen::VectorXd eta;
};

/// eta_i ~ N(true_mean, 1), y_ij ~ Poisson(exp(eta_i)). Deterministic in seed.
PoissonData poisson_re_simulate_data(double true_mean, int n_groups, int n_obs,
                                     std::uint64_t seed);

/// U(x) = J sum_i e^{eta_i} - sum_ij y_ij eta_i + 1/2 sum_i (eta_i - m)^2 + m^2 / (2 sigma_m^2).
double poisson_re_potential(const Eigen::VectorXd& state, const Eigen::MatrixXd& data,
                            double sigma_m);

/// -grad U.
Eigen::VectorXd poisson_re_gradient(const Eigen::VectorXd& state, const Eigen::MatrixXd& data,
                                    double sigma_m);

SdeModel<double> poisson_re_model(Eigen::MatrixXd data, double sigma_m);

// Soft spheres in an anharmonic trap.

struct SoftSphereParams {
  double B = 1.0;
  double A = 30.0;
  double r = 0.15;
  double D = 0.25;
  int N = 50;
  Eigen::Vector2d beta = Eigen::Vector2d::Zero();
};

/// Drift of particle i (state holds (x_1, y_1, ..., x_N, y_N)):
///   4B (beta - Y_i) |Y_i - beta|^2 + A/(N r^2) sum_j (Y_i - Y_j) exp(-|Y_i - Y_j|^2 / (2 r^2)).
/// The j = i term is included; it vanishes identically.
Eigen::VectorXd soft_spheres_drift(const Eigen::VectorXd& state, const SoftSphereParams& p);

SdeModel<double> soft_spheres_model(const SoftSphereParams& p);

}  // namespace skewdrift
