#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "skewdrift/builtin_models.hpp"

using namespace skewdrift;

namespace {

Eigen::VectorXd central_gradient(const std::function<double(const Eigen::VectorXd&)>& u,
                                 const Eigen::VectorXd& x, double h) {
  Eigen::VectorXd g(x.size());
  for (Index i = 0; i < x.size(); ++i) {
    Eigen::VectorXd a = x, b = x;
    a[i] += h;
    b[i] -= h;
    g[i] = (u(a) - u(b)) / (2 * h);
  }
  return g;
}

double soft_sphere_potential(const Eigen::VectorXd& state, const SoftSphereParams& p) {
  double u = 0;
  for (int i = 0; i < p.N; ++i) {
    const Eigen::Vector2d yi = state.segment<2>(2 * i);
    u += p.B * std::pow((yi - p.beta).squaredNorm(), 2);
    for (int j = 0; j < p.N; ++j) {
      const Eigen::Vector2d d = yi - state.segment<2>(2 * j);
      u += p.A / (2.0 * p.N) * std::exp(-d.squaredNorm() / (2 * p.r * p.r));
    }
  }
  return u;
}

}  // namespace

TEST(BuiltinModels, ListsFiveModels) {
  EXPECT_EQ(builtin_model_names().size(), 5u);
  for (const auto& name : builtin_model_names()) {
    ParamMap params;
    if (name == "mult_vol") params["a"] = 0.5;
    if (name == "soft_spheres") params["B"] = 1.0;
    if (name == "poisson_re") params = {{"I", 4}, {"J", 2}};
    const auto model = builtin_model(name, params);
    EXPECT_EQ(model.name(), name);
    EXPECT_TRUE(model.drift(Eigen::VectorXd::Constant(model.dim(), 0.3)).allFinite());
  }
}

TEST(BuiltinModels, ParameterValidation) {
  EXPECT_THROW(builtin_model("mult_vol", {}), InvalidArgument);
  EXPECT_THROW(builtin_model("mult_vol", {{"a", -1}}), InvalidArgument);
  EXPECT_THROW(builtin_model("ou", {{"thetta", 1}}), InvalidArgument);
  EXPECT_THROW(builtin_model("ou", {{"s", std::nan("")}}), InvalidArgument);
  EXPECT_THROW(builtin_model("soft_spheres", {{"B", 1}, {"N", 2.5}}), InvalidArgument);
  EXPECT_THROW(builtin_model("lorenz", {}), InvalidArgument);
}

TEST(OuModel, TransientMomentsSolveMomentOdes) {
  // d/dt E[Y^2] = 2 theta (mean E[Y] - E[Y^2]) + s^2.
  const double theta = 1.5, mean = 0.4, s = 0.8;
  const auto ref = *ou_model(theta, mean, s).reference();
  const double x0 = 2.0, t = 0.7;
  const double d2 = oracles::derivative([&](double tt) { return ref.transient_moment(x0, tt, 2); }, t, 1e-3);
  EXPECT_NEAR(d2, 2 * theta * (mean * ref.transient_moment(x0, t, 1) - ref.transient_moment(x0, t, 2)) + s * s, 1e-9);
  EXPECT_DOUBLE_EQ(ou_model(1.0, 0.0, std::sqrt(2.0)).reference()->transient_moment(1.0, 5.0, 2), 1.0);
  EXPECT_THROW(ref.transient_moment(x0, t, 5), InvalidArgument);
}

TEST(MultVolModel, FrozenExactMean) {
  const auto model = mult_vol_model(0.5);
  EXPECT_NEAR(model.reference()->transient_moment(10.0, 5.0, 1), 0.0673794699908547, 1e-15);
  EXPECT_DOUBLE_EQ(model.volatility(Eigen::VectorXd::Constant(1, 4.0))(0, 0), 2.0);
}

TEST(QuarticModel, StationaryMomentsMatchQuadrature) {
  EXPECT_NEAR(quartic_stationary_moment(2), 0.675978240067285, 1e-14);
  EXPECT_NEAR(quartic_stationary_moment(4), 1.0, 1e-14);
  EXPECT_NEAR(quartic_stationary_moment(6), 2.02793472020186, 1e-13);
  for (int k : {2, 4, 6, 8}) {
    EXPECT_NEAR(quartic_stationary_moment(k), oracles::quartic_moment_by_quadrature(k), 1e-10);
  }
  EXPECT_EQ(quartic_stationary_moment(3), 0.0);
}

TEST(PoissonModel, GradientMatchesFiniteDifferences) {
  const auto data = poisson_re_simulate_data(5.0, 50, 5, 20240501);
  std::mt19937_64 gen(3);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (int c = 0; c < 100; ++c) {
    Eigen::VectorXd x(51);
    x[0] = 5.0 + 2.0 * noise(gen);
    for (Index i = 1; i < 51; ++i) x[i] = data.eta[i - 1] + 0.3 * noise(gen);
    const auto g = poisson_re_gradient(x, data.counts, 10.0);
    const auto fd = central_gradient(
        [&](const Eigen::VectorXd& y) { return -poisson_re_potential(y, data.counts, 10.0); }, x, 1e-5);
    EXPECT_LE((g - fd).norm() / g.norm(), 1e-6) << "case " << c;
  }
}

TEST(PoissonModel, DataIsDeterministicAndPlausible) {
  const auto a = poisson_re_simulate_data(5.0, 50, 5, 1);
  const auto b = poisson_re_simulate_data(5.0, 50, 5, 1);
  EXPECT_EQ(a.counts, b.counts);
  EXPECT_NEAR(a.eta.mean(), 5.0, 0.5);
  for (Index i = 0; i < 50; ++i) {
    EXPECT_NEAR(a.counts.row(i).mean(), std::exp(a.eta[i]), 6 * std::sqrt(std::exp(a.eta[i]) / 5));
  }
  EXPECT_NE(a.counts, poisson_re_simulate_data(5.0, 50, 5, 2).counts);
}

TEST(PoissonModel, ShapeMismatchThrows) {
  const auto data = poisson_re_simulate_data(5.0, 3, 2, 1);
  EXPECT_THROW(poisson_re_gradient(Eigen::VectorXd::Zero(3), data.counts, 10.0), InvalidArgument);
}

TEST(SoftSpheres, DriftIsMinusGradientOfPotential) {
  SoftSphereParams p;
  p.B = 0.7;
  p.N = 6;
  p.beta = Eigen::Vector2d(0.1, -0.2);
  std::mt19937_64 gen(9);
  std::uniform_real_distribution<double> u(-1, 1);
  Eigen::VectorXd x(12);
  for (auto& v : x) v = u(gen);
  const auto fd = central_gradient([&](const Eigen::VectorXd& y) { return -soft_sphere_potential(y, p); }, x, 1e-6);
  EXPECT_LE((soft_spheres_drift(x, p) - fd).norm() / fd.norm(), 1e-7);
}

TEST(SoftSpheres, AdditiveVolatility) {
  SoftSphereParams p;
  p.D = 0.25;
  p.N = 3;
  const auto model = soft_spheres_model(p);
  EXPECT_EQ(model.dim(), 6);
  EXPECT_DOUBLE_EQ(model.volatility_at(Eigen::VectorXd::Zero(6)).diagonal_entry(0), std::sqrt(0.5));
  EXPECT_THROW(soft_spheres_drift(Eigen::VectorXd::Zero(5), p), InvalidArgument);
}
