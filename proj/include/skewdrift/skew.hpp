#pragma once

// Flip probabilities of the skew-symmetric scheme.
//
// With a symmetric CDF F whose density at zero is f(0), the probability of
// keeping (rather than reflecting) the i-th noise coordinate is
//
//   p_i(x, nu) = F( nu_i * sqrt(dt) * Psi_i(x) / (2 f(0)) ),  Psi = sigma^{-1} mu,
//
// which gives p_i(x, 0) = 1/2 and d/dnu_i p_i(x, 0) = Psi_i(x) sqrt(dt) / 2.

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>

#include "skewdrift/errors.hpp"
#include "skewdrift/model.hpp"
#include "skewdrift/types.hpp"

namespace skewdrift {

enum class SkewKind { Logistic, Gaussian };

template <typename Scalar>
class SkewFunction {
 public:
  static constexpr SkewFunction logistic() noexcept { return SkewFunction(SkewKind::Logistic); }
  static constexpr SkewFunction gaussian() noexcept { return SkewFunction(SkewKind::Gaussian); }

  static SkewFunction from_name(std::string_view name) {
    if (name == "logistic") return logistic();
    if (name == "gaussian") return gaussian();
    throw InvalidArgument("unknown skew function '" + std::string(name) + "'");
  }

  constexpr SkewKind kind() const noexcept { return kind_; }

  constexpr std::string_view name() const noexcept {
    return kind_ == SkewKind::Logistic ? "logistic" : "gaussian";
  }

  /// f(0): 1/4 for the logistic law, 1/sqrt(2 pi) for the normal law.
  constexpr Scalar density_at_zero() const noexcept {
    if (kind_ == SkewKind::Logistic) return Scalar(0.25);
    return static_cast<Scalar>(std::numbers::inv_sqrtpi_v<long double> /
                               std::numbers::sqrt2_v<long double>);
  }

  Scalar cdf(Scalar t) const {
    if (kind_ == SkewKind::Logistic) {
      // Branch on the sign so exp never overflows.
      if (t >= Scalar(0)) return Scalar(1) / (Scalar(1) + std::exp(-t));
      const Scalar e = std::exp(t);
      return e / (Scalar(1) + e);
    }
    return Scalar(0.5) * std::erfc(-t / std::numbers::sqrt2_v<Scalar>);
  }

  friend constexpr bool operator==(SkewFunction, SkewFunction) = default;

 private:
  explicit constexpr SkewFunction(SkewKind kind) noexcept : kind_(kind) {}
  SkewKind kind_;
};

/// Psi(x) = sigma(x)^{-1} mu(x). Throws SingularVolatility.
template <typename Scalar>
VectorX<Scalar> compute_psi(const SdeModel<Scalar>& model, const VectorX<Scalar>& x) {
  return model.volatility_at(x).solve(model.drift(x));
}

/// F( nu_i sqrt(dt) psi_i / (2 f(0)) ) from precomputed scalars.
template <typename Scalar>
Scalar flip_probability(const SkewFunction<Scalar>& skew, Scalar psi_i, Scalar nu_i,
                        Scalar dt) {
  if (nu_i == Scalar(0)) return Scalar(0.5);
  return skew.cdf(nu_i * std::sqrt(dt) * psi_i / (Scalar(2) * skew.density_at_zero()));
}

/// Flip probabilities bound to a model and step size.
template <typename Scalar>
class FlipProbability {
 public:
  using Vector = VectorX<Scalar>;

  FlipProbability(SdeModel<Scalar> model, SkewFunction<Scalar> skew, Scalar dt)
      : model_(std::move(model)), skew_(skew), dt_(dt) {
    if (!(dt_ > Scalar(0))) throw InvalidArgument("dt must be positive");
  }

  const SkewFunction<Scalar>& skew() const noexcept { return skew_; }
  const SdeModel<Scalar>& model() const noexcept { return model_; }
  Scalar dt() const noexcept { return dt_; }

  Vector psi(const Vector& x) const { return compute_psi(model_, x); }

  /// p_i(x, nu). Depends on nu only through nu_i.
  Scalar operator()(const Vector& x, const Vector& nu, Index i) const {
    if (i < 0 || i >= model_.dim()) throw InvalidArgument("coordinate out of range");
    return flip_probability(skew_, psi(x)[i], nu[i], dt_);
  }

 private:
  SdeModel<Scalar> model_;
  SkewFunction<Scalar> skew_;
  Scalar dt_;
};

template <typename Scalar>
Scalar flip_probability(const FlipProbability<Scalar>& fp, const VectorX<Scalar>& x,
                        const VectorX<Scalar>& nu, Index i) {
  return fp(x, nu, i);
}

/// Barker form for Langevin dynamics: 1 / (1 + exp(-sqrt(2 dt) nu_i d_i log pi)).
template <typename Scalar>
Scalar barker_flip_probability(Scalar grad_log_pi_i, Scalar nu_i, Scalar dt) {
  return SkewFunction<Scalar>::logistic().cdf(std::sqrt(Scalar(2) * dt) * nu_i *
                                              grad_log_pi_i);
}

/// Density at xi of the i-th coordinate of the one-step increment, for
/// diagonal or scalar volatility:
///   [p(x, z) + 1 - p(x, -z)] phi(z) / (sqrt(dt) sigma_ii),  z = xi / (sqrt(dt) sigma_ii).
template <typename Scalar>
Scalar increment_density(const FlipProbability<Scalar>& fp, const VectorX<Scalar>& x,
                         Scalar xi, Index i) {
  const auto& model = fp.model();
  if (model.structure() == VolatilityStructure::FullInvertible) {
    throw NotDiagonal("increment density needs diagonal volatility");
  }
  if (i < 0 || i >= model.dim()) throw InvalidArgument("coordinate out of range");
  const auto vol = model.volatility_at(x);
  const Scalar psi_i = vol.solve(model.drift(x))[i];
  const Scalar scale = std::sqrt(fp.dt()) * std::abs(vol.diagonal_entry(i));
  const Scalar z = xi / scale;
  const Scalar keep = flip_probability(fp.skew(), psi_i, z, fp.dt());
  const Scalar reflect = Scalar(1) - flip_probability(fp.skew(), psi_i, -z, fp.dt());
  const Scalar phi = std::exp(-Scalar(0.5) * z * z) * std::numbers::inv_sqrtpi_v<Scalar> /
                     std::numbers::sqrt2_v<Scalar>;
  return (keep + reflect) * phi / scale;
}

}  // namespace skewdrift
