#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>

#include "skewdrift/errors.hpp"
#include "skewdrift/types.hpp"

namespace skewdrift {

enum class VolatilityStructure { FullInvertible, Diagonal, ScalarConstant };

/// Closed-form quantities used as oracles. Absent entries mean "unknown".
template <typename Scalar>
struct AnalyticReference {
  /// E[Y_t^order | Y_0 = x0] for scalar-state models.
  std::function<Scalar(Scalar x0, Scalar t, int order)> transient_moment;
  /// Moments of the stationary law, keyed by order.
  std::map<int, Scalar> stationary_moments;
};

/// sigma(x) evaluated once at a state. Knows how to apply sigma and solve
/// against it without forming a dense matrix in the diagonal cases.
template <typename Scalar>
class EvaluatedVolatility {
 public:
  using Vector = VectorX<Scalar>;
  using Matrix = MatrixX<Scalar>;

  static EvaluatedVolatility scalar(Scalar s) {
    EvaluatedVolatility v;
    v.structure_ = VolatilityStructure::ScalarConstant;
    v.scale_ = s;
    return v;
  }
  static EvaluatedVolatility diagonal(Vector diag) {
    EvaluatedVolatility v;
    v.structure_ = VolatilityStructure::Diagonal;
    v.diag_ = std::move(diag);
    return v;
  }
  static EvaluatedVolatility full(Matrix m) {
    EvaluatedVolatility v;
    v.structure_ = VolatilityStructure::FullInvertible;
    v.full_ = std::move(m);
    return v;
  }

  VolatilityStructure structure() const noexcept { return structure_; }

  /// sigma * v
  Vector apply(const Vector& v) const {
    switch (structure_) {
      case VolatilityStructure::ScalarConstant: return scale_ * v;
      case VolatilityStructure::Diagonal: return diag_.cwiseProduct(v);
      case VolatilityStructure::FullInvertible: break;
    }
    return full_ * v;
  }

  /// sigma^{-1} rhs. Throws SingularVolatility.
  Vector solve(const Vector& rhs) const {
    constexpr Scalar tiny = static_cast<Scalar>(1e-300) > Scalar(0)
                                ? static_cast<Scalar>(1e-300)
                                : std::numeric_limits<Scalar>::min();
    switch (structure_) {
      case VolatilityStructure::ScalarConstant:
        if (!(std::abs(scale_) >= tiny)) throw SingularVolatility("volatility scale is zero");
        return rhs / scale_;
      case VolatilityStructure::Diagonal:
        for (Index i = 0; i < diag_.size(); ++i) {
          if (!(std::abs(diag_[i]) >= tiny)) {
            throw SingularVolatility("diagonal volatility entry " + std::to_string(i) +
                                     " is zero");
          }
        }
        return rhs.cwiseQuotient(diag_);
      case VolatilityStructure::FullInvertible: break;
    }
    Eigen::FullPivLU<Matrix> lu(full_);
    if (!lu.isInvertible()) throw SingularVolatility("volatility matrix is singular");
    return lu.solve(rhs);
  }

  /// sigma_ii
  Scalar diagonal_entry(Index i) const {
    switch (structure_) {
      case VolatilityStructure::ScalarConstant: return scale_;
      case VolatilityStructure::Diagonal: return diag_[i];
      case VolatilityStructure::FullInvertible: break;
    }
    throw NotDiagonal("volatility is a full matrix");
  }

  Matrix dense(Index dim) const {
    switch (structure_) {
      case VolatilityStructure::ScalarConstant:
        return scale_ * Matrix::Identity(dim, dim);
      case VolatilityStructure::Diagonal: return diag_.asDiagonal();
      case VolatilityStructure::FullInvertible: break;
    }
    return full_;
  }

 private:
  EvaluatedVolatility() = default;

  VolatilityStructure structure_ = VolatilityStructure::ScalarConstant;
  Scalar scale_ = Scalar(1);
  Vector diag_;
  Matrix full_;
};

/// dY = mu(Y) dt + sigma(Y) dW on R^d. Immutable once built; share by const&.
template <typename Scalar>
class SdeModel {
 public:
  using Vector = VectorX<Scalar>;
  using Matrix = MatrixX<Scalar>;
  using DriftFn = std::function<Vector(const Vector&)>;
  using MatrixFn = std::function<Matrix(const Vector&)>;

  /// sigma(x) = scale * I.
  static SdeModel additive(std::string name, Index dim, DriftFn drift, Scalar scale) {
    SdeModel m(std::move(name), dim, std::move(drift), VolatilityStructure::ScalarConstant);
    m.scale_ = scale;
    return m;
  }

  /// sigma(x) = diag(diag(x)); off-diagonal entries are exactly zero.
  static SdeModel diagonal(std::string name, Index dim, DriftFn drift, DriftFn diag) {
    SdeModel m(std::move(name), dim, std::move(drift), VolatilityStructure::Diagonal);
    m.diag_ = std::move(diag);
    return m;
  }

  /// General invertible sigma(x).
  static SdeModel full(std::string name, Index dim, DriftFn drift, MatrixFn volatility) {
    SdeModel m(std::move(name), dim, std::move(drift), VolatilityStructure::FullInvertible);
    m.full_ = std::move(volatility);
    return m;
  }

  const std::string& name() const noexcept { return name_; }
  Index dim() const noexcept { return dim_; }
  VolatilityStructure structure() const noexcept { return structure_; }

  Vector drift(const Vector& x) const { return drift_(x); }

  EvaluatedVolatility<Scalar> volatility_at(const Vector& x) const {
    switch (structure_) {
      case VolatilityStructure::ScalarConstant:
        return EvaluatedVolatility<Scalar>::scalar(scale_);
      case VolatilityStructure::Diagonal:
        return EvaluatedVolatility<Scalar>::diagonal(diag_(x));
      case VolatilityStructure::FullInvertible: break;
    }
    return EvaluatedVolatility<Scalar>::full(full_(x));
  }

  Matrix volatility(const Vector& x) const { return volatility_at(x).dense(dim_); }

  const std::optional<AnalyticReference<Scalar>>& reference() const noexcept {
    return reference_;
  }

  SdeModel with_reference(AnalyticReference<Scalar> ref) const {
    SdeModel copy = *this;
    copy.reference_ = std::move(ref);
    return copy;
  }

 private:
  SdeModel(std::string name, Index dim, DriftFn drift, VolatilityStructure structure)
      : name_(std::move(name)), dim_(dim), structure_(structure), drift_(std::move(drift)) {
    if (dim_ < 1) throw InvalidArgument("model dimension must be positive");
    if (!drift_) throw InvalidArgument("model drift is empty");
  }

  std::string name_;
  Index dim_;
  VolatilityStructure structure_;
  DriftFn drift_;
  Scalar scale_ = Scalar(1);
  DriftFn diag_;
  MatrixFn full_;
  std::optional<AnalyticReference<Scalar>> reference_;
};

/// Overdamped Langevin dynamics dY = grad log pi(Y) dt + sqrt(2) dW.
template <typename Scalar>
struct LangevinModel {
  std::string name;
  Index dim = 1;
  std::function<VectorX<Scalar>(const VectorX<Scalar>&)> log_density_grad;

  SdeModel<Scalar> to_sde() const {
    return SdeModel<Scalar>::additive(name, dim, log_density_grad,
                                      static_cast<Scalar>(std::sqrt(2.0L)));
  }
};

}  // namespace skewdrift
