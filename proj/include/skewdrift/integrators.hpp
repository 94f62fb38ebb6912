#pragma once

// One-step integrators sharing a common interface, and path simulation.
//
// Random budget per step (d = state dimension):
//   skew-symmetric    d normals (noise stream), then d uniforms (flip stream)
//   Euler-Maruyama    d normals
//   tamed Euler       d normals
//   semi-implicit     d normals
// Every scheme draws its normals from the same noise stream, so paths started
// from one seed share the Gaussian sequence.

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "skewdrift/errors.hpp"
#include "skewdrift/model.hpp"
#include "skewdrift/random.hpp"
#include "skewdrift/skew.hpp"
#include "skewdrift/types.hpp"

namespace skewdrift {

enum class SchemeKind { SkewSymmetric, EulerMaruyama, TamedEuler, SemiImplicitEuler };

inline std::string_view scheme_name(SchemeKind kind) noexcept {
  switch (kind) {
    case SchemeKind::SkewSymmetric: return "skew";
    case SchemeKind::EulerMaruyama: return "em";
    case SchemeKind::TamedEuler: return "tamed";
    case SchemeKind::SemiImplicitEuler: return "semi_implicit";
  }
  return "unknown";
}

inline SchemeKind scheme_from_name(std::string_view name) {
  if (name == "skew") return SchemeKind::SkewSymmetric;
  if (name == "em") return SchemeKind::EulerMaruyama;
  if (name == "tamed") return SchemeKind::TamedEuler;
  if (name == "semi_implicit") return SchemeKind::SemiImplicitEuler;
  throw InvalidArgument("unknown scheme '" + std::string(name) + "'");
}

template <typename Scalar>
struct SchemeSpec {
  SchemeKind kind = SchemeKind::EulerMaruyama;
  Scalar dt = Scalar(0.01);
  std::optional<SkewFunction<Scalar>> skew;
  Scalar taming_alpha = Scalar(1);
  Scalar theta = Scalar(0.2);
  Scalar fp_tolerance = Scalar(1e-3);
  int fp_max_iters = 500;

  static SchemeSpec skew_symmetric(Scalar dt,
                                   SkewFunction<Scalar> f = SkewFunction<Scalar>::logistic()) {
    SchemeSpec s;
    s.kind = SchemeKind::SkewSymmetric;
    s.dt = dt;
    s.skew = f;
    return s;
  }
  static SchemeSpec euler_maruyama(Scalar dt) {
    SchemeSpec s;
    s.kind = SchemeKind::EulerMaruyama;
    s.dt = dt;
    return s;
  }
  static SchemeSpec tamed(Scalar dt, Scalar alpha = Scalar(1)) {
    SchemeSpec s;
    s.kind = SchemeKind::TamedEuler;
    s.dt = dt;
    s.taming_alpha = alpha;
    return s;
  }
  static SchemeSpec semi_implicit(Scalar dt, Scalar theta = Scalar(0.2)) {
    SchemeSpec s;
    s.kind = SchemeKind::SemiImplicitEuler;
    s.dt = dt;
    s.theta = theta;
    return s;
  }

  void validate() const {
    if (!(dt > Scalar(0)) || !std::isfinite(dt)) throw InvalidArgument("dt must be positive");
    switch (kind) {
      case SchemeKind::SkewSymmetric:
        if (!skew) throw InvalidArgument("skew-symmetric scheme needs a skew function");
        if (!(dt <= Scalar(1))) throw InvalidArgument("skew-symmetric scheme needs dt in (0,1]");
        break;
      case SchemeKind::TamedEuler:
        if (!(taming_alpha > Scalar(0) && taming_alpha <= Scalar(1))) {
          throw InvalidArgument("taming alpha must lie in (0,1]");
        }
        break;
      case SchemeKind::SemiImplicitEuler:
        if (!(theta >= Scalar(0) && theta <= Scalar(1))) {
          throw InvalidArgument("theta must lie in [0,1]");
        }
        if (!(fp_tolerance > Scalar(0))) throw InvalidArgument("fp tolerance must be positive");
        if (fp_max_iters < 1) throw InvalidArgument("fp_max_iters must be at least 1");
        break;
      case SchemeKind::EulerMaruyama: break;
    }
  }
};

template <typename Scalar>
struct StepOutput {
  VectorX<Scalar> next_state;
  /// Sign vector b in {+1,-1}^d; skew-symmetric only.
  std::optional<Eigen::VectorXi> flips;
  /// Fixed-point correction iterations; semi-implicit only.
  std::optional<int> fp_iterations;
  bool fp_max_iters_reached = false;
};

namespace detail {

template <typename Scalar>
void require_kind(const SchemeSpec<Scalar>& spec, SchemeKind kind) {
  if (spec.kind != kind) {
    throw InvalidArgument("scheme spec is '" + std::string(scheme_name(spec.kind)) +
                          "', expected '" + std::string(scheme_name(kind)) + "'");
  }
}

template <typename Scalar>
VectorX<Scalar> draw_normals(RandomStream& rng, Index d) {
  return rng.normal_vector<Scalar>(d);
}

}  // namespace detail

/// X' = X + sqrt(dt) sigma(X) (b * nu), with b_i = +1 with probability p_i(X, nu).
template <typename Scalar>
StepOutput<Scalar> step_skew(const SdeModel<Scalar>& model, const SchemeSpec<Scalar>& spec,
                             const VectorX<Scalar>& x, RandomStream& rng) {
  detail::require_kind(spec, SchemeKind::SkewSymmetric);
  const Index d = model.dim();
  const auto vol = model.volatility_at(x);
  const VectorX<Scalar> psi = vol.solve(model.drift(x));
  VectorX<Scalar> nu = detail::draw_normals<Scalar>(rng, d);
  Eigen::VectorXi flips(d);
  for (Index i = 0; i < d; ++i) {
    const Scalar p = flip_probability(*spec.skew, psi[i], nu[i], spec.dt);
    const bool keep = static_cast<Scalar>(rng.flip_uniform()) < p;
    flips[i] = keep ? 1 : -1;
    if (!keep) nu[i] = -nu[i];
  }
  StepOutput<Scalar> out;
  out.next_state = x + std::sqrt(spec.dt) * vol.apply(nu);
  out.flips = std::move(flips);
  return out;
}

/// X' = X + mu(X) dt + sqrt(dt) sigma(X) nu.
template <typename Scalar>
StepOutput<Scalar> step_em(const SdeModel<Scalar>& model, const SchemeSpec<Scalar>& spec,
                           const VectorX<Scalar>& x, RandomStream& rng) {
  detail::require_kind(spec, SchemeKind::EulerMaruyama);
  const VectorX<Scalar> nu = detail::draw_normals<Scalar>(rng, model.dim());
  StepOutput<Scalar> out;
  out.next_state = x + spec.dt * model.drift(x) + std::sqrt(spec.dt) * model.volatility_at(x).apply(nu);
  return out;
}

/// X' = X + dt mu(X) / (1 + dt^alpha |mu(X)|) + sqrt(dt) sigma(X) nu, Euclidean norm.
template <typename Scalar>
StepOutput<Scalar> step_tamed(const SdeModel<Scalar>& model, const SchemeSpec<Scalar>& spec,
                              const VectorX<Scalar>& x, RandomStream& rng) {
  detail::require_kind(spec, SchemeKind::TamedEuler);
  const VectorX<Scalar> nu = detail::draw_normals<Scalar>(rng, model.dim());
  const VectorX<Scalar> mu = model.drift(x);
  const Scalar damping = Scalar(1) + std::pow(spec.dt, spec.taming_alpha) * mu.norm();
  StepOutput<Scalar> out;
  out.next_state = x + (spec.dt / damping) * mu + std::sqrt(spec.dt) * model.volatility_at(x).apply(nu);
  return out;
}

/// Solves X' = X + dt((1-theta) mu(X) + theta mu(X')) + sqrt(dt) sigma(X) nu by
/// plain fixed-point iteration started from the explicit Euler step.
template <typename Scalar>
StepOutput<Scalar> step_semi_implicit(const SdeModel<Scalar>& model,
                                      const SchemeSpec<Scalar>& spec, const VectorX<Scalar>& x,
                                      RandomStream& rng) {
  detail::require_kind(spec, SchemeKind::SemiImplicitEuler);
  const VectorX<Scalar> nu = detail::draw_normals<Scalar>(rng, model.dim());
  const VectorX<Scalar> mu = model.drift(x);
  // Everything except the implicit drift term.
  const VectorX<Scalar> base =
      x + spec.dt * (Scalar(1) - spec.theta) * mu + std::sqrt(spec.dt) * model.volatility_at(x).apply(nu);

  StepOutput<Scalar> out;
  VectorX<Scalar> z = base + spec.dt * spec.theta * mu;
  int iterations = 0;
  if (spec.theta > Scalar(0)) {
    while (iterations < spec.fp_max_iters) {
      VectorX<Scalar> next = base + spec.dt * spec.theta * model.drift(z);
      ++iterations;
      if (!next.allFinite()) {
        throw FixedPointDivergence("semi-implicit iterate became non-finite after " +
                                   std::to_string(iterations) + " iterations");
      }
      const Scalar change = (next - z).norm();
      z = std::move(next);
      if (change <= spec.fp_tolerance) break;
      if (iterations == spec.fp_max_iters) out.fp_max_iters_reached = true;
    }
  }
  out.next_state = std::move(z);
  out.fp_iterations = iterations;
  return out;
}

template <typename Scalar>
StepOutput<Scalar> step(const SdeModel<Scalar>& model, const SchemeSpec<Scalar>& spec,
                        const VectorX<Scalar>& x, RandomStream& rng) {
  switch (spec.kind) {
    case SchemeKind::SkewSymmetric: return step_skew(model, spec, x, rng);
    case SchemeKind::EulerMaruyama: return step_em(model, spec, x, rng);
    case SchemeKind::TamedEuler: return step_tamed(model, spec, x, rng);
    case SchemeKind::SemiImplicitEuler: return step_semi_implicit(model, spec, x, rng);
  }
  throw InvalidArgument("unknown scheme kind");
}

/// Outcome of advancing a state without recording the path.
template <typename Scalar>
struct Propagation {
  VectorX<Scalar> state;
  std::size_t steps_taken = 0;
  bool exploded = false;
  std::size_t fp_max_iters_hits = 0;
};

/// Advances `x` by up to n_steps. Stops at the first non-finite state (or a
/// diverged fixed-point iterate), which marks the run as exploded. `visit` is
/// called with (step index, state) after every completed step.
template <typename Scalar, typename Visitor>
Propagation<Scalar> propagate(const SdeModel<Scalar>& model, const SchemeSpec<Scalar>& spec,
                              VectorX<Scalar> x, std::size_t n_steps, RandomStream& rng,
                              Visitor&& visit) {
  Propagation<Scalar> result;
  for (std::size_t n = 1; n <= n_steps; ++n) {
    StepOutput<Scalar> out;
    try {
      out = step(model, spec, x, rng);
    } catch (const FixedPointDivergence&) {
      x.setConstant(std::numeric_limits<Scalar>::quiet_NaN());
      result.steps_taken = n;
      result.exploded = true;
      visit(n, x);
      break;
    }
    if (out.fp_max_iters_reached) ++result.fp_max_iters_hits;
    x = std::move(out.next_state);
    result.steps_taken = n;
    visit(n, x);
    if (!x.allFinite()) {
      result.exploded = true;
      break;
    }
  }
  result.state = std::move(x);
  return result;
}

template <typename Scalar>
Propagation<Scalar> propagate(const SdeModel<Scalar>& model, const SchemeSpec<Scalar>& spec,
                              VectorX<Scalar> x, std::size_t n_steps, RandomStream& rng) {
  return propagate(model, spec, std::move(x), n_steps, rng, [](std::size_t, const auto&) {});
}

template <typename Scalar>
struct Trajectory {
  /// Column n holds X^n; n runs from 0 to the last simulated step.
  MatrixX<Scalar> states;
  bool exploded = false;
  /// Step at which the first non-finite state appeared.
  std::optional<std::size_t> explosion_step;
  std::size_t fp_max_iters_hits = 0;

  std::size_t n_states() const noexcept { return static_cast<std::size_t>(states.cols()); }
};

/// X^0 = x0, X^1, ..., X^N, halting early at the first explosion.
template <typename Scalar>
Trajectory<Scalar> simulate_path(const SdeModel<Scalar>& model, const SchemeSpec<Scalar>& spec,
                                 const VectorX<Scalar>& x0, std::size_t n_steps,
                                 std::uint64_t seed) {
  if (n_steps < 1) throw InvalidArgument("n_steps must be at least 1");
  if (x0.size() != model.dim()) throw InvalidArgument("initial state has wrong dimension");
  spec.validate();
  RandomStream rng(seed);
  Trajectory<Scalar> path;
  path.states.resize(model.dim(), static_cast<Index>(n_steps + 1));
  path.states.col(0) = x0;
  const auto run = propagate(model, spec, x0, n_steps, rng, [&](std::size_t n, const auto& x) {
    path.states.col(static_cast<Index>(n)) = x;
  });
  path.states.conservativeResize(Eigen::NoChange, static_cast<Index>(run.steps_taken + 1));
  path.exploded = run.exploded;
  if (run.exploded) path.explosion_step = run.steps_taken;
  path.fp_max_iters_hits = run.fp_max_iters_hits;
  return path;
}

}  // namespace skewdrift
