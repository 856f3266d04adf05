#pragma once
/*
 * Time integration of the Galerkin system with the implicit midpoint rule.
 *
 * One step from d_n over dt (sigma = +1 forward in time, -1 backward):
 *
 *     (I + i sigma dt/2 L(tm)) y = d_n - i sigma dt/2 N(y),    d_{n+1} = 2 y - d_n,
 *
 * where L is the complex-linear part of the system operator at the midpoint
 * time tm and N collects G, D and the source. The implicit stage is solved by
 * fixed-point iteration against one LU factorization per step.
 *
 * For the forward equation with F = 0 the scheme conserves the L2 norm up to
 * the fixed-point tolerance. The backward sweep of the adjoint is the exact
 * discrete adjoint of the forward sweep when both share the time grid.
 */

#include "tdks/galerkin_system.hpp"

#include <string>

namespace tdks {

struct IntegratorSettings {
  double tolerance = 1e-10;
  int max_iterations = 50;
  double blowup = 1e6;
  int adjoint_refinement = 1;  // adjoint steps per forward step

  bool operator==(const IntegratorSettings&) const = default;
};

class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double last_good_time, int last_good_step)
      : std::runtime_error(what + " (last good step " + std::to_string(last_good_step) +
                           ", t = " + std::to_string(last_good_time) + ")"),
        last_good_time_(last_good_time),
        last_good_step_(last_good_step) {}
  double last_good_time() const { return last_good_time_; }
  int last_good_step() const { return last_good_step_; }

 private:
  double last_good_time_;
  int last_good_step_;
};

struct StepResult {
  CoefficientState next;
  int iterations = 0;
};

inline StepResult step_detailed(const SystemContext& ctx, double t, double dt,
                                const CoefficientState& d, const IntegratorSettings& s = {},
                                int sigma = +1) {
  if (!(dt > 0.0)) throw std::invalid_argument("step: dt must be positive");
  const double tm = t + sigma * 0.5 * dt;
  const auto lam = frozen_for(ctx, tm);
  const Frozen* lp = lam ? &*lam : nullptr;
  const Complex h(0.0, sigma * 0.5 * dt);  // i sigma dt/2
  const Eigen::MatrixXcd a =
      Eigen::MatrixXcd::Identity(d.rows(), d.rows()) + h * linear_operator(ctx, tm, lp);
  const Eigen::PartialPivLU<Eigen::MatrixXcd> lu(a);
  const CoefficientState f = project_F(ctx, tm);

  CoefficientState y = d;
  for (int it = 1; it <= s.max_iterations; ++it) {
    const CoefficientState next = lu.solve(d - h * nonlinear_part(ctx, lp, y, f));
    const double change = (next - y).norm();
    y = next;
    if (!y.allFinite()) break;
    if (change <= s.tolerance * std::max(1.0, y.norm())) return {2.0 * y - d, it};
  }
  throw std::runtime_error("step: implicit stage did not converge in " +
                           std::to_string(s.max_iterations) + " iterations");
}

inline CoefficientState step(const SystemContext& ctx, double t, double dt, const CoefficientState& d,
                             const IntegratorSettings& s = {}, int sigma = +1) {
  return step_detailed(ctx, t, dt, d, s, sigma).next;
}

inline StepDiagnostics diagnose(const SystemContext& ctx, double t, const CoefficientState& d) {
  const Norms n = norms(ctx.basis(), d);
  const Complex b = bilinear_B(ctx, t, d, d);
  return {n.l2, n.h1, b.real(), b.imag()};
}

namespace detail {

inline Trajectory integrate(const SystemContext& ctx, const CoefficientState& start, int steps,
                            int sigma, const IntegratorSettings& s, bool with_diagnostics) {
  const double horizon = ctx.basis().spec().horizon;
  const double dt = horizon / steps;
  require_finite(start, "solve");
  if (start.rows() != ctx.basis().mode_count() || start.cols() != ctx.basis().particles())
    throw std::invalid_argument("solve: initial state does not match the basis");

  Trajectory tr;
  tr.times.reserve(steps + 1);
  tr.states.reserve(steps + 1);
  const double limit = s.blowup * std::max(start.norm(), 1.0);
  CoefficientState d = start;
  tr.states.push_back(d);
  tr.times.push_back(sigma > 0 ? 0.0 : horizon);
  for (int n = 0; n < steps; ++n) {
    const double t = sigma > 0 ? n * dt : horizon - n * dt;
    try {
      d = step(ctx, t, dt, d, s, sigma);
    } catch (const std::exception& e) {
      throw SolverError(e.what(), t, n);
    }
    if (!d.allFinite() || d.norm() > limit)
      throw SolverError("solve: state blew up", t, n);
    tr.states.push_back(d);
    tr.times.push_back(sigma > 0 ? (n + 1) * dt : horizon - (n + 1) * dt);
  }
  if (sigma < 0) {
    std::reverse(tr.states.begin(), tr.states.end());
    std::reverse(tr.times.begin(), tr.times.end());
    tr.times.front() = 0.0;
  }
  if (with_diagnostics) {
    tr.diagnostics.reserve(tr.size());
    for (std::size_t i = 0; i < tr.size(); ++i) tr.diagnostics.push_back(diagnose(ctx, tr.times[i], tr.states[i]));
  }
  return tr;
}

}  // namespace detail

/// Forward solve on [0,T] with the steps of the domain spec.
inline Trajectory solve_forward(const SystemContext& ctx, const CoefficientState& psi0,
                                const IntegratorSettings& s = {}, bool with_diagnostics = true) {
  if (ctx.equation() != Equation::forward) throw std::invalid_argument("solve_forward: context is not forward");
  return detail::integrate(ctx, psi0, ctx.basis().spec().steps, +1, s, with_diagnostics);
}

/// Backward solve of the adjoint equation from Psi(T); the result is indexed in physical time.
inline Trajectory solve_adjoint(const SystemContext& ctx, const CoefficientState& terminal,
                                const IntegratorSettings& s = {}, bool with_diagnostics = true) {
  if (ctx.equation() != Equation::adjoint) throw std::invalid_argument("solve_adjoint: context is not adjoint");
  const Trajectory* ref = ctx.reference();
  if (!ref || ref->empty()) throw std::invalid_argument("solve_adjoint: missing forward trajectory");
  if (s.adjoint_refinement < 1) throw std::invalid_argument("solve_adjoint: refinement must be >= 1");
  const int steps = ctx.basis().spec().steps;
  const double horizon = ctx.basis().spec().horizon;
  const double tol = 1e-9 * horizon;
  if (std::abs(ref->start()) > tol || std::abs(ref->end() - horizon) > tol)
    throw std::invalid_argument("solve_adjoint: forward trajectory does not cover [0,T]");
  if (ref->size() != static_cast<std::size_t>(steps) + 1)
    throw std::invalid_argument("solve_adjoint: adjoint grid must refine the forward grid");
  return detail::integrate(ctx, terminal, steps * s.adjoint_refinement, -1, s, with_diagnostics);
}

/// Largest relative deviation of ||Psi(t)||^2 from ||Psi(0)||^2.
inline double max_norm_drift(const Trajectory& tr) {
  const double n0 = tr.states.front().squaredNorm();
  double drift = 0.0;
  for (const auto& d : tr.states) drift = std::max(drift, std::abs(d.squaredNorm() - n0));
  return n0 > 0.0 ? drift / n0 : drift;
}

}  // namespace tdks
