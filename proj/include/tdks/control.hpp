#pragma once
/*
 * Optimal control of the forward system through the scalar amplitude u(t):
 *
 *     J(u) = int ||Psi - Psi_d||^2 dt + ||Psi(T) - Psi_T||^2 + nu ||u||_H1^2.
 *
 * The gradient is the exact derivative of the discrete objective. The forward
 * implicit midpoint stage Y_n = (d_n + d_{n+1}) / 2 is the linear interpolant
 * of the trajectory at the step midpoint, so the adjoint system stepped on the
 * same grid with F = 2 (Lambda - Psi_d) and Psi(T) = 2i (Lambda(T) - Psi_T)
 * yields
 *
 *     dJ/du(t_n + dt/2) = dt Re <M_Vu Y_n, (Psi_n + Psi_{n+1}) / 2>.
 *
 * Running costs use the same midpoint stages:
 *     J1 = sum_n dt ||Y_n - Psi_d(t_n + dt/2)||^2.
 */

#include "tdks/propagator.hpp"

#include <limits>
#include <ostream>

namespace tdks {

struct ObjectiveSpec {
  bool tracking = false;  // running term against `desired`
  bool terminal = false;  // final-time term against `target`
  std::shared_ptr<const Trajectory> desired;
  CoefficientState target;
  double nu = 1e-3;

  void validate(const SpectralBasis& basis) const {
    if (!(nu > 0.0) || !std::isfinite(nu)) throw std::invalid_argument("objective: nu must be positive");
    if (tracking) {
      if (!desired || desired->empty()) throw std::invalid_argument("objective: tracking needs a desired trajectory");
      if (desired->states.front().rows() != basis.mode_count() ||
          desired->states.front().cols() != basis.particles())
        throw std::invalid_argument("objective: desired trajectory does not match the basis");
    }
    if (terminal && (target.rows() != basis.mode_count() || target.cols() != basis.particles()))
      throw std::invalid_argument("objective: target state does not match the basis");
  }
};

struct ObjectiveValue {
  double tracking = 0.0;
  double terminal = 0.0;
  double regularization = 0.0;
  Trajectory forward;

  double total() const { return tracking + terminal + regularization; }
};

inline void require_matching_grid(const SystemContext& ctx) {
  if (ctx.control().steps() != ctx.basis().spec().steps)
    throw std::invalid_argument("control: control samples must match the time grid");
}

inline ObjectiveValue evaluate_objective(const ObjectiveSpec& spec, const SystemContext& ctx,
                                         const CoefficientState& psi0, const IntegratorSettings& s = {},
                                         bool with_diagnostics = false) {
  spec.validate(ctx.basis());
  ObjectiveValue v;
  v.forward = solve_forward(ctx, psi0, s, with_diagnostics);
  const Trajectory& tr = v.forward;
  if (spec.tracking) {
    for (std::size_t n = 0; n + 1 < tr.size(); ++n) {
      const double h = tr.times[n + 1] - tr.times[n];
      const CoefficientState y = 0.5 * (tr.states[n] + tr.states[n + 1]);
      v.tracking += h * (y - spec.desired->at(0.5 * (tr.times[n] + tr.times[n + 1]))).squaredNorm();
    }
  }
  if (spec.terminal) v.terminal = (tr.states.back() - spec.target).squaredNorm();
  v.regularization = spec.nu * ctx.control().h1_norm_sq();
  return v;
}

/// Terminal state and source of the adjoint system for a forward trajectory.
struct AdjointSources {
  CoefficientState terminal;
  SourceProvider source;
};

inline AdjointSources adjoint_sources(const ObjectiveSpec& spec, std::shared_ptr<const Trajectory> lambda) {
  const CoefficientState& end = lambda->states.back();
  AdjointSources a;
  a.terminal = spec.terminal ? CoefficientState(Complex(0.0, 2.0) * (end - spec.target))
                             : CoefficientState::Zero(end.rows(), end.cols());
  if (spec.tracking) {
    a.source = [lambda, desired = spec.desired](double t) {
      return CoefficientState(2.0 * (lambda->at(t) - desired->at(t)));
    };
  }
  return a;
}

/// Directional derivative of the terminal cost at Lambda(T): Re <-i terminal, delta>.
inline double terminal_derivative(const CoefficientState& terminal, const CoefficientState& delta) {
  return inner(Complex(0.0, -1.0) * terminal, delta).real();
}

struct Gradient {
  Eigen::VectorXd raw;    // partial derivatives with respect to the samples
  Eigen::VectorXd riesz;  // H1 Riesz representative
  ObjectiveValue value;
  Trajectory adjoint;

  double h1_norm() const { return std::sqrt(std::max(0.0, raw.dot(riesz))); }
};

inline Gradient reduced_gradient(const ObjectiveSpec& spec, const SystemContext& ctx, const CoefficientState& psi0,
                                 const IntegratorSettings& s = {}) {
  require_matching_grid(ctx);
  Gradient g;
  g.value = evaluate_objective(spec, ctx, psi0, s);
  auto lambda = std::make_shared<const Trajectory>(g.value.forward);
  const AdjointSources src = adjoint_sources(spec, lambda);
  SystemContext adj = ctx.with_equation(Equation::adjoint).with_reference(lambda);
  if (src.source) adj = adj.with_source(src.source);
  g.adjoint = solve_adjoint(adj, src.terminal, s, false);

  const ControlSignal& u = ctx.control();
  const int steps = u.steps();
  g.raw = Eigen::VectorXd::Zero(steps + 1);
  for (int n = 0; n < steps; ++n) {
    const double h = lambda->times[n + 1] - lambda->times[n];
    const CoefficientState y = 0.5 * (lambda->states[n] + lambda->states[n + 1]);
    const CoefficientState psi_bar = 0.5 * (g.adjoint.at(lambda->times[n]) + g.adjoint.at(lambda->times[n + 1]));
    const double gn = h * inner(ctx.m_vu() * y, psi_bar).real();
    g.raw[n] += 0.5 * gn;
    g.raw[n + 1] += 0.5 * gn;
  }
  g.raw += 2.0 * spec.nu * u.gram_apply(u.vector());
  g.riesz = u.gram_solve(g.raw);
  return g;
}

// ---------------------------------------------------------------------------
// Finite-difference check.

struct FdCheck {
  std::vector<int> indices;
  std::vector<double> eps;
  std::vector<std::vector<double>> fd;  // fd[k][i]: eps k, index i
  std::vector<double> adjoint;
  int chosen = 0;
  double relative_error = 0.0;
};

/// Central differences along unit sample directions; the eps on the widest plateau is used.
inline FdCheck finite_difference_check(const ObjectiveSpec& spec, const SystemContext& ctx,
                                       const CoefficientState& psi0, const std::vector<int>& indices,
                                       const std::vector<double>& eps = {1e-3, 1e-4, 1e-5, 1e-6},
                                       const IntegratorSettings& s = {}) {
  if (eps.size() < 2) throw std::invalid_argument("fd check: need at least two step sizes");
  const Gradient g = reduced_gradient(spec, ctx, psi0, s);
  const ControlSignal& u = ctx.control();
  FdCheck c;
  c.indices = indices;
  c.eps = eps;
  for (int i : indices) {
    if (i < 0 || i > u.steps()) throw std::out_of_range("fd check: sample index");
    c.adjoint.push_back(g.raw[i]);
  }
  for (double e : eps) {
    std::vector<double> row;
    for (int i : indices) {
      Eigen::VectorXd dir = Eigen::VectorXd::Zero(u.steps() + 1);
      dir[i] = 1.0;
      const double jp = evaluate_objective(spec, ctx.with_control(u.axpy(e, dir)), psi0, s).total();
      const double jm = evaluate_objective(spec, ctx.with_control(u.axpy(-e, dir)), psi0, s).total();
      row.push_back((jp - jm) / (2.0 * e));
    }
    c.fd.push_back(row);
  }
  auto vec = [](const std::vector<double>& v) { return Eigen::Map<const Eigen::VectorXd>(v.data(), v.size()); };
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k + 1 < eps.size(); ++k) {
    const double spread = (vec(c.fd[k]) - vec(c.fd[k + 1])).norm() / std::max(vec(c.fd[k]).norm(), 1e-300);
    if (spread < best) {
      best = spread;
      c.chosen = static_cast<int>(k + 1);
    }
  }
  const Eigen::VectorXd adj = vec(c.adjoint);
  c.relative_error = (vec(c.fd[c.chosen]) - adj).norm() / std::max(adj.norm(), 1e-300);
  return c;
}

// ---------------------------------------------------------------------------
// Steepest descent in H1 with Armijo backtracking.

struct OptimizeOptions {
  int iterations = 20;
  double initial_step = 1.0;
  double armijo = 1e-4;
  int max_halvings = 30;
  double gradient_tolerance = 1e-10;
};

struct IterationRecord {
  int iteration = 0;
  double objective = 0.0;
  double tracking = 0.0;
  double terminal = 0.0;
  double regularization = 0.0;
  double gradient_norm = 0.0;
  double step = 0.0;  // accepted step leading to the next iterate, 0 for the last
};

struct OptimizeResult {
  ControlSignal control;
  std::vector<IterationRecord> history;
  bool converged = false;  // gradient below tolerance
};

class LineSearchError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline OptimizeResult optimize(const ObjectiveSpec& spec, const SystemContext& ctx, const CoefficientState& psi0,
                               const OptimizeOptions& opt = {}, const IntegratorSettings& s = {}) {
  if (opt.iterations < 0 || !(opt.initial_step > 0.0) || !(opt.armijo > 0.0 && opt.armijo < 1.0))
    throw std::invalid_argument("optimize: invalid options");
  OptimizeResult res{ctx.control(), {}, false};
  double step = opt.initial_step;
  for (int it = 0;; ++it) {
    const SystemContext cur = ctx.with_control(res.control);
    const Gradient g = reduced_gradient(spec, cur, psi0, s);
    IterationRecord rec{it, g.value.total(), g.value.tracking, g.value.terminal, g.value.regularization,
                        g.h1_norm(), 0.0};
    if (rec.gradient_norm <= opt.gradient_tolerance) {
      res.history.push_back(rec);
      res.converged = true;
      break;
    }
    if (it == opt.iterations) {
      res.history.push_back(rec);
      break;
    }
    const double slope = -rec.gradient_norm * rec.gradient_norm;
    bool accepted = false;
    for (int h = 0; h <= opt.max_halvings; ++h, step *= 0.5) {
      const ControlSignal trial = res.control.axpy(-step, g.riesz);
      const double j = evaluate_objective(spec, ctx.with_control(trial), psi0, s).total();
      if (j <= rec.objective + opt.armijo * step * slope) {
        res.control = trial;
        accepted = true;
        break;
      }
    }
    if (!accepted)
      throw LineSearchError("optimize: line search failed after " + std::to_string(opt.max_halvings) +
                            " halvings at iteration " + std::to_string(it));
    rec.step = step;
    res.history.push_back(rec);
    step *= 2.0;
  }
  return res;
}

inline void write_history_csv(std::ostream& out, const std::vector<IterationRecord>& history) {
  out.precision(std::numeric_limits<double>::max_digits10);
  out << "iteration,objective,tracking,terminal,regularization,gradient_h1,step\n";
  for (const auto& r : history)
    out << r.iteration << ',' << r.objective << ',' << r.tracking << ',' << r.terminal << ','
        << r.regularization << ',' << r.gradient_norm << ',' << r.step << '\n';
}

inline void write_control_csv(std::ostream& out, const ControlSignal& u) {
  out.precision(std::numeric_limits<double>::max_digits10);
  out << "t,u\n";
  for (int i = 0; i <= u.steps(); ++i) out << i * u.dt() << ',' << u.samples()[i] << '\n';
}

}  // namespace tdks
