// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include "tdks/tdks.hpp"

#include <chrono>
#include <iomanip>
#include <iostream>
#include <sstream>

using namespace tdks;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [violated: " << what << "]";
    }
  }
};

void require_reports(Outcome& o, const std::vector<EstimateReport>& rs) {
  for (const auto& r : rs) {
    o.detail << ' ' << r.name << '=' << r.measured << "/" << r.bound;
    if (r.asserted) o.require(r.pass, r.name);
  }
}

RunConfig defaults() { return parse_config(std::string("{}")); }

RunConfig line_config(int modes, int steps) {
  RunConfig c = defaults();
  c.modes = {modes};
  c.domain.steps = steps;
  return c;
}

// 1. Forward norm conservation on the nonlinear defaults.
void norm_conservation(Outcome& o) {
  const RunConfig c = line_config(16, 2000);
  const RunSetup s = build_setup(c);
  const Trajectory tr = solve_forward(s.forward, s.psi0, c.integrator, false);
  const double drift = max_norm_drift(tr);
  o.detail << " drift=" << drift;
  o.require(drift <= 1e-6, "drift <= 1e-6");
}

double free_phase_error(int steps) {
  RunConfig c = line_config(16, steps);
  c.potential.hartree = c.potential.exchange = c.potential.correlation = false;
  c.potential.confinement.kind = "zero";
  c.control.kind = "zero";
  c.initial.kind = "modes";
  c.initial.modes = {{1}};
  const RunSetup s = build_setup(c);
  const Trajectory tr = solve_forward(s.forward, s.psi0, c.integrator, false);
  const Complex exact = std::exp(Complex(0.0, -s.basis->eigenvalues()[0] * c.domain.horizon));
  return (tr.states.back() - exact * s.psi0).norm();
}

// 2. Free-mode phase and second-order convergence.
void phase_oracle(Outcome& o) {
  const double e = free_phase_error(1000);
  const double e1 = free_phase_error(25), e2 = free_phase_error(50), e3 = free_phase_error(100);
  o.detail << " error=" << e << " ratios=" << e1 / e2 << "," << e2 / e3;
  o.require(e <= 1e-8, "phase error <= 1e-8");
  for (double r : {e1 / e2, e2 / e3}) o.require(r >= 3.5 && r <= 4.5, "Richardson ratio in [3.5, 4.5]");
}

// 3. Integrability of |x|^-p on the unit ball in 3-D.
void coulomb_lp(Outcome& o) {
  const EstimateReport closed = check_coulomb_lp(3, 2.0, 1.0, 128);
  const EstimateReport divergent = check_coulomb_lp(3, 3.0, 1.0, 128);
  require_reports(o, {closed, divergent});
  o.require(std::abs(closed.inputs.at("closed_form") - 4.0 * std::numbers::pi) < 1e-12, "closed form = 4 pi");
  o.require(divergent.notes == std::vector<std::string>{"divergent"}, "p = 3 flagged divergent");
}

// 4. Energy envelopes on the default forward run and an adjoint run with F != 0.
void envelopes(Outcome& o) {
  const RunConfig c = defaults();
  const RunSetup s = build_setup(c);
  auto lambda = std::make_shared<const Trajectory>(solve_forward(s.forward, s.psi0, c.integrator));
  const auto fwd = check_energy_estimates(s.forward, *lambda, 0.05, "forward");
  const auto [adj, tr] = run_adjoint(s.forward, lambda, build_objective(c, s), c.integrator);
  const auto back = check_energy_estimates(adj, tr, 0.05, "adjoint");
  for (const auto* rs : {&fwd, &back})
    for (const auto& r : *rs)
      if (r.name.ends_with("l2_envelope") || r.name.ends_with("h1_sup") || r.name.ends_with("x_norm")) {
        o.detail << ' ' << r.name << '=' << r.measured << "/" << r.bound;
        o.require(r.pass, r.name);
      }
  const double f = back.front().inputs.at("F_Y_sq");
  o.detail << " adjoint_F_Y_sq=" << f;
  o.require(f > 0.0, "adjoint source nonzero");
}

// 5. Perturbation growth against the Gronwall envelope.
void gronwall(Outcome& o) {
  const RunConfig c = defaults();
  const RunSetup s = build_setup(c);
  std::mt19937_64 rng = check_rng(c.seed, "uniqueness");
  const double cu = hartree_lipschitz_estimate(s.forward, rng, 100);
  const CoefficientState delta = random_state(*s.basis, rng, 1.0, 1.0);
  const auto rs = check_uniqueness_gronwall(s.forward, s.psi0, delta, {1e-2, 1e-3, 1e-4}, cu, c.integrator);
  require_reports(o, rs);
  for (const auto& r : rs)
    if (r.name.starts_with("gronwall_halving")) {
      const double ratio = r.inputs.at("ratio");
      o.require(ratio >= 0.4 && ratio <= 0.6, "halving ratio in [0.4, 0.6]");
    }
}

// 6. Galerkin limit under nested mode refinement.
void galerkin(Outcome& o) {
  const RunConfig c = defaults();
  const RunSetup s = build_setup(c);
  auto kernel = s.forward.kernel_ptr();
  auto make = [&](const std::vector<int>& m) { return build_setup(c, m, kernel).forward; };
  auto init = [&](const SpectralBasis& b) { return make_initial_state(c.initial, b, c.seed); };
  const auto [rs, levels] = check_galerkin_convergence(make, init, {{4}, {8}, {16}}, c.integrator);
  require_reports(o, rs);
  o.require(levels[2].increment < levels[1].increment, "strictly decreasing");
}

// 7. Lipschitz probes for the Hartree term and the Galerkin nonlinearity.
void lipschitz(Outcome& o) {
  const RunConfig c = defaults();
  const RunSetup s = build_setup(c);
  std::vector<EstimateReport> rs{check_hartree_lipschitz(s.forward, 100, c.seed)};
  for (auto& r : check_g_lipschitz(s.forward, 100, c.seed)) rs.push_back(r);
  require_reports(o, rs);
  o.require(std::isfinite(rs[0].inputs.at("C_n")), "finite Hartree constant");
}

// 8. Adjoint gradient against central finite differences.
void gradient(Outcome& o) {
  RunConfig c = line_config(8, 200);
  const RunSetup s = build_setup(c);
  const ObjectiveSpec objective = build_objective(c, s);
  IntegratorSettings tight = c.integrator;
  tight.tolerance = 1e-13;
  std::mt19937_64 rng = check_rng(c.seed, "acceptance_gradient");
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 3; ++trial) {
    std::vector<double> v(c.domain.steps + 1);
    for (auto& x : v) x = normal(rng);
    const SystemContext ctx = s.forward.with_control(ControlSignal(c.domain.horizon, v));
    const FdCheck fd = finite_difference_check(objective, ctx, s.psi0, spread_indices(5, c.domain.steps),
                                               {1e-3, 1e-4, 1e-5, 1e-6}, tight);
    o.detail << " rel" << trial << '=' << fd.relative_error << "@eps=" << fd.eps[fd.chosen];
    o.require(fd.relative_error <= 1e-4, "relative error <= 1e-4");
  }
}

// 9. Bounds on the sesquilinear form for random states.
void form_bounds(Outcome& o) {
  const RunConfig c = defaults();
  const RunSetup s = build_setup(c);
  auto lambda = std::make_shared<const Trajectory>(solve_forward(s.forward, s.psi0, c.integrator, false));
  require_reports(o, check_form_bounds(s.forward.with_equation(Equation::adjoint).with_reference(lambda), 100, c.seed));
}

// 10. Two verify runs with the same seed give identical reports.
void determinism(Outcome& o) {
  const RunConfig c = defaults();
  const RunResult a = run(c, "verify"), b = run(c, "verify");
  o.require(a.artifacts.at(0).name == "report.json", "report artifact");
  o.require(a.artifacts.at(0).content == b.artifacts.at(0).content, "byte-identical JSON");
  o.detail << " bytes=" << a.artifacts.at(0).content.size() << " verify_status=" << a.status;
}

}  // namespace

int main() {
  struct Criterion {
    const char* title;
    void (*body)(Outcome&);
    double budget_s;  // 0: no runtime bound
  };
  const Criterion criteria[] = {
      {"norm conservation (n=1, m=16, S=2000)", norm_conservation, 10.0},
      {"free-mode phase and Richardson order", phase_oracle, 5.0},
      {"Coulomb L^p integrability on balls", coulomb_lp, 30.0},
      {"energy envelopes forward and adjoint", envelopes, 0.0},
      {"Gronwall uniqueness envelope", gronwall, 60.0},
      {"Galerkin convergence under refinement", galerkin, 0.0},
      {"Lipschitz probes", lipschitz, 0.0},
      {"adjoint gradient vs finite differences", gradient, 120.0},
      {"sesquilinear form bounds", form_bounds, 0.0},
      {"verify determinism", determinism, 0.0},
  };
  int failures = 0;
  int index = 0;
  for (const auto& c : criteria) {
    ++index;
    Outcome o;
    const auto start = std::chrono::steady_clock::now();
    try {
      c.body(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << " [exception: " << e.what() << "]";
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.budget_s > 0.0) o.require(secs < c.budget_s, "runtime budget");
    failures += o.pass ? 0 : 1;
    std::cout << (o.pass ? "PASS" : "FAIL") << " [" << index << "] " << c.title << " (" << std::fixed
              << std::setprecision(2) << secs << " s)" << std::defaultfloat << std::setprecision(6) << o.detail.str()
              << std::endl;
  }
  std::cout << (failures == 0 ? "ALL PASS" : "FAILURES: " + std::to_string(failures)) << std::endl;
  return failures == 0 ? 0 : 1;
}
