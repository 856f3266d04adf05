#pragma once
/*
 * Run orchestration for the command-line tool. Every subcommand computes its
 * artifacts in memory; nothing is written until the whole run has succeeded.
 * Output is a pure function of the configuration and the seed.
 */

#include "tdks/config.hpp"
#include "tdks/estimates.hpp"

#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <sstream>

namespace tdks {

struct Artifact {
  std::string name;
  std::string content;
};

struct RunResult {
  int status = 0;  // 0 ok, 1 an asserted check failed
  std::vector<Artifact> artifacts;
  std::string summary;
};

// ---------------------------------------------------------------------------
// Builders.

inline std::vector<double> read_numbers(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<double> values;
  std::string token;
  while (in >> token) {
    std::replace(token.begin(), token.end(), ',', ' ');
    std::istringstream ss(token);
    double v;
    while (ss >> v) values.push_back(v);
  }
  return values;
}

inline ControlSignal make_control(const ControlPreset& c, double horizon, int steps) {
  const double two_pi = 2.0 * std::numbers::pi;
  if (c.kind == "zero") return ControlSignal::zero(horizon, steps);
  if (c.kind == "constant") return ControlSignal::sampled(horizon, steps, [&](double) { return c.amplitude; });
  if (c.kind == "sine")
    return ControlSignal::sampled(horizon, steps,
                                  [&](double t) { return c.amplitude * std::sin(two_pi * c.frequency * t + c.phase); });
  if (c.kind == "pulse")
    return ControlSignal::sampled(horizon, steps,
                                  [&](double t) { return c.amplitude * std::sin(std::numbers::pi * t / horizon); });
  if (c.kind == "file") {
    std::vector<double> v = read_numbers(c.file);
    if (static_cast<int>(v.size()) != steps + 1)
      throw std::runtime_error("control file: " + c.file + " has " + std::to_string(v.size()) + " samples, expected " +
                               std::to_string(steps + 1));
    return ControlSignal(horizon, std::move(v));
  }
  throw std::invalid_argument("control preset: unknown kind '" + c.kind + "'");
}

/// Initial state per preset; each particle column is scaled to the requested norm.
inline CoefficientState make_initial_state(const StatePreset& s, const SpectralBasis& b, std::uint64_t seed) {
  const int n = b.particles();
  const auto& spec = b.spec();
  CoefficientState d = zero_state(b);
  if (s.kind == "gaussian") {
    WaveField f(b.node_count(), n);
    for (int j = 0; j < n; ++j) {
      std::array<double, 3> c{0, 0, 0};
      for (int i = 0; i < b.dimension(); ++i) c[i] = 0.5 * spec.lengths[i];
      c[0] = s.centers.empty() ? spec.lengths[0] * (j + 1) / (n + 1) : s.centers[j];
      for (int q = 0; q < b.node_count(); ++q) {
        const auto x = b.node(q);
        double r2 = 0.0;
        for (int i = 0; i < b.dimension(); ++i) r2 += (x[i] - c[i]) * (x[i] - c[i]);
        f(q, j) = std::exp(-r2 / (2.0 * s.width * s.width)) * std::polar(1.0, s.momentum * x[0]);
      }
    }
    d = project(b, f);
  } else if (s.kind == "modes") {
    for (int j = 0; j < n; ++j) {
      std::array<int, 3> k{0, 0, 0};
      for (std::size_t i = 0; i < s.modes[j].size(); ++i) k[i] = s.modes[j][i];
      d(b.find_mode(k), j) = 1.0;
    }
  } else if (s.kind == "random") {
    std::mt19937_64 rng = check_rng(seed, "initial_state");
    d = random_state(b, rng, 1.0, s.decay);
  } else if (s.kind == "file") {
    const std::vector<double> v = read_numbers(s.file);
    if (static_cast<int>(v.size()) != 2 * n * b.mode_count())
      throw std::runtime_error("state file: " + s.file + " needs " + std::to_string(b.mode_count()) + " rows of " +
                               std::to_string(2 * n) + " values (re, im per particle)");
    for (int k = 0; k < b.mode_count(); ++k)
      for (int j = 0; j < n; ++j) d(k, j) = Complex(v[2 * (k * n + j)], v[2 * (k * n + j) + 1]);
    return d;
  } else {
    throw std::invalid_argument("initial state: unknown kind '" + s.kind + "'");
  }
  for (int j = 0; j < n; ++j) {
    const double norm = d.col(j).norm();
    if (norm > 0.0) d.col(j) *= s.norm / norm;
  }
  return d;
}

struct RunSetup {
  std::shared_ptr<const SpectralBasis> basis;
  std::shared_ptr<const PotentialConfig> potential;
  SystemContext forward;
  CoefficientState psi0;
};

inline RunSetup build_setup(const RunConfig& c, const std::vector<int>& modes,
                         std::shared_ptr<const CoulombKernel> kernel = nullptr) {
  auto basis = std::make_shared<const SpectralBasis>(c.domain, modes);
  auto potential = std::make_shared<const PotentialConfig>(build_potential(*basis, c.potential));
  SystemContext ctx(basis, potential, Equation::forward, std::move(kernel));
  ctx = ctx.with_control(make_control(c.control, c.domain.horizon, c.domain.steps));
  return {basis, potential, ctx, make_initial_state(c.initial, *basis, c.seed)};
}

inline RunSetup build_setup(const RunConfig& c) { return build_setup(c, c.modes); }

inline ObjectiveSpec build_objective(const RunConfig& c, const RunSetup& s) {
  ObjectiveSpec o;
  o.tracking = c.objective.tracking;
  o.terminal = c.objective.terminal;
  o.nu = c.objective.nu;
  if (c.objective.target == "reference") {
    const SystemContext ref = s.forward.with_control(make_control(c.objective.reference, c.domain.horizon, c.domain.steps));
    o.desired = std::make_shared<const Trajectory>(solve_forward(ref, s.psi0, c.integrator, false));
  } else {
    Trajectory hold;
    for (int n = 0; n <= c.domain.steps; ++n) {
      hold.times.push_back(n * c.domain.dt());
      hold.states.push_back(s.psi0);
    }
    o.desired = std::make_shared<const Trajectory>(std::move(hold));
  }
  o.target = o.desired->states.back();
  return o;
}

/// Adjoint context and trajectory for a forward solution and an objective.
inline std::pair<SystemContext, Trajectory> run_adjoint(const SystemContext& fwd, std::shared_ptr<const Trajectory> lambda,
                                                         const ObjectiveSpec& o, const IntegratorSettings& s) {
  const AdjointSources src = adjoint_sources(o, lambda);
  SystemContext adj = fwd.with_equation(Equation::adjoint).with_reference(lambda);
  if (src.source) adj = adj.with_source(src.source);
  Trajectory tr = solve_adjoint(adj, src.terminal, s);
  return {adj, std::move(tr)};
}

// ---------------------------------------------------------------------------
// Serialization helpers.

inline std::string density_csv(const SpectralBasis& b, const Trajectory& tr, const std::vector<double>& times) {
  std::ostringstream out;
  out.precision(std::numeric_limits<double>::max_digits10);
  out << "t,node";
  const char* axes[] = {"x", "y", "z"};
  for (int i = 0; i < b.dimension(); ++i) out << ',' << axes[i];
  out << ",rho\n";
  const double dt = tr.size() > 1 ? tr.times[1] - tr.times[0] : 1.0;
  for (double t : times) {
    const auto i = static_cast<std::size_t>(std::clamp(std::llround(t / dt), 0LL, static_cast<long long>(tr.size() - 1)));
    const Density rho = density(b, tr.states[i]);
    for (int q = 0; q < b.node_count(); ++q) {
      out << tr.times[i] << ',' << q;
      const auto x = b.node(q);
      for (int a = 0; a < b.dimension(); ++a) out << ',' << x[a];
      out << ',' << rho[q] << '\n';
    }
  }
  return out.str();
}

inline std::string trajectory_csv(const Trajectory& tr) {
  std::ostringstream out;
  write_trajectory_csv(out, tr);
  return out.str();
}

inline std::string diagnostics_csv(const Trajectory& tr) {
  std::ostringstream out;
  write_diagnostics_csv(out, tr);
  return out.str();
}

/// Report skeleton shared by all subcommands; the output directory is not echoed.
inline nlohmann::json report_json(const RunConfig& c, const std::string& subcommand,
                                  const std::vector<EstimateReport>& checks) {
  nlohmann::json cfg = emit_config(c);
  cfg["output"].erase("directory");
  int asserted = 0, passed = 0;
  for (const auto& r : checks)
    if (r.asserted) {
      ++asserted;
      passed += r.pass ? 1 : 0;
    }
  return {{"subcommand", subcommand},
          {"seed", c.seed},
          {"config", cfg},
          {"checks", checks},
          {"summary", {{"asserted", asserted}, {"passed", passed}, {"all_pass", asserted == passed}}}};
}

inline std::string check_table(const std::vector<EstimateReport>& checks) {
  std::ostringstream out;
  for (const auto& r : checks) {
    out << (r.asserted ? (r.pass ? "PASS " : "FAIL ") : "INFO ") << std::left << std::setw(36) << r.name << ' '
        << std::setprecision(6) << r.measured << " <= " << r.bound << '\n';
  }
  return out.str();
}

inline std::string dump(const nlohmann::json& j) { return j.dump(2) + "\n"; }

// ---------------------------------------------------------------------------
// Verification harness.

using CheckTask = std::function<std::vector<EstimateReport>()>;

/// Runs the tasks concurrently and merges the reports sorted by name.
inline std::vector<EstimateReport> run_checks(const std::vector<CheckTask>& tasks) {
  std::vector<std::future<std::vector<EstimateReport>>> futures;
  for (const auto& t : tasks) futures.push_back(std::async(std::launch::async, t));
  std::vector<EstimateReport> all;
  for (auto& f : futures)
    for (auto& r : f.get()) all.push_back(std::move(r));
  std::sort(all.begin(), all.end(), [](const EstimateReport& a, const EstimateReport& b) { return a.name < b.name; });
  for (std::size_t i = 1; i < all.size(); ++i)
    if (all[i].name == all[i - 1].name) throw std::logic_error("verify: duplicate check name " + all[i].name);
  return all;
}

inline std::vector<int> spread_indices(int count, int steps) {
  std::vector<int> idx;
  for (int k = 0; k < count; ++k)
    idx.push_back(count == 1 ? steps / 2 : static_cast<int>(std::llround(static_cast<double>(k) * steps / (count - 1))));
  idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
  return idx;
}

inline EstimateReport gradient_report(const FdCheck& c, const std::string& name = "adjoint_gradient") {
  EstimateReport r;
  r.name = name;
  r.property = "adjoint gradient matches central finite differences";
  r.measured = c.relative_error;
  r.bound = 1e-4;
  r.bound_formula = "||g_fd - g_adj|| / ||g_adj|| over sample indices at the plateau eps";
  r.samples = static_cast<int>(c.indices.size());
  r.inputs = {{"eps", c.eps[c.chosen]}};
  return r.finalize();
}

inline std::vector<EstimateReport> verify_checks(const RunConfig& c) {
  const RunSetup s = build_setup(c);
  const auto& v = c.verify;
  const IntegratorSettings& is = c.integrator;
  auto lambda = std::make_shared<const Trajectory>(solve_forward(s.forward, s.psi0, is));
  const ObjectiveSpec objective = build_objective(c, s);

  std::vector<CheckTask> tasks;
  tasks.push_back([&] {
    std::vector<EstimateReport> out;
    for (int p = 1; p <= 3; ++p) out.push_back(check_coulomb_lp(3, p, 1.0, v.coulomb_resolution));
    for (int n = 1; n <= 2; ++n) out.push_back(check_coulomb_lp(n, n, 1.0, v.coulomb_resolution));
    out.push_back(check_coulomb_lp(2, 1.0, 1.0, v.coulomb_resolution));
    return out;
  });
  tasks.push_back([&] { return std::vector<EstimateReport>{check_hartree_lipschitz(s.forward, v.lipschitz_pairs, c.seed)}; });
  tasks.push_back([&] { return check_g_lipschitz(s.forward, v.lipschitz_pairs, c.seed); });
  tasks.push_back([&] { return check_ks_continuity(s.forward, c.seed); });
  tasks.push_back([&] {
    return check_form_bounds(s.forward.with_equation(Equation::adjoint).with_reference(lambda), v.random_states, c.seed);
  });
  tasks.push_back([&] {
    std::vector<EstimateReport> out = check_energy_estimates(s.forward, *lambda, v.tolerance, "energy_forward");
    out.push_back(check_norm_conservation(*lambda));
    return out;
  });
  tasks.push_back([&] {
    const auto [adj, tr] = run_adjoint(s.forward, lambda, objective, is);
    return check_energy_estimates(adj, tr, v.tolerance, "energy_adjoint");
  });
  tasks.push_back([&] {
    std::mt19937_64 rng = check_rng(c.seed, "uniqueness");
    const double cu = hartree_lipschitz_estimate(s.forward, rng, v.lipschitz_pairs);
    const CoefficientState delta = random_state(*s.basis, rng, 1.0, 1.0);
    return check_uniqueness_gronwall(s.forward, s.psi0, delta, v.uniqueness_eps, cu, is);
  });
  tasks.push_back([&] {
    auto kernel = s.forward.kernel_ptr();
    auto make = [&](const std::vector<int>& m) { return build_setup(c, m, kernel).forward; };
    auto init = [&](const SpectralBasis& b) { return make_initial_state(c.initial, b, c.seed); };
    return check_galerkin_convergence(make, init, v.convergence_modes, is).first;
  });
  tasks.push_back([&] {
    IntegratorSettings tight = is;
    tight.tolerance = v.fd_tolerance;
    tight.adjoint_refinement = 1;
    const FdCheck fd = finite_difference_check(objective, s.forward, s.psi0,
                                               spread_indices(v.fd_indices, c.domain.steps), v.fd_eps, tight);
    return std::vector<EstimateReport>{gradient_report(fd)};
  });
  return run_checks(tasks);
}

// ---------------------------------------------------------------------------
// Subcommands.

inline RunResult run_simulate(const RunConfig& c) {
  const RunSetup s = build_setup(c);
  const Trajectory tr = solve_forward(s.forward, s.psi0, c.integrator);
  std::vector<EstimateReport> checks = check_energy_estimates(s.forward, tr, c.verify.tolerance, "energy_forward");
  checks.push_back(check_norm_conservation(tr));
  RunResult r;
  r.artifacts = {{"trajectory.csv", trajectory_csv(tr)},
                 {"diagnostics.csv", diagnostics_csv(tr)},
                 {"density.csv", density_csv(*s.basis, tr, c.output.density_times)},
                 {"report.json", dump(report_json(c, "simulate", checks))}};
  r.status = all_asserted_pass(checks) ? 0 : 1;
  r.summary = check_table(checks);
  return r;
}

inline RunResult run_adjoint_command(const RunConfig& c) {
  const RunSetup s = build_setup(c);
  auto lambda = std::make_shared<const Trajectory>(solve_forward(s.forward, s.psi0, c.integrator));
  const ObjectiveSpec objective = build_objective(c, s);
  const auto [adj, tr] = run_adjoint(s.forward, lambda, objective, c.integrator);
  std::vector<EstimateReport> checks = check_energy_estimates(adj, tr, c.verify.tolerance, "energy_adjoint");
  RunResult r;
  r.artifacts = {{"forward_trajectory.csv", trajectory_csv(*lambda)},
                 {"adjoint_trajectory.csv", trajectory_csv(tr)},
                 {"adjoint_diagnostics.csv", diagnostics_csv(tr)},
                 {"report.json", dump(report_json(c, "adjoint", checks))}};
  r.status = all_asserted_pass(checks) ? 0 : 1;
  r.summary = check_table(checks);
  return r;
}

inline RunResult run_verify(const RunConfig& c) {
  const std::vector<EstimateReport> checks = verify_checks(c);
  RunResult r;
  r.artifacts = {{"report.json", dump(report_json(c, "verify", checks))}};
  r.status = all_asserted_pass(checks) ? 0 : 1;
  r.summary = check_table(checks);
  return r;
}

inline RunResult run_converge(const RunConfig& c) {
  const RunSetup s = build_setup(c);
  auto kernel = s.forward.kernel_ptr();
  auto make = [&](const std::vector<int>& m) { return build_setup(c, m, kernel).forward; };
  auto init = [&](const SpectralBasis& b) { return make_initial_state(c.initial, b, c.seed); };
  const auto [checks, levels] = check_galerkin_convergence(make, init, c.verify.convergence_modes, c.integrator);
  std::ostringstream csv;
  csv.precision(std::numeric_limits<double>::max_digits10);
  csv << "level,modes,increment_y\n";
  for (std::size_t i = 0; i < levels.size(); ++i) {
    csv << i << ',';
    for (std::size_t a = 0; a < levels[i].modes.size(); ++a) csv << (a ? "x" : "") << levels[i].modes[a];
    csv << ',' << levels[i].increment << '\n';
  }
  RunResult r;
  r.artifacts = {{"convergence.csv", csv.str()}, {"report.json", dump(report_json(c, "converge", checks))}};
  r.status = all_asserted_pass(checks) ? 0 : 1;
  r.summary = check_table(checks);
  return r;
}

inline RunResult run_optimize(const RunConfig& c) {
  const RunSetup s = build_setup(c);
  const ObjectiveSpec objective = build_objective(c, s);
  OptimizeOptions o;
  o.iterations = c.optimize.iterations;
  o.initial_step = c.optimize.initial_step;
  o.armijo = c.optimize.armijo;
  o.max_halvings = c.optimize.max_halvings;
  const OptimizeResult res = optimize(objective, s.forward, s.psi0, o, c.integrator);
  std::ostringstream hist, ctrl;
  write_history_csv(hist, res.history);
  write_control_csv(ctrl, res.control);
  nlohmann::json report = report_json(c, "optimize", {});
  report["optimize"] = {{"initial_objective", res.history.front().objective},
                        {"final_objective", res.history.back().objective},
                        {"iterations", static_cast<int>(res.history.size()) - 1},
                        {"converged", res.converged}};
  RunResult r;
  r.artifacts = {{"history.csv", hist.str()}, {"control.csv", ctrl.str()}, {"report.json", dump(report)}};
  std::ostringstream sum;
  sum << "objective " << res.history.front().objective << " -> " << res.history.back().objective << " in "
      << res.history.size() - 1 << " iterations\n";
  r.summary = sum.str();
  return r;
}

inline const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names{"simulate", "adjoint", "verify", "converge", "optimize"};
  return names;
}

inline RunResult run(const RunConfig& c, const std::string& subcommand) {
  if (subcommand == "simulate") return c.alpha == 0 ? run_adjoint_command(c) : run_simulate(c);
  if (subcommand == "adjoint") return run_adjoint_command(c);
  if (subcommand == "verify") return run_verify(c);
  if (subcommand == "converge") return run_converge(c);
  if (subcommand == "optimize") return run_optimize(c);
  throw std::invalid_argument("unknown subcommand '" + subcommand + "'");
}

/// Writes the artifacts and the config echo into `dir`, creating it if needed.
inline void write_artifacts(const std::filesystem::path& dir, const RunConfig& c, const std::vector<Artifact>& artifacts) {
  std::filesystem::create_directories(dir);
  std::vector<Artifact> all = artifacts;
  all.push_back({"config.json", dump(emit_config(c))});
  for (const auto& a : all) {
    std::ofstream out(dir / a.name, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + (dir / a.name).string());
    out << a.content;
  }
}

}  // namespace tdks
