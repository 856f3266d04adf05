#include "support.hpp"

#include <gtest/gtest.h>

using namespace tdks;
using namespace tdks::testing;

namespace {

double phase_error(int steps) {
  auto b = make_basis(line(34, 10.0, 1, steps), {16});
  SystemContext ctx = context(b, free_potential(*b));
  const CoefficientState d0 = unit_mode(*b, 0);
  const Trajectory tr = solve_forward(ctx, d0, {}, false);
  const Complex exact = std::exp(Complex(0.0, -b->eigenvalues()[0]));
  return (tr.states.back() - exact * d0).norm();
}

}  // namespace

TEST(SolveForward, FreeModePhase) {
  EXPECT_LT(phase_error(1000), 1e-8);
}

TEST(SolveForward, SecondOrderRichardsonRatio) {
  const double e1 = phase_error(25), e2 = phase_error(50), e3 = phase_error(100);
  EXPECT_NEAR(e1 / e2, 4.0, 0.5);
  EXPECT_NEAR(e2 / e3, 4.0, 0.5);
}

TEST(SolveForward, ZeroStaysZero) {
  auto b = make_basis(line(24, 10.0, 2, 50), {8});
  SystemContext ctx = context(b, well_potential(*b));
  const Trajectory tr = solve_forward(ctx, zero_state(*b));
  for (const auto& d : tr.states) EXPECT_EQ(d.norm(), 0.0);
}

TEST(SolveForward, NonlinearNormConservation) {
  auto b = make_basis(line(34, 10.0, 2, 1000), {16});
  SystemContext ctx = context(b, well_potential(*b))
                          .with_control(ControlSignal::sampled(1.0, 1000, [](double t) { return std::cos(5 * t); }));
  std::mt19937_64 rng(3);
  const Trajectory tr = solve_forward(ctx, random_state(*b, rng, 1.5, 0.5));
  EXPECT_LT(max_norm_drift(tr), 1e-6);
  ASSERT_EQ(tr.diagnostics.size(), tr.size());
  for (const auto& d : tr.diagnostics) EXPECT_LT(std::abs(d.im_b), 1e-10);
}

TEST(SolveForward, ConstantPotentialMatchesExponential) {
  // Wide box: the spectrum stays below ~0.5, so the O(lambda^3 dt^2) error is small.
  auto b = make_basis(line(24, 40.0, 1, 1000), {8});
  PotentialConfig p = free_potential(*b);
  p.confinement = make_field(*b, {"well", 0.2, 4.0, {}, ""});
  SystemContext ctx = context(b, p);
  std::mt19937_64 rng(5);
  const CoefficientState d0 = random_state(*b, rng);
  const Trajectory tr = solve_forward(ctx, d0, {}, false);
  // Oracle: exp(-i L T) through the symmetric eigendecomposition.
  Eigen::MatrixXd l = potential_matrix(*b, p.confinement);
  l.diagonal() += b->eigenvalues();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(l);
  const Eigen::VectorXcd phase = (es.eigenvalues().cast<Complex>() * Complex(0.0, -1.0)).array().exp();
  const Eigen::MatrixXcd u = es.eigenvectors().cast<Complex>() * phase.asDiagonal() *
                             es.eigenvectors().transpose().cast<Complex>();
  EXPECT_LT((tr.states.back() - u * d0).norm(), 1e-8);
}

TEST(Step, ConsistentAsDtVanishes) {
  auto b = make_basis(line(24, 10.0, 2), {8});
  SystemContext ctx = context(b, well_potential(*b));
  std::mt19937_64 rng(2);
  const CoefficientState d = random_state(*b, rng);
  const double r1 = (step(ctx, 0.0, 1e-3, d) - d).norm() / 1e-3;
  const double r2 = (step(ctx, 0.0, 1e-4, d) - d).norm() / 1e-4;
  EXPECT_NEAR(r1 / r2, 1.0, 1e-2);
  EXPECT_THROW(step(ctx, 0.0, 0.0, d), std::invalid_argument);
}

TEST(Step, DivergentStageReportsLastGoodStep) {
  auto b = make_basis(line(24, 10.0, 1, 2), {8});
  PotentialConfig p = plain_potential(*b);
  p.exchange_c = -1e6;
  SystemContext ctx = context(b, p);
  std::mt19937_64 rng(2);
  try {
    solve_forward(ctx, random_state(*b, rng, 3.0));
    FAIL() << "expected a solver error";
  } catch (const SolverError& e) {
    EXPECT_EQ(e.last_good_step(), 0);
  }
}

namespace {

struct AdjointSetup {
  std::shared_ptr<const SpectralBasis> basis;
  SystemContext fwd;
  std::shared_ptr<const Trajectory> lambda;
  SystemContext adj;
};

AdjointSetup make_adjoint(int steps = 100) {
  auto b = make_basis(line(24, 10.0, 2, steps), {8});
  SystemContext fwd = context(b, well_potential(*b));
  std::mt19937_64 rng(41);
  auto lambda = std::make_shared<const Trajectory>(solve_forward(fwd, random_state(*b, rng, 1.0, 0.5)));
  SystemContext adj = fwd.with_equation(Equation::adjoint).with_reference(lambda);
  return {b, fwd, lambda, adj};
}

}  // namespace

TEST(SolveAdjoint, ZeroTerminalZeroSource) {
  AdjointSetup s = make_adjoint();
  const Trajectory tr = solve_adjoint(s.adj, zero_state(*s.basis));
  EXPECT_EQ(tr.times.front(), 0.0);
  EXPECT_NEAR(tr.times.back(), 1.0, 1e-15);
  for (const auto& d : tr.states) EXPECT_EQ(d.norm(), 0.0);
}

TEST(SolveAdjoint, ZeroReferenceIsUnitaryLinearFlow) {
  AdjointSetup s = make_adjoint();
  auto zero = std::make_shared<const Trajectory>(
      Trajectory{s.lambda->times, std::vector<CoefficientState>(s.lambda->size(), zero_state(*s.basis)), {}});
  SystemContext adj = s.adj.with_reference(zero);
  std::mt19937_64 rng(1);
  const Trajectory tr = solve_adjoint(adj, random_state(*s.basis, rng));
  EXPECT_LT(max_norm_drift(tr), 1e-9);
}

TEST(SolveAdjoint, RespectsGronwallEnvelope) {
  AdjointSetup s = make_adjoint();
  auto src = [b = s.basis](double t) {
    CoefficientState f = zero_state(*b);
    f(0, 0) = Complex(std::cos(t), 0.5);
    f(3, 1) = 0.3;
    return f;
  };
  SystemContext adj = s.adj.with_source(src);
  std::mt19937_64 rng(7);
  const CoefficientState terminal = random_state(*s.basis, rng, 2.0);
  const Trajectory tr = solve_adjoint(adj, terminal);
  const double c0 = form_constants(adj).c0;
  // Backward from T: ||Psi(t)||^2 <= e^{(1+2c0)(T-t)} (||Psi(T)||^2 + int_t^T ||F||^2).
  double f_int = 0.0;
  for (int i = static_cast<int>(tr.size()) - 1; i >= 0; --i) {
    const double t = tr.times[i];
    if (i + 1 < static_cast<int>(tr.size()))
      f_int += 0.5 * (tr.times[i + 1] - t) * (src(t).squaredNorm() + src(tr.times[i + 1]).squaredNorm());
    const double env = std::exp((1 + 2 * c0) * (1.0 - t)) * (terminal.squaredNorm() + f_int);
    EXPECT_LE(tr.states[i].squaredNorm(), env);
  }
}

TEST(SolveAdjoint, TimeReversalConsistency) {
  // The implicit midpoint step is symmetric: stepping forward from the
  // adjoint solution at t_n reproduces the stored state at t_{n+1}.
  AdjointSetup s = make_adjoint(50);
  std::mt19937_64 rng(9);
  IntegratorSettings tight;
  tight.tolerance = 1e-14;
  const Trajectory tr = solve_adjoint(s.adj, random_state(*s.basis, rng), tight);
  const double dt = s.basis->spec().dt();
  for (std::size_t n = 0; n + 1 < tr.size(); n += 7) {
    const CoefficientState fwd = step(s.adj, tr.times[n], dt, tr.states[n], tight, +1);
    EXPECT_LT((fwd - tr.states[n + 1]).norm(), 1e-11);
  }
}

TEST(SolveAdjoint, RefinedGridAgreesWithCoarse) {
  AdjointSetup s = make_adjoint();
  std::mt19937_64 rng(9);
  const CoefficientState terminal = random_state(*s.basis, rng);
  const Trajectory coarse = solve_adjoint(s.adj, terminal);
  IntegratorSettings fine;
  fine.adjoint_refinement = 4;
  const Trajectory refined = solve_adjoint(s.adj, terminal, fine);
  EXPECT_EQ(refined.size(), 4 * (coarse.size() - 1) + 1);
  EXPECT_LT((refined.states.front() - coarse.states.front()).norm(), 1e-3);
}

TEST(SolveAdjoint, RejectsMisalignedReference) {
  AdjointSetup s = make_adjoint();
  auto half = std::make_shared<Trajectory>(*s.lambda);
  half->states.resize(10);
  half->times.resize(10);
  EXPECT_THROW(solve_adjoint(s.adj.with_reference(half), zero_state(*s.basis)), std::invalid_argument);
  EXPECT_THROW(solve_adjoint(s.fwd, zero_state(*s.basis)), std::invalid_argument);
}

TEST(ControlSignal, InterpolationAndH1Norm) {
  const ControlSignal u = ControlSignal::sampled(1.0, 1000, [](double t) { return t; });
  EXPECT_NEAR(u(0.3337), 0.3337, 1e-12);
  EXPECT_EQ(u(-1.0), 0.0);
  EXPECT_NEAR(u(2.0), 1.0, 1e-15);
  EXPECT_NEAR(u.h1_norm_sq(), 4.0 / 3.0, 1e-6);
  EXPECT_THROW(ControlSignal(1.0, {0.0}), std::invalid_argument);
  EXPECT_THROW(ControlSignal(1.0, {0.0, NAN}), std::invalid_argument);
}

TEST(ControlSignal, GramSolveInvertsGramApply) {
  const ControlSignal u = ControlSignal::sampled(2.0, 50, [](double t) { return std::sin(t); });
  const Eigen::VectorXd v = Eigen::VectorXd::LinSpaced(51, -1.0, 2.0).array().square();
  EXPECT_LT((u.gram_solve(u.gram_apply(v)) - v).norm(), 1e-10);
  EXPECT_NEAR(u.vector().dot(u.gram_apply(u.vector())), u.h1_norm_sq(), 1e-12);
}

TEST(Trajectory, CsvColumnsFollowModeOrder) {
  auto b = make_basis(line(20, 10.0, 2, 2), {3});
  SystemContext ctx = context(b, free_potential(*b));
  const Trajectory tr = solve_forward(ctx, unit_mode(*b, 1, 1));
  std::ostringstream out;
  write_trajectory_csv(out, tr);
  const std::string text = out.str();
  const std::string header = text.substr(0, text.find('\n'));
  EXPECT_EQ(header, "t,re_0_0,im_0_0,re_0_1,im_0_1,re_0_2,im_0_2,re_1_0,im_1_0,re_1_1,im_1_1,re_1_2,im_1_2,l2,h1,re_b,im_b");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 4);
}
