#pragma once
/*
 * Right-hand side of the Galerkin coefficient system
 *
 *     i d' = (Lambda + M_ext(t)) d + (1 - alpha) (M_{V(Lam)} d + D(d)) + f(t) + alpha G(d),
 *
 * for the forward (alpha = 1) and adjoint (alpha = 0) equations, together with
 * the sesquilinear form B, the linearized coupling D and the constants that
 * bound them.
 *
 * Nonlinear terms are evaluated pseudo-spectrally: synthesize on the grid,
 * multiply pointwise, project back.
 */

#include "tdks/control_signal.hpp"
#include "tdks/domain_basis.hpp"
#include "tdks/potentials.hpp"
#include "tdks/trajectory.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>

namespace tdks {

enum class Equation { forward, adjoint };

/// Inhomogeneity F(t) in coefficient space.
using SourceProvider = std::function<CoefficientState(double)>;

/// Wraps a grid-valued source as a coefficient-space provider.
inline SourceProvider grid_source(std::shared_ptr<const SpectralBasis> basis,
                                  std::function<WaveField(double)> field) {
  return [basis, field = std::move(field)](double t) { return project(*basis, field(t)); };
}

/// Projection Phi^T diag(W V) Phi of a multiplication operator.
inline Eigen::MatrixXd potential_matrix(const SpectralBasis& basis, const RealField& v) {
  return basis.projector() * (v.asDiagonal() * basis.table());
}

class SystemContext {
 public:
  SystemContext(std::shared_ptr<const SpectralBasis> basis,
                std::shared_ptr<const PotentialConfig> potential, Equation equation,
                std::shared_ptr<const CoulombKernel> kernel = nullptr)
      : basis_(std::move(basis)), potential_(std::move(potential)), equation_(equation) {
    if (!basis_ || !potential_) throw std::invalid_argument("context: basis and potential required");
    potential_->validate(*basis_);
    kernel_ = kernel ? std::move(kernel)
                     : std::make_shared<const CoulombKernel>(*basis_, potential_->softening);
    if (kernel_->node_count() != basis_->node_count())
        throw std::invalid_argument("context: kernel built for a different grid");
    m_v0_ = potential_matrix(*basis_, potential_->confinement);
    m_vu_ = potential_matrix(*basis_, potential_->control_shape);
    control_ = ControlSignal::zero(basis_->spec().horizon, basis_->spec().steps);
  }

  const SpectralBasis& basis() const { return *basis_; }
  std::shared_ptr<const SpectralBasis> basis_ptr() const { return basis_; }
  const PotentialConfig& potential() const { return *potential_; }
  std::shared_ptr<const PotentialConfig> potential_ptr() const { return potential_; }
  const CoulombKernel& kernel() const { return *kernel_; }
  std::shared_ptr<const CoulombKernel> kernel_ptr() const { return kernel_; }
  Equation equation() const { return equation_; }
  /// 1 for the forward equation, 0 for the adjoint.
  double alpha() const { return equation_ == Equation::forward ? 1.0 : 0.0; }
  const ControlSignal& control() const { return control_; }
  const SourceProvider& source() const { return source_; }
  const Trajectory* reference() const { return reference_.get(); }
  const Eigen::MatrixXd& m_v0() const { return m_v0_; }
  const Eigen::MatrixXd& m_vu() const { return m_vu_; }

  SystemContext with_control(ControlSignal u) const {
    if (std::abs(u.horizon() - basis_->spec().horizon) > 1e-12 * basis_->spec().horizon)
      throw std::invalid_argument("context: control horizon differs from the domain horizon");
    SystemContext c = *this;
    c.control_ = std::move(u);
    return c;
  }
  SystemContext with_source(SourceProvider f) const {
    SystemContext c = *this;
    c.source_ = std::move(f);
    return c;
  }
  SystemContext with_reference(std::shared_ptr<const Trajectory> lambda) const {
    SystemContext c = *this;
    c.reference_ = std::move(lambda);
    return c;
  }
  SystemContext with_equation(Equation e) const {
    SystemContext c = *this;
    c.equation_ = e;
    return c;
  }

  /// Lambda(t), interpolated from the stored forward trajectory.
  CoefficientState reference_at(double t) const {
    if (!reference_) throw std::logic_error("context: adjoint equation requires a forward trajectory");
    return reference_->at(t);
  }

  double u(double t) const { return control_(t); }

  Eigen::MatrixXd external_matrix(double t) const { return m_v0_ + u(t) * m_vu_; }

 private:
  std::shared_ptr<const SpectralBasis> basis_;
  std::shared_ptr<const PotentialConfig> potential_;
  std::shared_ptr<const CoulombKernel> kernel_;
  Equation equation_;
  ControlSignal control_;
  SourceProvider source_;
  std::shared_ptr<const Trajectory> reference_;
  Eigen::MatrixXd m_v0_, m_vu_;
};

/// Grid quantities of a frozen state Lambda used by the linearized terms.
struct Frozen {
  CoefficientState coeffs;
  WaveField grid;
  Density rho;
  RealField v;          // V(rho)
  RealField dv;         // dV_xc / d rho
  Eigen::MatrixXd m_v;  // projected V(rho)
};

inline Frozen freeze(const SystemContext& ctx, const CoefficientState& lambda) {
  Frozen f;
  f.coeffs = lambda;
  f.grid = synthesize(ctx.basis(), lambda);
  f.rho = density(f.grid);
  f.v = ks_potential(ctx.potential(), ctx.kernel(), f.rho);
  f.dv = vxc_rho_derivative(ctx.potential(), f.rho);
  f.m_v = potential_matrix(ctx.basis(), f.v);
  return f;
}

inline Frozen freeze_at(const SystemContext& ctx, double t) { return freeze(ctx, ctx.reference_at(t)); }

/// Pointwise real pairing s = sum_j Re(psi_j conj(lambda_j)).
inline RealField real_pairing(const WaveField& psi, const WaveField& lambda) {
  return (psi.array() * lambda.conjugate().array()).real().rowwise().sum();
}

/// Grid-level integrands of the linearized coupling applied to psi.
struct DTerms {
  WaveField hartree;
  WaveField xc;
};

inline DTerms d_terms(const SystemContext& ctx, const Frozen& lam, const CoefficientState& psi) {
  const WaveField g = synthesize(ctx.basis(), psi);
  const RealField s = real_pairing(g, lam.grid);
  DTerms out;
  const RealField vh = ctx.potential().hartree ? RealField(hartree(ctx.kernel(), 2.0 * s))
                                               : RealField(RealField::Zero(s.size()));
  out.hartree = vh.cast<Complex>().asDiagonal() * lam.grid;
  const RealField x = 2.0 * lam.dv.cwiseProduct(s);
  out.xc = x.cast<Complex>().asDiagonal() * lam.grid;
  return out;
}

/// D(psi) as a coefficient state: the linearization of V(rho) around Lambda, applied to psi.
inline CoefficientState apply_D(const SystemContext& ctx, const Frozen& lam, const CoefficientState& psi) {
  const DTerms t = d_terms(ctx, lam, psi);
  return project(ctx.basis(), t.hartree + t.xc);
}

struct DValue {
  Complex hartree;
  Complex xc;
  Complex total() const { return hartree + xc; }
};

/// D(psi, phi) = D_H + D_xc at time t.
inline DValue adjoint_D(const SystemContext& ctx, double t, const CoefficientState& psi,
                        const CoefficientState& phi) {
  const Frozen lam = freeze_at(ctx, t);
  const DTerms d = d_terms(ctx, lam, psi);
  const WaveField g = synthesize(ctx.basis(), phi);
  return {grid_inner(ctx.basis(), d.hartree, g), grid_inner(ctx.basis(), d.xc, g)};
}

/// G(d) = P[V(rho(d)) Psi(d)].
inline CoefficientState nonlinear_G(const SystemContext& ctx, const CoefficientState& d) {
  const WaveField g = synthesize(ctx.basis(), d);
  const RealField v = ks_potential(ctx.potential(), ctx.kernel(), density(g));
  return project(ctx.basis(), v.cast<Complex>().asDiagonal() * g);
}

inline CoefficientState project_F(const SystemContext& ctx, double t) {
  if (!ctx.source()) return zero_state(ctx.basis());
  CoefficientState f = ctx.source()(t);
  if (f.rows() != ctx.basis().mode_count() || f.cols() != ctx.basis().particles())
    throw std::runtime_error("source: provider returned a state of the wrong shape");
  return f;
}

/// Complex-linear part L(t) of the system operator, given the frozen reference if any.
inline Eigen::MatrixXcd linear_operator(const SystemContext& ctx, double t, const Frozen* lam) {
  Eigen::MatrixXd l = ctx.external_matrix(t);
  l.diagonal() += ctx.basis().eigenvalues();
  if (ctx.equation() == Equation::adjoint) l += lam->m_v;
  return l.cast<Complex>();
}

/// Everything except the complex-linear part: alpha G + (1 - alpha) D + f.
inline CoefficientState nonlinear_part(const SystemContext& ctx, const Frozen* lam,
                                       const CoefficientState& d, const CoefficientState& f) {
  if (ctx.equation() == Equation::forward) return nonlinear_G(ctx, d) + f;
  return apply_D(ctx, *lam, d) + f;
}

inline void require_finite(const CoefficientState& d, const char* what) {
  if (!d.allFinite()) throw std::invalid_argument(std::string(what) + ": non-finite state");
}

inline std::optional<Frozen> frozen_for(const SystemContext& ctx, double t) {
  if (ctx.equation() == Equation::forward) return std::nullopt;
  return freeze_at(ctx, t);
}

/// d'(t).
inline CoefficientState rhs(const SystemContext& ctx, double t, const CoefficientState& d) {
  require_finite(d, "rhs");
  const auto lam = frozen_for(ctx, t);
  const Frozen* lp = lam ? &*lam : nullptr;
  const CoefficientState total =
      linear_operator(ctx, t, lp) * d + nonlinear_part(ctx, lp, d, project_F(ctx, t));
  return Complex(0.0, -1.0) * total;
}

/// B(psi, phi; u) at time t.
inline Complex bilinear_B(const SystemContext& ctx, double t, const CoefficientState& psi,
                          const CoefficientState& phi) {
  const auto lam = frozen_for(ctx, t);
  const Frozen* lp = lam ? &*lam : nullptr;
  CoefficientState b = linear_operator(ctx, t, lp) * psi;
  if (lp) b += apply_D(ctx, *lp, psi);
  return inner(b, phi);
}

/*
 * Dense tables of the real-linear map D: with v(.) stacking the columns of a
 * state, v(D(d)) = T_re v(Re d) + T_im v(Im d). Used to cross-check the
 * matrix-free path.
 */
struct DTables {
  Eigen::MatrixXcd re;
  Eigen::MatrixXcd im;

  CoefficientState apply(const CoefficientState& d) const {
    const Eigen::Index m = d.rows(), n = d.cols();
    const Eigen::MatrixXd dr = d.real(), di = d.imag();
    const Eigen::VectorXcd v = re * Eigen::Map<const Eigen::VectorXd>(dr.data(), m * n).cast<Complex>() +
                               im * Eigen::Map<const Eigen::VectorXd>(di.data(), m * n).cast<Complex>();
    return Eigen::Map<const CoefficientState>(v.data(), m, n);
  }
};

inline DTables dense_D_tables(const SystemContext& ctx, double t) {
  const Frozen lam = freeze_at(ctx, t);
  const int m = ctx.basis().mode_count(), n = ctx.basis().particles();
  DTables out{Eigen::MatrixXcd(m * n, m * n), Eigen::MatrixXcd(m * n, m * n)};
  for (int j = 0; j < n; ++j)
    for (int l = 0; l < m; ++l) {
      CoefficientState e = zero_state(ctx.basis());
      e(l, j) = 1.0;
      const CoefficientState dr = apply_D(ctx, lam, e);
      e(l, j) = Complex(0.0, 1.0);
      const CoefficientState di = apply_D(ctx, lam, e);
      out.re.col(j * m + l) = Eigen::Map<const Eigen::VectorXcd>(dr.data(), m * n);
      out.im.col(j * m + l) = Eigen::Map<const Eigen::VectorXcd>(di.data(), m * n);
    }
  return out;
}

// ---------------------------------------------------------------------------
// Bounding constants for B and D.

struct FormConstants {
  double c0_xc = 0.0;       // 2 N^2 ||V'_xc(rho) rho||_inf
  double c0_hartree = 0.0;  // 2 N^{3/2} ||w||_1 ||Lambda||_inf^2
  double c0 = 0.0;
  double c1 = 0.0;
  double c3 = 0.0;
  double v_lambda_sup = 0.0;  // ||V(Lambda)||_inf
  double lambda_sup = 0.0;    // ||Lambda||_inf (pointwise C^N norm)
  double v0_sup = 0.0;
  double vu_sup = 0.0;
  double u_sup = 0.0;
  double kernel_l1 = 0.0;
};

inline FormConstants finish_constants(const SystemContext& ctx, FormConstants k) {
  const double a1 = 1.0 - ctx.alpha();
  k.c0 = k.c0_xc + k.c0_hartree;
  k.v0_sup = ctx.potential().confinement.cwiseAbs().maxCoeff();
  k.vu_sup = ctx.potential().control_shape.cwiseAbs().maxCoeff();
  k.u_sup = ctx.control().sup_abs();
  k.kernel_l1 = ctx.potential().hartree ? ctx.kernel().l1_norm() : 0.0;
  const double ext = k.v0_sup + k.u_sup * k.vu_sup;
  k.c1 = 1.0 + a1 * (k.c0 + k.v_lambda_sup) + ext;
  k.c3 = ext + a1 * (k.c0 + k.v_lambda_sup) + 1.0;
  return k;
}

inline void accumulate_constants(const SystemContext& ctx, const Frozen& lam, FormConstants& k) {
  const double n = ctx.basis().particles();
  const double kl1 = ctx.potential().hartree ? ctx.kernel().l1_norm() : 0.0;
  const double lsup = std::sqrt(lam.rho.maxCoeff());
  k.lambda_sup = std::max(k.lambda_sup, lsup);
  k.v_lambda_sup = std::max(k.v_lambda_sup, lam.v.cwiseAbs().maxCoeff());
  k.c0_xc = std::max(k.c0_xc, 2.0 * n * n * lam.dv.cwiseProduct(lam.rho).cwiseAbs().maxCoeff());
  k.c0_hartree = std::max(k.c0_hartree, 2.0 * std::pow(n, 1.5) * kl1 * lsup * lsup);
}

/// Constants at a single time (adjoint: Lambda(t); forward: no D terms).
inline FormConstants form_constants(const SystemContext& ctx, double t) {
  FormConstants k;
  if (ctx.equation() == Equation::adjoint) accumulate_constants(ctx, freeze_at(ctx, t), k);
  return finish_constants(ctx, k);
}

/// Constants taken as the supremum over the reference snapshots and step midpoints.
inline FormConstants form_constants(const SystemContext& ctx) {
  FormConstants k;
  if (ctx.equation() == Equation::adjoint) {
    const Trajectory& ref = *ctx.reference();
    for (std::size_t i = 0; i < ref.size(); ++i) {
      accumulate_constants(ctx, freeze(ctx, ref.states[i]), k);
      if (i + 1 < ref.size())
        accumulate_constants(ctx, freeze(ctx, 0.5 * (ref.states[i] + ref.states[i + 1])), k);
    }
  }
  return finish_constants(ctx, k);
}

}  // namespace tdks
