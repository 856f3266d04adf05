#pragma once
/*
 * Box domain, Dirichlet sine basis and tensor quadrature grid.
 *
 * The domain is the box [0,L_1] x ... x [0,L_n] with homogeneous Dirichlet
 * walls. Basis functions are products of sine modes
 *
 *     phi_k(x) = prod_i sqrt(2/L_i) sin(k_i pi x_i / L_i),
 *
 * which are L2-orthonormal, H1_0-orthogonal and diagonalize the Laplacian
 * with eigenvalues lambda_k = sum_i (k_i pi / L_i)^2.
 *
 * The quadrature grid has M_i + 1 nodes per axis (walls included) with
 * trapezoid weights. Sine products of degree below M_i are integrated exactly,
 * so the discrete Gram matrix is the identity to rounding.
 *
 * Orderings are lexicographic with the first axis slowest, for both mode
 * multi-indices (k_1, ..., k_n) and node indices (j_1, ..., j_n).
 */

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace tdks {

using Complex = std::complex<double>;

/// Galerkin coefficients, one row per mode and one column per particle.
using CoefficientState = Eigen::MatrixXcd;
/// Real scalar field sampled at every grid node.
using RealField = Eigen::VectorXd;
/// Complex wave field: one row per grid node, one column per particle.
using WaveField = Eigen::MatrixXcd;

struct DomainSpec {
  int dimension = 1;
  std::vector<double> lengths{10.0};
  std::vector<int> grid_points{34};  // intervals per axis, M_i
  int particles = 1;
  double horizon = 1.0;
  int steps = 1000;

  double dt() const { return horizon / steps; }
  bool operator==(const DomainSpec&) const = default;

  void validate() const {
    if (dimension < 1 || dimension > 3)
      throw std::invalid_argument("domain: dimension must be 1, 2 or 3");
    if (static_cast<int>(lengths.size()) != dimension)
      throw std::invalid_argument("domain: lengths must have one entry per axis");
    if (static_cast<int>(grid_points.size()) != dimension)
      throw std::invalid_argument("domain: grid must have one entry per axis");
    for (double l : lengths)
      if (!(l > 0.0) || !std::isfinite(l))
        throw std::invalid_argument("domain: edge lengths must be positive");
    for (int m : grid_points)
      if (m < 4 || m % 2 != 0)
        throw std::invalid_argument("domain: grid points per axis must be even and >= 4");
    if (particles < 1) throw std::invalid_argument("domain: particle count must be >= 1");
    if (!(horizon > 0.0) || !std::isfinite(horizon))
      throw std::invalid_argument("domain: horizon must be positive");
    if (steps < 1) throw std::invalid_argument("domain: steps must be >= 1");
  }
};

class SpectralBasis {
 public:
  SpectralBasis(DomainSpec spec, std::vector<int> modes_per_axis)
      : spec_(std::move(spec)), modes_(std::move(modes_per_axis)) {
    spec_.validate();
    const int n = spec_.dimension;
    if (static_cast<int>(modes_.size()) != n)
      throw std::invalid_argument("basis: need one mode count per axis");
    for (int i = 0; i < n; ++i) {
      if (modes_[i] < 1) throw std::invalid_argument("basis: mode counts must be positive");
      if (2 * modes_[i] > spec_.grid_points[i])
        throw std::invalid_argument("basis: " + std::to_string(modes_[i]) +
                                    " modes exceed the resolution of a grid with " +
                                    std::to_string(spec_.grid_points[i]) + " intervals");
    }

    mode_count_ = 1;
    node_count_ = 1;
    for (int i = 0; i < n; ++i) {
      mode_count_ *= modes_[i];
      node_count_ *= spec_.grid_points[i] + 1;
      spacing_[i] = spec_.lengths[i] / spec_.grid_points[i];
    }

    indices_.resize(mode_count_);
    eigenvalues_.resize(mode_count_);
    for (int k = 0; k < mode_count_; ++k) {
      int rest = k;
      std::array<int, 3> idx{0, 0, 0};
      for (int i = n - 1; i >= 0; --i) {
        idx[i] = rest % modes_[i] + 1;
        rest /= modes_[i];
      }
      indices_[k] = idx;
      double lam = 0.0;
      for (int i = 0; i < n; ++i) {
        const double kk = idx[i] * std::numbers::pi / spec_.lengths[i];
        lam += kk * kk;
      }
      eigenvalues_[k] = lam;
    }

    weights_.resize(node_count_);
    for (int q = 0; q < node_count_; ++q) {
      const auto j = node_index(q);
      double w = 1.0;
      for (int i = 0; i < n; ++i) {
        const bool wall = j[i] == 0 || j[i] == spec_.grid_points[i];
        w *= wall ? 0.5 * spacing_[i] : spacing_[i];
      }
      weights_[q] = w;
    }

    // One 1-D table per axis, then tensor products.
    std::array<Eigen::MatrixXd, 3> axis_tables;
    for (int i = 0; i < n; ++i) {
      const int m = spec_.grid_points[i];
      axis_tables[i].setZero(m + 1, modes_[i]);
      const double amp = std::sqrt(2.0 / spec_.lengths[i]);
      for (int j = 1; j < m; ++j)
        for (int k = 1; k <= modes_[i]; ++k)
          axis_tables[i](j, k - 1) = amp * std::sin(k * std::numbers::pi * j / m);
    }
    table_.resize(node_count_, mode_count_);
    for (int q = 0; q < node_count_; ++q) {
      const auto j = node_index(q);
      for (int k = 0; k < mode_count_; ++k) {
        double v = 1.0;
        for (int i = 0; i < n; ++i) v *= axis_tables[i](j[i], indices_[k][i] - 1);
        table_(q, k) = v;
      }
    }
    weighted_table_t_ = table_.transpose() * weights_.asDiagonal();
  }

  const DomainSpec& spec() const { return spec_; }
  int dimension() const { return spec_.dimension; }
  int particles() const { return spec_.particles; }
  int mode_count() const { return mode_count_; }
  int node_count() const { return node_count_; }
  const std::vector<int>& modes_per_axis() const { return modes_; }
  double spacing(int axis) const { return spacing_[axis]; }

  /// 1-based multi-index of flattened mode k; unused axes are 0.
  const std::array<int, 3>& multi_index(int k) const { return indices_[k]; }
  const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }
  const Eigen::VectorXd& weights() const { return weights_; }
  /// phi_k(x_q), nodes by rows.
  const Eigen::MatrixXd& table() const { return table_; }
  /// table^T * diag(weights): maps grid samples to quadrature coefficients.
  const Eigen::MatrixXd& projector() const { return weighted_table_t_; }

  std::array<int, 3> node_index(int q) const {
    std::array<int, 3> j{0, 0, 0};
    for (int i = spec_.dimension - 1; i >= 0; --i) {
      const int extent = spec_.grid_points[i] + 1;
      j[i] = q % extent;
      q /= extent;
    }
    return j;
  }

  std::array<double, 3> node(int q) const {
    const auto j = node_index(q);
    std::array<double, 3> x{0.0, 0.0, 0.0};
    for (int i = 0; i < spec_.dimension; ++i) x[i] = j[i] * spacing_[i];
    return x;
  }

  bool on_wall(int q) const {
    const auto j = node_index(q);
    for (int i = 0; i < spec_.dimension; ++i)
      if (j[i] == 0 || j[i] == spec_.grid_points[i]) return true;
    return false;
  }

  /// Index of the mode with the given multi-index, or -1 if outside the basis.
  int find_mode(const std::array<int, 3>& idx) const {
    int k = 0;
    for (int i = 0; i < spec_.dimension; ++i) {
      if (idx[i] < 1 || idx[i] > modes_[i]) return -1;
      k = k * modes_[i] + (idx[i] - 1);
    }
    return k;
  }

  /// Analytic value of a sine mode (any positive multi-index) at a point.
  double mode_value(const std::array<int, 3>& idx, const std::array<double, 3>& x) const {
    double v = 1.0;
    for (int i = 0; i < spec_.dimension; ++i)
      v *= std::sqrt(2.0 / spec_.lengths[i]) *
           std::sin(idx[i] * std::numbers::pi * x[i] / spec_.lengths[i]);
    return v;
  }

 private:
  DomainSpec spec_;
  std::vector<int> modes_;
  int mode_count_ = 0;
  int node_count_ = 0;
  std::array<double, 3> spacing_{0.0, 0.0, 0.0};
  std::vector<std::array<int, 3>> indices_;
  Eigen::VectorXd eigenvalues_;
  Eigen::VectorXd weights_;
  Eigen::MatrixXd table_;
  Eigen::MatrixXd weighted_table_t_;
};

inline SpectralBasis build_basis(const DomainSpec& spec, const std::vector<int>& modes_per_axis) {
  return SpectralBasis(spec, modes_per_axis);
}

inline CoefficientState zero_state(const SpectralBasis& basis) {
  return CoefficientState::Zero(basis.mode_count(), basis.particles());
}

inline WaveField synthesize(const SpectralBasis& basis, const CoefficientState& state) {
  if (state.rows() != basis.mode_count())
    throw std::invalid_argument("synthesize: state has " + std::to_string(state.rows()) +
                                " modes, basis has " + std::to_string(basis.mode_count()));
  return basis.table().cast<Complex>() * state;
}

inline CoefficientState project(const SpectralBasis& basis, const WaveField& field) {
  if (field.rows() != basis.node_count())
    throw std::invalid_argument("project: field has " + std::to_string(field.rows()) +
                                " nodes, grid has " + std::to_string(basis.node_count()));
  return basis.projector().cast<Complex>() * field;
}

/// Quadrature inner product <a, b> = sum_j integral a_j conj(b_j).
inline Complex grid_inner(const SpectralBasis& basis, const WaveField& a, const WaveField& b) {
  if (a.rows() != basis.node_count() || b.rows() != basis.node_count() || a.cols() != b.cols())
    throw std::invalid_argument("grid_inner: shape mismatch");
  Complex acc{0.0, 0.0};
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    acc += (a.col(j).array() * b.col(j).conjugate().array() * basis.weights().array()).sum();
  return acc;
}

/// Coefficient-space inner product, equal to the L2 pairing by orthonormality.
inline Complex inner(const CoefficientState& a, const CoefficientState& b) {
  return (a.array() * b.conjugate().array()).sum();
}

struct Norms {
  double l2 = 0.0;
  double h1 = 0.0;
};

inline Norms norms(const SpectralBasis& basis, const CoefficientState& state) {
  if (state.rows() != basis.mode_count())
    throw std::invalid_argument("norms: state/basis mode count mismatch");
  const Eigen::VectorXd row_sq = state.rowwise().squaredNorm();
  const double l2sq = row_sq.sum();
  const double gradsq = row_sq.dot(basis.eigenvalues());
  return {std::sqrt(l2sq), std::sqrt(l2sq + gradsq)};
}

/// H^{-1} dual norm of a coefficient vector, sup over the span of the basis.
inline double dual_norm(const SpectralBasis& basis, const CoefficientState& state) {
  const Eigen::VectorXd row_sq = state.rowwise().squaredNorm();
  return std::sqrt((row_sq.array() / (1.0 + basis.eigenvalues().array())).sum());
}

/// Zero-padded embedding of a state into a basis with at least as many modes per axis.
inline CoefficientState embed(const SpectralBasis& from, const SpectralBasis& to,
                              const CoefficientState& state) {
  if (from.dimension() != to.dimension())
    throw std::invalid_argument("embed: dimension mismatch");
  for (int i = 0; i < from.dimension(); ++i)
    if (from.modes_per_axis()[i] > to.modes_per_axis()[i])
      throw std::invalid_argument("embed: target basis is not a refinement of the source");
  CoefficientState out = CoefficientState::Zero(to.mode_count(), state.cols());
  for (int k = 0; k < from.mode_count(); ++k) out.row(to.find_mode(from.multi_index(k))) = state.row(k);
  return out;
}

/// I.i.d. complex Gaussian coefficients, damped by (1 + lambda_k)^(-decay) and
/// scaled to the requested L2 norm.
inline CoefficientState random_state(const SpectralBasis& basis, std::mt19937_64& rng, double l2 = 1.0,
                                     double decay = 0.0) {
  std::normal_distribution<double> g(0.0, 1.0);
  CoefficientState d(basis.mode_count(), basis.particles());
  for (Eigen::Index j = 0; j < d.cols(); ++j)
    for (Eigen::Index k = 0; k < d.rows(); ++k) {
      const double damp = std::pow(1.0 + basis.eigenvalues()[k], -decay);
      const double re = g(rng);
      const double im = g(rng);
      d(k, j) = damp * Complex(re, im);
    }
  const double n = d.norm();
  return n > 0.0 ? CoefficientState(d * (l2 / n)) : d;
}

}  // namespace tdks
