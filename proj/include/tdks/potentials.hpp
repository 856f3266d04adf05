#pragma once
// Density, Hartree / exchange / correlation potentials and the external field.

#include "tdks/domain_basis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace tdks {

using Density = RealField;

struct PotentialConfig {
  int dimension = 1;
  double exchange_c = -std::cbrt(3.0 / std::numbers::pi);
  double exchange_beta = 1.0 / 3.0;
  double correlation_a = 0.44;
  double correlation_b = 7.8;
  double softening = 0.0;  // Coulomb softening length, required > 0 in 1-D
  bool hartree = true;
  bool exchange = true;
  bool correlation = true;
  RealField confinement;    // V_0
  RealField control_shape;  // V_u

  void validate(const SpectralBasis& basis) const {
    if (dimension != basis.dimension())
      throw std::invalid_argument("potential: dimension does not match the domain");
    if (!(exchange_c < 0.0))
      throw std::invalid_argument("potential: exchange constant c must be a negative constant");
    if (!(exchange_beta > 0.0 && exchange_beta < 1.0))
      throw std::invalid_argument("potential: exchange exponent beta must lie in (0,1)");
    if (!(correlation_a > 0.0) || !(correlation_b > 0.0))
      throw std::invalid_argument("potential: correlation parameters a, b must be positive");
    if (!(softening >= 0.0)) throw std::invalid_argument("potential: softening must be >= 0");
    if (dimension == 1 && !(softening > 0.0))
      throw std::invalid_argument("potential: 1/|x| is not integrable in 1-D, softening must be > 0");
    for (const RealField* f : {&confinement, &control_shape}) {
      if (f->size() != basis.node_count())
        throw std::invalid_argument("potential: external field size does not match the grid");
      if (!f->allFinite())
        throw std::invalid_argument("potential: external fields must be bounded (finite)");
    }
  }
};

inline Density density(const WaveField& psi) { return psi.rowwise().squaredNorm(); }

inline Density density(const SpectralBasis& basis, const CoefficientState& state) {
  return density(synthesize(basis, state));
}

namespace detail {

// Integral of 1/|x| over [0,a] x [0,b].
inline double corner_integral_2d(double a, double b) {
  if (a <= 0.0 || b <= 0.0) return 0.0;
  return a * std::asinh(b / a) + b * std::asinh(a / b);
}

// Integral of 1/|x| over [0,a] x [0,b] x [0,c].
inline double corner_integral_3d(double a, double b, double c) {
  if (a <= 0.0 || b <= 0.0 || c <= 0.0) return 0.0;
  const double d = std::sqrt(a * a + b * b + c * c);
  return b * c * std::asinh(a / std::hypot(b, c)) + a * c * std::asinh(b / std::hypot(a, c)) +
         a * b * std::asinh(c / std::hypot(a, b)) - 0.5 * a * a * std::atan(b * c / (a * d)) -
         0.5 * b * b * std::atan(a * c / (b * d)) - 0.5 * c * c * std::atan(a * b / (c * d));
}

inline constexpr std::array<double, 8> kGaussNodes{
    -0.9602898564975363, -0.7966664774136267, -0.5255324099163290, -0.1834346424956498,
    0.1834346424956498,  0.5255324099163290,  0.7966664774136267,  0.9602898564975363};
inline constexpr std::array<double, 8> kGaussWeights{
    0.1012285362903763, 0.2223810344533745, 0.3137066661224659, 0.3626837833783620,
    0.3626837833783620, 0.3137066661224659, 0.2223810344533745, 0.1012285362903763};

}  // namespace detail

/// Coulomb interaction w(x) = 1/|x| (or 1/sqrt(|x|^2 + s^2) when softened).
inline double coulomb(double r, double softening) {
  return softening > 0.0 ? 1.0 / std::sqrt(r * r + softening * softening) : 1.0 / r;
}

/*
 * Dense discrete convolution with the Coulomb interaction,
 *
 *     V_H(x_q) = sum_r K[q,r] rho(x_r),   K[q,r] = w(x_q - x_r) W_r   (q != r).
 *
 * The singular diagonal is replaced by the exact integral of w over the
 * quadrature cell of node r (half cells at the walls).
 */
class CoulombKernel {
 public:
  CoulombKernel(const SpectralBasis& basis, double softening)
      : nodes_(basis.node_count()), softening_(softening) {
    const int n = basis.dimension();
    if (n == 1 && !(softening > 0.0))
      throw std::invalid_argument("kernel: 1-D Coulomb kernel requires softening > 0");
    matrix_.resize(nodes_, nodes_);
    std::vector<std::array<double, 3>> x(nodes_);
    for (int q = 0; q < nodes_; ++q) x[q] = basis.node(q);
    for (int r = 0; r < nodes_; ++r) {
      const double wr = basis.weights()[r];
      for (int q = 0; q < nodes_; ++q) {
        if (q == r) continue;
        double d2 = 0.0;
        for (int i = 0; i < n; ++i) d2 += (x[q][i] - x[r][i]) * (x[q][i] - x[r][i]);
        matrix_(q, r) = coulomb(std::sqrt(d2), softening) * wr;
      }
      matrix_(r, r) = cell_integral(basis, r);
    }
    l1_norm_ = matrix_.rowwise().sum().maxCoeff();
  }

  int node_count() const { return nodes_; }
  double softening() const { return softening_; }
  const Eigen::MatrixXd& matrix() const { return matrix_; }
  /// max_q sum_r K[q,r]; bounds the operator norm of the convolution.
  double l1_norm() const { return l1_norm_; }

  RealField apply(const RealField& rho) const {
    if (rho.size() != nodes_) throw std::invalid_argument("hartree: kernel/grid mismatch");
    return matrix_ * rho;
  }

 private:
  double cell_integral(const SpectralBasis& basis, int r) const {
    const int n = basis.dimension();
    const auto j = basis.node_index(r);
    // Extents of the cell on the low and high side of each axis.
    std::array<double, 3> lo{0, 0, 0}, hi{0, 0, 0};
    for (int i = 0; i < n; ++i) {
      const double h = basis.spacing(i);
      lo[i] = j[i] == 0 ? 0.0 : 0.5 * h;
      hi[i] = j[i] == basis.spec().grid_points[i] ? 0.0 : 0.5 * h;
    }
    if (n == 1) return std::asinh(lo[0] / softening_) + std::asinh(hi[0] / softening_);
    if (softening_ > 0.0) return sampled_cell_integral(n, lo, hi);
    double total = 0.0;
    for (double a : {lo[0], hi[0]})
      for (double b : {lo[1], hi[1]}) {
        if (n == 2) {
          total += detail::corner_integral_2d(a, b);
        } else {
          for (double c : {lo[2], hi[2]}) total += detail::corner_integral_3d(a, b, c);
        }
      }
    return total;
  }

  double sampled_cell_integral(int n, const std::array<double, 3>& lo,
                               const std::array<double, 3>& hi) const {
    double total = 0.0;
    const auto& gx = detail::kGaussNodes;
    const auto& gw = detail::kGaussWeights;
    const std::size_t pts = gx.size();
    const std::size_t third = n == 3 ? pts : 1;
    for (std::size_t a = 0; a < pts; ++a)
      for (std::size_t b = 0; b < pts; ++b)
        for (std::size_t c = 0; c < third; ++c) {
          std::array<std::size_t, 3> id{a, b, c};
          double r2 = 0.0, w = 1.0;
          for (int i = 0; i < n; ++i) {
            const double half = 0.5 * (hi[i] + lo[i]);
            const double mid = 0.5 * (hi[i] - lo[i]);
            const double xi = mid + half * gx[id[i]];
            r2 += xi * xi;
            w *= half * gw[id[i]];
          }
          total += w * coulomb(std::sqrt(r2), softening_);
        }
    return total;
  }

  int nodes_;
  double softening_;
  Eigen::MatrixXd matrix_;
  double l1_norm_ = 0.0;
};

inline RealField hartree(const CoulombKernel& kernel, const Density& rho) { return kernel.apply(rho); }

inline RealField exchange(const PotentialConfig& cfg, const Density& rho) {
  return rho.unaryExpr([&](double r) {
    return r > 0.0 ? cfg.exchange_c * std::pow(r, cfg.exchange_beta) : 0.0;
  });
}

inline WaveField exchange_apply(const PotentialConfig& cfg, const Density& rho, const WaveField& psi) {
  return exchange(cfg, rho).cast<Complex>().asDiagonal() * psi;
}

/// Radius of the n-ball holding one particle at density rho.
inline double wigner_seitz_radius(double rho, int dimension) {
  switch (dimension) {
    case 1: return 1.0 / (2.0 * rho);
    case 2: return std::sqrt(1.0 / (std::numbers::pi * rho));
    default: return std::cbrt(3.0 / (4.0 * std::numbers::pi * rho));
  }
}

/// Wigner form V_c = -a / (r_s + b); |V_c| <= a/b.
inline RealField correlation(const PotentialConfig& cfg, const Density& rho) {
  return rho.unaryExpr([&](double r) {
    if (!(r > 0.0)) return 0.0;
    return -cfg.correlation_a / (wigner_seitz_radius(r, cfg.dimension) + cfg.correlation_b);
  });
}

/// d(V_x + V_c)/d rho for the enabled terms. Returns 0 where rho = 0, which is
/// the limit of the product with rho.
inline RealField vxc_rho_derivative(const PotentialConfig& cfg, const Density& rho) {
  return rho.unaryExpr([&](double r) {
    if (!(r > 0.0)) return 0.0;
    double d = 0.0;
    if (cfg.exchange) d += cfg.exchange_c * cfg.exchange_beta * std::pow(r, cfg.exchange_beta - 1.0);
    if (cfg.correlation) {
      const double rs = wigner_seitz_radius(r, cfg.dimension);
      const double den = rs + cfg.correlation_b;
      d += -cfg.correlation_a * rs / (cfg.dimension * r * den * den);
    }
    return d;
  });
}

/// Kohn-Sham potential V = V_H + V_x + V_c restricted to the enabled terms.
inline RealField ks_potential(const PotentialConfig& cfg, const CoulombKernel& kernel,
                              const Density& rho) {
  RealField v = RealField::Zero(rho.size());
  if (cfg.hartree) v += hartree(kernel, rho);
  if (cfg.exchange) v += exchange(cfg, rho);
  if (cfg.correlation) v += correlation(cfg, rho);
  return v;
}

inline RealField external(const PotentialConfig& cfg, double u_value) {
  return cfg.confinement + u_value * cfg.control_shape;
}

/// Pointwise Lipschitz constant of psi -> c rho^beta psi on the ball |psi| <= radius.
inline double exchange_lipschitz(const PotentialConfig& cfg, double radius) {
  if (!cfg.exchange) return 0.0;
  return std::abs(cfg.exchange_c) * (1.0 + 2.0 * cfg.exchange_beta) *
         std::pow(radius, 2.0 * cfg.exchange_beta);
}

/// Global pointwise Lipschitz constant of psi -> V_c(rho) psi.
inline double correlation_lipschitz(const PotentialConfig& cfg) {
  if (!cfg.correlation) return 0.0;
  const double ab = cfg.correlation_a / cfg.correlation_b;
  return ab + ab / (2.0 * cfg.dimension);
}

// ---------------------------------------------------------------------------
// Field presets for V_0 and V_u.

struct FieldPreset {
  std::string kind = "zero";  // zero | harmonic | well | dipole | file
  double strength = 0.0;
  double width = 1.0;
  std::vector<double> center;  // defaults to the box center
  std::string file;

  bool operator==(const FieldPreset&) const = default;
};

inline RealField read_field_file(const std::string& path, int expected) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("field file: cannot open " + path);
  std::vector<double> values;
  std::string token;
  while (in >> token) {
    std::replace(token.begin(), token.end(), ',', ' ');
    std::istringstream ss(token);
    double v;
    while (ss >> v) values.push_back(v);
  }
  if (static_cast<int>(values.size()) != expected)
    throw std::runtime_error("field file: " + path + " has " + std::to_string(values.size()) +
                             " values, grid has " + std::to_string(expected) + " nodes");
  return Eigen::Map<const RealField>(values.data(), expected);
}

inline RealField make_field(const SpectralBasis& basis, const FieldPreset& p) {
  const int n = basis.dimension();
  RealField f = RealField::Zero(basis.node_count());
  if (p.kind == "zero") return f;
  if (p.kind == "file") return read_field_file(p.file, basis.node_count());

  std::array<double, 3> c{0, 0, 0};
  for (int i = 0; i < n; ++i)
    c[i] = p.center.empty() ? 0.5 * basis.spec().lengths[i] : p.center.at(i);
  for (int q = 0; q < basis.node_count(); ++q) {
    const auto x = basis.node(q);
    double r2 = 0.0;
    for (int i = 0; i < n; ++i) r2 += (x[i] - c[i]) * (x[i] - c[i]);
    if (p.kind == "harmonic") {
      f[q] = 0.5 * p.strength * p.strength * r2;
    } else if (p.kind == "well") {
      f[q] = -p.strength * std::exp(-r2 / (2.0 * p.width * p.width));
    } else if (p.kind == "dipole") {
      f[q] = p.strength * (x[0] - c[0]);
    } else {
      throw std::invalid_argument("field preset: unknown kind '" + p.kind + "'");
    }
  }
  return f;
}

}  // namespace tdks
