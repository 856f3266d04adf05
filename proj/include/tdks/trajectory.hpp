#pragma once
// Time-ordered coefficient snapshots with per-step diagnostics, and CSV export.

#include "tdks/domain_basis.hpp"

#include <algorithm>
#include <iomanip>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <vector>

namespace tdks {

struct StepDiagnostics {
  double l2 = 0.0;
  double h1 = 0.0;
  double re_b = 0.0;
  double im_b = 0.0;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<CoefficientState> states;
  std::vector<StepDiagnostics> diagnostics;

  std::size_t size() const { return states.size(); }
  bool empty() const { return states.empty(); }
  double start() const { return times.front(); }
  double end() const { return times.back(); }

  /// Piecewise-linear interpolation in coefficient space.
  CoefficientState at(double t) const {
    if (states.empty()) throw std::logic_error("trajectory: empty");
    if (states.size() == 1) return states.front();
    const double slack = 1e-9 * std::max(1.0, std::abs(end() - start()));
    if (t < start() - slack || t > end() + slack)
      throw std::out_of_range("trajectory: time outside the stored interval");
    auto it = std::upper_bound(times.begin(), times.end(), t);
    std::size_t i = it == times.begin() ? 0 : static_cast<std::size_t>(it - times.begin()) - 1;
    i = std::min(i, times.size() - 2);
    const double a = std::clamp((t - times[i]) / (times[i + 1] - times[i]), 0.0, 1.0);
    return (1.0 - a) * states[i] + a * states[i + 1];
  }

  /// Time-integrated squared L2 norm (trapezoid).
  double y_norm_sq() const {
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < states.size(); ++i)
      acc += 0.5 * (times[i + 1] - times[i]) *
             (states[i].squaredNorm() + states[i + 1].squaredNorm());
    return acc;
  }
};

/// Y-norm distance between two trajectories on the same time grid, after
/// embedding both into `target` by zero padding.
inline double y_distance(const SpectralBasis& basis_a, const Trajectory& a,
                         const SpectralBasis& basis_b, const Trajectory& b,
                         const SpectralBasis& target) {
  if (a.size() != b.size()) throw std::invalid_argument("y_distance: time grids differ");
  double acc = 0.0;
  double prev = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double cur =
        (embed(basis_a, target, a.states[i]) - embed(basis_b, target, b.states[i])).squaredNorm();
    if (i > 0) acc += 0.5 * (a.times[i] - a.times[i - 1]) * (prev + cur);
    prev = cur;
  }
  return std::sqrt(acc);
}

/*
 * Snapshot CSV. Columns: t, then for particle j = 0..N-1 and mode k = 0..m-1
 * (basis order) the pair re_j_k, im_j_k, then l2, h1, re_b, im_b.
 */
inline void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
  if (traj.empty()) return;
  const auto m = traj.states.front().rows();
  const auto n = traj.states.front().cols();
  out << "t";
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index k = 0; k < m; ++k) out << ",re_" << j << '_' << k << ",im_" << j << '_' << k;
  out << ",l2,h1,re_b,im_b\n";
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (std::size_t i = 0; i < traj.size(); ++i) {
    out << traj.times[i];
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index k = 0; k < m; ++k)
        out << ',' << traj.states[i](k, j).real() << ',' << traj.states[i](k, j).imag();
    const StepDiagnostics d = i < traj.diagnostics.size() ? traj.diagnostics[i] : StepDiagnostics{};
    out << ',' << d.l2 << ',' << d.h1 << ',' << d.re_b << ',' << d.im_b << '\n';
  }
}

/// Diagnostics time series: t, l2, h1, re_b, im_b.
inline void write_diagnostics_csv(std::ostream& out, const Trajectory& traj) {
  out << "t,l2,h1,re_b,im_b\n";
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (std::size_t i = 0; i < traj.size() && i < traj.diagnostics.size(); ++i) {
    const auto& d = traj.diagnostics[i];
    out << traj.times[i] << ',' << d.l2 << ',' << d.h1 << ',' << d.re_b << ',' << d.im_b << '\n';
  }
}

}  // namespace tdks
