#pragma once
// Uniformly sampled control u on [0,T] with its discrete H1(0,T) geometry.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace tdks {

class ControlSignal {
 public:
  ControlSignal() = default;

  ControlSignal(double horizon, std::vector<double> samples)
      : horizon_(horizon), samples_(std::move(samples)) {
    if (!(horizon_ > 0.0)) throw std::invalid_argument("control: horizon must be positive");
    if (samples_.size() < 2) throw std::invalid_argument("control: need at least two samples");
    for (double v : samples_)
      if (!std::isfinite(v)) throw std::invalid_argument("control: samples must be finite");
  }

  static ControlSignal zero(double horizon, int steps) {
    return ControlSignal(horizon, std::vector<double>(steps + 1, 0.0));
  }

  template <class F>
  static ControlSignal sampled(double horizon, int steps, F&& f) {
    std::vector<double> s(steps + 1);
    for (int i = 0; i <= steps; ++i) s[i] = f(horizon * i / steps);
    return ControlSignal(horizon, std::move(s));
  }

  double horizon() const { return horizon_; }
  int steps() const { return static_cast<int>(samples_.size()) - 1; }
  double dt() const { return horizon_ / steps(); }
  const std::vector<double>& samples() const { return samples_; }
  bool empty() const { return samples_.empty(); }

  Eigen::VectorXd vector() const {
    return Eigen::Map<const Eigen::VectorXd>(samples_.data(), samples_.size());
  }

  /// Piecewise-linear interpolation, clamped to [0,T].
  double operator()(double t) const {
    if (samples_.empty()) return 0.0;
    const double s = std::clamp(t / dt(), 0.0, static_cast<double>(steps()));
    const int i = std::min(static_cast<int>(s), steps() - 1);
    const double a = s - i;
    return (1.0 - a) * samples_[i] + a * samples_[i + 1];
  }

  double sup_abs() const {
    double m = 0.0;
    for (double v : samples_) m = std::max(m, std::abs(v));
    return m;
  }

  /// Trapezoid weights of the sample grid.
  Eigen::VectorXd weights() const {
    Eigen::VectorXd w = Eigen::VectorXd::Constant(samples_.size(), dt());
    w[0] = w[w.size() - 1] = 0.5 * dt();
    return w;
  }

  double l2_norm_sq() const {
    const Eigen::VectorXd u = vector();
    return (weights().array() * u.array().square()).sum();
  }

  /// Forward-difference approximation of ||u'||^2.
  double seminorm_sq() const {
    double acc = 0.0;
    for (int i = 0; i < steps(); ++i) {
      const double d = samples_[i + 1] - samples_[i];
      acc += d * d / dt();
    }
    return acc;
  }

  double h1_norm_sq() const { return l2_norm_sq() + seminorm_sq(); }

  /// Gram matrix G of the discrete H1 inner product applied to v:
  /// <a,b>_H1 = a^T G b, G = diag(weights) + stiffness / dt.
  Eigen::VectorXd gram_apply(const Eigen::VectorXd& v) const {
    const Eigen::Index n = v.size();
    Eigen::VectorXd out = weights().cwiseProduct(v);
    const double k = 1.0 / dt();
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
      const double d = k * (v[i] - v[i + 1]);
      out[i] += d;
      out[i + 1] -= d;
    }
    return out;
  }

  /// Solves G x = b (tridiagonal, natural boundary conditions).
  Eigen::VectorXd gram_solve(const Eigen::VectorXd& b) const {
    const Eigen::Index n = b.size();
    const double k = 1.0 / dt();
    const Eigen::VectorXd w = weights();
    Eigen::VectorXd diag(n), rhs = b;
    for (Eigen::Index i = 0; i < n; ++i)
      diag[i] = w[i] + k * ((i > 0 ? 1.0 : 0.0) + (i + 1 < n ? 1.0 : 0.0));
    // Thomas algorithm with constant off-diagonal -k.
    for (Eigen::Index i = 1; i < n; ++i) {
      const double f = -k / diag[i - 1];
      diag[i] -= f * -k;
      rhs[i] -= f * rhs[i - 1];
    }
    Eigen::VectorXd x(n);
    x[n - 1] = rhs[n - 1] / diag[n - 1];
    for (Eigen::Index i = n - 2; i >= 0; --i) x[i] = (rhs[i] + k * x[i + 1]) / diag[i];
    return x;
  }

  ControlSignal axpy(double a, const Eigen::VectorXd& direction) const {
    std::vector<double> s(samples_);
    for (std::size_t i = 0; i < s.size(); ++i) s[i] += a * direction[static_cast<Eigen::Index>(i)];
    return ControlSignal(horizon_, std::move(s));
  }

 private:
  double horizon_ = 1.0;
  std::vector<double> samples_;
};

}  // namespace tdks
