#pragma once
// Shared fixtures for the unit tests.

#include "tdks/tdks.hpp"

#include <memory>
#include <random>

namespace tdks::testing {

inline DomainSpec line(int grid = 34, double length = 10.0, int particles = 1, int steps = 200,
                       double horizon = 1.0) {
  DomainSpec s;
  s.dimension = 1;
  s.lengths = {length};
  s.grid_points = {grid};
  s.particles = particles;
  s.steps = steps;
  s.horizon = horizon;
  return s;
}

inline std::shared_ptr<const SpectralBasis> make_basis(const DomainSpec& s, std::vector<int> modes) {
  return std::make_shared<const SpectralBasis>(s, std::move(modes));
}

/// Default functional, softened Coulomb, no external fields.
inline PotentialConfig plain_potential(const SpectralBasis& b, double softening = 1.0) {
  PotentialConfig p;
  p.dimension = b.dimension();
  p.softening = softening;
  p.confinement = RealField::Zero(b.node_count());
  p.control_shape = RealField::Zero(b.node_count());
  return p;
}

inline PotentialConfig free_potential(const SpectralBasis& b) {
  PotentialConfig p = plain_potential(b);
  p.hartree = p.exchange = p.correlation = false;
  return p;
}

/// Well confinement plus a dipole control shape.
inline PotentialConfig well_potential(const SpectralBasis& b, double depth = 1.0) {
  PotentialConfig p = plain_potential(b);
  p.confinement = make_field(b, {"well", depth, 1.5, {}, ""});
  p.control_shape = make_field(b, {"dipole", 1.0, 1.0, {}, ""});
  return p;
}

inline SystemContext context(std::shared_ptr<const SpectralBasis> b, PotentialConfig p,
                             Equation e = Equation::forward) {
  return SystemContext(std::move(b), std::make_shared<const PotentialConfig>(std::move(p)), e);
}

inline CoefficientState unit_mode(const SpectralBasis& b, int k, int particle = 0) {
  CoefficientState d = zero_state(b);
  d(k, particle) = 1.0;
  return d;
}

}  // namespace tdks::testing
