#pragma once

#include <array>
#include <string>

#include "pekar/radial_ops.hpp"

namespace pekar {

struct PekarSolution {
  RadialFunction psi;   // electron ground state, |psi| = 1, psi >= 0
  RadialFunction phi;   // optimal field, phi = 2 sqrt(pi) (-Lap)^{-1/2} psi^2
  RadialFunction V;     // V_phi, the self-consistent potential
  double e_pek = 0.0;   // minimal energy
  double mu_pek = 0.0;  // ground state of -Lap + V, mu = e - |phi|^2
  double kinetic = 0.0;
  double coupling = 0.0;  // double Coulomb energy D(rho, rho)
  double residual = 0.0;  // |(-Lap + V - mu) psi|
  int iterations = 0;

  void save(const std::string& path) const;
  static PekarSolution load(const std::string& path);
};

// self-consistent iteration psi -> ground(-Lap + V_{phi_psi}) with linear
// mixing of the density; throws on iteration cap or detected oscillation.
PekarSolution solve_pekar(GridPtr grid, double tol = 1e-9, double mixing = 0.5,
                          int max_iter = 400);

// mass of |phi|^2 in the slab {t <= x_axis <= t + eps}; exact for radial phi
double slab_mass(const RadialFunction& phi, double t, double eps, int axis = 0);

// concentration functionals P_i^eps evaluated on |phi_x|^2 for the
// translated minimizer field; returns (P_1, P_2, P_3).
std::array<double, 3> concentration_functional(const PekarSolution& sol, const Vec3& x,
                                               double eps);

// |<phi, phi(.-x)>| autocorrelation of the minimizer field at shift s = |x|
double field_autocorrelation(const PekarSolution& sol, double s);

}  // namespace pekar
