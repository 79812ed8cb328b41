#pragma once

#include "pekar/cube_basis.hpp"
#include "pekar/pekar_solver.hpp"

namespace pekar {

// Dirichlet box [-L, L]^3 with a sine-spectral Laplacian; ground states of
// -Lap + V by preconditioned Rayleigh iteration. One instance owns the FFTW
// plans and scratch; calls are serialized per instance.
class Box3D {
 public:
  Box3D(int n, double half_width);
  ~Box3D();
  Box3D(const Box3D&) = delete;
  Box3D& operator=(const Box3D&) = delete;

  int n() const { return n_; }
  double half_width() const { return L_; }
  double h() const { return h_; }
  double coord(int i) const { return -L_ + (i + 1) * h_; }
  std::size_t points() const { return static_cast<std::size_t>(n_) * n_ * n_; }
  std::size_t index(int i, int j, int k) const {
    return (static_cast<std::size_t>(i) * n_ + j) * n_ + k;
  }

  // lowest eigenvalue of -Lap + V; optional warm start (kept internally for
  // subsequent calls); residual-controlled
  double ground_state(const std::vector<double>& V, double tol = 1e-9, int max_iter = 400);
  const std::vector<double>& last_eigenvector() const { return x_; }
  void reset_warm_start() { have_warm_ = false; }

  // V^Pek around `center` from the radial solution, with the exact Coulomb
  // continuation past the tabulated range
  std::vector<double> potential_from_solution(const PekarSolution& sol, const Vec3& center) const;

  // add the potential of a cube-basis field: V += -4 sqrt(pi) h_lambda
  void add_mode_potential(const CubeBasis& basis, const DVec& lambda,
                          std::vector<double>& V) const;

 private:
  void apply_H(const std::vector<double>& V, const double* in, double* out);
  void precondition(const double* in, double* out, double sigma);
  void dst3(double* data);

  int n_;
  double L_, h_;
  void* plan_ = nullptr;  // fftw_plan
  std::vector<double> buf_;
  std::vector<double> k2_;  // spectral multipliers, flattened
  std::vector<double> x_;
  bool have_warm_ = false;
};

// energy functional |phi|^2 + inf spec(-Lap + V_phi) for phi given as
// (full-space norm^2, tabulated potential); thin wrapper used by the audits
double box_energy(Box3D& box, double phi_norm2, const std::vector<double>& V, double tol = 1e-9);

}  // namespace pekar
