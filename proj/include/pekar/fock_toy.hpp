#pragma once

#include <complex>
#include <functional>

#include <Eigen/Dense>

#include "pekar/measures.hpp"
#include "pekar/util.hpp"

namespace pekar {

using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using DMat = Eigen::MatrixXd;
using DVec = Eigen::VectorXd;

// Truncated bosonic Fock space over M single-particle sites in R^3, with the
// rescaled commutators [a_i, a_j^+] = alpha^{-2} delta_ij on every sector
// below the particle-number truncation n_max.
class ToyFockSpace {
 public:
  ToyFockSpace(std::vector<Vec3> sites, int n_max, double alpha);

  int modes() const { return static_cast<int>(sites_.size()); }
  int n_max() const { return n_max_; }
  double alpha() const { return alpha_; }
  int dim() const { return static_cast<int>(occ_.size()); }
  const std::vector<Vec3>& sites() const { return sites_; }
  const std::vector<std::vector<int>>& occupations() const { return occ_; }
  int total_occupation(int idx) const;

  // annihilation matrix of mode i (rescaled convention: a_i = a_std / alpha)
  const CMat& a(int i) const { return a_[i]; }
  CMat a_dagger(int i) const { return a_[i].adjoint(); }
  CMat a_of(const CVec& f) const;  // a(f) = sum conj(f_i) a_i
  CMat number_operator() const;    // N = sum a_i^+ a_i

  // occupation-derived atomic measure of a basis state
  PointMeasure measure_of(int idx) const;

  // diagonal multiplication operator by F(alpha^{-2} sum of site deltas)
  DVec f_hat_diagonal(const std::function<double(const PointMeasure&)>& F) const;

  // index of the basis vector with the given occupations (-1 if truncated)
  int index_of(const std::vector<int>& occ) const;

 private:
  std::vector<Vec3> sites_;
  int n_max_;
  double alpha_;
  std::vector<std::vector<int>> occ_;
  std::vector<CMat> a_;
};

// normally ordered m-body operator sum_{I,J} f_{I,J} a^+_{I1}..a^+_{Im} a_{J1}..a_{Jm}
// for m = 1 (f: M x M) and m = 2 (f: M^2 x M^2, row index (i1*M+i2)).
CMat normal_ordered_f(const ToyFockSpace& fock, int m, const CMat& f);

// both sides of the reordering identity (anti-normal product rewritten as the
// normal product plus contraction terms); returns the max entrywise defect on
// the sectors with total occupation <= n_max - m, where the truncation cannot
// bite.
double wick_reorder_defect(const ToyFockSpace& fock, int m, const CMat& f);

// Weyl operator W_g = exp(alpha^2 (a^+(g) - a(g))); throws when the displaced
// state's truncation tail exceeds tail_tol.
CMat weyl_operator(const ToyFockSpace& fock, const CVec& g, double tail_tol = 1e-8);

// estimated occupation tail mass of the displaced vacuum beyond n_max
double weyl_truncation_tail(const ToyFockSpace& fock, const CVec& g);

struct LowerSymbolStats {
  double total_mass = 0.0;       // MC estimate of the measure's mass
  double total_mass_sigma = 0.0;
  std::vector<std::complex<double>> first_moment;  // int xi dP
  std::vector<std::complex<double>> first_moment_sigma;
  CMat anti_wick_moment;         // int xi_j conj(xi_i) dP
  CMat anti_wick_sigma;
};

// coherent-state (lower-symbol) measure dP/dxi = (alpha^2/pi)^M |<Omega_xi|Psi>|^2
// integrated by importance-sampled Monte Carlo
LowerSymbolStats lower_symbol_stats(const ToyFockSpace& fock, const CVec& psi,
                                    int samples, uint64_t seed);

// normalized coherent state with a-eigenvalues xi (within truncation)
CVec coherent_state(const ToyFockSpace& fock, const CVec& xi);

// pointwise lower-symbol density at xi
double lower_symbol_density(const ToyFockSpace& fock, const CVec& psi, const CVec& xi);

// ground energy of -1/(4 alpha^4) sum d^2/dlambda^2 + lambda^T J lambda:
// sum_i sqrt(j_i) / (2 alpha^2) over the eigenvalues of the PSD matrix J
double quadratic_ground_energy(const DMat& J, double alpha);

// 1D/2D grid-discretized oracle for the same operator
double quadratic_ground_energy_grid(const DMat& J, double alpha, int n_grid = 400,
                                    double box_sigmas = 8.5);

struct ToyBoundReport {
  std::vector<double> alphas;
  std::vector<double> ground_energy;     // inf spec of the toy mode Hamiltonian
  std::vector<double> classical_min;     // min of the classical slice energy
  std::vector<double> scaled_gap;        // 2 alpha^2 (E0 - e_min) + N
  double surrogate = 0.0;                // sum sqrt(h_i) of the slice Hessian
  double trace_form = 0.0;               // N - sum(1 - sqrt(h_i)) consistency value
};

// toy mode Hamiltonian demo: classical energy F over N <= 2 mode amplitudes
// (supplied as a callable), quantum ground state by grid discretization,
// compared with the harmonic surrogate.
ToyBoundReport toy_bound_demo(const std::function<double(const DVec&)>& F, int n_modes,
                              const std::vector<double>& alphas, const DVec& lambda_star,
                              const DMat& hessian, int n_grid = 160, double halfwidth = 1.2);

}  // namespace pekar
