#pragma once

#include <vector>

#include "pekar/grid.hpp"

namespace pekar {

// Conventions (fixed once, used everywhere):
//   unitary Fourier transform; interaction w_x(x') = pi^{-3/2}|x'-x|^{-2}
//   with \hat w_x(k) = e^{-ik.x} / (sqrt(2 pi^2) |k|);
//   V_phi := -2 Re <w_.|phi> = -4 sqrt(pi) (-Laplace)^{-1/2} Re phi.
inline constexpr double kSqrtPi = 1.7724538509055160273;
inline constexpr double kFieldToPotential = 4.0 * kSqrtPi;  // V_phi = -4 sqrt(pi) (-Lap)^{-1/2} phi
inline constexpr double kDensityToField = 2.0 * kSqrtPi;    // phi_rho = 2 sqrt(pi) (-Lap)^{-1/2} rho

// <w_x|w_y> evaluated by radial Fourier quadrature; equals 1/|x-y|.
double coulomb_overlap(const Vec3& x, const Vec3& y);

// channel-0 spherical Fourier transform of a radial profile via DST-I of
// r f(r): returns profile fhat(k_m) on k_m = m pi / r_max, m = 1..n.
std::vector<double> radial_fourier(const RadialFunction& f);
RadialFunction radial_fourier_inverse(const std::vector<double>& fhat, GridPtr grid);

// (-Laplace)^(-s/2) of a channel-0 radial profile (s = 1 or 2) on the
// Dirichlet box (DST route); accurate only when the image decays inside
// the box. Long-range images (the 1/r^2 tails of half-inverses) need the
// free-space kernel below.
RadialFunction inv_laplace_pow(const RadialFunction& f, double s);

// inverse-square tail continuation f(r) ~ c2/r^2 + c4/r^4 + c6/r^6 fitted
// on the outer window of the grid; all coefficients zero when the tabulated
// profile does not settle into that class.
struct TailFit {
  double c2 = 0.0, c4 = 0.0, c6 = 0.0;
  bool valid = false;
  double eval(double r) const {
    double ir2 = 1.0 / (r * r);
    return ir2 * (c2 + ir2 * (c4 + ir2 * c6));
  }
};
TailFit fit_inverse_square_tail(const RadialFunction& f);

// grid norm^2 plus the analytic tail contribution past r_max
double norm2_with_tail(const RadialFunction& f);

// free-space (-Laplace)^{-1/2} for channel-0 radial profiles:
// g(r) = (1/(pi r)) int s f(s) log((r+s)/|r-s|) ds, with analytic handling
// of the log singularity and the fitted tail. O(n^2) but exact in the tail.
RadialFunction inv_sqrt_laplace_free(const RadialFunction& f);

// V_phi = -4 sqrt(pi) (-Laplace)^{-1/2} phi for radial real phi (DST route).
RadialFunction potential_of_field(const RadialFunction& phi);

// independent route: V = -2 rho * 1/|x| by exact cumulative quadrature
RadialFunction coulomb_potential_of_density(const RadialFunction& rho);

// optimal classical field of a density: phi = 2 sqrt(pi) (-Laplace)^{-1/2} rho
RadialFunction field_of_density(const RadialFunction& rho);

// sup over unit-ball centers of local L2 mass; radial profiles only.
double diamond_norm(const RadialFunction& V);

struct SchrodingerSpectrum {
  int l_ang = 0;
  std::vector<double> eigenvalues;          // ascending
  std::vector<RadialFunction> eigenfunctions;  // f = u/r, orthonormal in inner()
};

// lowest n_states eigenpairs of -d^2/dr^2 + l(l+1)/r^2 + V on the reduced
// line with Dirichlet ends (Sturm bisection + inverse iteration).
SchrodingerSpectrum schrodinger_ground(const RadialFunction& V, int l_ang, int n_states = 10);

// F(phi) = |phi|^2 + inf spec(-Laplace + V_phi) for radial phi; the infimum
// is taken over channels 0 and 1 (0 wins for attractive radial wells).
double pekar_functional(const RadialFunction& phi);

// discrete kinetic form matching the tridiagonal Hamiltonian
double kinetic_energy(const RadialFunction& f, int l_ang = 0);

// --- generic tridiagonal tools (shared with oracles/tests) ------------------

struct Tridiag {
  std::vector<double> diag;
  std::vector<double> off;  // size n-1
};

// lowest n_eigs eigenvalues by Sturm bisection; optional eigenvectors by
// inverse iteration. Vectors are orthonormal in the plain dot product.
void tridiag_lowest(const Tridiag& T, int n_eigs, std::vector<double>& vals,
                    std::vector<std::vector<double>>* vecs);

// solve (T - shift) x = b with optional deflation of a known vector q
// (x kept orthogonal to q; used for reduced resolvents at the ground state).
std::vector<double> tridiag_solve_deflated(const Tridiag& T, double shift,
                                           const std::vector<double>& b,
                                           const std::vector<double>* q);

Tridiag radial_hamiltonian(const RadialFunction& V, int l_ang);

// --- spherical Bessel transform (general channel) ---------------------------

// Transform engine between the radial grid and a uniform k-grid
// k_m = m dk, m = 1..n_k. For l = 0 this is the exact DST pairing.
class BesselEngine {
 public:
  BesselEngine(GridPtr grid, int n_k, double k_max, int l_max);

  int n_k() const { return n_k_; }
  double k(int m) const { return (m + 1) * dk_; }
  int l_max() const { return l_max_; }
  const RadialGrid& grid() const { return *grid_; }

  // columns of F are radial profiles (values on grid nodes); returns k-space
  // profiles, same column layout. `forward` maps r -> k; `inverse` k -> r.
  std::vector<std::vector<double>> forward(int l, const std::vector<std::vector<double>>& cols) const;
  std::vector<std::vector<double>> inverse(int l, const std::vector<std::vector<double>>& cols) const;

  // (-Laplace)^{-1/2} in channel l: forward, divide by k, inverse.
  std::vector<std::vector<double>> inv_sqrt_laplace(int l, const std::vector<std::vector<double>>& cols) const;

 private:
  void apply(int l, bool fwd, const std::vector<std::vector<double>>& in,
             std::vector<std::vector<double>>& out) const;
  GridPtr grid_;
  int n_k_;
  double dk_;
  int l_max_;
};

}  // namespace pekar
