#pragma once

#include <complex>
#include <functional>
#include <string>

#include <Eigen/Dense>

#include "pekar/radial_ops.hpp"

namespace pekar {

using Cplx = std::complex<double>;
using DMat = Eigen::MatrixXd;
using DVec = Eigen::VectorXd;

// Fourier-cube orthonormal system: modes with Fourier support on disjoint
// half-open cubes C_z = [z - l, z + l)^3, z in 2l Z^3 \ {0}, C_z inside the
// ball of radius Lambda, with spectral weight 1/|k| and per-cube norm
// constants c_z = int_{C_z} |k|^{-2} dk.
//
// Real modes come in conjugate pairs: for each lexicographically positive
// center z the cosine-type and sine-type combinations of (e_z, e_{-z}).
class CubeBasis {
 public:
  CubeBasis(double lambda, double ell, Vec3 shift, int max_modes = 5000);

  double lambda() const { return lambda_; }
  double ell() const { return ell_; }
  const Vec3& shift() const { return shift_; }
  int n_pairs() const { return static_cast<int>(centers_.size()); }
  int n_complex() const { return 2 * n_pairs(); }
  int n_real() const { return 2 * n_pairs(); }
  const Vec3& center(int pair) const { return centers_[pair]; }
  double norm_const(int pair) const { return c_[pair]; }
  int quad_order(int pair) const { return order_[pair]; }

  // complex coefficient <e_z | f> for the representative center of a pair,
  // where fhat evaluates the unitary Fourier transform of f
  Cplx coeff(int pair, const std::function<Cplx(const Vec3&)>& fhat) const;

  // coefficients of the interaction w_x in the shifted system:
  // <e_{y,z} | w_x> = (2 pi^2 c_z)^{-1/2} int_{C_z} e^{i k (y - x)} / |k|^2
  Cplx coeff_w(int pair, const Vec3& x) const;

  // real-mode coefficient vector of a real function given its Fourier side
  DVec real_coeffs(const std::function<Cplx(const Vec3&)>& fhat) const;

  // sum over the tensor Gauss rule of one cube: callback gets (k, weight)
  void for_each_node(int pair, const std::function<void(const Vec3&, double)>& fn) const;
  // same nodes with the 1/|k|^2 factor folded into the weight
  void for_each_node_ik2(int pair, const std::function<void(const Vec3&, double)>& fn) const;

  void save_manifest(const std::string& path) const;

  // diagnostic: Gram matrix of the real modes evaluated by quadrature at a
  // refinement level above the stored rule (identity up to quadrature error)
  DMat gram_refined() const;

 private:
  double lambda_, ell_;
  Vec3 shift_;
  std::vector<Vec3> centers_;  // lexicographically positive representatives
  std::vector<double> c_;
  std::vector<int> order_;
};

// ---- projections of named fields -------------------------------------------

// radial channel-0 Fourier profile with cubic interpolation on the DST grid
class RadialFourierProfile {
 public:
  explicit RadialFourierProfile(const RadialFunction& f);
  RadialFourierProfile(std::vector<double> fhat, double dk);
  double operator()(double k) const;
  double dk() const { return dk_; }

 private:
  std::vector<double> fhat_;
  double dk_;
};

struct FieldProjection {
  DVec coeffs;       // real-mode coefficients
  double norm2_in;   // |Pi f|^2
  double norm2_full; // the supplied full-space |f|^2
  double residual;   // |(1 - Pi) f|
};

// projection of a translated radial field f(. - x)
FieldProjection project_field(const CubeBasis& basis, const RadialFourierProfile& prof,
                              const Vec3& x, double norm2_full);

// projection of the partial derivative d/dx_axis of a radial field
FieldProjection project_field_gradient(const CubeBasis& basis, const RadialFourierProfile& prof,
                                       int axis, double norm2_full);

// ---- norm-gap machinery ------------------------------------------------------

// |Pi_Lambda w_x - Pi^y_{Lambda, l} w_x| via the Pythagoras route (streamed
// over cubes, no basis storage; usable far beyond the dense-basis cap)
double norm_gap(double lambda, double ell, double dist);

// independent route: per-cube quadrature of the squared modulus of the
// spectral difference plus the uncovered-annulus mass
double norm_gap_oracle(double lambda, double ell, double dist, int order = 12);

struct GapSweepRow {
  double lambda, ell, dist, gap;
};

struct GapSweepReport {
  std::vector<GapSweepRow> rows;
  LineFit ell_fit;        // log gap vs log ell at dist = 0 (expected 1/2)
  LineFit dist_fit;       // log residual-gap vs log dist (expected 1)
  double bound_constant;  // max gap / (dist l sqrt(Lambda) + sqrt(l))
  bool fit_degenerate = false;
};

GapSweepReport norm_gap_experiment(const std::vector<double>& lambdas,
                                   const std::vector<double>& ells,
                                   const std::vector<double>& dists,
                                   const std::string& csv_path = "");

// ---- localized Gram operators ------------------------------------------------

// Gram matrix 16 pi int_{B_radius(x0)} h_n h_m over real modes, where
// h = (-Lap)^{-1/2} (mode); A = sqrt(G) is the localized test operator.
DMat interior_gram(const CubeBasis& basis, const Vec3& x0, double radius);

// ball-restricted Gram diagonal only (cheap; drives HS-norm sweeps)
DVec interior_gram_diagonal(const CubeBasis& basis, const Vec3& x0, double radius);

// diagonal of the full-space Gram (disjoint spectra make it diagonal)
DVec total_gram_diagonal(const CubeBasis& basis);

// exterior Gram G_total - G_interior(0, r); PSD up to quadrature tolerance
DMat far_gram(const CubeBasis& basis, double r);

// HS norms of the exterior operators A_{>= r} for a list of radii
std::vector<double> exterior_hs_profile(const CubeBasis& basis, const std::vector<double>& radii);

double hs_norm(const DMat& gram);    // sqrt(tr G)
double op_norm(const DMat& gram);    // sqrt(max eigenvalue)

// tabulate h_lambda = (-Lap)^{-1/2}(sum lambda_n mode_n) on a tensor grid;
// result flattened as ((ix * ny) + iy) * nz + iz
std::vector<double> tabulate_mode_field(const CubeBasis& basis, const DVec& lambda,
                                        const std::vector<double>& ax,
                                        const std::vector<double>& ay,
                                        const std::vector<double>& az);

// diamond norm of a coordinate vector: sup over centers of |A_x lambda|,
// evaluated on a center grid plus golden refinement
double diamond_norm_coords(const CubeBasis& basis, const DVec& lambda,
                           double scan_radius = 4.0, double step = 0.5);

// ---- projected interaction tail ----------------------------------------------

// exact radial profile (Pi_K w_0)(r) = pi^{-3/2} (1 - cos(K r)) / r^2
double projected_w_radial(double K, double r);

// L2 mass of Pi_K w_0 outside the ball of radius r (1D quadrature)
double projected_w_tail(double K, double r);

// full-space norm^2 of Pi_K w_0 computed from the position-space profile
double projected_w_norm2_position(double K);

}  // namespace pekar
