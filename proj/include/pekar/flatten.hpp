#pragma once

#include "pekar/box3d.hpp"
#include "pekar/hessian.hpp"

namespace pekar {

// Coordinates adapted to the manifold of translated minimizers inside the
// cube-mode subspace: the first three directions are the normalized
// projections of the minimizer's gradient, omega(x) tracks their overlap
// with the translated minimizer, and tau subtracts the curved remainder so
// that translated minimizers map into the flat 3-plane.
class FlatteningMap {
 public:
  FlatteningMap(const CubeBasis& basis, const PekarSolution& sol);

  const DMat& span() const { return V_; }  // N x 3, orthonormal columns
  double delta_star() const { return delta_star_; }
  const CubeBasis& basis() const { return *basis_; }

  DVec coeffs_of_translated(const Vec3& x) const;  // Pi phi_x in real modes
  Eigen::Vector3d omega(const Vec3& x) const;
  Eigen::Matrix3d omega_jacobian(const Vec3& x) const;

  // Newton inverse of omega; throws naming delta_star outside the domain
  Vec3 x_of_t(const Eigen::Vector3d& t) const;

  DVec f_coeffs(const Eigen::Vector3d& t) const;  // curved remainder
  DVec tau(const DVec& lambda) const;
  Eigen::Vector3d t_of(const DVec& lambda) const;

  // det of the tau' Jacobian: the structural route (exact up to roundoff)
  // and a finite-difference route at its own tolerance
  double det_tau_jacobian_structural(const Eigen::Vector3d& t) const;
  double det_tau_jacobian_fd(const Eigen::Vector3d& t, double step = 1e-5) const;

  double projection_deficit(const Vec3& x) const;  // |(1 - Pi) phi_x|^2

  // orthonormal basis of the complement of the flat 3-plane (N x (N-3))
  const DMat& complement_basis() const;

 private:
  mutable DMat comp_;
  const CubeBasis* basis_;
  const PekarSolution* sol_;
  RadialFourierProfile prof_;
  double phi_norm2_full_;
  DMat V_;
  double delta_star_ = 0.0;
};

// curvature operators carried into the cube basis by spectral transport
struct TransportedOperators {
  DMat K;
  DMat L;
  int rank_K = 0;
  int rank_L = 0;
  double truncation_error = 0.0;  // operator-norm bound: largest dropped value
  double dropped_weight = 0.0;    // summed dropped spectral weight (trace bias)
};

TransportedOperators transport_operators(const HessianSpectrum& spec, const CubeBasis& basis,
                                         const Vec3& x, double kappa_cut = 1e-4,
                                         double trunc_tol = 1e-3);

struct JResult {
  DMat J;                  // matrix in the complement basis of the flat plane
  std::vector<double> eigenvalues;  // on the complement of the flat 3-plane
  double min_eig = 0.0;
  double trace_form = 0.0;  // Tr_Pi[1 - sqrt J] = 3 + sum (1 - sqrt j)
  bool definitional_branch = false;  // |t| >= eps: J = pi
};

JResult j_operator(const FlatteningMap& flat, const HessianSpectrum& spec,
                   const Eigen::Vector3d& t, double eps, double kappa_cut = 1e-4);

// same with precomputed transported operators at x_t (reused across eps)
JResult j_operator_from(const FlatteningMap& flat, const TransportedOperators& ops,
                        const Eigen::Vector3d& t, double eps);

}  // namespace pekar
