#pragma once

#include <Eigen/Dense>

#include "pekar/pekar_solver.hpp"

namespace pekar {

using DMat = Eigen::MatrixXd;
using DVec = Eigen::VectorXd;

// Angular-momentum channel block of the curvature operators at the minimizer:
//   K = 16 pi (-Lap)^{-1/2} psi (reduced resolvent of H_V at mu) psi (-Lap)^{-1/2}
//   L = 16 pi (-Lap)^{-1/2} psi (1 - Lap)^{-1}                 psi (-Lap)^{-1/2}
// assembled in an orthonormal oscillator basis of size M per channel.
struct ChannelBlock {
  int l_ang = 0;
  DMat K;               // M x M, symmetric
  DMat L;               // M x M, symmetric
  DVec kappa;           // eigenvalues of K, descending
  DMat kappa_vecs;      // columns: eigenvectors in the oscillator basis
  DVec ell_vals;        // eigenvalues of L, descending
  DMat ell_vecs;
  double sym_defect = 0.0;
  double spectral_gap = 0.0;  // distance of the channel Hamiltonian to mu
};

struct HessianSpectrum {
  std::vector<ChannelBlock> blocks;  // index = channel l
  int M = 0;
  // oscillator basis per channel: reduced waves u_n(r) on the grid,
  // orthonormal under 4 pi dr sum
  std::vector<std::vector<std::vector<double>>> basis_u;
  GridPtr grid;

  const ChannelBlock& block(int l) const { return blocks.at(l); }
  int l_max() const { return static_cast<int>(blocks.size()) - 1; }

  // radial profile of a basis-coefficient vector in channel l
  RadialFunction profile(int l, const DVec& coef) const;

  void save_spectrum(const std::string& path) const;
};

// assemble channel blocks l = 0..l_max with M oscillator functions each
HessianSpectrum assemble_KL(const PekarSolution& sol, int l_max, int M);

struct CorrectionResult {
  double trace = 0.0;         // Tr[1 - sqrt(H)] over all channels
  double zero_mode_part = 3.0;
  int zero_modes = 0;         // must be 3 (channel-1 top, multiplicity 3)
  std::vector<double> per_channel;
  int clipped = 0;            // eigenvalues snapped into [0, 1]
};

// Tr[1 - sqrt(1 - K)] with multiplicities 2l+1; the three translation zero
// modes contribute exactly one each; any other eigenvalue above 1 + 1e-3
// is a discretization failure and throws.
CorrectionResult quantum_correction(const HessianSpectrum& spec);

// curvature along a direction by Richardson-extrapolated second differences
// of the full energy functional (radial route, channel-0 directions)
struct FdResult {
  double value = 0.0;
  double cubic_residual = 0.0;  // size of the eps-dependence left after extrapolation
};
FdResult hessian_fd_radial(const PekarSolution& sol, const RadialFunction& direction,
                           double eps = 0.2);

// independent traces of L: a Fourier-side kernel integral and a position-side
// kernel integral; both exact 1D reductions, agreeing within quadrature error
double trace_L_kernel_route(const PekarSolution& sol);
double trace_L_position_route(const PekarSolution& sol);

// HS norm of the ordered product (1-Lap)^{-1/2}(-Lap)^{-1/2} psi, which has
// the closed value |psi| / (2 sqrt(pi)) in the unitary transform convention
double ordered_hs_norm(const RadialFunction& psi);

}  // namespace pekar
