#pragma once

#include <Eigen/Dense>

#include "pekar/util.hpp"

namespace pekar {

using DMat = Eigen::MatrixXd;
using DVec = Eigen::VectorXd;

// diagonal-kernel Gaussian domination of a number-cutoff state's density:
// rho(lambda) <= prefactor * exp(-alpha^2 w |lambda|^2)
struct GaussianDiagonal {
  int n_modes = 0;
  double alpha = 0.0;
  double h = 0.0, h_prime = 0.0;
  double w = 0.0;                // tanh(alpha^{h-h'} / 2)
  double log_geometric = 0.0;    // -N log(1 - e^{-alpha^{h-h'}})
  double log_exponential = 0.0;  // alpha^{2-h'}
  double log_gauss_norm = 0.0;   // (N/2) log(alpha^2 w / pi)

  double log_prefactor() const { return log_geometric + log_exponential + log_gauss_norm; }
};

GaussianDiagonal mehler_density(int n_modes, double alpha, double h, double h_prime);

// deformation query: threshold on |A lambda| with the (1 + |lambda|^2) weight
struct TailQuery {
  DMat A;        // PSD deformation
  double eps;    // threshold
};

// closed-form upper bound on int_{|A lambda| >= eps} (1 + |lambda|^2) rho;
// assembled as prefactor * (w + a^{-2} Tr(1 - (b/w) A^2)^{-1}) /
// (w det sqrt(1 - (b/w) A^2)) * exp(-b eps^2 alpha^2).
double gaussian_tail(const TailQuery& q, const GaussianDiagonal& d, double beta_prime);

// Monte-Carlo estimate of the same integral for the dominating Gaussian
// itself (exact sampler, no Markov chain); returns (estimate, sigma)
std::pair<double, double> gaussian_tail_mc(const TailQuery& q, const GaussianDiagonal& d,
                                           int samples, uint64_t seed);

// exact 1D reduction for a rank-one deformation A = |zeta><zeta| / |zeta|
double gaussian_tail_rank1(const DVec& zeta, double eps, const GaussianDiagonal& d);

struct CondensationTailConfig {
  int n_modes = 16;
  std::vector<double> alphas = {2.0, 2.83, 4.0, 5.66, 8.0};
  double h = 0.1;
  double eps = 0.35;
  double thermal_mean = 0.6;  // mean particle number per mode before cutoff
  int trials = 60000;
  uint64_t seed = 1;
  std::vector<DMat> gram_ops;  // local Gram roots defining the diamond norm
  DVec zeta;                   // direction for the linear-functional tail
};

struct CondensationTailReport {
  std::vector<double> alphas;
  std::vector<double> tail_euclid;   // P(|lambda| >= eps) weighted by 1+|l|^2
  std::vector<double> tail_diamond;  // with max_z |A_z lambda| in place of |lambda|
  std::vector<double> tail_zeta;     // with |<zeta|lambda>|
  LineFit fit_euclid;                // log tail vs alpha^2
  LineFit fit_diamond;
  LineFit fit_zeta;
  int diamond_exceeds_euclid = 0;    // must stay 0 when sup|A_z| <= 1
};

CondensationTailReport condensation_tail_experiment(const CondensationTailConfig& cfg);

}  // namespace pekar
