#pragma once

#include "pekar/flatten.hpp"

namespace pekar {

// ---- local operator bound: V^2 against the diamond norm ----------------------

struct OperatorBoundReport {
  int samples = 0;
  double max_ratio = 0.0;       // <Vu,Vu> / (|V|_dia^2 |(1-Lap)u|^2)
  double calibration = 0.0;     // ratio bound from the calibration half
  int violations = 0;           // fresh samples above the calibrated constant
};

OperatorBoundReport operator_bound_audit(int samples, uint64_t seed, double safety = 1.5);

// ---- quadratic expansion / lower bound / coercivity audits --------------------

struct QuadraticAuditConfig {
  double lambda = 0.9;
  double ell = 0.08;
  int l_max = 8;
  int M = 60;
  int samples = 580;
  int calibration_samples = 100;
  uint64_t seed = 2026;
  double safety = 2.0;        // calibrated-constant inflation
  double diamond_min = 0.02;
  double diamond_max = 0.18;  // scan ceiling for |V_xi|_dia
  int box_n = 48;
  double box_half_width = 13.0;
  double eps54_frac = 0.45;   // eps for the lower bound, fraction of delta_*
  double t_margin = 0.75;     // require |t| < margin * eps
  double kappa_cut_sample = 1e-2;
  std::string csv_path;
};

struct QuadraticAuditReport {
  int samples = 0;
  int excluded_t = 0;       // |t| precondition failed
  int excluded_minim = 0;   // displacement minimization failed
  double c52 = 0.0;         // calibrated expansion constant
  double floor52 = 0.0;     // declared measurement floor of the gap
  double max_ratio52 = 0.0;
  int violations52 = 0;
  double c52_clean = 0.0;   // constant over the floor-dominating subset
  int clean_samples = 0;
  int violations52_clean = 0;
  double C54 = 0.0;         // calibrated lower-bound constant
  double max_ratio54 = 0.0;
  int violations54 = 0;
  double Ccoer = 0.0;       // calibrated coercivity constant
  double max_ratio_coer = 0.0;
  int violations_coer = 0;
  double delta0_first_failure = 0.0;  // diamond radius where the expansion
                                      // constant first exceeds the calibration
  double degenerate_direction_cubic = 0.0;  // |F - e| along a flat direction
  double degenerate_direction_quad = 0.0;   // its vanishing quadratic form
};

QuadraticAuditReport quadratic_bound_audit(const QuadraticAuditConfig& cfg,
                                           const PekarSolution& sol,
                                           const HessianSpectrum& spec);

// ---- trace convergence ladder --------------------------------------------------

struct TraceLadderConfig {
  std::vector<std::pair<double, double>> bases = {{0.9, 0.08}, {1.05, 0.065}, {1.2, 0.055}};
  std::vector<double> eps_ladder = {0.6, 0.3, 0.15};  // fractions of delta_*
  double eps_ref_frac = 0.3;
  int l_max = 8;
  int M = 60;
  double kappa_cut = 1e-4;
};

struct TraceLadderReport {
  double trace_H = 0.0;
  std::vector<double> eps_values;         // absolute eps on the finest basis
  std::vector<double> sup_trace_eps;      // sup over the t sample of Tr_Pi
  std::vector<double> eps_increments;     // |T(eps) - T(eps/2)|, must shrink
  std::vector<double> basis_modes;        // refinement ladder sizes
  std::vector<double> sup_dist_basis;     // sup_t |Tr_Pi - Tr H| at eps_ref
  bool eps_monotone = false;
  bool basis_monotone = false;
};

TraceLadderReport trace_convergence_ladder(const TraceLadderConfig& cfg,
                                           const PekarSolution& sol,
                                           const HessianSpectrum& spec);

}  // namespace pekar
