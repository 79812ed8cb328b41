#pragma once

#include <array>
#include <string>
#include <vector>

#include "pekar/util.hpp"

namespace pekar {

// finite weighted atom list on R^3
struct PointMeasure {
  std::vector<Vec3> atoms;
  std::vector<double> weights;

  void add(const Vec3& x, double w) {
    if (w <= 0) throw ComputeError("PointMeasure: weights must be positive");
    atoms.push_back(x);
    weights.push_back(w);
  }
  double total_mass() const {
    double s = 0;
    for (double w : weights) s += w;
    return s;
  }
  std::size_t size() const { return atoms.size(); }

  // marginal along an axis as a 1D weighted measure
  std::vector<std::pair<double, double>> marginal(int axis) const;

  void save_csv(const std::string& path) const;
  static PointMeasure load_csv(const std::string& path);
};

// smooth two-sided cutoff chi^eps(a <= f <= b): C-infinity ramp pair with
// alpha^2 + beta^2 = 1; eps = 0 reproduces the sharp indicator of [a, b].
class SmoothCutoff {
 public:
  SmoothCutoff(double a, double b, double eps);
  double operator()(double f) const;
  static double ramp_alpha(double x);  // 1 on (-inf,-1], 0 on [1,inf)
  static double ramp_beta(double x);   // sqrt(1 - alpha^2)

 private:
  double a_, b_, eps_;
};

// kappa-quantile with the closed-boundary convention: the supremum of all t
// with nu((-inf, t]) <= kappa * nu(R). kappa = 1 gives +infinity.
double quantile(const std::vector<std::pair<double, double>>& nu, double kappa);

// per-axis trimmed mean between the (1/2 -+ q)-quantiles (closed interval);
// the zero measure maps to the origin.
Vec3 regularized_median(const PointMeasure& rho, double q);

// K_R(rho) = sum over ordered atom pairs of chi^eps(R - eps <= |x - y|)
double concentration(const PointMeasure& rho, double R, double eps);

struct MedianAuditConfig {
  double c = 1.0;     // minimal mass
  double R = 5.0;     // concentration radius
  double delta = 0.2; // concentration budget (must stay below c^2/2)
  double q = 0.1;
  double alpha = 4.0; // atom weight scale alpha^{-2}
  int trials = 1000;
  uint64_t seed = 1;
};

struct MedianAuditReport {
  int trials_run = 0;
  int generator_failures = 0;
  int violations_median = 0;     // spike moves median beyond the bound
  int violations_quantile = 0;   // cumulative-mass shift beyond 2 TV + eps
  int violations_confine = 0;    // quantiles escape [median-quantile +- R]
  double max_ratio_median = 0.0; // |shift| / (R w / (c q))
  double max_ratio_flagged = 0.0;
  int flagged_for_review = 0;    // ratio above 10x the crude bound
};

MedianAuditReport median_stability_audit(const MedianAuditConfig& cfg);

}  // namespace pekar
