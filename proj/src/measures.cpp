#include "pekar/measures.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace pekar {

std::vector<std::pair<double, double>> PointMeasure::marginal(int axis) const {
  std::vector<std::pair<double, double>> nu(atoms.size());
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    double t = axis == 0 ? atoms[i].x : (axis == 1 ? atoms[i].y : atoms[i].z);
    nu[i] = {t, weights[i]};
  }
  return nu;
}

void PointMeasure::save_csv(const std::string& path) const {
  std::ofstream f(path);
  if (!f) throw ComputeError("PointMeasure::save_csv: cannot open " + path);
  f << "x,y,z,weight\n";
  f.precision(17);
  for (std::size_t i = 0; i < atoms.size(); ++i)
    f << atoms[i].x << ',' << atoms[i].y << ',' << atoms[i].z << ',' << weights[i] << '\n';
}

PointMeasure PointMeasure::load_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ComputeError("PointMeasure::load_csv: cannot open " + path);
  PointMeasure m;
  std::string line;
  std::getline(f, line);  // header
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    double v[4];
    char comma;
    ss >> v[0] >> comma >> v[1] >> comma >> v[2] >> comma >> v[3];
    m.add({v[0], v[1], v[2]}, v[3]);
  }
  return m;
}

// --- smooth cutoffs ----------------------------------------------------------

namespace {
// C-infinity step s: 0 for x <= 0, 1 for x >= 1
double mollifier_step(double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  double a = std::exp(-1.0 / x);
  double b = std::exp(-1.0 / (1.0 - x));
  return a / (a + b);
}
}  // namespace

double SmoothCutoff::ramp_alpha(double x) {
  // cos(pi/2 * s): equals 1 left of -1, 0 right of +1
  return std::cos(0.5 * M_PI * mollifier_step(0.5 * (x + 1.0)));
}

double SmoothCutoff::ramp_beta(double x) {
  return std::sin(0.5 * M_PI * mollifier_step(0.5 * (x + 1.0)));
}

SmoothCutoff::SmoothCutoff(double a, double b, double eps) : a_(a), b_(b), eps_(eps) {
  if (!(a < b)) throw ComputeError("SmoothCutoff: need a < b");
  if (eps < 0) throw ComputeError("SmoothCutoff: eps must be >= 0");
}

double SmoothCutoff::operator()(double f) const {
  if (eps_ == 0.0) return (f >= a_ && f <= b_) ? 1.0 : 0.0;
  double va = std::isinf(b_) ? 1.0 : ramp_alpha((f - b_) / eps_);
  double vb = std::isinf(a_) ? 1.0 : ramp_beta((f - a_) / eps_);
  return va * vb;
}

// --- quantiles and the regularized median ------------------------------------

double quantile(const std::vector<std::pair<double, double>>& nu_in, double kappa) {
  if (nu_in.empty()) throw ComputeError("quantile: zero measure");
  if (kappa < 0 || kappa > 1) throw ComputeError("quantile: kappa outside [0,1]");
  std::vector<std::pair<double, double>> nu(nu_in);
  std::sort(nu.begin(), nu.end());
  double W = 0;
  for (auto& [t, w] : nu) {
    if (w <= 0) throw ComputeError("quantile: weights must be positive");
    W += w;
  }
  double target = kappa * W;
  // cum(t) jumps at atom positions; sup{t : cum(t) <= target} is the first
  // atom position where the (closed) cumulative exceeds the target
  double cum = 0;
  std::size_t i = 0;
  while (i < nu.size()) {
    double t = nu[i].first;
    double w = 0;
    std::size_t j = i;
    while (j < nu.size() && nu[j].first == t) w += nu[j++].second;
    cum += w;
    if (cum > target) return t;
    i = j;
  }
  return std::numeric_limits<double>::infinity();  // kappa = 1
}

Vec3 regularized_median(const PointMeasure& rho, double q) {
  if (!(q > 0 && q < 0.5)) throw ComputeError("regularized_median: q outside (0, 1/2)");
  if (rho.size() == 0) return {0, 0, 0};
  double out[3];
  for (int axis = 0; axis < 3; ++axis) {
    auto nu = rho.marginal(axis);
    double lo = quantile(nu, 0.5 - q);
    double hi = quantile(nu, 0.5 + q);
    double mass = 0, first = 0;
    for (auto& [t, w] : nu) {
      if (t >= lo && t <= hi) {
        mass += w;
        first += w * t;
      }
    }
    if (mass <= 0) throw ComputeError("regularized_median: empty trimming window");
    out[axis] = first / mass;
  }
  return {out[0], out[1], out[2]};
}

double concentration(const PointMeasure& rho, double R, double eps) {
  if (!(R > 2 * eps) || eps < 0) throw ComputeError("concentration: need R > 2 eps >= 0");
  SmoothCutoff cut(R - eps, std::numeric_limits<double>::infinity(), eps);
  double s = 0;
  for (std::size_t i = 0; i < rho.size(); ++i)
    for (std::size_t j = 0; j < rho.size(); ++j) {
      double d = (rho.atoms[i] - rho.atoms[j]).norm();
      s += rho.weights[i] * rho.weights[j] * cut(d);
    }
  return s;
}

// --- audit --------------------------------------------------------------------

MedianAuditReport median_stability_audit(const MedianAuditConfig& cfg) {
  if (!(cfg.delta < 0.5 * cfg.c * cfg.c))
    throw ComputeError("median_stability_audit: delta must be below c^2/2");
  if (!(cfg.q > 0 && cfg.q < 0.5 - cfg.delta / (cfg.c * cfg.c)))
    throw ComputeError("median_stability_audit: q outside the admissible range");

  MedianAuditReport rep;
  double w_atom = 1.0 / (cfg.alpha * cfg.alpha);

  for (int trial = 0; trial < cfg.trials; ++trial) {
    Rng rng = Rng::stream(cfg.seed, static_cast<uint64_t>(trial));
    // cluster inside a ball well under radius R so the concentration
    // constraint holds, with enough atoms for mass >= c
    int n_atoms = static_cast<int>(std::ceil(cfg.c / w_atom)) + rng.uniform_int(8);
    PointMeasure rho;
    bool ok = false;
    for (int attempt = 0; attempt < 10 && !ok; ++attempt) {
      rho = PointMeasure{};
      Vec3 center{rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)};
      double spread = 0.1 * cfg.R * rng.uniform(0.2, 1.0);
      for (int k = 0; k < n_atoms; ++k) {
        Vec3 x{center.x + spread * rng.normal(), center.y + spread * rng.normal(),
               center.z + spread * rng.normal()};
        rho.add(x, w_atom);
      }
      ok = rho.total_mass() >= cfg.c && concentration(rho, cfg.R, 0.0) <= cfg.delta;
    }
    if (!ok) {
      ++rep.generator_failures;
      continue;
    }
    ++rep.trials_run;

    Vec3 m0 = regularized_median(rho, cfg.q);

    // spike positions: nearby, moderate, and far
    double spike_r[3] = {1.0, 50.0, 1e6};
    for (double sr : spike_r) {
      Vec3 dir{rng.normal(), rng.normal(), rng.normal()};
      double nn = dir.norm();
      Vec3 x = m0 + dir * (sr / (nn > 0 ? nn : 1.0));
      PointMeasure spiked = rho;
      spiked.add(x, w_atom);
      Vec3 m1 = regularized_median(spiked, cfg.q);
      double shift = (m1 - m0).norm();
      double bound = cfg.R * w_atom / (cfg.c * cfg.q);
      double ratio = shift / bound;
      rep.max_ratio_median = std::max(rep.max_ratio_median, ratio);
      if (ratio > 1.0) ++rep.violations_median;
      if (ratio > 10.0) {
        ++rep.flagged_for_review;
        rep.max_ratio_flagged = std::max(rep.max_ratio_flagged, ratio);
      }

      // quantile confinement for the spiked measure
      for (int axis = 0; axis < 3; ++axis) {
        auto nu = spiked.marginal(axis);
        double med = quantile(nu, 0.5);
        double lo = quantile(nu, 0.5 - cfg.q);
        double hi = quantile(nu, 0.5 + cfg.q);
        if (!(med - cfg.R <= lo + 1e-12 && hi <= med + cfg.R + 1e-12)) ++rep.violations_confine;
      }
    }

    // cumulative-mass shift at swapped quantiles stays under 2 TV + atom mass
    {
      auto nu = rho.marginal(0);
      PointMeasure rho2 = rho;
      rho2.atoms[0] = rho2.atoms[0] + Vec3{rng.uniform(-3, 3), 0, 0};
      rho2.add({rng.uniform(-8, 8), 0, 0}, w_atom);
      auto nu2 = rho2.marginal(0);
      double tv = 3.0 * w_atom;  // one atom moved (2 w) plus one added (w)
      double eps_atom = w_atom;
      auto cum = [&](const std::vector<std::pair<double, double>>& m, double t) {
        double s = 0;
        for (auto& [p, w] : m)
          if (p <= t) s += w;
        return s;
      };
      for (double kappa : {0.25, 0.5, 0.75}) {
        double t1 = quantile(nu, kappa), t2 = quantile(nu2, kappa);
        double diff = std::abs(cum(nu, t2) - cum(nu, t1));
        if (diff > 2 * tv + eps_atom + 1e-12) ++rep.violations_quantile;
      }
    }
  }
  return rep;
}

}  // namespace pekar
