#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <limits>

#include "pekar/measures.hpp"

using namespace pekar;

namespace {

// brute-force oracle for the closed-boundary quantile: scan a fine t-grid
// for the supremum of {t : cum(t) <= kappa W}
double brute_quantile(const std::vector<std::pair<double, double>>& nu, double kappa) {
  double W = 0, lo = 1e300, hi = -1e300;
  for (auto& [t, w] : nu) {
    W += w;
    lo = std::min(lo, t);
    hi = std::max(hi, t);
  }
  double best = -std::numeric_limits<double>::infinity();
  for (double t = lo - 1.0; t <= hi + 1.0; t += 1e-4) {
    double cum = 0;
    for (auto& [p, w] : nu)
      if (p <= t) cum += w;
    if (cum <= kappa * W + 1e-12) best = t;
  }
  return best;
}

PointMeasure axis_measure(std::initializer_list<double> xs) {
  PointMeasure m;
  for (double x : xs) m.add({x, 0, 0}, 1.0);
  return m;
}

}  // namespace

TEST_CASE("quantiles on three unit atoms, closed-boundary convention") {
  auto nu = axis_measure({0, 1, 2}).marginal(0);
  CHECK(quantile(nu, 0.5) == 1.0);
  CHECK(quantile(nu, 0.25) == 0.0);
  CHECK(quantile(nu, 0.75) == 2.0);
  // brute-force scan agrees (up to its grid step)
  for (double k : {0.25, 0.5, 0.75})
    CHECK(quantile(nu, k) == doctest::Approx(brute_quantile(nu, k)).epsilon(0).scale(1).epsilon(1e-3));
  CHECK_THROWS_AS(quantile({}, 0.5), ComputeError);
}

TEST_CASE("quantile properties: translation covariance and monotonicity") {
  Rng rng(17);
  for (int t = 0; t < 50; ++t) {
    std::vector<std::pair<double, double>> nu;
    int n = 2 + rng.uniform_int(9);
    for (int i = 0; i < n; ++i) nu.push_back({rng.uniform(-5, 5), rng.uniform(0.1, 2.0)});
    double s = rng.uniform(-10, 10);
    auto shifted = nu;
    for (auto& [p, w] : shifted) p += s;
    double prev = -1e300;
    for (double k : {0.1, 0.3, 0.5, 0.7, 0.9}) {
      double qv = quantile(nu, k);
      CHECK(quantile(shifted, k) == doctest::Approx(qv + s).epsilon(1e-12));
      CHECK(qv >= prev);
      prev = qv;
    }
  }
}

TEST_CASE("regularized median: trimmed mean, empty convention, covariance") {
  PointMeasure m = axis_measure({0, 1, 2});
  Vec3 med = regularized_median(m, 0.25);
  CHECK(med.x == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(med.y == 0.0);

  PointMeasure empty;
  Vec3 z = regularized_median(empty, 0.1);
  CHECK(z.x == 0.0);
  CHECK(z.y == 0.0);
  CHECK(z.z == 0.0);

  Rng rng(23);
  for (int t = 0; t < 30; ++t) {
    PointMeasure rho;
    int n = 3 + rng.uniform_int(10);
    for (int i = 0; i < n; ++i)
      rho.add({rng.uniform(-4, 4), rng.uniform(-4, 4), rng.uniform(-4, 4)}, 0.25);
    Vec3 y{rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3)};
    PointMeasure moved = rho;
    for (auto& a : moved.atoms) a = a + y;
    Vec3 m0 = regularized_median(rho, 0.1);
    Vec3 m1 = regularized_median(moved, 0.1);
    CHECK((m1 - m0 - y).norm() == doctest::Approx(0.0).epsilon(1e-12).scale(1.0));
  }
}

TEST_CASE("median is equivariant under axis permutations") {
  Rng rng(29);
  PointMeasure rho;
  for (int i = 0; i < 9; ++i)
    rho.add({rng.uniform(-4, 4), rng.uniform(-4, 4), rng.uniform(-4, 4)}, 1.0);
  PointMeasure swapped;
  for (std::size_t i = 0; i < rho.size(); ++i)
    swapped.add({rho.atoms[i].y, rho.atoms[i].z, rho.atoms[i].x}, 1.0);
  Vec3 a = regularized_median(rho, 0.15);
  Vec3 b = regularized_median(swapped, 0.15);
  CHECK(b.x == doctest::Approx(a.y).epsilon(1e-14));
  CHECK(b.y == doctest::Approx(a.z).epsilon(1e-14));
  CHECK(b.z == doctest::Approx(a.x).epsilon(1e-14));
}

TEST_CASE("trimming window carries at least 2q of the mass") {
  Rng rng(31);
  for (int t = 0; t < 40; ++t) {
    PointMeasure rho;
    int n = 2 + rng.uniform_int(12);
    for (int i = 0; i < n; ++i)
      rho.add({rng.uniform(-6, 6), rng.uniform(-6, 6), rng.uniform(-6, 6)},
              rng.uniform(0.05, 1.5));
    double q = rng.uniform(0.05, 0.45);
    for (int axis = 0; axis < 3; ++axis) {
      auto nu = rho.marginal(axis);
      double lo = quantile(nu, 0.5 - q), hi = quantile(nu, 0.5 + q);
      double mass = 0;
      for (auto& [p, w] : nu)
        if (p >= lo && p <= hi) mass += w;
      CHECK(mass >= 2 * q * rho.total_mass() - 1e-12);
    }
  }
}

TEST_CASE("smooth cutoffs: sharp limit, partition of unity, support") {
  SmoothCutoff sharp(0.0, 1.0, 0.0);
  CHECK(sharp(0.5) == 1.0);
  CHECK(sharp(0.0) == 1.0);
  CHECK(sharp(1.0) == 1.0);
  CHECK(sharp(1.0 + 1e-12) == 0.0);

  // ramp pair squares to one everywhere
  for (double x = -2.0; x <= 2.0; x += 0.01) {
    double a = SmoothCutoff::ramp_alpha(x), b = SmoothCutoff::ramp_beta(x);
    CHECK(a * a + b * b == doctest::Approx(1.0).epsilon(1e-14));
  }
  CHECK(SmoothCutoff::ramp_alpha(-1.0) == 1.0);
  CHECK(SmoothCutoff::ramp_alpha(1.0) == doctest::Approx(0.0).scale(1.0).epsilon(1e-15));

  // disjoint partition with matched eps: sum of squares is 1 pointwise
  double eps = 0.2;
  std::vector<std::pair<double, double>> intervals = {
      {-std::numeric_limits<double>::infinity(), -1.0},
      {-1.0, 0.5},
      {0.5, 3.0},
      {3.0, std::numeric_limits<double>::infinity()}};
  for (double f = -4.0; f <= 6.0; f += 0.003) {
    double s = 0;
    for (auto& [a, b] : intervals) {
      SmoothCutoff cut(a, b, eps);
      s += cut(f) * cut(f);
    }
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("pair concentration: sharp and smeared cases") {
  PointMeasure two;
  two.add({0, 0, 0}, 1.0);
  two.add({3.0, 0, 0}, 1.0);

  // all atoms within a small ball: zero
  PointMeasure tight;
  tight.add({0, 0, 0}, 1.0);
  tight.add({0.2, 0, 0}, 1.0);
  CHECK(concentration(tight, 2.0, 0.0) == 0.0);
  CHECK(concentration(tight, 2.0, 0.3) == 0.0);

  // two unit atoms at distance R + eps with a sharp cut: both ordered pairs
  CHECK(concentration(two, 3.0, 0.0) == 2.0);
  CHECK(concentration(two, 2.9, 0.0) == 2.0);
  CHECK(concentration(two, 3.1, 0.0) == 0.0);

  // smeared cut: increasing ramp from 0 (d <= R - 2 eps) to 2 (d >= R),
  // strictly inside (0, 2) on the ramp interior
  double prev = -1.0;
  for (double d : {2.2, 2.4, 2.6, 2.8, 3.0}) {
    PointMeasure p;
    p.add({0, 0, 0}, 1.0);
    p.add({d, 0, 0}, 1.0);
    double v = concentration(p, 3.0, 0.4);
    CHECK(v >= prev - 1e-12);
    prev = v;
  }
  {
    PointMeasure p;
    p.add({0, 0, 0}, 1.0);
    p.add({2.8, 0, 0}, 1.0);  // mid-ramp separation
    double v = concentration(p, 3.0, 0.4);
    CHECK(v > 0.0);
    CHECK(v < 2.0);
  }
}

TEST_CASE("median stability audit: zero violations across seeded trials") {
  MedianAuditConfig cfg;
  cfg.trials = 1000;
  cfg.c = 1.0;
  cfg.q = 0.1;
  cfg.R = 5.0;
  cfg.delta = 0.2;
  cfg.alpha = 4.0;
  cfg.seed = 99;
  MedianAuditReport rep = median_stability_audit(cfg);
  CHECK(rep.trials_run >= 990);
  CHECK(rep.generator_failures <= 10);
  CHECK(rep.violations_median == 0);
  CHECK(rep.violations_quantile == 0);
  CHECK(rep.violations_confine == 0);
  CHECK(rep.flagged_for_review == 0);
  CHECK(rep.max_ratio_median > 0.0);
  CHECK(rep.max_ratio_median <= 1.0);

  // spike weight going to zero moves the median linearly to zero
  PointMeasure rho;
  Rng rng(3);
  for (int i = 0; i < 12; ++i)
    rho.add({rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)}, 0.25);
  Vec3 m0 = regularized_median(rho, 0.12);
  double prev_shift = 1e300;
  for (double w : {0.1, 0.05, 0.025, 0.0125}) {
    PointMeasure spiked = rho;
    spiked.add({7, -2, 4}, w);
    double shift = (regularized_median(spiked, 0.12) - m0).norm();
    CHECK(shift < prev_shift + 1e-15);
    prev_shift = shift;
  }
  CHECK(prev_shift < 0.05);
}

TEST_CASE("point measure csv round trip") {
  PointMeasure m;
  m.add({0.25, -1.5, 3.125}, 0.0625);
  m.add({-2.0, 0.5, 1.0}, 1.25);
  m.save_csv("/tmp/measure_test.csv");
  PointMeasure back = PointMeasure::load_csv("/tmp/measure_test.csv");
  REQUIRE(back.size() == m.size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    CHECK(back.atoms[i].x == m.atoms[i].x);
    CHECK(back.weights[i] == m.weights[i]);
  }
}
