#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "pekar/gaussian_gas.hpp"

using namespace pekar;

namespace {

DMat random_psd(int n, uint64_t seed, double scale) {
  Rng rng(seed);
  DMat A(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) A(i, j) = rng.uniform(-1, 1);
  DMat G = scale * (A * A.transpose()) / n;
  return G;
}

}  // namespace

TEST_CASE("mehler width: limits and monotonicity in the coupling") {
  // large argument: w -> 1
  GaussianDiagonal big = mehler_density(4, 1e6, 0.9, 0.1);
  CHECK(big.w == doctest::Approx(1.0).epsilon(1e-6));
  // the width function is coth(x) - csch(x) = tanh(x/2): check the identity
  // and its small-argument expansion x/2 (x >= 1 whenever alpha >= 1, so the
  // expansion regime is probed through the identity directly)
  for (double x : {1.0, 2.5, 7.0}) {
    double lhs = 1.0 / std::tanh(x) - 1.0 / std::sinh(x);
    CHECK(lhs == doctest::Approx(std::tanh(0.5 * x)).epsilon(1e-14));
  }
  CHECK(std::tanh(0.5 * 1e-6) == doctest::Approx(0.5e-6).epsilon(1e-9));
  // strictly increasing in alpha at fixed (h, h')
  double prev = 0.0;
  for (double a : {1.0, 2.0, 4.0, 8.0, 16.0}) {
    GaussianDiagonal d = mehler_density(8, a, 0.3, 0.1);
    CHECK(d.w > prev);
    prev = d.w;
  }
  CHECK_THROWS_AS(mehler_density(4, 2.0, 0.1, 0.3), ComputeError);
}

TEST_CASE("one-mode density integrates to its closed-form mass") {
  GaussianDiagonal d = mehler_density(1, 2.0, 0.06, 0.05);
  // int prefactor e^{-a^2 w l^2} dl = prefactor-part * sqrt(pi / (a^2 w));
  // with the Gaussian normalization folded in, the mass is geometric * exp
  double a2w = d.alpha * d.alpha * d.w;
  double mass_quad = 0.0;
  double L = 11.0 / std::sqrt(a2w);
  for (int panel = 0; panel < 40; ++panel) {
    std::vector<double> x, w;
    gauss_on(16, -L + 2 * L * panel / 40.0, -L + 2 * L * (panel + 1) / 40.0, x, w);
    for (std::size_t i = 0; i < x.size(); ++i)
      mass_quad += w[i] * std::exp(d.log_gauss_norm) * std::exp(-a2w * x[i] * x[i]);
  }
  CHECK(mass_quad == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("determinant identity: log det equals trace log for the deformations") {
  for (uint64_t seed : {1ull, 2ull, 3ull}) {
    DMat M = random_psd(12, seed, 0.5);
    Eigen::SelfAdjointEigenSolver<DMat> es(M);
    double tr_log = 0.0;
    for (int i = 0; i < 12; ++i) tr_log += std::log1p(-es.eigenvalues()[i]);
    double log_det = std::log((DMat::Identity(12, 12) - M).determinant());
    CHECK(tr_log == doctest::Approx(log_det).epsilon(1e-10));
  }
}

TEST_CASE("closed-form tail bound: structure and monotonicity") {
  GaussianDiagonal d = mehler_density(6, 3.0, 0.3, 0.1);

  SUBCASE("no deformation reduces to the pure Chebyshev factor") {
    TailQuery q{DMat::Zero(6, 6), 0.4};
    double b = gaussian_tail(q, d, 0.3);
    double expect = std::exp(d.log_geometric + d.log_exponential +
                             std::log((d.w + 6.0 / (d.alpha * d.alpha)) / d.w) -
                             0.3 * 0.4 * 0.4 * d.alpha * d.alpha);
    CHECK(b == doctest::Approx(expect).epsilon(1e-12));
  }
  SUBCASE("monotone decreasing in eps, increasing in beta' toward the edge") {
    DMat A = random_psd(6, 5, 0.4);
    double prev = 1e300;
    for (double eps : {0.1, 0.2, 0.4, 0.8}) {
      double b = gaussian_tail({A, eps}, d, 0.2);
      CHECK(b < prev);
      prev = b;
    }
    // growing beta' tightens the exponential but inflates the determinant;
    // near the spectral edge the bound must blow up
    Eigen::SelfAdjointEigenSolver<DMat> es(A);
    double edge = d.w / std::pow(es.eigenvalues().maxCoeff(), 2);
    double mid = gaussian_tail({A, 0.3}, d, 0.5 * edge);
    double close = gaussian_tail({A, 0.3}, d, 0.999 * edge);
    CHECK(std::isfinite(mid));
    CHECK(close > mid);
    CHECK_THROWS_AS(gaussian_tail({A, 0.3}, d, 1.01 * edge), ComputeError);
  }
}

TEST_CASE("bound dominates the Monte-Carlo integral of the dominating density") {
  GaussianDiagonal d = mehler_density(8, 2.0, 0.3, 0.1);
  for (uint64_t seed : {11ull, 12ull, 13ull, 14ull}) {
    DMat A = random_psd(8, seed, 0.5);
    Eigen::SelfAdjointEigenSolver<DMat> es(A);
    double edge = d.w / std::pow(es.eigenvalues().maxCoeff(), 2);
    double beta_prime = 0.6 * edge;
    TailQuery q{A, 0.35};
    double bound = gaussian_tail(q, d, beta_prime);
    auto [mc, sigma] = gaussian_tail_mc(q, d, 400000, seed * 7 + 1);
    CHECK(bound >= mc - 3.0 * sigma);
  }
}

TEST_CASE("rank-one deformation matches the 1D analytic evaluation") {
  GaussianDiagonal d = mehler_density(5, 2.0, 0.3, 0.1);
  Rng rng(31);
  DVec zeta(5);
  for (int i = 0; i < 5; ++i) zeta[i] = rng.uniform(-1, 1);
  zeta.normalize();  // |zeta| = 1 so beta' < 1 is admissible
  DMat A = zeta * zeta.transpose();
  double eps = 0.3;
  double analytic = gaussian_tail_rank1(zeta, eps, d);
  auto [mc, sigma] = gaussian_tail_mc({A, eps}, d, 600000, 99);
  CHECK(std::abs(analytic - mc) <= 3.0 * sigma + 1e-12 * analytic);
  // and the closed-form bound with beta' = 0.5 < 1/|zeta|^2 dominates it
  double bound = gaussian_tail({A, eps}, d, 0.5 * d.w);
  CHECK(std::isfinite(bound));
  CHECK(bound >= analytic * (1.0 - 1e-10));
}

TEST_CASE("condensation tails decay exponentially in alpha squared") {
  CondensationTailConfig cfg;
  cfg.n_modes = 4;
  cfg.alphas = {2.0, 2.83, 4.0, 5.0, 6.0};
  cfg.h = 0.12;
  cfg.eps = 0.5;
  cfg.thermal_mean = 0.4;
  cfg.trials = 30000;
  cfg.seed = 5;
  // contraction Grams keep the coordinate norm dominated
  cfg.gram_ops.push_back(0.8 * random_psd(4, 3, 0.5));
  cfg.gram_ops.push_back(0.6 * random_psd(4, 4, 0.5));
  for (auto& A : cfg.gram_ops) {
    Eigen::SelfAdjointEigenSolver<DMat> es(A);
    A /= std::max(1.0, es.eigenvalues().maxCoeff());  // op norm <= 1
  }
  Rng rng(8);
  cfg.zeta = DVec(4);
  for (int i = 0; i < 4; ++i) cfg.zeta[i] = rng.uniform(-1, 1);
  cfg.zeta.normalize();

  // bulk regime sanity: a threshold far below the bulk width keeps ~ all mass
  {
    CondensationTailConfig bulk = cfg;
    bulk.eps = 0.02;
    bulk.alphas = {2.0};
    bulk.trials = 4000;
    CondensationTailReport rb = condensation_tail_experiment(bulk);
    CHECK(rb.tail_euclid[0] >= 0.95);  // weighted mass is at least the probability
  }

  CondensationTailReport rep = condensation_tail_experiment(cfg);
  CHECK(rep.tail_euclid[0] > 0.1);
  // exponential decay with negative slope and a solid fit
  CHECK(rep.fit_euclid.slope < 0.0);
  CHECK(rep.fit_euclid.r2 >= 0.95);
  CHECK(rep.fit_zeta.slope < 0.0);
  // the diamond tail never exceeds the euclidean one for contractions
  CHECK(rep.diamond_exceeds_euclid == 0);
  for (std::size_t i = 0; i < rep.alphas.size(); ++i)
    CHECK(rep.tail_diamond[i] <= rep.tail_euclid[i] + 1e-12);
}
