#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "pekar/fock_toy.hpp"

using namespace pekar;

namespace {

ToyFockSpace small_fock(int modes = 3, int n_max = 4, double alpha = 2.0) {
  std::vector<Vec3> sites;
  Rng rng(41);
  for (int i = 0; i < modes; ++i)
    sites.push_back({rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)});
  return ToyFockSpace(sites, n_max, alpha);
}

CMat random_kernel(int rows, uint64_t seed, bool hermitian) {
  Rng rng(seed);
  CMat f(rows, rows);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < rows; ++j) f(i, j) = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
  if (hermitian) f = (f + CMat(f.adjoint())) / 2.0;
  return f;
}

}  // namespace

TEST_CASE("rescaled commutators hold exactly below the truncation edge") {
  ToyFockSpace fock = small_fock(3, 4, 2.0);
  double eps = 1.0 / (fock.alpha() * fock.alpha());
  for (int i = 0; i < fock.modes(); ++i)
    for (int j = 0; j < fock.modes(); ++j) {
      CMat comm = fock.a(i) * fock.a_dagger(j) - fock.a_dagger(j) * fock.a(i);
      for (int p = 0; p < fock.dim(); ++p) {
        if (fock.total_occupation(p) > fock.n_max() - 1) continue;
        for (int q = 0; q < fock.dim(); ++q) {
          if (fock.total_occupation(q) > fock.n_max() - 1) continue;
          std::complex<double> want = (p == q && i == j) ? eps : 0.0;
          CHECK(std::abs(comm(p, q) - want) <= 1e-14);
        }
      }
    }
}

TEST_CASE("number operator equals the total-mass multiplication operator") {
  ToyFockSpace fock = small_fock(4, 3, 1.5);
  CMat N = fock.number_operator();
  DVec d = fock.f_hat_diagonal([](const PointMeasure& m) { return m.total_mass(); });
  for (int p = 0; p < fock.dim(); ++p)
    for (int q = 0; q < fock.dim(); ++q) {
      std::complex<double> want = (p == q) ? d[p] : 0.0;
      CHECK(std::abs(N(p, q) - want) <= 1e-13);
    }
  // F == 1 gives the identity
  DVec one = fock.f_hat_diagonal([](const PointMeasure&) { return 1.0; });
  for (int p = 0; p < fock.dim(); ++p) CHECK(one[p] == 1.0);
}

TEST_CASE("pair-concentration multiplication operator matches the measure module") {
  ToyFockSpace fock = small_fock(4, 3, 2.0);
  double R = 1.5;
  DVec d = fock.f_hat_diagonal(
      [&](const PointMeasure& m) { return m.size() ? concentration(m, R, 0.0) : 0.0; });
  // brute-force pairwise double sum per basis state
  for (int p = 0; p < fock.dim(); ++p) {
    const auto& occ = fock.occupations()[p];
    double want = 0;
    double w = 1.0 / (fock.alpha() * fock.alpha());
    for (int i = 0; i < fock.modes(); ++i)
      for (int j = 0; j < fock.modes(); ++j) {
        double dist = (fock.sites()[i] - fock.sites()[j]).norm();
        if (dist >= R) want += occ[i] * occ[j] * w * w;
      }
    CHECK(d[p] == doctest::Approx(want).epsilon(1e-13).scale(1.0));
  }
}

TEST_CASE("one-body multiplication operators equal their normal-ordered form") {
  ToyFockSpace fock = small_fock(3, 4, 2.0);
  Rng rng(5);
  std::vector<double> fvals{0.7, -1.3, 2.1};
  DVec diag = fock.f_hat_diagonal([&](const PointMeasure& m) {
    double s = 0;
    for (std::size_t k = 0; k < m.size(); ++k) {
      for (int i = 0; i < fock.modes(); ++i)
        if ((m.atoms[k] - fock.sites()[i]).norm() < 1e-12) s += m.weights[k] * fvals[i];
    }
    return s;
  });
  CMat f = CMat::Zero(3, 3);
  for (int i = 0; i < 3; ++i) f(i, i) = fvals[i];
  CMat no = normal_ordered_f(fock, 1, f);
  for (int p = 0; p < fock.dim(); ++p)
    for (int q = 0; q < fock.dim(); ++q) {
      std::complex<double> want = (p == q) ? diag[p] : 0.0;
      CHECK(std::abs(no(p, q) - want) <= 1e-13);
    }
}

TEST_CASE("two-body defect scales like the inverse coupling squared") {
  // states with fixed N = alpha^{-2} (n/2, n/2, 0) occupation at alpha = sqrt(n)
  std::vector<double> alphas, defects;
  std::vector<Vec3> sites = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
  double fdiag[3] = {0.8, 1.7, -0.4};
  for (int n : {2, 4, 6, 8}) {
    double alpha = std::sqrt(static_cast<double>(n));
    ToyFockSpace fock(sites, n, alpha);
    std::vector<int> occ = {n / 2, n / 2, 0};
    int p = fock.index_of(occ);
    REQUIRE(p >= 0);
    // F(rho) = int int f(x) delta(x - y) drho drho with diagonal site kernel:
    // multiplication by alpha^{-4} sum_ij f_i delta_ij n_i n_j
    DVec diag = fock.f_hat_diagonal([&](const PointMeasure& m) {
      double s = 0;
      for (std::size_t k = 0; k < m.size(); ++k)
        for (std::size_t l = 0; l < m.size(); ++l)
          if ((m.atoms[k] - m.atoms[l]).norm() < 1e-12)
            for (int i = 0; i < 3; ++i)
              if ((m.atoms[k] - sites[i]).norm() < 1e-12) s += m.weights[k] * m.weights[l] * fdiag[i];
      return s;
    });
    CMat f2 = CMat::Zero(9, 9);
    for (int i = 0; i < 3; ++i) f2(i * 3 + i, i * 3 + i) = fdiag[i];
    CMat no = normal_ordered_f(fock, 2, f2);
    double diff = std::abs(diag[p] - no(p, p).real());
    alphas.push_back(alpha);
    defects.push_back(diff);
  }
  LineFit fit = fit_power(alphas, defects);
  CHECK(fit.slope == doctest::Approx(-2.0).epsilon(0.10));
  CHECK(fit.r2 >= 0.95);
}

TEST_CASE("reordering identity: zero defect away from the truncation edge") {
  SUBCASE("one-body: exact commutator bookkeeping") {
    ToyFockSpace fock = small_fock(3, 4, 2.0);
    CMat f = random_kernel(3, 11, false);
    CHECK(wick_reorder_defect(fock, 1, f) <= 1e-12);
  }
  SUBCASE("two-body random kernel") {
    ToyFockSpace fock = small_fock(3, 4, 2.0);
    CMat f = random_kernel(9, 13, false);
    CHECK(wick_reorder_defect(fock, 2, f) <= 1e-12);
  }
  SUBCASE("defect is confined to the top sectors") {
    std::vector<Vec3> sites = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
    CMat f = random_kernel(9, 17, false);
    // evaluate the identity on the *full* truncated space: the top sector breaks it
    ToyFockSpace small(sites, 2, 2.0);
    ToyFockSpace big(sites, 4, 2.0);
    // restricted to sectors <= n_max - m both vanish
    CHECK(wick_reorder_defect(small, 2, f) <= 1e-12);
    CHECK(wick_reorder_defect(big, 2, f) <= 1e-12);
  }
}

TEST_CASE("weyl operators: identity, displaced number, conjugation action") {
  // the conjugation identity on sector-k states is exact only up to
  // (alpha |g|)^{n_max + 1 - k}; sizes below keep that under 1e-9
  ToyFockSpace fock = small_fock(3, 8, 2.0);
  CVec zero = CVec::Zero(3);
  CMat W0 = weyl_operator(fock, zero);
  CHECK((W0 - CMat::Identity(fock.dim(), fock.dim())).norm() <= 1e-12);


  CVec g(3);
  g << std::complex<double>(0.02, 0.008), std::complex<double>(-0.015, 0.0),
      std::complex<double>(0.004, -0.012);
  CMat W = weyl_operator(fock, g);
  // unitary on the retained space up to the truncation tail
  CHECK((CMat(W.adjoint() * W) - CMat::Identity(fock.dim(), fock.dim())).norm() <= 1e-7);

  CVec vac = CVec::Zero(fock.dim());
  vac[fock.index_of({0, 0, 0})] = 1.0;
  CVec disp = W * vac;
  CMat N = fock.number_operator();
  std::complex<double> nexp = disp.dot(N * disp);
  CHECK(nexp.real() == doctest::Approx(g.squaredNorm()).epsilon(1e-8));

  // W^{-1} a(h) W = a(h) - <h|g> on random low-sector states
  Rng rng(7);
  CVec h(3);
  h << std::complex<double>(0.3, -0.1), std::complex<double>(0.2, 0.4),
      std::complex<double>(-0.5, 0.05);
  std::complex<double> hg = 0;
  for (int i = 0; i < 3; ++i) hg += std::conj(h[i]) * g[i];
  CMat lhs = W.adjoint() * fock.a_of(h) * W;
  CMat rhs = fock.a_of(h) - hg * CMat::Identity(fock.dim(), fock.dim());
  for (int t = 0; t < 5; ++t) {
    CVec psi = CVec::Zero(fock.dim());
    for (int p = 0; p < fock.dim(); ++p)
      if (fock.total_occupation(p) <= 1) psi[p] = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
    psi.normalize();
    CHECK((lhs * psi - rhs * psi).norm() <= 1e-8);
  }
  // too-large displacement is rejected with a helpful error
  CVec gbig = CVec::Constant(3, std::complex<double>(2.0, 0.0));
  CHECK_THROWS_AS(weyl_operator(fock, gbig), ComputeError);
}

TEST_CASE("lower symbol: mass, peak location, anti-wick moments") {
  std::vector<Vec3> sites = {{0, 0, 0}, {1, 0, 0}};
  ToyFockSpace fock(sites, 5, 2.0);

  SUBCASE("coherent state") {
    CVec g(2);
    g << std::complex<double>(0.18, -0.06), std::complex<double>(-0.11, 0.09);
    CVec psi = coherent_state(fock, g);
    // a-eigenvector property within truncation
    for (int i = 0; i < 2; ++i)
      CHECK((fock.a(i) * psi - g[i] * psi).norm() <= 5e-3);  // top-sector tail
    LowerSymbolStats st = lower_symbol_stats(fock, psi, 200000, 1234);
    CHECK(std::abs(st.total_mass - 1.0) <= 3 * st.total_mass_sigma + 1e-5);
    for (int i = 0; i < 2; ++i)
      CHECK(std::abs(st.first_moment[i] - g[i]) <=
            3.0 * st.first_moment_sigma[i].real() + 3e-3);
  }
  SUBCASE("random state: resolution of identity and reversed-order moments") {
    Rng rng(19);
    CVec psi = CVec::Zero(fock.dim());
    for (int p = 0; p < fock.dim(); ++p)
      if (fock.total_occupation(p) <= 2) psi[p] = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
    psi.normalize();
    LowerSymbolStats st = lower_symbol_stats(fock, psi, 300000, 77);
    CHECK(std::abs(st.total_mass - 1.0) <= 3 * st.total_mass_sigma + 1e-5);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        std::complex<double> want = psi.dot(fock.a(j) * (fock.a_dagger(i) * psi));
        double tol = 3.0 * st.anti_wick_sigma(i, j).real() + 2e-3;
        CHECK(std::abs(st.anti_wick_moment(i, j) - want) <= tol);
      }
  }
}

TEST_CASE("quadratic mode hamiltonian: closed form, trace form, grid oracle") {
  // single mode j = 0.25: ground sqrt(j)/(2 a^2) = 0.25/a^2; the trace form
  // -(1 - sqrt(j))/(2a^2) + 1/(2a^2) is the same number
  for (double alpha : {1.0, 2.0, 5.0}) {
    DMat J(1, 1);
    J(0, 0) = 0.25;
    double e = quadratic_ground_energy(J, alpha);
    CHECK(e == doctest::Approx(0.25 / (alpha * alpha)).epsilon(1e-14));
    double trace_form = -(1.0 - 0.5) / (2 * alpha * alpha) + 1.0 / (2 * alpha * alpha);
    CHECK(e == doctest::Approx(trace_form).epsilon(1e-14));
  }
  // identity J: ground N/(2a^2), so the corrected trace vanishes
  {
    DMat J = DMat::Identity(2, 2);
    double e = quadratic_ground_energy(J, 3.0);
    CHECK(e == doctest::Approx(2.0 / (2.0 * 9.0)).epsilon(1e-14));
  }
  // 1D grid oracle
  {
    DMat J(1, 1);
    J(0, 0) = 0.37;
    double closed = quadratic_ground_energy(J, 2.0);
    double grid = quadratic_ground_energy_grid(J, 2.0, 400, 8.5);
    CHECK(grid == doctest::Approx(closed).epsilon(1e-6));
  }
  // 2D random positive definite J at alpha = 3
  {
    Rng rng(3);
    DMat A(2, 2);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) A(i, j) = rng.uniform(-1, 1);
    DMat J = A * A.transpose() + 0.3 * DMat::Identity(2, 2);
    double closed = quadratic_ground_energy(J, 3.0);
    double grid = quadratic_ground_energy_grid(J, 3.0, 170, 8.5);
    CHECK(std::abs(grid - closed) <= 1e-6);
  }
  // negative eigenvalue rejected
  {
    DMat J(1, 1);
    J(0, 0) = -0.1;
    CHECK_THROWS_AS(quadratic_ground_energy(J, 2.0), ComputeError);
  }
}

TEST_CASE("toy bound demo on an exactly quadratic classical energy") {
  // with F exactly quadratic the harmonic surrogate is exact at every alpha
  DMat H(1, 1);
  H(0, 0) = 0.4;
  DVec ls(1);
  ls[0] = 0.3;
  auto F = [&](const DVec& x) {
    double d = x[0] - ls[0];
    return -0.7 + H(0, 0) * d * d;
  };
  ToyBoundReport rep = toy_bound_demo(F, 1, {2.0, 4.0, 8.0}, ls, H, 700, 1.8);
  for (std::size_t i = 0; i < rep.alphas.size(); ++i) {
    CHECK(rep.scaled_gap[i] == doctest::Approx(rep.surrogate).epsilon(5e-4));
    // kinetic term is nonnegative: ground never drops below the classical min
    CHECK(rep.ground_energy[i] >= rep.classical_min[i] - 1e-12);
  }
  CHECK(rep.surrogate == doctest::Approx(std::sqrt(0.4) - 1.0).epsilon(1e-14));
}

TEST_CASE("commutator sandwich of a multiplication operator has the closed entrywise form") {
  ToyFockSpace fock = small_fock(3, 3, 2.0);
  Rng rng(23);
  DVec Fd = fock.f_hat_diagonal([&](const PointMeasure& m) {
    double s = std::sin(3.0 * m.total_mass());
    for (auto& a : m.atoms) s += 0.2 * std::cos(a.x + 0.3 * a.y);
    return s;
  });
  CVec v(3);
  v << std::complex<double>(0.4, 0.1), std::complex<double>(-0.2, 0.7),
      std::complex<double>(0.3, -0.5);
  CMat A = fock.a_of(v);
  CMat F = Fd.asDiagonal().toDenseMatrix().cast<std::complex<double>>();
  CMat sandwich = F * A * F * 2.0 - A * F * F - F * F * A;  // [[F, A], F]
  for (int p = 0; p < fock.dim(); ++p)
    for (int q = 0; q < fock.dim(); ++q) {
      std::complex<double> want = -A(p, q) * (Fd[p] - Fd[q]) * (Fd[p] - Fd[q]);
      CHECK(std::abs(sandwich(p, q) - want) <= 1e-13);
    }
}
