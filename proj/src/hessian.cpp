#include "pekar/hessian.hpp"

#include <fstream>

#include "json.hpp"

namespace pekar {

namespace {

// lowest M oscillator eigenfunctions (-u'' + l(l+1)/r^2 u + r^2 u = E u) as
// reduced waves, orthonormal under 4 pi dr sum
std::vector<std::vector<double>> oscillator_basis(GridPtr grid, int l, int M) {
  RadialFunction well(grid, l);
  for (int i = 0; i < grid->n(); ++i) well[i] = grid->r(i) * grid->r(i);
  Tridiag T = radial_hamiltonian(well, l);
  std::vector<double> vals;
  std::vector<std::vector<double>> vecs;
  tridiag_lowest(T, M, vals, &vecs);
  double c = 1.0 / std::sqrt(4.0 * M_PI * grid->dr());
  for (auto& v : vecs)
    for (double& x : v) x *= c;  // plain-orthonormal -> inner() orthonormal
  return vecs;
}

}  // namespace

RadialFunction HessianSpectrum::profile(int l, const DVec& coef) const {
  RadialFunction f(grid, l);
  const auto& B = basis_u[l];
  for (int n = 0; n < static_cast<int>(B.size()); ++n)
    for (int i = 0; i < grid->n(); ++i) f[i] += coef[n] * B[n][i] / grid->r(i);
  return f;
}

namespace {

// channel-1 span augmented with (and led by) the exact translation profile
// -phi'(r): its algebraic 1/r^3 tail converges too slowly in a pure
// oscillator basis. The Gram-Schmidt mixing matrix is returned so that
// half-inverse images can combine the exact image of the translation
// generator with the transform route for the oscillator generators.
struct AugmentedBasis {
  std::vector<std::vector<double>> basis;   // orthonormal reduced waves
  std::vector<std::vector<double>> gens;    // generators: v0, HO_0, HO_1, ...
  DMat mix;                                 // basis_i = sum_j mix(i,j) gens_j
};

AugmentedBasis augmented_channel1_basis(const PekarSolution& sol, int M) {
  GridPtr grid = sol.phi.grid_ptr();
  int n = grid->n();
  AugmentedBasis out;
  auto ho = oscillator_basis(grid, 1, M);
  std::vector<double> v0(n);
  for (int i = 1; i + 1 < n; ++i)
    v0[i] = -grid->r(i) * (sol.phi[i + 1] - sol.phi[i - 1]) / (2 * grid->dr());
  v0[0] = v0[1] * grid->r(0) / grid->r(1);
  v0[n - 1] = 0.0;
  out.gens.push_back(std::move(v0));
  for (auto& h : ho) out.gens.push_back(std::move(h));

  double ip = 4.0 * M_PI * grid->dr();
  std::vector<std::vector<double>> coef_rows;
  for (std::size_t j = 0; j < out.gens.size(); ++j) {
    if (static_cast<int>(out.basis.size()) == M) break;
    std::vector<double> w = out.gens[j];
    std::vector<double> row(out.gens.size(), 0.0);
    row[j] = 1.0;
    for (std::size_t q = 0; q < out.basis.size(); ++q) {
      double p = 0;
      for (int i = 0; i < n; ++i) p += w[i] * out.basis[q][i];
      p *= ip;
      for (int i = 0; i < n; ++i) w[i] -= p * out.basis[q][i];
      for (std::size_t jj = 0; jj < out.gens.size(); ++jj) row[jj] -= p * coef_rows[q][jj];
    }
    double nn = 0;
    for (double x : w) nn += x * x;
    nn = std::sqrt(nn * ip);
    if (nn < 1e-6) continue;
    for (double& x : w) x /= nn;
    for (double& x : row) x /= nn;
    out.basis.push_back(std::move(w));
    coef_rows.push_back(std::move(row));
  }
  out.mix = DMat::Zero(out.basis.size(), out.gens.size());
  for (std::size_t i = 0; i < coef_rows.size(); ++i)
    for (std::size_t j = 0; j < out.gens.size(); ++j) out.mix(i, j) = coef_rows[i][j];
  return out;
}

}  // namespace

HessianSpectrum assemble_KL(const PekarSolution& sol, int l_max, int M) {
  HessianSpectrum spec;
  spec.M = M;
  spec.grid = sol.psi.grid_ptr();
  GridPtr grid = spec.grid;
  int n = grid->n();
  double dr = grid->dr();
  double ip = 4.0 * M_PI * dr;  // inner-product weight on reduced waves

  // k grid for the channel Bessel transforms: covers the oscillator spectra
  double k_max = std::sqrt(4.0 * M + 2.0 * l_max + 8.0) + 6.0;
  int n_k = static_cast<int>(k_max / 0.05);
  BesselEngine bessel(grid, n_k, k_max, l_max);

  std::vector<double> psi_u(n);
  for (int i = 0; i < n; ++i) psi_u[i] = grid->r(i) * sol.psi[i];
  double pnorm = 0;
  for (double x : psi_u) pnorm += x * x;
  pnorm = std::sqrt(pnorm);
  std::vector<double> psi_unit(psi_u);
  for (double& x : psi_unit) x /= pnorm;

  Tridiag Tfree1;  // (1 - Lap) per channel assembled below

  for (int l = 0; l <= l_max; ++l) {
    ChannelBlock blk;
    blk.l_ang = l;
    AugmentedBasis aug;
    std::vector<std::vector<double>> basis;
    if (l == 1) {
      aug = augmented_channel1_basis(sol, M);
      basis = aug.basis;
    } else {
      basis = oscillator_basis(grid, l, M);
    }

    // channel Hamiltonian and its gap above mu
    Tridiag T = radial_hamiltonian(sol.V, l);
    {
      std::vector<double> vals;
      tridiag_lowest(T, l == 0 ? 2 : 1, vals, nullptr);
      blk.spectral_gap = (l == 0 ? vals[1] : vals[0]) - sol.mu_pek;
      if (blk.spectral_gap <= 0)
        throw ComputeError("assemble_KL: spectral gap above the minimizer is not positive");
    }

    // h_n = (-Lap)^{-1/2} b_n: free log-kernel route for the scalar channel,
    // Bessel multiplier for l >= 1 (their images decay fast enough). In the
    // augmented channel the translation generator's image is the exact
    // -V'/(4 sqrt pi), which the mixing matrix combines with the transformed
    // oscillator images.
    std::vector<std::vector<double>> h_cols(M, std::vector<double>(n));
    if (l == 0) {
      parallel_for(M, [&](std::size_t m) {
        RadialFunction b(grid, 0);
        for (int i = 0; i < n; ++i) b[i] = basis[m][i] / grid->r(i);
        RadialFunction h = inv_sqrt_laplace_free(b);
        for (int i = 0; i < n; ++i) h_cols[m][i] = h[i];
      });
    } else if (l == 1) {
      int n_gen = static_cast<int>(aug.gens.size());
      std::vector<std::vector<double>> gen_cols(n_gen - 1, std::vector<double>(n));
      for (int j = 1; j < n_gen; ++j)
        for (int i = 0; i < n; ++i) gen_cols[j - 1][i] = aug.gens[j][i] / grid->r(i);
      auto gen_h = bessel.inv_sqrt_laplace(1, gen_cols);
      std::vector<double> h_v0(n);
      for (int i = 1; i + 1 < n; ++i)
        h_v0[i] = (sol.V[i + 1] - sol.V[i - 1]) / (2 * grid->dr()) / (4.0 * std::sqrt(M_PI));
      h_v0[0] = h_v0[1] * grid->r(0) / grid->r(1);
      h_v0[n - 1] = h_v0[n - 2];
      for (int m = 0; m < M; ++m)
        for (int i = 0; i < n; ++i) {
          double v = aug.mix(m, 0) * h_v0[i];
          for (int j = 1; j < n_gen; ++j) v += aug.mix(m, j) * gen_h[j - 1][i];
          h_cols[m][i] = v;
        }
    } else {
      std::vector<std::vector<double>> cols(M, std::vector<double>(n));
      for (int m = 0; m < M; ++m)
        for (int i = 0; i < n; ++i) cols[m][i] = basis[m][i] / grid->r(i);
      h_cols = bessel.inv_sqrt_laplace(l, cols);
    }

    // g_n = psi h_n as reduced waves
    std::vector<std::vector<double>> g_u(M, std::vector<double>(n));
    for (int m = 0; m < M; ++m)
      for (int i = 0; i < n; ++i) g_u[m][i] = psi_u[i] * h_cols[m][i];

    // resolvent and (1 - Lap)^{-1} images
    RadialFunction one(grid, l);
    for (int i = 0; i < n; ++i) one[i] = 1.0;
    Tridiag Tone = radial_hamiltonian(one, l);  // -u'' + l(l+1)/r^2 + 1

    std::vector<std::vector<double>> res_u(M), helm_u(M);
    parallel_for(M, [&](std::size_t m) {
      res_u[m] = tridiag_solve_deflated(T, sol.mu_pek, g_u[m], l == 0 ? &psi_unit : nullptr);
      helm_u[m] = tridiag_solve_deflated(Tone, 0.0, g_u[m], nullptr);
    });

    DMat G(n, M), R(n, M), Hm(n, M);
    for (int m = 0; m < M; ++m)
      for (int i = 0; i < n; ++i) {
        G(i, m) = g_u[m][i];
        R(i, m) = res_u[m][i];
        Hm(i, m) = helm_u[m][i];
      }
    blk.K = 16.0 * M_PI * ip * (G.transpose() * R);
    blk.L = 16.0 * M_PI * ip * (G.transpose() * Hm);
    blk.sym_defect = std::max((blk.K - blk.K.transpose()).cwiseAbs().maxCoeff(),
                              (blk.L - blk.L.transpose()).cwiseAbs().maxCoeff());
    if (blk.sym_defect > 1e-6)
      throw ComputeError("assemble_KL: symmetrization defect " + std::to_string(blk.sym_defect));
    blk.K = 0.5 * (blk.K + blk.K.transpose()).eval();
    blk.L = 0.5 * (blk.L + blk.L.transpose()).eval();

    Eigen::SelfAdjointEigenSolver<DMat> esk(blk.K);
    Eigen::SelfAdjointEigenSolver<DMat> esl(blk.L);
    blk.kappa = esk.eigenvalues().reverse();
    blk.kappa_vecs = esk.eigenvectors().rowwise().reverse();
    blk.ell_vals = esl.eigenvalues().reverse();
    blk.ell_vecs = esl.eigenvectors().rowwise().reverse();

    spec.basis_u.push_back(std::move(basis));
    spec.blocks.push_back(std::move(blk));
  }
  return spec;
}

CorrectionResult quantum_correction(const HessianSpectrum& spec) {
  CorrectionResult out;
  out.trace = 0.0;
  out.zero_modes = 0;
  for (int l = 0; l <= spec.l_max(); ++l) {
    const ChannelBlock& blk = spec.block(l);
    double mult = 2.0 * l + 1.0;
    double ch = 0.0;
    for (int i = 0; i < blk.kappa.size(); ++i) {
      double k = blk.kappa[i];
      if (l == 1 && i == 0 && std::abs(k - 1.0) <= 1e-3) {
        // translation zero modes: threefold degenerate, each contributes 1
        ch += mult * 1.0;
        out.zero_modes += 3;
        continue;
      }
      if (k > 1.0 + 1e-3)
        throw ComputeError("quantum_correction: eigenvalue above one in channel " +
                           std::to_string(l) + ": " + std::to_string(k));
      if (k > 1.0 || k < 0.0) ++out.clipped;
      k = std::min(1.0, std::max(0.0, k));
      ch += mult * (1.0 - std::sqrt(1.0 - k));
    }
    out.per_channel.push_back(ch);
    out.trace += ch;
  }
  out.zero_mode_part = 3.0;
  return out;
}

FdResult hessian_fd_radial(const PekarSolution& sol, const RadialFunction& direction,
                           double eps) {
  auto F_at = [&](double t) {
    RadialFunction phi(sol.phi.grid_ptr());
    for (int i = 0; i < phi.n(); ++i) phi[i] = sol.phi[i] + t * direction[i];
    return pekar_functional(phi);
  };
  double F0 = pekar_functional(sol.phi);
  auto second = [&](double e) { return (F_at(e) - 2.0 * F0 + F_at(-e)) / (e * e); };
  double d1 = second(eps);
  double d2 = second(0.5 * eps);
  FdResult r;
  // the curvature quotient lim (F(phi + e eta) - F(phi)) / e^2 is half the
  // symmetric second difference
  r.value = 0.5 * (4.0 * d2 - d1) / 3.0;
  r.cubic_residual = 0.5 * std::abs(d2 - d1);
  return r;
}

double trace_L_kernel_route(const PekarSolution& sol) {
  // Tr L = 16 pi (2 pi)^{-3} int int |psihat(k - k')|^2 / ((1 + k^2) k'^2)
  //      = 16 pi (2 pi)^{-3} int |psihat(u)|^2 (2 pi^2/u) atan(u) 4 pi u^2 du;
  // the (2 pi)^{-3/2} per multiplication kernel comes from the unitary
  // transform convention
  std::vector<double> ph = radial_fourier(sol.psi);
  double dk = M_PI / sol.psi.grid().r_max();
  double acc = 0.0;
  for (std::size_t m = 0; m < ph.size(); ++m) {
    double u = (m + 1) * dk;
    acc += u * ph[m] * ph[m] * std::atan(u);
  }
  return 16.0 * M_PI * 8.0 * M_PI * M_PI * M_PI * acc * dk / std::pow(2.0 * M_PI, 3);
}

double trace_L_position_route(const PekarSolution& sol) {
  // Tr L = 16 pi int int G_c(|x-y|) G_y(|x-y|) psi(x) psi(y), with the
  // Coulomb and Yukawa kernels; reduces to a 1D integral against the
  // wavefunction autocorrelation C(s) = int |psihat|^2 j0(k s) 4 pi k^2 dk
  std::vector<double> ph = radial_fourier(sol.psi);
  double dk = M_PI / sol.psi.grid().r_max();
  auto corr = [&](double s) {
    double acc = 0.0;
    for (std::size_t m = 0; m < ph.size(); ++m) {
      double k = (m + 1) * dk;
      double x = k * s;
      acc += k * k * ph[m] * ph[m] * (x < 1e-8 ? 1.0 - x * x / 6.0 : std::sin(x) / x);
    }
    return 4.0 * M_PI * acc * dk;
  };
  // 16 pi int_0^inf [1/(4 pi s)][e^{-s}/(4 pi s)] C(s) 4 pi s^2 ds
  double acc = 0.0;
  std::vector<double> x, w;
  for (int panel = 0; panel < 30; ++panel) {
    gauss_on(16, panel * 1.2, (panel + 1) * 1.2, x, w);
    for (std::size_t i = 0; i < x.size(); ++i) acc += w[i] * std::exp(-x[i]) * corr(x[i]);
  }
  return 16.0 * M_PI * acc / (4.0 * M_PI);
}

double ordered_hs_norm(const RadialFunction& psi) {
  // |(1-Lap)^{-1/2}(-Lap)^{-1/2} psi|_HS^2
  //   = (2 pi)^{-3} int dk/(k^2 (1+k^2)) |psi|^2 = |psi|^2 / (4 pi)
  double c = 0.0;
  {
    std::vector<double> x, w;
    gauss_on(64, 0.0, 1.0, x, w);
    for (std::size_t i = 0; i < x.size(); ++i) c += w[i] * 4.0 * M_PI / (1.0 + x[i] * x[i]);
    // substitute k -> 1/k for the outer part
    for (std::size_t i = 0; i < x.size(); ++i) c += w[i] * 4.0 * M_PI / (1.0 + x[i] * x[i]);
  }
  return std::sqrt(c / std::pow(2.0 * M_PI, 3)) * psi.norm();
}

void HessianSpectrum::save_spectrum(const std::string& path) const {
  nlohmann::json j;
  j["M"] = M;
  auto& arr = j["channels"];
  for (int l = 0; l <= l_max(); ++l) {
    nlohmann::json ch;
    ch["l"] = l;
    ch["multiplicity"] = 2 * l + 1;
    ch["spectral_gap"] = blocks[l].spectral_gap;
    for (int i = 0; i < blocks[l].kappa.size(); ++i) ch["kappa"].push_back(blocks[l].kappa[i]);
    arr.push_back(ch);
  }
  std::ofstream f(path);
  if (!f) throw ComputeError("save_spectrum: cannot open " + path);
  f << j.dump(1);
}

}  // namespace pekar
