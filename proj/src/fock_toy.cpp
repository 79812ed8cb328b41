#include "pekar/fock_toy.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <map>

namespace pekar {

namespace {

void enumerate_occupations(int modes, int n_max, std::vector<std::vector<int>>& out) {
  std::vector<int> cur(modes, 0);
  std::function<void(int, int)> rec = [&](int mode, int left) {
    if (mode == modes) {
      out.push_back(cur);
      return;
    }
    for (int k = 0; k <= left; ++k) {
      cur[mode] = k;
      rec(mode + 1, left - k);
    }
    cur[mode] = 0;
  };
  rec(0, n_max);
}

}  // namespace

ToyFockSpace::ToyFockSpace(std::vector<Vec3> sites, int n_max, double alpha)
    : sites_(std::move(sites)), n_max_(n_max), alpha_(alpha) {
  if (sites_.empty() || n_max < 1 || alpha <= 0) throw ComputeError("ToyFockSpace: bad parameters");
  enumerate_occupations(modes(), n_max_, occ_);
  std::map<std::vector<int>, int> index;
  for (int i = 0; i < dim(); ++i) index[occ_[i]] = i;

  a_.assign(modes(), CMat::Zero(dim(), dim()));
  for (int idx = 0; idx < dim(); ++idx) {
    for (int i = 0; i < modes(); ++i) {
      if (occ_[idx][i] == 0) continue;
      std::vector<int> lowered = occ_[idx];
      lowered[i] -= 1;
      int jdx = index.at(lowered);
      // a_std |n> = sqrt(n) |n-1>; rescaled a = a_std / alpha
      a_[i](jdx, idx) = std::sqrt(static_cast<double>(occ_[idx][i])) / alpha_;
    }
  }
}

int ToyFockSpace::total_occupation(int idx) const {
  int s = 0;
  for (int v : occ_[idx]) s += v;
  return s;
}

CMat ToyFockSpace::a_of(const CVec& f) const {
  if (f.size() != modes()) throw ComputeError("a_of: mode count mismatch");
  CMat out = CMat::Zero(dim(), dim());
  for (int i = 0; i < modes(); ++i) out += std::conj(f[i]) * a_[i];
  return out;
}

CMat ToyFockSpace::number_operator() const {
  CMat out = CMat::Zero(dim(), dim());
  for (int i = 0; i < modes(); ++i) out += a_[i].adjoint() * a_[i];
  return out;
}

PointMeasure ToyFockSpace::measure_of(int idx) const {
  PointMeasure m;
  double w = 1.0 / (alpha_ * alpha_);
  for (int i = 0; i < modes(); ++i)
    if (occ_[idx][i] > 0) m.add(sites_[i], occ_[idx][i] * w);
  return m;
}

DVec ToyFockSpace::f_hat_diagonal(const std::function<double(const PointMeasure&)>& F) const {
  DVec d(dim());
  for (int idx = 0; idx < dim(); ++idx) d[idx] = F(measure_of(idx));
  return d;
}

int ToyFockSpace::index_of(const std::vector<int>& occ) const {
  for (int i = 0; i < dim(); ++i)
    if (occ_[i] == occ) return i;
  return -1;
}

CMat normal_ordered_f(const ToyFockSpace& fock, int m, const CMat& f) {
  int M = fock.modes();
  int D = fock.dim();
  CMat out = CMat::Zero(D, D);
  if (m == 1) {
    if (f.rows() != M || f.cols() != M) throw ComputeError("normal_ordered_f: kernel shape");
    for (int i = 0; i < M; ++i)
      for (int j = 0; j < M; ++j)
        if (f(i, j) != std::complex<double>(0, 0))
          out += f(i, j) * fock.a_dagger(i) * fock.a(j);
    return out;
  }
  if (m == 2) {
    if (f.rows() != M * M || f.cols() != M * M)
      throw ComputeError("normal_ordered_f: kernel shape");
    // precompute products a_j1 a_j2
    std::vector<CMat> pair(M * M);
    for (int j1 = 0; j1 < M; ++j1)
      for (int j2 = 0; j2 < M; ++j2) pair[j1 * M + j2] = fock.a(j1) * fock.a(j2);
    for (int I = 0; I < M * M; ++I)
      for (int J = 0; J < M * M; ++J)
        if (f(I, J) != std::complex<double>(0, 0)) out += f(I, J) * pair[I].adjoint() * pair[J];
    return out;
  }
  throw ComputeError("normal_ordered_f: only m = 1, 2 supported");
}

double wick_reorder_defect(const ToyFockSpace& fock, int m, const CMat& f) {
  int M = fock.modes();
  int D = fock.dim();
  double eps = 1.0 / (fock.alpha() * fock.alpha());

  CMat lhs = CMat::Zero(D, D);  // anti-normal product
  CMat rhs = normal_ordered_f(fock, m, f);

  if (m == 1) {
    for (int i = 0; i < M; ++i)
      for (int j = 0; j < M; ++j)
        if (f(i, j) != std::complex<double>(0, 0)) lhs += f(i, j) * fock.a(j) * fock.a_dagger(i);
    rhs += eps * f.trace() * CMat::Identity(D, D);
  } else if (m == 2) {
    std::vector<CMat> pair(M * M);
    for (int j1 = 0; j1 < M; ++j1)
      for (int j2 = 0; j2 < M; ++j2) pair[j1 * M + j2] = fock.a(j1) * fock.a(j2);
    for (int I = 0; I < M * M; ++I)
      for (int J = 0; J < M * M; ++J)
        if (f(I, J) != std::complex<double>(0, 0)) lhs += f(I, J) * pair[J] * pair[I].adjoint();

    // single contractions: sigma = (s), tau = (t) over {0, 1}
    for (int s = 0; s < 2; ++s)
      for (int t = 0; t < 2; ++t) {
        CMat g = CMat::Zero(M, M);
        for (int ip = 0; ip < M; ++ip)
          for (int jp = 0; jp < M; ++jp)
            for (int c = 0; c < M; ++c) {
              int I = (s == 0) ? c * M + ip : ip * M + c;
              int J = (t == 0) ? c * M + jp : jp * M + c;
              g(ip, jp) += f(I, J);
            }
        for (int ip = 0; ip < M; ++ip)
          for (int jp = 0; jp < M; ++jp)
            if (g(ip, jp) != std::complex<double>(0, 0))
              rhs += eps * g(ip, jp) * fock.a_dagger(ip) * fock.a(jp);
      }
    // double contractions: the four (sigma, tau) permutation pairs give
    // 2 tr(aligned) + 2 tr(swapped), with overall weight 1/(2 alpha^4)
    std::complex<double> tr_aligned = 0, tr_swapped = 0;
    for (int a = 0; a < M; ++a)
      for (int b = 0; b < M; ++b) {
        tr_aligned += f(a * M + b, a * M + b);
        tr_swapped += f(a * M + b, b * M + a);
      }
    rhs += eps * eps * (tr_aligned + tr_swapped) * CMat::Identity(D, D);
  } else {
    throw ComputeError("wick_reorder_defect: only m = 1, 2 supported");
  }

  // compare on the sectors the truncation cannot touch
  double defect = 0.0;
  for (int i = 0; i < D; ++i) {
    if (fock.total_occupation(i) > fock.n_max() - m) continue;
    for (int j = 0; j < D; ++j) {
      if (fock.total_occupation(j) > fock.n_max() - m) continue;
      defect = std::max(defect, std::abs(lhs(i, j) - rhs(i, j)));
    }
  }
  return defect;
}

double weyl_truncation_tail(const ToyFockSpace& fock, const CVec& g) {
  double mean = fock.alpha() * fock.alpha() * g.squaredNorm();
  // Poisson tail beyond the particle-number truncation
  double p = std::exp(-mean), cum = p;
  for (int n = 1; n <= fock.n_max(); ++n) {
    p *= mean / n;
    cum += p;
  }
  return 1.0 - cum;
}

CMat weyl_operator(const ToyFockSpace& fock, const CVec& g, double tail_tol) {
  double tail = weyl_truncation_tail(fock, g);
  if (tail > tail_tol)
    throw ComputeError("weyl_operator: truncation tail " + std::to_string(tail) +
                       " above tolerance; enlarge n_max or shrink |g|");
  double a2 = fock.alpha() * fock.alpha();
  // sign convention: W_g^{-1} a(h) W_g = a(h) - <h|g>
  CMat gen = a2 * (fock.a_of(g) - fock.a_of(g).adjoint());
  return gen.exp();
}

CVec coherent_state(const ToyFockSpace& fock, const CVec& xi) {
  if (xi.size() != fock.modes()) throw ComputeError("coherent_state: mode count mismatch");
  int M = fock.modes();
  CVec out(fock.dim());
  double pref = std::exp(-0.5 * fock.alpha() * fock.alpha() * xi.squaredNorm());
  for (int idx = 0; idx < fock.dim(); ++idx) {
    std::complex<double> amp = pref;
    const auto& occ = fock.occupations()[idx];
    for (int i = 0; i < M; ++i)
      for (int k = 1; k <= occ[i]; ++k) amp *= fock.alpha() * xi[i] / std::sqrt(double(k));
    out[idx] = amp;
  }
  return out;
}

double lower_symbol_density(const ToyFockSpace& fock, const CVec& psi, const CVec& xi) {
  int M = fock.modes();
  double a2 = fock.alpha() * fock.alpha();
  // <occ|Omega_xi> = e^{-a2 |xi|^2/2} prod (alpha xi_i)^{n_i} / sqrt(n_i!)
  std::complex<double> overlap = 0;
  double pref = std::exp(-0.5 * a2 * xi.squaredNorm());
  for (int idx = 0; idx < fock.dim(); ++idx) {
    std::complex<double> amp = pref;
    const auto& occ = fock.occupations()[idx];
    for (int i = 0; i < M; ++i) {
      for (int k = 1; k <= occ[i]; ++k) amp *= fock.alpha() * xi[i] / std::sqrt(double(k));
    }
    overlap += std::conj(amp) * psi[idx];
  }
  return std::pow(a2 / M_PI, M) * std::norm(overlap);
}

LowerSymbolStats lower_symbol_stats(const ToyFockSpace& fock, const CVec& psi, int samples,
                                    uint64_t seed) {
  int M = fock.modes();
  double a2 = fock.alpha() * fock.alpha();
  double sigma2 = (fock.n_max() + 2.0) / (2.0 * a2);  // per real component

  LowerSymbolStats st;
  st.first_moment.assign(M, 0.0);
  st.first_moment_sigma.assign(M, 0.0);
  st.anti_wick_moment = CMat::Zero(M, M);
  st.anti_wick_sigma = CMat::Zero(M, M);

  std::vector<double> w_acc(samples);
  std::vector<CVec> xi_acc(samples, CVec(M));
  parallel_for(samples, [&](std::size_t s) {
    Rng rng = Rng::stream(seed, s);
    CVec xi(M);
    double q = 1.0;
    for (int i = 0; i < M; ++i) {
      double re = std::sqrt(sigma2) * rng.normal();
      double im = std::sqrt(sigma2) * rng.normal();
      xi[i] = {re, im};
      q *= std::exp(-(re * re + im * im) / (2 * sigma2)) / (2 * M_PI * sigma2);
    }
    w_acc[s] = lower_symbol_density(fock, psi, xi) / q;
    xi_acc[s] = xi;
  });

  double sum_w = 0, sum_w2 = 0;
  CVec m1 = CVec::Zero(M);
  DVec m1_sq = DVec::Zero(M);
  CMat aw = CMat::Zero(M, M);
  DMat aw_sq = DMat::Zero(M, M);
  for (int s = 0; s < samples; ++s) {
    double w = w_acc[s];
    sum_w += w;
    sum_w2 += w * w;
    for (int i = 0; i < M; ++i) {
      m1[i] += w * xi_acc[s][i];
      m1_sq[i] += std::norm(w * xi_acc[s][i]);
    }
    for (int i = 0; i < M; ++i)
      for (int j = 0; j < M; ++j) {
        std::complex<double> v = w * xi_acc[s][j] * std::conj(xi_acc[s][i]);
        aw(i, j) += v;
        aw_sq(i, j) += std::norm(v);
      }
  }
  double n = samples;
  st.total_mass = sum_w / n;
  st.total_mass_sigma = std::sqrt(std::max(0.0, sum_w2 / n - st.total_mass * st.total_mass) / n);
  for (int i = 0; i < M; ++i) {
    st.first_moment[i] = m1[i] / n;
    double var = std::max(0.0, m1_sq[i] / n - std::norm(st.first_moment[i]));
    st.first_moment_sigma[i] = std::sqrt(var / n);
  }
  for (int i = 0; i < M; ++i)
    for (int j = 0; j < M; ++j) {
      st.anti_wick_moment(i, j) = aw(i, j) / n;
      double var = std::max(0.0, aw_sq(i, j) / n - std::norm(st.anti_wick_moment(i, j)));
      st.anti_wick_sigma(i, j) = std::sqrt(var / n);
    }
  return st;
}

double quadratic_ground_energy(const DMat& J, double alpha) {
  Eigen::SelfAdjointEigenSolver<DMat> es(J);
  double e = 0;
  for (int i = 0; i < J.rows(); ++i) {
    double j = es.eigenvalues()[i];
    if (j < -1e-10)
      throw ComputeError("quadratic_ground_energy: negative mode " + std::to_string(j));
    e += std::sqrt(std::max(0.0, j));
  }
  return e / (2.0 * alpha * alpha);
}

double quadratic_ground_energy_grid(const DMat& J, double alpha, int n_grid, double box_sigmas) {
  // grids sized so the Krylov iteration below converges comfortably
  int dimn = static_cast<int>(J.rows());
  if (dimn > 2) throw ComputeError("quadratic_ground_energy_grid: dimension above 2");
  double c = 1.0 / (4.0 * std::pow(alpha, 4));
  Eigen::SelfAdjointEigenSolver<DMat> es(J);
  double jmin = es.eigenvalues().minCoeff();
  if (jmin <= 0) throw ComputeError("quadratic_ground_energy_grid: need positive J");
  double width = std::pow(c / jmin, 0.25);  // widest ground width scale
  double L = box_sigmas * width;
  double h = 2.0 * L / (n_grid + 1);

  auto idx = [&](int i, int j) { return i * n_grid + j; };
  std::size_t dim_tot = dimn == 1 ? n_grid : static_cast<std::size_t>(n_grid) * n_grid;
  std::vector<double> V(dim_tot);
  if (dimn == 1) {
    for (int i = 0; i < n_grid; ++i) {
      double x = -L + (i + 1) * h;
      V[i] = J(0, 0) * x * x;
    }
  } else {
    for (int i = 0; i < n_grid; ++i)
      for (int j = 0; j < n_grid; ++j) {
        double x = -L + (i + 1) * h, y = -L + (j + 1) * h;
        V[idx(i, j)] = J(0, 0) * x * x + 2 * J(0, 1) * x * y + J(1, 1) * y * y;
      }
  }
  // 4th order FD Laplacian
  double ih2 = 1.0 / (12.0 * h * h);
  auto apply = [&](const double* in, double* out) {
    if (dimn == 1) {
      for (int i = 0; i < n_grid; ++i) {
        double am2 = i >= 2 ? in[i - 2] : 0.0, am1 = i >= 1 ? in[i - 1] : 0.0;
        double ap1 = i + 1 < n_grid ? in[i + 1] : 0.0, ap2 = i + 2 < n_grid ? in[i + 2] : 0.0;
        double lap = (-am2 + 16 * am1 - 30 * in[i] + 16 * ap1 - ap2) * ih2;
        out[i] = -c * lap + V[i] * in[i];
      }
    } else {
      for (int i = 0; i < n_grid; ++i)
        for (int j = 0; j < n_grid; ++j) {
          auto at = [&](int ii, int jj) {
            return (ii < 0 || jj < 0 || ii >= n_grid || jj >= n_grid) ? 0.0 : in[idx(ii, jj)];
          };
          double lap =
              (-at(i - 2, j) + 16 * at(i - 1, j) - 30 * in[idx(i, j)] + 16 * at(i + 1, j) -
               at(i + 2, j)) * ih2 +
              (-at(i, j - 2) + 16 * at(i, j - 1) - 30 * in[idx(i, j)] + 16 * at(i, j + 1) -
               at(i, j + 2)) * ih2;
          out[idx(i, j)] = -c * lap + V[idx(i, j)] * in[idx(i, j)];
        }
    }
  };
  return lanczos_lowest(dim_tot, apply, dimn == 1 ? 800 : 420);
}

ToyBoundReport toy_bound_demo(const std::function<double(const DVec&)>& F, int n_modes,
                              const std::vector<double>& alphas, const DVec& lambda_star,
                              const DMat& hessian, int n_grid, double halfwidth) {
  if (n_modes > 2) throw ComputeError("toy_bound_demo: n_modes above 2 needs too much memory");
  ToyBoundReport rep;
  Eigen::SelfAdjointEigenSolver<DMat> es(hessian);
  rep.surrogate = -n_modes;  // -Tr[1 - sqrt(Hess)]
  for (int i = 0; i < n_modes; ++i) rep.surrogate += std::sqrt(std::max(0.0, es.eigenvalues()[i]));
  rep.trace_form = rep.surrogate;

  double h = 2.0 * halfwidth / (n_grid + 1);
  std::size_t dim_tot = n_modes == 1 ? n_grid : static_cast<std::size_t>(n_grid) * n_grid;
  auto idx = [&](int i, int j) { return i * n_grid + j; };

  // classical energy tabulated once; the mode Hamiltonian reuses it per alpha
  std::vector<double> Fgrid(dim_tot);
  double e_min = 1e300;
  {
    std::vector<DVec> pts(dim_tot, DVec(n_modes));
    for (int i = 0; i < n_grid; ++i) {
      if (n_modes == 1) {
        pts[i][0] = lambda_star[0] - halfwidth + (i + 1) * h;
      } else {
        for (int j = 0; j < n_grid; ++j) {
          pts[idx(i, j)][0] = lambda_star[0] - halfwidth + (i + 1) * h;
          pts[idx(i, j)][1] = lambda_star[1] - halfwidth + (j + 1) * h;
        }
      }
    }
    parallel_for(dim_tot, [&](std::size_t p) { Fgrid[p] = F(pts[p]); });
    for (double v : Fgrid) e_min = std::min(e_min, v);
  }

  double ih2 = 1.0 / (12.0 * h * h);
  for (double alpha : alphas) {
    double c = 1.0 / (4.0 * std::pow(alpha, 4));
    auto apply = [&](const double* in, double* out) {
      if (n_modes == 1) {
        for (int i = 0; i < n_grid; ++i) {
          double am2 = i >= 2 ? in[i - 2] : 0.0, am1 = i >= 1 ? in[i - 1] : 0.0;
          double ap1 = i + 1 < n_grid ? in[i + 1] : 0.0, ap2 = i + 2 < n_grid ? in[i + 2] : 0.0;
          double lap = (-am2 + 16 * am1 - 30 * in[i] + 16 * ap1 - ap2) * ih2;
          out[i] = -c * lap + Fgrid[i] * in[i];
        }
      } else {
        for (int i = 0; i < n_grid; ++i)
          for (int j = 0; j < n_grid; ++j) {
            auto at = [&](int ii, int jj) {
              return (ii < 0 || jj < 0 || ii >= n_grid || jj >= n_grid) ? 0.0 : in[idx(ii, jj)];
            };
            double lap =
                (-at(i - 2, j) + 16 * at(i - 1, j) - 30 * in[idx(i, j)] + 16 * at(i + 1, j) -
                 at(i + 2, j)) * ih2 +
                (-at(i, j - 2) + 16 * at(i, j - 1) - 30 * in[idx(i, j)] + 16 * at(i, j + 1) -
                 at(i, j + 2)) * ih2;
            out[idx(i, j)] = -c * lap + Fgrid[idx(i, j)] * in[idx(i, j)];
          }
      }
    };
    double e0 = lanczos_lowest(dim_tot, apply, 900);
    rep.alphas.push_back(alpha);
    rep.ground_energy.push_back(e0);
    rep.classical_min.push_back(e_min);
    rep.scaled_gap.push_back(2.0 * alpha * alpha * (e0 - e_min) - n_modes);
  }
  return rep;
}

}  // namespace pekar
