#include "pekar/radial_ops.hpp"

#include <fftw3.h>

#include <algorithm>
#include <mutex>

namespace pekar {

namespace {

std::mutex g_fftw_mutex;

// DST-I of x (FFTW RODFT00): y_k = 2 sum_j x_j sin(pi (j+1)(k+1)/(n+1))
std::vector<double> dst1(const std::vector<double>& x) {
  int n = static_cast<int>(x.size());
  std::vector<double> in(x), out(n);
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(g_fftw_mutex);
    plan = fftw_plan_r2r_1d(n, in.data(), out.data(), FFTW_RODFT00, FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  {
    std::lock_guard<std::mutex> lock(g_fftw_mutex);
    fftw_destroy_plan(plan);
  }
  return out;
}

// integral of sin(u)/u over (0, inf), by panels plus asymptotic tail;
// kept as a quadrature (not the closed form) so coulomb_overlap is a real
// Fourier-side computation.
double si_infinity() {
  static double v = [] {
    double U = 400.0 * M_PI;
    const int panels = 800;
    double s = 0.0;
    std::vector<double> x, w;
    for (int p = 0; p < panels; ++p) {
      gauss_on(12, U * p / panels, U * (p + 1) / panels, x, w);
      for (std::size_t i = 0; i < x.size(); ++i) s += w[i] * std::sin(x[i]) / x[i];
    }
    // int_U^inf sin u / u du = cos(U)/U (1 - 2/U^2) + sin(U)/U^2 (1 - 6/U^2) + O(U^-5)
    s += std::cos(U) / U * (1.0 - 2.0 / (U * U)) + std::sin(U) / (U * U) * (1.0 - 6.0 / (U * U));
    return s;
  }();
  return v;
}

}  // namespace

double coulomb_overlap(const Vec3& x, const Vec3& y) {
  double d = (x - y).norm();
  if (d <= 0.0) throw ComputeError("coulomb_overlap: divergent overlap at coincident points");
  // (2 pi^2)^{-1} int e^{ik.(x-y)} |k|^{-2} dk  ->  (2/pi) (1/d) int_0^inf sin(u)/u du
  return (2.0 / M_PI) / d * si_infinity();
}

std::vector<double> radial_fourier(const RadialFunction& f) {
  const RadialGrid& g = f.grid();
  int n = g.n();
  std::vector<double> u(n);
  for (int i = 0; i < n; ++i) u[i] = g.r(i) * f[i];
  std::vector<double> y = dst1(u);
  double dk = M_PI / g.r_max();
  double c = std::sqrt(2.0 / M_PI) * 0.5 * g.dr();
  for (int m = 0; m < n; ++m) y[m] = c * y[m] / ((m + 1) * dk);
  return y;
}

RadialFunction radial_fourier_inverse(const std::vector<double>& fhat, GridPtr grid) {
  int n = grid->n();
  if (static_cast<int>(fhat.size()) != n)
    throw ComputeError("radial_fourier_inverse: size mismatch");
  double dk = M_PI / grid->r_max();
  std::vector<double> v(n);
  for (int m = 0; m < n; ++m) v[m] = (m + 1) * dk * fhat[m];
  std::vector<double> y = dst1(v);
  RadialFunction out(grid);
  double c = std::sqrt(2.0 / M_PI) * 0.5 * dk;
  for (int j = 0; j < n; ++j) out[j] = c * y[j] / grid->r(j);
  return out;
}

RadialFunction inv_laplace_pow(const RadialFunction& f, double s) {
  std::vector<double> fh = radial_fourier(f);
  double dk = M_PI / f.grid().r_max();
  for (std::size_t m = 0; m < fh.size(); ++m) fh[m] /= std::pow((m + 1) * dk, s);
  return radial_fourier_inverse(fh, f.grid_ptr());
}

TailFit fit_inverse_square_tail(const RadialFunction& f) {
  const RadialGrid& g = f.grid();
  int n = g.n();
  TailFit t;
  // least squares of r^2 f(r) = c2 + c4/r^2 + c6/r^4 on the outer quarter
  int n0 = n - n / 4;
  double A[3][3] = {{0}}, b[3] = {0};
  for (int j = n0; j < n; ++j) {
    double r2 = g.r(j) * g.r(j);
    double y = f[j] * r2;
    double basis[3] = {1.0, 1.0 / r2, 1.0 / (r2 * r2)};
    for (int a = 0; a < 3; ++a) {
      b[a] += basis[a] * y;
      for (int c = 0; c < 3; ++c) A[a][c] += basis[a] * basis[c];
    }
  }
  // Cramer solve of the 3x3 normal equations
  auto det3 = [](double m[3][3]) {
    return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
           m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
           m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
  };
  double D = det3(A);
  if (std::abs(D) < 1e-300) return t;
  double M[3][3];
  double sol[3];
  for (int c = 0; c < 3; ++c) {
    for (int a = 0; a < 3; ++a)
      for (int k = 0; k < 3; ++k) M[a][k] = (k == c) ? b[a] : A[a][k];
    sol[c] = det3(M) / D;
  }
  t.c2 = sol[0];
  t.c4 = sol[1];
  t.c6 = sol[2];
  // accept only when the edge really is in the tail regime: the fitted form
  // must track the data and the mid-grid value must dominate the edge
  double worst = 0.0, scale = 0.0;
  for (int j = n0; j < n; ++j) {
    double pred = t.c2 + t.c4 / (g.r(j) * g.r(j)) + t.c6 / std::pow(g.r(j), 4);
    worst = std::max(worst, std::abs(pred - f[j] * g.r(j) * g.r(j)));
    scale = std::max(scale, std::abs(f[j] * g.r(j) * g.r(j)));
  }
  double mid = std::abs(f[n / 2]) * g.r(n / 2) * g.r(n / 2);
  t.valid = scale > 0 && worst < 1e-3 * scale + 1e-14 && std::abs(t.c2) < 2.0 * mid + 1e-12;
  if (!t.valid) t = TailFit{};
  return t;
}

double norm2_with_tail(const RadialFunction& f) {
  double base = f.norm2();
  TailFit t = fit_inverse_square_tail(f);
  if (!t.valid) return base;
  double R = f.grid().r_max();
  // int_R^inf 4 pi r^2 (c2/r^2 + c4/r^4 + c6/r^6)^2 dr, leading terms
  double tail = 4.0 * M_PI *
                (t.c2 * t.c2 / R + 2.0 * t.c2 * t.c4 / (3.0 * R * R * R) +
                 (t.c4 * t.c4 + 2.0 * t.c2 * t.c6) / (5.0 * std::pow(R, 5)));
  return base + tail;
}

RadialFunction inv_sqrt_laplace_free(const RadialFunction& f) {
  const RadialGrid& g = f.grid();
  int n = g.n();
  double dr = g.dr();
  double R = g.r_max();
  std::vector<double> sf(n);
  for (int j = 0; j < n; ++j) sf[j] = g.r(j) * f[j];

  // tail continuation past r_max for inverse-square-class profiles
  TailFit tfit = fit_inverse_square_tail(f);
  double c2 = tfit.valid ? tfit.c2 : 0.0;

  RadialFunction out(f.grid_ptr(), f.l_ang());
  parallel_for(n, [&](std::size_t ii) {
    int i = static_cast<int>(ii);
    double r = g.r(i);
    // subtract the linear Taylor part of s f(s) at s = r; the remainder
    // vanishes quadratically at the log singularity
    double c = sf[i];
    double c1 = (i > 0 && i < n - 1) ? (sf[i + 1] - sf[i - 1]) / (2.0 * dr)
                                     : (i == 0 ? (sf[1] - 0.0) / (2.0 * dr) : 0.0);
    double acc = 0.0;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      double s = g.r(j);
      acc += (sf[j] - c - c1 * (s - r)) * std::log((r + s) / std::abs(r - s));
    }
    // trapezoid endpoint at s = R (integrand vanishes at s = 0)
    double sfR = tfit.valid ? R * tfit.eval(R) : 0.0;
    acc += 0.5 * (sfR - c - c1 * (R - r)) * std::log((r + R) / (R - r));
    acc *= dr;
    // exact integrals of the subtracted pieces against the kernel on [0, R]
    double A = (r + R) * std::log(r + R) - 2.0 * r * std::log(r) - (R - r) * std::log(R - r);
    double t1 = R + r, t0 = r;
    double I_plus = 0.5 * t1 * t1 * std::log(t1) - 0.25 * t1 * t1 -
                    2.0 * r * (t1 * std::log(t1) - t1) -
                    (0.5 * t0 * t0 * std::log(t0) - 0.25 * t0 * t0 -
                     2.0 * r * (t0 * std::log(t0) - t0));
    double I_minus = (0.5 * (R - r) * (R - r) * std::log(R - r) - 0.25 * (R - r) * (R - r)) -
                     (0.5 * r * r * std::log(r) - 0.25 * r * r);
    acc += c * A + c1 * (I_plus - I_minus);
    // fitted tail beyond the grid
    if (tfit.valid) {
      std::vector<double> x, w;
      double tail = 0.0;
      gauss_on(48, R, 60.0 * R, x, w);
      for (std::size_t q = 0; q < x.size(); ++q)
        tail += w[q] * x[q] * tfit.eval(x[q]) * std::log((x[q] + r) / (x[q] - r));
      tail += 2.0 * c2 * r / (60.0 * R);  // remainder of int 2 c2 r / s^2
      acc += tail;
    }
    out[i] = acc / (M_PI * r);
  });
  return out;
}

RadialFunction potential_of_field(const RadialFunction& phi) {
  phi.check_finite("potential_of_field");
  // decay guard: tabulated field must be small at the outer edge
  int n = phi.n();
  double edge = 0.0, peak = 0.0;
  for (int i = 0; i < n; ++i) peak = std::max(peak, std::abs(phi[i]));
  for (int i = n - n / 64; i < n; ++i) edge = std::max(edge, std::abs(phi[i]));
  if (peak > 0 && edge > 0.05 * peak)
    throw ComputeError("potential_of_field: tail tolerance violated");
  RadialFunction V = inv_sqrt_laplace_free(phi);
  for (int i = 0; i < n; ++i) V[i] *= -kFieldToPotential;
  return V;
}

RadialFunction coulomb_potential_of_density(const RadialFunction& rho) {
  const RadialGrid& g = rho.grid();
  int n = g.n();
  double dr = g.dr();
  // inner(r) = int_0^r s^2 rho ds, outer(r) = int_r^rmax s rho ds
  std::vector<double> inner(n), outer(n);
  double acc = 0.5 * (0.0 + g.r(0) * g.r(0) * rho[0]) * dr;  // panel [0, r_1]
  inner[0] = acc;
  for (int i = 1; i < n; ++i) {
    acc += 0.5 * (g.r(i - 1) * g.r(i - 1) * rho[i - 1] + g.r(i) * g.r(i) * rho[i]) * dr;
    inner[i] = acc;
  }
  double tail = 0.5 * g.r(n - 1) * rho[n - 1] * dr;  // panel [r_n, r_max], zero at edge
  outer[n - 1] = tail;
  for (int i = n - 2; i >= 0; --i) {
    tail += 0.5 * (g.r(i) * rho[i] + g.r(i + 1) * rho[i + 1]) * dr;
    outer[i] = tail;
  }
  RadialFunction V(rho.grid_ptr());
  for (int i = 0; i < n; ++i) V[i] = -2.0 * (4.0 * M_PI) * (inner[i] / g.r(i) + outer[i]);
  return V;
}

RadialFunction field_of_density(const RadialFunction& rho) {
  RadialFunction phi = inv_sqrt_laplace_free(rho);
  for (int i = 0; i < phi.n(); ++i) phi[i] *= kDensityToField;
  return phi;
}

namespace {

// local L2 mass of a radial profile over the unit ball centered at radius t
double ball_mass(const RadialFunction& V, double t) {
  const RadialGrid& g = V.grid();
  int n = g.n();
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    double r = g.r(i);
    if (t < 1e-12) {
      if (r > 1.0) break;
      s += r * r * V[i] * V[i];
      continue;
    }
    if (r < t - 1.0 || r > t + 1.0) continue;
    double cstar = (r * r + t * t - 1.0) / (2.0 * r * t);
    double frac = cstar <= -1.0 ? 1.0 : (cstar >= 1.0 ? 0.0 : 0.5 * (1.0 - cstar));
    s += r * r * V[i] * V[i] * frac;
  }
  return 4.0 * M_PI * s * g.dr();
}

}  // namespace

double diamond_norm(const RadialFunction& V) {
  V.check_finite("diamond_norm");
  const double step = 0.25;
  double best_t = 0.0, best = ball_mass(V, 0.0);
  for (double t = step; t <= V.grid().r_max(); t += step) {
    double m = ball_mass(V, t);
    if (m > best) {
      best = m;
      best_t = t;
    }
  }
  // golden-section refinement around the coarse argmax
  double a = std::max(0.0, best_t - step), b = best_t + step;
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - gr * (b - a), d = a + gr * (b - a);
  double fc = ball_mass(V, c), fd = ball_mass(V, d);
  for (int it = 0; it < 60 && (b - a) > 1e-10; ++it) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - gr * (b - a);
      fc = ball_mass(V, c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + gr * (b - a);
      fd = ball_mass(V, d);
    }
  }
  best = std::max({best, fc, fd});
  return std::sqrt(best);
}

Tridiag radial_hamiltonian(const RadialFunction& V, int l_ang) {
  const RadialGrid& g = V.grid();
  int n = g.n();
  double idr2 = 1.0 / (g.dr() * g.dr());
  Tridiag T;
  T.diag.resize(n);
  T.off.assign(n - 1, -idr2);
  double ll = static_cast<double>(l_ang) * (l_ang + 1);
  for (int i = 0; i < n; ++i) T.diag[i] = 2.0 * idr2 + ll / (g.r(i) * g.r(i)) + V[i];
  return T;
}

namespace {

// number of eigenvalues of T strictly below lambda (Sturm count); an exact
// zero pivot is perturbed downward, which counts it
int sturm_count(const Tridiag& T, double lambda) {
  int n = static_cast<int>(T.diag.size());
  int count = 0;
  double d = T.diag[0] - lambda;
  if (d == 0.0) d = -1e-300;
  if (d < 0) ++count;
  for (int i = 1; i < n; ++i) {
    d = T.diag[i] - lambda - T.off[i - 1] * T.off[i - 1] / d;
    if (d == 0.0) d = -1e-300;
    if (d < 0) ++count;
  }
  return count;
}

// Thomas solve of (T - shift) x = b; requires positive definite T - shift
std::vector<double> thomas_spd(const Tridiag& T, double shift, const std::vector<double>& b) {
  int n = static_cast<int>(T.diag.size());
  std::vector<double> c(n), d(n), x(n);
  double piv = T.diag[0] - shift;
  c[0] = T.off.empty() ? 0.0 : T.off[0] / piv;
  d[0] = b[0] / piv;
  for (int i = 1; i < n; ++i) {
    piv = T.diag[i] - shift - T.off[i - 1] * c[i - 1];
    if (i < n - 1) c[i] = T.off[i] / piv;
    d[i] = (b[i] - T.off[i - 1] * d[i - 1]) / piv;
  }
  x[n - 1] = d[n - 1];
  for (int i = n - 2; i >= 0; --i) x[i] = d[i] - c[i] * x[i + 1];
  return x;
}

}  // namespace

void tridiag_lowest(const Tridiag& T, int n_eigs, std::vector<double>& vals,
                    std::vector<std::vector<double>>* vecs) {
  int n = static_cast<int>(T.diag.size());
  double lo = T.diag[0], hi = T.diag[0];
  for (int i = 0; i < n; ++i) {
    double radius = (i > 0 ? std::abs(T.off[i - 1]) : 0.0) + (i < n - 1 ? std::abs(T.off[i]) : 0.0);
    lo = std::min(lo, T.diag[i] - radius);
    hi = std::max(hi, T.diag[i] + radius);
  }
  vals.resize(n_eigs);
  for (int k = 0; k < n_eigs; ++k) {
    double a = lo, b = hi;
    for (int it = 0; it < 200 && (b - a) > 1e-13 * (1.0 + std::abs(a)); ++it) {
      double mid = 0.5 * (a + b);
      if (sturm_count(T, mid) >= k + 1)
        b = mid;
      else
        a = mid;
    }
    vals[k] = 0.5 * (a + b);
  }
  if (!vecs) return;
  vecs->assign(n_eigs, std::vector<double>(n));
  Rng rng(12345);
  for (int k = 0; k < n_eigs; ++k) {
    std::vector<double>& v = (*vecs)[k];
    for (int i = 0; i < n; ++i) v[i] = rng.uniform(-1.0, 1.0);
    double shift = vals[k] - std::max(1e-11, 1e-11 * std::abs(vals[k]));
    double res = 1.0;
    for (int it = 0; it < 14; ++it) {
      // deflate previously found vectors (handles close eigenvalues)
      for (int j = 0; j < k; ++j) {
        double p = 0.0;
        for (int i = 0; i < n; ++i) p += v[i] * (*vecs)[j][i];
        for (int i = 0; i < n; ++i) v[i] -= p * (*vecs)[j][i];
      }
      std::vector<double> w = thomas_spd(T, shift, v);
      double nw = 0.0;
      for (double x : w) nw += x * x;
      nw = std::sqrt(nw);
      for (int i = 0; i < n; ++i) v[i] = w[i] / nw;
      // residual |(T - lambda) v|
      res = 0.0;
      for (int i = 0; i < n; ++i) {
        double t = (T.diag[i] - vals[k]) * v[i];
        if (i > 0) t += T.off[i - 1] * v[i - 1];
        if (i < n - 1) t += T.off[i] * v[i + 1];
        res += t * t;
      }
      res = std::sqrt(res);
      if (res < 1e-12 * (1.0 + std::abs(vals[k]))) break;
    }
    if (!(res < 1e-6 * (1.0 + std::abs(vals[k]))))
      throw ComputeError("tridiag_lowest: inverse iteration residual " + std::to_string(res));
  }
}

std::vector<double> tridiag_solve_deflated(const Tridiag& T, double shift,
                                           const std::vector<double>& b,
                                           const std::vector<double>* q) {
  std::vector<double> rhs(b);
  int n = static_cast<int>(b.size());
  double delta = 0.0;
  if (q) {
    double p = 0.0;
    for (int i = 0; i < n; ++i) p += rhs[i] * (*q)[i];
    for (int i = 0; i < n; ++i) rhs[i] -= p * (*q)[i];
    delta = 1e-10;  // T - shift is singular at the deflated ground state
  }
  std::vector<double> x = thomas_spd(T, shift - delta, rhs);
  if (q) {
    double p = 0.0;
    for (int i = 0; i < n; ++i) p += x[i] * (*q)[i];
    for (int i = 0; i < n; ++i) x[i] -= p * (*q)[i];
  }
  return x;
}

SchrodingerSpectrum schrodinger_ground(const RadialFunction& V, int l_ang, int n_states) {
  V.check_finite("schrodinger_ground");
  Tridiag T = radial_hamiltonian(V, l_ang);
  std::vector<double> vals;
  std::vector<std::vector<double>> uvecs;
  tridiag_lowest(T, n_states, vals, &uvecs);
  SchrodingerSpectrum sp;
  sp.l_ang = l_ang;
  sp.eigenvalues = vals;
  const RadialGrid& g = V.grid();
  double cnorm = 1.0 / std::sqrt(4.0 * M_PI * g.dr());
  for (auto& u : uvecs) {
    RadialFunction f(V.grid_ptr(), l_ang);
    for (int i = 0; i < g.n(); ++i) f[i] = cnorm * u[i] / g.r(i);
    sp.eigenfunctions.push_back(std::move(f));
  }
  return sp;
}

double pekar_functional(const RadialFunction& phi) {
  RadialFunction V = potential_of_field(phi);
  double e = std::numeric_limits<double>::infinity();
  for (int l = 0; l <= 1; ++l) {
    std::vector<double> vals;
    tridiag_lowest(radial_hamiltonian(V, l), 1, vals, nullptr);
    e = std::min(e, vals[0]);
  }
  return norm2_with_tail(phi) + e;
}

double kinetic_energy(const RadialFunction& f, int l_ang) {
  const RadialGrid& g = f.grid();
  int n = g.n();
  double dr = g.dr();
  // reduced wave with Dirichlet endpoints, forward differences
  double s = 0.0;
  double prev = 0.0;
  for (int i = 0; i < n; ++i) {
    double u = g.r(i) * f[i];
    double du = (u - prev) / dr;
    s += du * du;
    prev = u;
  }
  s += (0.0 - prev) / dr * (0.0 - prev) / dr;
  double ll = static_cast<double>(l_ang) * (l_ang + 1);
  double cs = 0.0;
  for (int i = 0; i < n; ++i) {
    double u = g.r(i) * f[i];
    cs += ll * u * u / (g.r(i) * g.r(i));
  }
  return 4.0 * M_PI * (s + cs) * dr;
}

// --- BesselEngine ------------------------------------------------------------

BesselEngine::BesselEngine(GridPtr grid, int n_k, double k_max, int l_max)
    : grid_(std::move(grid)), n_k_(n_k), dk_(k_max / (n_k + 1)), l_max_(l_max) {
  if (n_k < 4 || k_max <= 0) throw ComputeError("BesselEngine: bad k grid");
}

void BesselEngine::apply(int l, bool fwd, const std::vector<std::vector<double>>& in,
                         std::vector<std::vector<double>>& out) const {
  if (l > l_max_) throw ComputeError("BesselEngine: channel above l_max");
  int n_r = grid_->n();
  int n_src = fwd ? n_r : n_k_;
  int n_dst = fwd ? n_k_ : n_r;
  int ncol = static_cast<int>(in.size());
  for (const auto& c : in)
    if (static_cast<int>(c.size()) != n_src) throw ComputeError("BesselEngine: column size");
  out.assign(ncol, std::vector<double>(n_dst, 0.0));

  double dsrc = fwd ? grid_->dr() : dk_;
  // uniform (trapezoid) weights: the integrands vanish at both ends, where
  // Euler-Maclaurin makes the uniform rule superconvergent
  double pref = std::sqrt(2.0 / M_PI) * dsrc;

  parallel_for(n_dst, [&](std::size_t t) {
    std::vector<double> jb(l + 1);
    double xt = fwd ? (t + 1) * dk_ : grid_->r(static_cast<int>(t));
    for (int s = 0; s < n_src; ++s) {
      double xs = fwd ? grid_->r(s) : (s + 1) * dk_;
      sph_bessel_stack(l, xt * xs, jb.data());
      double w = pref * xs * xs * jb[l];
      for (int c = 0; c < ncol; ++c) out[c][t] += w * in[c][s];
    }
  });
}

std::vector<std::vector<double>> BesselEngine::forward(
    int l, const std::vector<std::vector<double>>& cols) const {
  std::vector<std::vector<double>> out;
  apply(l, true, cols, out);
  return out;
}

std::vector<std::vector<double>> BesselEngine::inverse(
    int l, const std::vector<std::vector<double>>& cols) const {
  std::vector<std::vector<double>> out;
  apply(l, false, cols, out);
  return out;
}

std::vector<std::vector<double>> BesselEngine::inv_sqrt_laplace(
    int l, const std::vector<std::vector<double>>& cols) const {
  auto kc = forward(l, cols);
  for (auto& col : kc)
    for (int m = 0; m < n_k_; ++m) col[m] /= (m + 1) * dk_;
  return inverse(l, kc);
}

}  // namespace pekar
