#include "pekar/util.hpp"

#include <algorithm>
#include <atomic>
#include <map>
#include <mutex>

namespace pekar {

namespace {
int g_workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

void set_worker_count(int n) { g_workers = std::max(1, n); }
int worker_count() { return g_workers; }

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  int nw = std::min<std::size_t>(g_workers, n);
  if (nw <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(nw);
  std::size_t chunk = std::max<std::size_t>(1, n / (4 * static_cast<std::size_t>(nw)));
  auto work = [&]() {
    for (;;) {
      std::size_t i0 = next.fetch_add(chunk);
      if (i0 >= n) return;
      std::size_t i1 = std::min(n, i0 + chunk);
      for (std::size_t i = i0; i < i1; ++i) fn(i);
    }
  };
  for (int t = 0; t < nw; ++t) pool.emplace_back(work);
  for (auto& th : pool) th.join();
}

const GaussRule& gauss_legendre(int order) {
  static std::mutex mu;
  static std::map<int, GaussRule> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(order);
  if (it != cache.end()) return it->second;

  GaussRule r;
  r.x.resize(order);
  r.w.resize(order);
  // Newton iteration on Legendre polynomials
  for (int i = 0; i < order; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (order + 0.5));
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= order; ++k) {
        double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      double dp = order * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= order; ++k) {
      double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    double dp = order * (x * p1 - p0) / (x * x - 1.0);
    r.x[i] = x;
    r.w[i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  std::sort(r.x.begin(), r.x.end());
  // recompute weights in sorted order (weights are symmetric anyway)
  // simpler: weights above were paired with unsorted nodes; redo pairing
  // by full recomputation keyed on sorted nodes.
  for (int i = 0; i < order; ++i) {
    double x = r.x[i];
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= order; ++k) {
      double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    double dp = order * (x * p1 - p0) / (x * x - 1.0);
    r.w[i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  auto [ins, ok] = cache.emplace(order, std::move(r));
  return ins->second;
}

void gauss_on(int order, double a, double b, std::vector<double>& x, std::vector<double>& w) {
  const GaussRule& r = gauss_legendre(order);
  x.resize(order);
  w.resize(order);
  double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  for (int i = 0; i < order; ++i) {
    x[i] = mid + half * r.x[i];
    w[i] = half * r.w[i];
  }
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  LineFit f;
  std::size_t n = x.size();
  if (n < 2) return f;
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
    syy += y[i] * y[i];
  }
  double det = n * sxx - sx * sx;
  if (std::abs(det) < 1e-300) return f;
  f.slope = (n * sxy - sx * sy) / det;
  f.intercept = (sy - f.slope * sx) / n;
  double ss_res = 0, ss_tot = 0, ym = sy / n;
  for (std::size_t i = 0; i < n; ++i) {
    double e = y[i] - (f.intercept + f.slope * x[i]);
    ss_res += e * e;
    ss_tot += (y[i] - ym) * (y[i] - ym);
  }
  f.r2 = (ss_tot > 0) ? 1.0 - ss_res / ss_tot : 1.0;
  return f;
}

void sph_bessel_stack(int lmax, double x, double* out) {
  if (x < 1e-8) {
    // series: j_l(x) ~ x^l / (2l+1)!!
    double v = 1.0;
    for (int l = 0; l <= lmax; ++l) {
      out[l] = v * (1.0 - x * x / (2.0 * (2 * l + 3)));
      v *= x / (2 * l + 3);
    }
    return;
  }
  double j0 = std::sin(x) / x;
  if (lmax == 0) {
    out[0] = j0;
    return;
  }
  double j1 = std::sin(x) / (x * x) - std::cos(x) / x;
  if (x > lmax + 10.0) {
    // upward recurrence is stable here
    out[0] = j0;
    out[1] = j1;
    for (int l = 1; l < lmax; ++l) out[l + 1] = (2 * l + 1) / x * out[l] - out[l - 1];
    return;
  }
  // Miller's downward recurrence
  int m = lmax + 16 + static_cast<int>(std::sqrt(40.0 * lmax));
  double jp = 0.0, jc = 1e-30;
  std::vector<double> tmp(lmax + 1, 0.0);
  for (int l = m; l >= 1; --l) {
    double jm = (2 * l + 1) / x * jc - jp;
    jp = jc;
    jc = jm;
    if (l - 1 <= lmax) tmp[l - 1] = jc;
    if (std::abs(jc) > 1e250) {
      jp *= 1e-250;
      jc *= 1e-250;
      for (int k = l - 1; k <= lmax; ++k)
        if (k >= 0 && k < static_cast<int>(tmp.size())) tmp[k] *= 1e-250;
    }
  }
  double scale = j0 / tmp[0];
  for (int l = 0; l <= lmax; ++l) out[l] = tmp[l] * scale;
}

double lanczos_lowest(std::size_t dim, const std::function<void(const double*, double*)>& apply,
                      int max_iter, std::vector<double>* eigvec, uint64_t seed,
                      const std::vector<double>* start) {
  int m = std::min<std::size_t>(max_iter, dim);
  std::vector<std::vector<double>> V;
  V.reserve(m + 1);
  std::vector<double> alpha, beta;
  std::vector<double> v(dim), w(dim);
  if (start && start->size() == dim) {
    v = *start;
  } else {
    Rng rng(seed);
    for (auto& x : v) x = rng.uniform(-1, 1);
  }
  double nv = 0;
  for (double x : v) nv += x * x;
  nv = std::sqrt(nv);
  for (auto& x : v) x /= nv;
  V.push_back(v);

  double best = 0;
  std::vector<double> ritz_in_krylov;
  for (int j = 0; j < m; ++j) {
    apply(V[j].data(), w.data());
    double a = 0;
    for (std::size_t i = 0; i < dim; ++i) a += w[i] * V[j][i];
    alpha.push_back(a);
    for (std::size_t i = 0; i < dim; ++i)
      w[i] -= a * V[j][i] + (j > 0 ? beta[j - 1] * V[j - 1][i] : 0.0);
    // full reorthogonalization
    for (const auto& q : V) {
      double p = 0;
      for (std::size_t i = 0; i < dim; ++i) p += w[i] * q[i];
      for (std::size_t i = 0; i < dim; ++i) w[i] -= p * q[i];
    }
    double b = 0;
    for (double x : w) b += x * x;
    b = std::sqrt(b);
    // tridiagonal Ritz values via Sturm on the accumulated alpha/beta
    if ((j > 8 && j % 8 == 0) || b < 1e-13 || j == m - 1) {
      int k = static_cast<int>(alpha.size());
      // smallest eigenvalue of the j x j tridiagonal
      double lo = alpha[0], hi = alpha[0];
      for (int i = 0; i < k; ++i) {
        double rad =
            (i > 0 ? std::abs(beta[i - 1]) : 0.0) + (i < k - 1 && i < static_cast<int>(beta.size()) ? std::abs(beta[i]) : 0.0);
        lo = std::min(lo, alpha[i] - rad);
        hi = std::max(hi, alpha[i] + rad);
      }
      auto count = [&](double lam) {
        int c = 0;
        double d = alpha[0] - lam;
        if (d == 0.0) d = -1e-300;
        if (d < 0) ++c;
        for (int i = 1; i < k; ++i) {
          d = alpha[i] - lam - beta[i - 1] * beta[i - 1] / d;
          if (d == 0.0) d = -1e-300;
          if (d < 0) ++c;
        }
        return c;
      };
      double a0 = lo, b0 = hi;
      for (int it = 0; it < 200 && (b0 - a0) > 1e-14 * (1 + std::abs(a0)); ++it) {
        double mid = 0.5 * (a0 + b0);
        if (count(mid) >= 1)
          b0 = mid;
        else
          a0 = mid;
      }
      double ritz = 0.5 * (a0 + b0);
      bool converged = std::abs(ritz - best) < 1e-13 * (1 + std::abs(ritz)) && j > 16;
      best = ritz;
      if (converged || b < 1e-13 || j == m - 1) {
        if (eigvec) {
          // eigenvector of the tridiagonal by inverse iteration, then lift
          std::vector<double> y(k, 1.0);
          Rng r2(3);
          for (auto& x : y) x = r2.uniform(-1, 1);
          for (int it = 0; it < 6; ++it) {
            // solve (T - ritz + eps) z = y
            std::vector<double> c(k), d(k);
            double shift = ritz - 1e-12 * (1 + std::abs(ritz));
            double piv = alpha[0] - shift;
            c[0] = (k > 1 ? beta[0] / piv : 0.0);
            d[0] = y[0] / piv;
            for (int i = 1; i < k; ++i) {
              piv = alpha[i] - shift - beta[i - 1] * c[i - 1];
              if (i < k - 1) c[i] = beta[i] / piv;
              d[i] = (y[i] - beta[i - 1] * d[i - 1]) / piv;
            }
            y[k - 1] = d[k - 1];
            for (int i = k - 2; i >= 0; --i) y[i] = d[i] - c[i] * y[i + 1];
            double ny = 0;
            for (double x : y) ny += x * x;
            ny = std::sqrt(ny);
            for (auto& x : y) x /= ny;
          }
          eigvec->assign(dim, 0.0);
          for (int i = 0; i < k; ++i)
            for (std::size_t p = 0; p < dim; ++p) (*eigvec)[p] += y[i] * V[i][p];
        }
        return ritz;
      }
    }
    if (b < 1e-13) break;
    beta.push_back(b);
    for (std::size_t i = 0; i < dim; ++i) w[i] /= b;
    V.push_back(w);
  }
  return best;
}

void real_sph_harmonics(int lmax, const double n[3], double* out) {
  // real Y_lm built from fully-normalized associated Legendre functions;
  // orthonormal on S^2. out[l*(l+1)+m], m in [-l, l].
  double r = std::sqrt(n[0] * n[0] + n[1] * n[1] + n[2] * n[2]);
  if (r <= 0.0) throw ComputeError("real_sph_harmonics: zero direction");
  double ct = n[2] / r;
  double st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
  double phi = std::atan2(n[1], n[0]);

  int L = lmax;
  std::vector<double> P(static_cast<std::size_t>(L + 1) * (L + 2) / 2, 0.0);
  auto idx = [](int l, int m) { return l * (l + 1) / 2 + m; };
  P[idx(0, 0)] = std::sqrt(1.0 / (4.0 * M_PI));
  // diagonal: Pbar_mm
  for (int m = 1; m <= L; ++m)
    P[idx(m, m)] = -std::sqrt((2.0 * m + 1.0) / (2.0 * m)) * st * P[idx(m - 1, m - 1)];
  // sub-diagonal: Pbar_{m+1,m}
  for (int m = 0; m < L; ++m)
    P[idx(m + 1, m)] = std::sqrt(2.0 * m + 3.0) * ct * P[idx(m, m)];
  // upward in l
  for (int l = 2; l <= L; ++l) {
    for (int m = 0; m <= l - 2; ++m) {
      double a = std::sqrt((4.0 * l * l - 1.0) / (l * l - static_cast<double>(m) * m));
      double b = std::sqrt((((l - 1.0) * (l - 1.0) - m * m)) / (4.0 * (l - 1.0) * (l - 1.0) - 1.0));
      P[idx(l, m)] = a * (ct * P[idx(l - 1, m)] - b * P[idx(l - 2, m)]);
    }
  }
  for (int l = 0; l <= L; ++l) {
    out[l * (l + 1)] = P[idx(l, 0)];
    for (int m = 1; m <= l; ++m) {
      double c = std::sqrt(2.0) * P[idx(l, m)];
      out[l * (l + 1) + m] = c * std::cos(m * phi);
      out[l * (l + 1) - m] = c * std::sin(m * phi);
    }
  }
}

}  // namespace pekar
