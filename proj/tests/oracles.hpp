#pragma once

// test-side oracles, kept independent of the library's solution paths
#include <cmath>
#include <vector>

#include "pekar/pekar_solver.hpp"

namespace pekar_oracles {

// Independent oracle: direct projected-gradient minimization of
//   E[psi] = |grad psi|^2 - int int |psi(x)|^2 |psi(y)|^2 / |x-y|
// over normalized radial psi, on its own grid and its own algorithm.
double gradient_flow_oracle(double r_max, int n, int max_iter = 30000) {
  double dr = r_max / (n + 1);
  std::vector<double> r(n), u(n);
  for (int i = 0; i < n; ++i) r[i] = (i + 1) * dr;
  for (int i = 0; i < n; ++i) u[i] = r[i] * std::exp(-0.5 * r[i]);
  auto normalize = [&]() {
    double s = 0;
    for (double x : u) s += x * x;
    s = 1.0 / std::sqrt(4.0 * M_PI * dr * s);
    for (double& x : u) x *= s;
  };
  normalize();

  std::vector<double> W(n), grad(n), u_prev(n), g_prev(n);
  auto energy_grad = [&](double& E) {
    // W = rho * 1/|x| by cumulative integrals, rho = (u/r)^2
    std::vector<double> rho(n);
    for (int i = 0; i < n; ++i) rho[i] = (u[i] / r[i]) * (u[i] / r[i]);
    double acc = 0.5 * r[0] * r[0] * rho[0] * dr;
    std::vector<double> inner(n);
    inner[0] = acc;
    for (int i = 1; i < n; ++i) {
      acc += 0.5 * (r[i - 1] * r[i - 1] * rho[i - 1] + r[i] * r[i] * rho[i]) * dr;
      inner[i] = acc;
    }
    double tail = 0.5 * r[n - 1] * rho[n - 1] * dr;
    std::vector<double> outer(n);
    outer[n - 1] = tail;
    for (int i = n - 2; i >= 0; --i) {
      tail += 0.5 * (r[i] * rho[i] + r[i + 1] * rho[i + 1]) * dr;
      outer[i] = tail;
    }
    for (int i = 0; i < n; ++i) W[i] = 4.0 * M_PI * (inner[i] / r[i] + outer[i]);
    double kin = 0.0;
    double prev = 0.0;
    for (int i = 0; i <= n; ++i) {
      double cur = (i < n) ? u[i] : 0.0;
      double d = (cur - prev) / dr;
      kin += d * d;
      prev = cur;
    }
    kin *= 4.0 * M_PI * dr;
    double D = 0.0;
    for (int i = 0; i < n; ++i) D += r[i] * r[i] * rho[i] * W[i];
    D *= 4.0 * M_PI * dr;
    E = kin - D;
    for (int i = 0; i < n; ++i) {
      double lap = 2.0 * u[i] - (i > 0 ? u[i - 1] : 0.0) - (i < n - 1 ? u[i + 1] : 0.0);
      grad[i] = 8.0 * M_PI * lap / dr - 16.0 * M_PI * dr * W[i] * u[i];
    }
    // project out the radial direction (norm constraint)
    double gu = 0, uu = 0;
    for (int i = 0; i < n; ++i) {
      gu += grad[i] * u[i];
      uu += u[i] * u[i];
    }
    for (int i = 0; i < n; ++i) grad[i] -= gu / uu * u[i];
  };

  // (1 - Lap) preconditioner via Thomas solve; descent with a monotone
  // backtracking step stays a direct minimization of the functional
  double idr2 = 1.0 / (dr * dr);
  auto precondition = [&](std::vector<double>& d) {
    int m = n;
    std::vector<double> c(m), rhs(d);
    double piv = 1.0 + 2.0 * idr2;
    c[0] = -idr2 / piv;
    d[0] = rhs[0] / piv;
    for (int i = 1; i < m; ++i) {
      piv = 1.0 + 2.0 * idr2 + idr2 * c[i - 1];
      if (i < m - 1) c[i] = -idr2 / piv;
      d[i] = (rhs[i] + idr2 * d[i - 1]) / piv;
    }
    for (int i = m - 2; i >= 0; --i) d[i] -= c[i] * d[i + 1];
  };

  double E = 0, step = 1.0;
  energy_grad(E);
  for (int it = 0; it < max_iter; ++it) {
    std::vector<double> dir(grad);
    precondition(dir);
    // keep the step inside the constraint tangent space
    double du = 0, uu = 0;
    for (int i = 0; i < n; ++i) {
      du += dir[i] * u[i];
      uu += u[i] * u[i];
    }
    for (int i = 0; i < n; ++i) dir[i] -= du / uu * u[i];
    u_prev = u;
    double E_try = 0;
    for (int tries = 0; tries < 40; ++tries) {
      for (int i = 0; i < n; ++i) u[i] = u_prev[i] - step * dir[i];
      normalize();
      energy_grad(E_try);
      if (E_try <= E) break;
      step *= 0.5;
    }
    double gain = E - E_try;
    E = E_try;
    step *= 1.3;
    if (it > 50 && gain >= 0 && gain < 1e-16 * std::abs(E)) break;
  }
  return E;
}

}  // namespace pekar_oracles
