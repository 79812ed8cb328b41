#include "pekar/audits.hpp"

#include <algorithm>
#include <fstream>

namespace pekar {

OperatorBoundReport operator_bound_audit(int samples, uint64_t seed, double safety) {
  OperatorBoundReport rep;
  auto grid = make_grid(30.0, 2048);
  auto ratio_of = [&](Rng& rng) {
    // random localized potential: a few radial bumps at random radii
    RadialFunction V(grid);
    int nb = 1 + rng.uniform_int(3);
    for (int b = 0; b < nb; ++b) {
      double amp = rng.uniform(-3, 3), width = rng.uniform(0.3, 2.5);
      double at = rng.uniform(0.0, 5.0);
      for (int i = 0; i < grid->n(); ++i)
        V[i] += amp * std::exp(-std::pow((grid->r(i) - at) / width, 2));
    }
    RadialFunction u(grid);
    double uw = rng.uniform(0.5, 2.5), ua = rng.uniform(0.0, 2.0);
    for (int i = 0; i < grid->n(); ++i)
      u[i] = std::exp(-std::pow((grid->r(i) - ua) / uw, 2));
    double dn = diamond_norm(V);
    if (dn < 1e-10) return 0.0;
    double lhs = 0.0;
    for (int i = 0; i < grid->n(); ++i)
      lhs += grid->r(i) * grid->r(i) * V[i] * V[i] * u[i] * u[i];
    lhs *= 4 * M_PI * grid->dr();
    auto uh = radial_fourier(u);
    double dk = M_PI / grid->r_max();
    double rhs = 0.0;
    for (std::size_t m = 0; m < uh.size(); ++m) {
      double k = (m + 1) * dk;
      rhs += k * k * std::pow(1 + k * k, 2) * uh[m] * uh[m];
    }
    rhs *= 4 * M_PI * dk;
    return lhs / (dn * dn * rhs);
  };
  int ncal = std::max(20, samples / 4);
  double cal = 0.0;
  for (int s = 0; s < ncal; ++s) {
    Rng rng = Rng::stream(seed * 31 + 7, s);
    cal = std::max(cal, ratio_of(rng));
  }
  rep.calibration = safety * cal;
  for (int s = 0; s < samples; ++s) {
    Rng rng = Rng::stream(seed, s);
    double r = ratio_of(rng);
    rep.max_ratio = std::max(rep.max_ratio, r);
    if (r > rep.calibration) ++rep.violations;
    ++rep.samples;
  }
  return rep;
}

namespace {

// Nelder-Mead over three parameters, for the displacement minimization
template <typename F>
std::pair<Vec3, double> nelder_mead(const F& f, Vec3 start, double step, int iters) {
  struct P {
    Vec3 x;
    double v;
  };
  std::vector<P> s;
  s.push_back({start, f(start)});
  for (int i = 0; i < 3; ++i) {
    Vec3 x = start;
    (i == 0 ? x.x : i == 1 ? x.y : x.z) += step;
    s.push_back({x, f(x)});
  }
  auto cmp = [](const P& a, const P& b) { return a.v < b.v; };
  for (int it = 0; it < iters; ++it) {
    std::sort(s.begin(), s.end(), cmp);
    if (std::abs(s[3].v - s[0].v) < 1e-13) break;
    Vec3 c = (s[0].x + s[1].x + s[2].x) * (1.0 / 3.0);
    Vec3 xr = c + (c - s[3].x);
    double vr = f(xr);
    if (vr < s[0].v) {
      Vec3 xe = c + (c - s[3].x) * 2.0;
      double ve = f(xe);
      s[3] = ve < vr ? P{xe, ve} : P{xr, vr};
    } else if (vr < s[2].v) {
      s[3] = {xr, vr};
    } else {
      Vec3 xc = c + (s[3].x - c) * 0.5;
      double vc = f(xc);
      if (vc < s[3].v) {
        s[3] = {xc, vc};
      } else {
        for (int i = 1; i < 4; ++i) {
          s[i].x = s[0].x + (s[i].x - s[0].x) * 0.5;
          s[i].v = f(s[i].x);
        }
      }
    }
  }
  std::sort(s.begin(), s.end(), cmp);
  return {s[0].x, s[0].v};
}

struct SampleRow {
  double dia = 0, fgap = 0, q52 = 0, qL = 0, ratio52 = 0;
  double f54 = 0, jval = 0, deficit = 0, ratio54 = 0;
  double coer = 0, ratio_coer = 0;
  bool t_ok = false, min_ok = false;
};

}  // namespace

QuadraticAuditReport quadratic_bound_audit(const QuadraticAuditConfig& cfg,
                                           const PekarSolution& sol,
                                           const HessianSpectrum& spec) {
  QuadraticAuditReport rep;
  CubeBasis basis(cfg.lambda, cfg.ell, {0, 0, 0});
  FlatteningMap flat(basis, sol);
  int N = basis.n_real();
  Box3D box(cfg.box_n, cfg.box_half_width);
  RadialFourierProfile prof(sol.phi);

  // center operators with a near-complete spectrum, once
  TransportedOperators ops0 = transport_operators(spec, basis, {0, 0, 0}, 1e-5, 1e-2);
  DVec c0 = flat.coeffs_of_translated({0, 0, 0});
  const DMat& V3 = flat.span();

  std::vector<double> Vpek = box.potential_from_solution(sol, {0, 0, 0});
  std::vector<double> Vpi0(box.points(), 0.0);
  box.add_mode_potential(basis, c0, Vpi0);
  double e_ref = sol.coupling + box.ground_state(Vpek, 1e-9);  // box-consistent minimum
  double eps54 = cfg.eps54_frac * flat.delta_star();
  double W = sol.coupling;

  auto displacement_inf = [&](const DVec& xi, const Eigen::Vector3d& t, bool& ok) {
    auto objective = [&](const Vec3& x) {
      DVec cx = flat.coeffs_of_translated(x);
      double auto_corr = field_autocorrelation(sol, x.norm());
      return 2.0 * (W - auto_corr) + 2.0 * (c0.dot(xi) - cx.dot(xi)) + xi.squaredNorm();
    };
    Vec3 start{0, 0, 0};
    if (t.norm() < 0.8 * flat.delta_star()) {
      try {
        start = flat.x_of_t(t);
      } catch (const ComputeError&) {
        start = {0, 0, 0};
      }
    }
    auto [xm, vm] = nelder_mead(objective, start, 0.15, 60);
    // single ring probe guards against a far-off basin
    {
      double v = objective(start + Vec3{1.2, 0, 0});
      if (v < vm) {
        auto [x2, v2] = nelder_mead(objective, start + Vec3{1.2, 0, 0}, 0.15, 60);
        if (v2 < vm) {
          xm = x2;
          vm = v2;
        }
      }
    }
    ok = std::isfinite(vm) && vm >= -1e-9;
    return std::max(0.0, vm);
  };

  auto run_sample = [&](uint64_t sidx) {
    SampleRow row;
    Rng rng = Rng::stream(cfg.seed, sidx);
    DVec xi(N);
    for (int p = 0; p < basis.n_pairs(); ++p) {
      double damp = 1.0 / (1.0 + 0.5 * basis.center(p).norm());
      xi[2 * p] = damp * rng.normal();
      xi[2 * p + 1] = damp * rng.normal();
    }
    double target =
        cfg.diamond_min * std::pow(cfg.diamond_max / cfg.diamond_min, rng.uniform());
    double dia_raw = diamond_norm_coords(basis, xi, 3.0, 0.75);
    xi *= target / dia_raw;
    row.dia = target;

    // shared potential grid of the perturbation
    std::vector<double> Vxi(box.points(), 0.0);
    box.add_mode_potential(basis, xi, Vxi);

    // quadratic expansion at the full minimizer
    {
      std::vector<double> V = Vpek;
      for (std::size_t q = 0; q < V.size(); ++q) V[q] += Vxi[q];
      double norm2 = W + 2.0 * c0.dot(xi) + xi.squaredNorm();
      double F = norm2 + box.ground_state(V, 1e-9);
      row.fgap = F - e_ref;
      double q52 = xi.squaredNorm() - xi.dot(ops0.K * xi);
      row.q52 = q52;
      row.qL = xi.dot(ops0.L * xi);
      row.ratio52 = std::abs(row.fgap - q52) / std::max(1e-14, row.dia * row.qL);
    }

    // flattened lower bound for the projected field
    Eigen::Vector3d t = V3.transpose() * xi;
    row.t_ok = t.norm() < cfg.t_margin * eps54;
    if (row.t_ok) {
      std::vector<double> V = Vpi0;
      for (std::size_t q = 0; q < V.size(); ++q) V[q] += Vxi[q];
      DVec lam = c0 + xi;
      double F = lam.squaredNorm() + box.ground_state(V, 1e-9);
      row.f54 = F;
      Vec3 xt = flat.x_of_t(t);
      TransportedOperators opst =
          transport_operators(spec, basis, xt, cfg.kappa_cut_sample, 1e-2);
      DVec taul = flat.tau(lam);
      DVec q = taul - V3 * (V3.transpose() * taul);
      DVec Mq = q - (1.0 + eps54) * (opst.K * q + eps54 * (opst.L * q));
      row.jval = q.dot(Mq);
      row.deficit = flat.projection_deficit(xt);
      double shortfall = e_ref + row.jval - F;  // positive needs the compensator
      row.ratio54 = std::max(0.0, shortfall) * eps54 / std::max(1e-14, row.deficit);
    }

    // coercivity of the energy gap over the translated family
    row.coer = displacement_inf(xi, t, row.min_ok);
    row.ratio_coer = row.coer / std::max(row.fgap, 1e-10);
    return row;
  };

  // calibration pass fixes the empirical constants; the smallest samples,
  // whose genuine cubic remainder is negligible, declare the measurement
  // floor of the expansion gap (set by the source-spectrum truncation)
  double cal54 = 0, calco = 0;
  std::vector<SampleRow> cal_rows;
  for (int s = 0; s < cfg.calibration_samples; ++s) {
    SampleRow row = run_sample(800000 + s);
    cal_rows.push_back(row);
    if (row.t_ok) cal54 = std::max(cal54, row.ratio54);
    if (row.min_ok && row.fgap > 1e-8) calco = std::max(calco, row.ratio_coer);
  }
  {
    std::vector<SampleRow> by_dia = cal_rows;
    std::sort(by_dia.begin(), by_dia.end(),
              [](const SampleRow& a, const SampleRow& b) { return a.dia < b.dia; });
    int nf = std::max(4, static_cast<int>(by_dia.size()) / 6);
    std::vector<double> gaps;
    for (int i = 0; i < nf && i < static_cast<int>(by_dia.size()); ++i)
      gaps.push_back(std::abs(by_dia[i].fgap - by_dia[i].q52));
    std::sort(gaps.begin(), gaps.end());
    rep.floor52 = 2.0 * gaps[gaps.size() / 2];
  }
  double cal52 = 0, cal52c = 0;
  for (const SampleRow& row : cal_rows) {
    double gap = std::abs(row.fgap - row.q52);
    double rhs = std::max(1e-14, row.dia * row.qL);
    cal52 = std::max(cal52, std::max(0.0, gap - rep.floor52) / rhs);
    if (rhs > 10.0 * rep.floor52) cal52c = std::max(cal52c, gap / rhs);
  }
  rep.c52 = cfg.safety * cal52;
  rep.c52_clean = cfg.safety * std::max(cal52c, 1e-6);
  rep.C54 = cfg.safety * std::max(cal54, 1e-6);
  rep.Ccoer = cfg.safety * calco;

  std::ofstream csv;
  if (!cfg.csv_path.empty()) {
    csv.open(cfg.csv_path);
    csv << "diamond,fgap,q52,qL,ratio52,f54,jval,deficit,ratio54,coer,ratio_coer,t_ok,min_ok\n";
    csv.precision(12);
  }
  std::vector<std::pair<double, double>> dia_ratio;
  for (int s = 0; s < cfg.samples; ++s) {
    SampleRow row = run_sample(s);
    ++rep.samples;
    double gap = std::abs(row.fgap - row.q52);
    double rhs = std::max(1e-14, row.dia * row.qL);
    double r52 = std::max(0.0, gap - rep.floor52) / rhs;
    rep.max_ratio52 = std::max(rep.max_ratio52, r52);
    if (r52 > rep.c52) ++rep.violations52;
    if (rhs > 10.0 * rep.floor52) {
      ++rep.clean_samples;
      if (gap / rhs > rep.c52_clean) ++rep.violations52_clean;
    }
    dia_ratio.push_back({row.dia, r52});
    if (row.t_ok) {
      rep.max_ratio54 = std::max(rep.max_ratio54, row.ratio54);
      if (row.ratio54 > rep.C54) ++rep.violations54;
    } else {
      ++rep.excluded_t;
    }
    if (row.min_ok && row.fgap > 1e-8) {
      rep.max_ratio_coer = std::max(rep.max_ratio_coer, row.ratio_coer);
      if (row.ratio_coer > rep.Ccoer) ++rep.violations_coer;
    } else if (!row.min_ok) {
      ++rep.excluded_minim;
    }
    if (csv.is_open())
      csv << row.dia << ',' << row.fgap << ',' << row.q52 << ',' << row.qL << ','
          << row.ratio52 << ',' << row.f54 << ',' << row.jval << ',' << row.deficit << ','
          << row.ratio54 << ',' << row.coer << ',' << row.ratio_coer << ',' << row.t_ok << ','
          << row.min_ok << '\n';
  }

  // first diamond radius where the expansion constant fails its calibration
  std::sort(dia_ratio.begin(), dia_ratio.end());
  rep.delta0_first_failure = cfg.diamond_max;
  for (auto& [d, r] : dia_ratio)
    if (r > rep.c52) {
      rep.delta0_first_failure = d;
      break;
    }

  // degenerate direction: a translation tangent has a vanishing quadratic
  // form while the energy gap is of higher order
  {
    double delta = 0.05;
    DVec xi = delta * V3.col(0);
    std::vector<double> Vxi(box.points(), 0.0);
    box.add_mode_potential(basis, xi, Vxi);
    std::vector<double> V = Vpek;
    for (std::size_t q = 0; q < V.size(); ++q) V[q] += Vxi[q];
    double norm2 = W + 2.0 * c0.dot(xi) + xi.squaredNorm();
    double F = norm2 + box.ground_state(V, 1e-9);
    rep.degenerate_direction_cubic = std::abs(F - e_ref);
    rep.degenerate_direction_quad = xi.squaredNorm() - xi.dot(ops0.K * xi);
  }
  return rep;
}

TraceLadderReport trace_convergence_ladder(const TraceLadderConfig& cfg,
                                           const PekarSolution& sol,
                                           const HessianSpectrum& spec) {
  TraceLadderReport rep;
  rep.trace_H = quantum_correction(spec).trace;

  const Vec3 dirs[3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};

  auto sup_trace = [&](const CubeBasis& basis, FlatteningMap& flat, double eps) {
    // seven-point t sample inside |t| < eps
    std::vector<Eigen::Vector3d> ts;
    ts.push_back(Eigen::Vector3d::Zero());
    for (int d = 0; d < 3; ++d)
      for (double sgn : {1.0, -1.0}) {
        Eigen::Vector3d t;
        t << dirs[d].x, dirs[d].y, dirs[d].z;
        ts.push_back(0.8 * eps * sgn * t);
      }
    double sup = -1e300, inf = 1e300;
    for (const auto& t : ts) {
      Vec3 xt = flat.x_of_t(t);
      TransportedOperators ops = transport_operators(spec, basis, xt, cfg.kappa_cut, 1e-2);
      JResult jr = j_operator_from(flat, ops, t, eps);
      sup = std::max(sup, jr.trace_form);
      inf = std::min(inf, jr.trace_form);
    }
    return std::pair<double, double>(sup, inf);
  };

  // finest basis: eps ladder
  {
    CubeBasis basis(cfg.bases.back().first, cfg.bases.back().second, {0, 0, 0});
    FlatteningMap flat(basis, sol);
    for (double frac : cfg.eps_ladder) {
      double eps = frac * flat.delta_star();
      auto [sup, inf] = sup_trace(basis, flat, eps);
      rep.eps_values.push_back(eps);
      rep.sup_trace_eps.push_back(sup);
      (void)inf;
    }
    rep.eps_monotone = true;
    for (std::size_t i = 0; i + 1 < rep.sup_trace_eps.size(); ++i) {
      if (!(rep.sup_trace_eps[i] > rep.sup_trace_eps[i + 1] - 1e-9)) rep.eps_monotone = false;
      rep.eps_increments.push_back(std::abs(rep.sup_trace_eps[i] - rep.sup_trace_eps[i + 1]));
    }
    for (std::size_t i = 0; i + 1 < rep.eps_increments.size(); ++i)
      if (!(rep.eps_increments[i + 1] <= 1.05 * rep.eps_increments[i])) rep.eps_monotone = false;
  }

  // basis ladder at the reference eps
  for (auto& [L, l] : cfg.bases) {
    CubeBasis basis(L, l, {0, 0, 0});
    FlatteningMap flat(basis, sol);
    double eps = cfg.eps_ref_frac * flat.delta_star();
    auto [sup, inf] = sup_trace(basis, flat, eps);
    double dist = std::max(std::abs(sup - rep.trace_H), std::abs(inf - rep.trace_H));
    rep.basis_modes.push_back(basis.n_real());
    rep.sup_dist_basis.push_back(dist);
  }
  rep.basis_monotone = true;
  for (std::size_t i = 0; i + 1 < rep.sup_dist_basis.size(); ++i)
    if (!(rep.sup_dist_basis[i + 1] <= 1.05 * rep.sup_dist_basis[i])) rep.basis_monotone = false;
  return rep;
}

}  // namespace pekar
