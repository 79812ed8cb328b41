#include "pekar/flatten.hpp"

namespace pekar {

FlatteningMap::FlatteningMap(const CubeBasis& basis, const PekarSolution& sol)
    : basis_(&basis), sol_(&sol), prof_(sol.phi), phi_norm2_full_(sol.coupling) {
  if (basis.shift().norm() > 1e-14)
    throw ComputeError("FlatteningMap: expected the unshifted system");
  // gradient norm per component: |d_i phi|^2 = |phi'|^2 / 3
  const RadialGrid& g = sol.phi.grid();
  RadialFunction dphi(sol.phi.grid_ptr());
  for (int i = 1; i + 1 < g.n(); ++i)
    dphi[i] = (sol.phi[i + 1] - sol.phi[i - 1]) / (2 * g.dr());
  dphi[0] = dphi[1];
  dphi[g.n() - 1] = dphi[g.n() - 2];
  double dnorm2 = norm2_with_tail(dphi) / 3.0;

  int N = basis.n_real();
  V_ = DMat(N, 3);
  for (int axis = 0; axis < 3; ++axis) {
    FieldProjection pr = project_field_gradient(basis, prof_, axis, dnorm2);
    V_.col(axis) = pr.coeffs;
  }
  // orthonormalize (symmetry makes the columns near-orthogonal already)
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < a; ++b) V_.col(a) -= V_.col(b).dot(V_.col(a)) * V_.col(b);
    double nn = V_.col(a).norm();
    if (nn < 1e-8) throw ComputeError("FlatteningMap: degenerate gradient projections");
    V_.col(a) /= nn;
  }

  // domain of the Newton inverse: walk outward until the Jacobian degenerates
  double lo = 0.0, hi = 0.05;
  auto invertible_at = [&](double radius) {
    for (const Vec3& dir : {Vec3{1, 0, 0}, Vec3{0.577, 0.577, 0.577}, Vec3{0, -0.8, 0.6}}) {
      Eigen::Matrix3d J = omega_jacobian(dir * radius);
      Eigen::JacobiSVD<Eigen::Matrix3d> svd(J);
      if (svd.singularValues()(2) < 0.2 * svd.singularValues()(0)) return false;
    }
    return true;
  };
  while (hi < 3.0 && invertible_at(hi)) {
    lo = hi;
    hi *= 1.6;
  }
  for (int it = 0; it < 12; ++it) {
    double mid = 0.5 * (lo + hi);
    if (invertible_at(mid))
      lo = mid;
    else
      hi = mid;
  }
  // delta_star in t units: image radius of the safe x-ball (cautious factor)
  Eigen::Matrix3d J0 = omega_jacobian({0, 0, 0});
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(J0);
  delta_star_ = 0.7 * lo * svd.singularValues()(2);
}

DVec FlatteningMap::coeffs_of_translated(const Vec3& x) const {
  return project_field(*basis_, prof_, x, phi_norm2_full_).coeffs;
}

double FlatteningMap::projection_deficit(const Vec3& x) const {
  FieldProjection pr = project_field(*basis_, prof_, x, phi_norm2_full_);
  return pr.residual * pr.residual;
}

Eigen::Vector3d FlatteningMap::omega(const Vec3& x) const {
  DVec c = coeffs_of_translated(x);
  return V_.transpose() * c;
}

Eigen::Matrix3d FlatteningMap::omega_jacobian(const Vec3& x) const {
  Eigen::Matrix3d J;
  double h = 1e-4;
  for (int axis = 0; axis < 3; ++axis) {
    Vec3 dp = x, dm = x;
    (axis == 0 ? dp.x : axis == 1 ? dp.y : dp.z) += h;
    (axis == 0 ? dm.x : axis == 1 ? dm.y : dm.z) -= h;
    J.col(axis) = (omega(dp) - omega(dm)) / (2 * h);
  }
  return J;
}

Vec3 FlatteningMap::x_of_t(const Eigen::Vector3d& t) const {
  if (t.norm() >= delta_star_)
    throw ComputeError("x_of_t: |t| outside the invertibility radius " +
                       std::to_string(delta_star_));
  Vec3 x{0, 0, 0};
  for (int it = 0; it < 60; ++it) {
    Eigen::Vector3d f = omega(x) - t;
    if (f.norm() < 1e-11) return x;
    Eigen::Matrix3d J = omega_jacobian(x);
    Eigen::Vector3d dx = J.fullPivLu().solve(f);
    x = x - Vec3{dx(0), dx(1), dx(2)};
    if (x.norm() > 5.0)
      throw ComputeError("x_of_t: Newton left the invertibility ball, delta_star = " +
                         std::to_string(delta_star_));
  }
  throw ComputeError("x_of_t: Newton did not converge, delta_star = " +
                     std::to_string(delta_star_));
}

DVec FlatteningMap::f_coeffs(const Eigen::Vector3d& t) const {
  if (t.norm() >= delta_star_) return DVec::Zero(basis_->n_real());
  Vec3 xt = x_of_t(t);
  DVec c = coeffs_of_translated(xt);
  return c - V_ * t;
}

Eigen::Vector3d FlatteningMap::t_of(const DVec& lambda) const {
  return V_.transpose() * lambda;
}

DVec FlatteningMap::tau(const DVec& lambda) const {
  Eigen::Vector3d t = t_of(lambda);
  if (t.norm() >= delta_star_) return lambda;
  return lambda - f_coeffs(t);
}

const DMat& FlatteningMap::complement_basis() const {
  if (comp_.size() == 0) {
    int N = static_cast<int>(V_.rows());
    Eigen::HouseholderQR<DMat> qr(V_);
    DMat Q = qr.householderQ() * DMat::Identity(N, N);
    comp_ = Q.rightCols(N - 3);
  }
  return comp_;
}

double FlatteningMap::det_tau_jacobian_structural(const Eigen::Vector3d& t) const {
  // D tau = I - F V^T with F = d f / d t; by the Sylvester identity the
  // determinant is det(I_3 - V^T F), and V^T f(t) = omega(x_t) - t = 0
  // identically, so V^T F = D omega (D omega)^{-1} - I = 0 to roundoff.
  Vec3 xt = x_of_t(t);
  Eigen::Matrix3d Dom = omega_jacobian(xt);
  Eigen::Matrix3d E = Dom * Dom.inverse() - Eigen::Matrix3d::Identity();
  return (Eigen::Matrix3d::Identity() - E).determinant();
}

double FlatteningMap::det_tau_jacobian_fd(const Eigen::Vector3d& t, double step) const {
  Eigen::Matrix3d VtF;
  for (int a = 0; a < 3; ++a) {
    Eigen::Vector3d tp = t, tm = t;
    tp(a) += step;
    tm(a) -= step;
    DVec df = (f_coeffs(tp) - f_coeffs(tm)) / (2 * step);
    VtF.col(a) = V_.transpose() * df;
  }
  return (Eigen::Matrix3d::Identity() - VtF).determinant();
}

TransportedOperators transport_operators(const HessianSpectrum& spec, const CubeBasis& basis,
                                         const Vec3& x, double kappa_cut, double trunc_tol) {
  TransportedOperators out;
  int N = basis.n_real();

  // k grid of the spectral profiles
  double k_max = std::sqrt(4.0 * spec.M + 2.0 * spec.l_max() + 8.0) + 6.0;
  int n_k = static_cast<int>(k_max / 0.05);
  BesselEngine bessel(spec.grid, n_k, k_max, spec.l_max());
  double dk = k_max / (n_k + 1);

  struct Kept {
    int l;
    double weight;
    RadialFourierProfile prof;
    bool into_K;
    int col0;  // first column in the coefficient matrix
  };
  std::vector<Kept> kept;
  int total_cols = 0;
  for (int l = 0; l <= spec.l_max(); ++l) {
    const ChannelBlock& blk = spec.block(l);
    auto consider = [&](const DVec& vals, const DMat& vecs, bool into_K) {
      for (int i = 0; i < vals.size(); ++i) {
        double v = vals[i];
        if (v < kappa_cut) {
          if (v > 0) {
            out.truncation_error = std::max(out.truncation_error, v);
            out.dropped_weight += (2 * l + 1) * v;
          }
          continue;
        }
        RadialFunction profile = spec.profile(l, vecs.col(i));
        std::vector<std::vector<double>> cols(1, profile.values());
        auto kc = bessel.forward(l, cols);
        kept.push_back({l, v, RadialFourierProfile(kc[0], dk), into_K, total_cols});
        total_cols += 2 * l + 1;
        (into_K ? out.rank_K : out.rank_L) += 2 * l + 1;
      }
    };
    consider(blk.kappa, blk.kappa_vecs, true);
    consider(blk.ell_vals, blk.ell_vecs, false);
  }
  if (out.truncation_error > trunc_tol)
    throw ComputeError("transport_operators: dropped spectral weight " +
                       std::to_string(out.truncation_error) + ", lower kappa_cut");

  // real-mode coefficients of T_x(sqrt(4 pi) profile Y_lm) for every kept
  // eigenpair and every m, assembled in one pass over quadrature nodes
  int L = spec.l_max();
  DMat C = DMat::Zero(N, total_cols);
  double s4pi = std::sqrt(4.0 * M_PI);
  parallel_for(basis.n_pairs(), [&](std::size_t pp) {
    int p = static_cast<int>(pp);
    std::vector<double> Y((L + 1) * (L + 1));
    std::vector<Cplx> il(L + 1);
    for (int l = 0; l <= L; ++l) il[l] = std::pow(Cplx(0, -1), l);
    std::vector<Cplx> acc(total_cols, 0.0);
    basis.for_each_node(p, [&](const Vec3& k, double w) {
      double kn = k.norm();
      double dir[3] = {k.x, k.y, k.z};
      real_sph_harmonics(L, dir, Y.data());
      double ph = -k.dot(x);
      Cplx phase(std::cos(ph), std::sin(ph));
      Cplx common = s4pi * phase * (w / kn);
      for (const Kept& kp : kept) {
        Cplx base = il[kp.l] * kp.prof(kn) * common;
        int l = kp.l;
        for (int m = -l; m <= l; ++m) acc[kp.col0 + m + l] += base * Y[l * (l + 1) + m];
      }
    });
    double inv = 1.0 / std::sqrt(basis.norm_const(p));
    for (int c = 0; c < total_cols; ++c) {
      C(2 * p, c) = std::sqrt(2.0) * (acc[c] * inv).real();
      C(2 * p + 1, c) = -std::sqrt(2.0) * (acc[c] * inv).imag();
    }
  });
  DVec wK = DVec::Zero(total_cols), wL = DVec::Zero(total_cols);
  for (const Kept& kp : kept)
    for (int m = 0; m < 2 * kp.l + 1; ++m) (kp.into_K ? wK : wL)[kp.col0 + m] = kp.weight;
  out.K = C * wK.asDiagonal() * C.transpose();
  out.L = C * wL.asDiagonal() * C.transpose();
  return out;
}

JResult j_operator_from(const FlatteningMap& flat, const TransportedOperators& ops,
                        const Eigen::Vector3d& t, double eps) {
  if (!(eps > 0) || eps >= flat.delta_star())
    throw ComputeError("j_operator: need 0 < eps < delta_star = " +
                       std::to_string(flat.delta_star()));
  int N = flat.basis().n_real();
  JResult out;
  const DMat& V = flat.span();
  if (t.norm() >= eps) {
    out.definitional_branch = true;
    out.J = DMat::Identity(N - 3, N - 3);  // the projection itself
    out.eigenvalues.assign(N - 3, 1.0);
    out.min_eig = 1.0;
    out.trace_form = 3.0;
    return out;
  }
  (void)V;
  DMat M = DMat::Identity(N, N) - (1.0 + eps) * (ops.K + eps * ops.L);
  const DMat& B = flat.complement_basis();
  DMat Jc = B.transpose() * M * B;
  Jc = 0.5 * (Jc + Jc.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<DMat> es(Jc, Eigen::EigenvaluesOnly);
  out.trace_form = 3.0;
  out.min_eig = 1e300;
  out.eigenvalues.reserve(N - 3);
  for (int i = 0; i < N - 3; ++i) {
    double j = es.eigenvalues()[i];
    out.eigenvalues.push_back(j);
    out.min_eig = std::min(out.min_eig, j);
    out.trace_form += 1.0 - std::sqrt(std::max(0.0, j));
  }
  // J is reported in the complement basis (quadratic forms of full-space
  // vectors v evaluate as (B^T v)^T J (B^T v))
  out.J = std::move(Jc);
  return out;
}

JResult j_operator(const FlatteningMap& flat, const HessianSpectrum& spec,
                   const Eigen::Vector3d& t, double eps, double kappa_cut) {
  if (!(eps > 0) || eps >= flat.delta_star())
    throw ComputeError("j_operator: need 0 < eps < delta_star = " +
                       std::to_string(flat.delta_star()));
  if (t.norm() >= eps) {
    TransportedOperators dummy;
    return j_operator_from(flat, dummy, t, eps);
  }
  Vec3 xt = flat.x_of_t(t);
  TransportedOperators ops = transport_operators(spec, flat.basis(), xt, kappa_cut);
  return j_operator_from(flat, ops, t, eps);
}

}  // namespace pekar
