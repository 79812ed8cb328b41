#include "pekar/box3d.hpp"

#include <fftw3.h>

#include <cstring>
#include <mutex>

namespace pekar {

namespace {
std::mutex g_fftw_mutex;
}

Box3D::Box3D(int n, double half_width) : n_(n), L_(half_width) {
  h_ = 2.0 * L_ / (n_ + 1);
  buf_.resize(points());
  {
    std::lock_guard<std::mutex> lock(g_fftw_mutex);
    plan_ = fftw_plan_r2r_3d(n_, n_, n_, buf_.data(), buf_.data(), FFTW_RODFT00, FFTW_RODFT00,
                             FFTW_RODFT00, FFTW_ESTIMATE);
  }
  k2_.resize(points());
  std::vector<double> k1(n_);
  for (int m = 0; m < n_; ++m) k1[m] = M_PI * (m + 1) / (2.0 * L_);
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j)
      for (int k = 0; k < n_; ++k)
        k2_[index(i, j, k)] = k1[i] * k1[i] + k1[j] * k1[j] + k1[k] * k1[k];
}

Box3D::~Box3D() {
  if (plan_) {
    std::lock_guard<std::mutex> lock(g_fftw_mutex);
    fftw_destroy_plan(static_cast<fftw_plan>(plan_));
  }
}

void Box3D::dst3(double* data) {
  fftw_execute_r2r(static_cast<fftw_plan>(plan_), data, data);
}

void Box3D::apply_H(const std::vector<double>& V, const double* in, double* out) {
  std::size_t P = points();
  std::memcpy(buf_.data(), in, P * sizeof(double));
  dst3(buf_.data());
  double norm = 1.0 / (8.0 * std::pow(n_ + 1.0, 3));
  for (std::size_t q = 0; q < P; ++q) buf_[q] *= k2_[q] * norm;
  dst3(buf_.data());
  for (std::size_t q = 0; q < P; ++q) out[q] = buf_[q] + V[q] * in[q];
}

void Box3D::precondition(const double* in, double* out, double sigma) {
  std::size_t P = points();
  std::memcpy(buf_.data(), in, P * sizeof(double));
  dst3(buf_.data());
  double norm = 1.0 / (8.0 * std::pow(n_ + 1.0, 3));
  for (std::size_t q = 0; q < P; ++q) buf_[q] *= norm / (k2_[q] + sigma);
  dst3(buf_.data());
  std::memcpy(out, buf_.data(), P * sizeof(double));
}

double Box3D::ground_state(const std::vector<double>& V, double tol, int max_iter) {
  std::size_t P = points();
  if (V.size() != P) throw ComputeError("Box3D: potential size mismatch");
  auto dot = [P](const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0;
    for (std::size_t q = 0; q < P; ++q) s += a[q] * b[q];
    return s;
  };
  auto normalize = [&](std::vector<double>& a) {
    double s = std::sqrt(dot(a, a));
    for (auto& v : a) v /= s;
    return s;
  };

  if (!have_warm_ || x_.size() != P) {
    x_.assign(P, 0.0);
    // isotropic gaussian seed
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j)
        for (int k = 0; k < n_; ++k) {
          double r2 = coord(i) * coord(i) + coord(j) * coord(j) + coord(k) * coord(k);
          x_[index(i, j, k)] = std::exp(-0.25 * r2);
        }
  }
  normalize(x_);

  std::vector<double> Hx(P), r(P), w(P), p(P), Hw(P), Hp(P);
  bool have_p = false;
  double theta = 0;
  double sigma = 0.4;

  for (int it = 0; it < max_iter; ++it) {
    apply_H(V, x_.data(), Hx.data());
    theta = dot(x_, Hx);
    for (std::size_t q = 0; q < P; ++q) r[q] = Hx[q] - theta * x_[q];
    double res = std::sqrt(dot(r, r));
    if (res < tol * std::max(1.0, std::abs(theta))) {
      have_warm_ = true;
      return theta;
    }
    precondition(r.data(), w.data(), sigma);
    // orthonormalize w (and p) against x
    auto orth = [&](std::vector<double>& v) {
      double c1 = dot(v, x_);
      for (std::size_t q = 0; q < P; ++q) v[q] -= c1 * x_[q];
    };
    orth(w);
    double nw = std::sqrt(dot(w, w));
    if (nw < 1e-300) {
      have_warm_ = true;
      return theta;
    }
    for (auto& v : w) v /= nw;
    int dim = 2;
    if (have_p) {
      orth(p);
      double cw = dot(p, w);
      for (std::size_t q = 0; q < P; ++q) p[q] -= cw * w[q];
      double np = std::sqrt(dot(p, p));
      if (np > 1e-10) {
        for (auto& v : p) v /= np;
        dim = 3;
      }
    }
    apply_H(V, w.data(), Hw.data());
    if (dim == 3) apply_H(V, p.data(), Hp.data());
    // Rayleigh-Ritz on span{x, w, p}
    Eigen::MatrixXd A(dim, dim);
    A(0, 0) = theta;
    A(0, 1) = A(1, 0) = dot(x_, Hw);
    A(1, 1) = dot(w, Hw);
    if (dim == 3) {
      A(0, 2) = A(2, 0) = dot(x_, Hp);
      A(1, 2) = A(2, 1) = dot(w, Hp);
      A(2, 2) = dot(p, Hp);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
    Eigen::VectorXd c = es.eigenvectors().col(0);
    std::vector<double> xn(P), pn(P);
    for (std::size_t q = 0; q < P; ++q) {
      double add = c[1] * w[q] + (dim == 3 ? c[2] * p[q] : 0.0);
      xn[q] = c[0] * x_[q] + add;
      pn[q] = add;
    }
    x_.swap(xn);
    p.swap(pn);
    normalize(x_);
    double np = std::sqrt(dot(p, p));
    if (np > 1e-300)
      for (auto& v : p) v /= np;
    have_p = true;
  }
  throw ComputeError("Box3D::ground_state: no convergence within iteration cap");
}

std::vector<double> Box3D::potential_from_solution(const PekarSolution& sol,
                                                   const Vec3& center) const {
  const RadialGrid& g = sol.V.grid();
  double rmax_safe = g.r_max() - 4 * g.dr();
  std::vector<double> V(points());
  auto radial = [&](double r) {
    if (r >= rmax_safe) return -2.0 / r;
    double t = r / g.dr() - 1.0;
    int i = static_cast<int>(std::floor(t));
    double u = t - i;
    auto at = [&](int m) {
      if (m < 0) return sol.V[0];
      if (m >= g.n()) return -2.0 / g.r_max();
      return sol.V[m];
    };
    double p0 = at(i - 1), p1 = at(i), p2 = at(i + 1), p3 = at(i + 2);
    double a = -0.5 * p0 + 1.5 * p1 - 1.5 * p2 + 0.5 * p3;
    double b = p0 - 2.5 * p1 + 2.0 * p2 - 0.5 * p3;
    double cc = -0.5 * p0 + 0.5 * p2;
    return ((a * u + b) * u + cc) * u + p1;
  };
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j)
      for (int k = 0; k < n_; ++k) {
        Vec3 x{coord(i) - center.x, coord(j) - center.y, coord(k) - center.z};
        V[index(i, j, k)] = radial(x.norm());
      }
  return V;
}

void Box3D::add_mode_potential(const CubeBasis& basis, const DVec& lambda,
                               std::vector<double>& V) const {
  if (V.size() != points()) throw ComputeError("add_mode_potential: size mismatch");
  std::vector<double> ax(n_);
  for (int i = 0; i < n_; ++i) ax[i] = coord(i);
  std::vector<double> field = tabulate_mode_field(basis, lambda, ax, ax, ax);
  double c = -4.0 * std::sqrt(M_PI);
  for (std::size_t q = 0; q < points(); ++q) V[q] += c * field[q];
}

double box_energy(Box3D& box, double phi_norm2, const std::vector<double>& V, double tol) {
  return phi_norm2 + box.ground_state(V, tol);
}

}  // namespace pekar
