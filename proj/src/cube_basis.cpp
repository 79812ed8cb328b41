#include "pekar/cube_basis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <mutex>

#include "json.hpp"

namespace pekar {

namespace {

bool lex_positive(const Vec3& z) {
  if (z.x != 0) return z.x > 0;
  if (z.y != 0) return z.y > 0;
  return z.z > 0;
}

bool lex_less(const Vec3& a, const Vec3& b) {
  if (a.x != b.x) return a.x < b.x;
  if (a.y != b.y) return a.y < b.y;
  return a.z < b.z;
}

}  // namespace

CubeBasis::CubeBasis(double lambda, double ell, Vec3 shift, int max_modes)
    : lambda_(lambda), ell_(ell), shift_(shift) {
  if (!(0 < ell && ell < lambda)) throw ComputeError("CubeBasis: need 0 < l < Lambda");
  int zmax = static_cast<int>(std::floor(lambda / (2 * ell))) + 1;
  const double sqrt3 = std::sqrt(3.0);
  for (int ix = -zmax; ix <= zmax; ++ix)
    for (int iy = -zmax; iy <= zmax; ++iy)
      for (int iz = -zmax; iz <= zmax; ++iz) {
        if (ix == 0 && iy == 0 && iz == 0) continue;
        Vec3 z{2 * ell * ix, 2 * ell * iy, 2 * ell * iz};
        if (z.norm() + sqrt3 * ell > lambda) continue;
        if (!lex_positive(z)) continue;
        centers_.push_back(z);
      }
  if (centers_.empty()) throw ComputeError("CubeBasis: Lambda/l too small, no cube fits");
  if (2 * static_cast<int>(centers_.size()) > max_modes)
    throw ComputeError("CubeBasis: mode count " + std::to_string(2 * centers_.size()) +
                       " above the cap " + std::to_string(max_modes));
  std::sort(centers_.begin(), centers_.end(), lex_less);

  c_.resize(centers_.size());
  order_.resize(centers_.size());
  for (std::size_t p = 0; p < centers_.size(); ++p) {
    // integrand curvature grows toward the origin: refine the rule there
    order_[p] = (centers_[p].norm() - sqrt3 * ell <= 4.0 * ell) ? 16 : 8;
    double acc = 0.0;
    for_each_node_ik2(static_cast<int>(p), [&](const Vec3&, double w) { acc += w; });
    c_[p] = acc;
  }
}

void CubeBasis::for_each_node(int pair, const std::function<void(const Vec3&, double)>& fn) const {
  const Vec3& z = centers_[pair];
  int o = order_[pair];
  std::vector<double> nx, wx, ny, wy, nz, wz;
  gauss_on(o, z.x - ell_, z.x + ell_, nx, wx);
  gauss_on(o, z.y - ell_, z.y + ell_, ny, wy);
  gauss_on(o, z.z - ell_, z.z + ell_, nz, wz);
  for (int a = 0; a < o; ++a)
    for (int b = 0; b < o; ++b)
      for (int c = 0; c < o; ++c) fn({nx[a], ny[b], nz[c]}, wx[a] * wy[b] * wz[c]);
}

void CubeBasis::for_each_node_ik2(int pair,
                                  const std::function<void(const Vec3&, double)>& fn) const {
  for_each_node(pair, [&](const Vec3& k, double w) { fn(k, w / k.dot(k)); });
}

Cplx CubeBasis::coeff(int pair, const std::function<Cplx(const Vec3&)>& fhat) const {
  // <e_z|f> = (1/sqrt(c_z)) int_{C_z} fhat(k) / |k| dk
  Cplx acc = 0;
  for_each_node(pair, [&](const Vec3& k, double w) { acc += w * fhat(k) / k.norm(); });
  return acc / std::sqrt(c_[pair]);
}

Cplx CubeBasis::coeff_w(int pair, const Vec3& x) const {
  Vec3 d = shift_ - x;
  Cplx acc = 0;
  for_each_node_ik2(pair, [&](const Vec3& k, double w) {
    double ph = k.dot(d);
    acc += w * Cplx(std::cos(ph), std::sin(ph));
  });
  return acc / std::sqrt(2.0 * M_PI * M_PI * c_[pair]);
}

DVec CubeBasis::real_coeffs(const std::function<Cplx(const Vec3&)>& fhat) const {
  DVec out(n_real());
  parallel_for(n_pairs(), [&](std::size_t p) {
    // shifted system: <e_{y,z}|f> picks up the e^{i k y} factor
    Cplx cv = coeff(static_cast<int>(p), [&](const Vec3& k) {
      double ph = k.dot(shift_);
      return fhat(k) * Cplx(std::cos(ph), std::sin(ph));
    });
    out[2 * p] = std::sqrt(2.0) * cv.real();
    out[2 * p + 1] = -std::sqrt(2.0) * cv.imag();
  });
  return out;
}

DMat CubeBasis::gram_refined() const {
  // different pairs have disjoint Fourier supports; within a pair the
  // cosine/sine combinations are orthogonal by parity. What remains is the
  // diagonal, i.e. the quality of the stored norm constants.
  DMat G = DMat::Identity(n_real(), n_real());
  for (int p = 0; p < n_pairs(); ++p) {
    const Vec3& z = centers_[p];
    int o = order_[p] + 16;
    std::vector<double> nx, wx, ny, wy, nz, wz;
    gauss_on(o, z.x - ell_, z.x + ell_, nx, wx);
    gauss_on(o, z.y - ell_, z.y + ell_, ny, wy);
    gauss_on(o, z.z - ell_, z.z + ell_, nz, wz);
    double acc = 0.0;
    for (int a = 0; a < o; ++a)
      for (int b = 0; b < o; ++b)
        for (int c = 0; c < o; ++c) {
          Vec3 k{nx[a], ny[b], nz[c]};
          acc += wx[a] * wy[b] * wz[c] / k.dot(k);
        }
    G(2 * p, 2 * p) = acc / c_[p];
    G(2 * p + 1, 2 * p + 1) = acc / c_[p];
  }
  return G;
}

void CubeBasis::save_manifest(const std::string& path) const {
  nlohmann::json j;
  j["lambda"] = lambda_;
  j["ell"] = ell_;
  j["shift"] = {shift_.x, shift_.y, shift_.z};
  j["ordering"] = "lexicographic over positive representatives; cosine mode 2p, sine mode 2p+1";
  auto& arr = j["pairs"];
  for (int p = 0; p < n_pairs(); ++p) {
    arr.push_back({{"center", {centers_[p].x, centers_[p].y, centers_[p].z}},
                   {"norm_const", c_[p]},
                   {"quad_order", order_[p]}});
  }
  std::ofstream f(path);
  if (!f) throw ComputeError("CubeBasis::save_manifest: cannot open " + path);
  f << j.dump(1);
}

// ---- radial profiles ----------------------------------------------------------

RadialFourierProfile::RadialFourierProfile(const RadialFunction& f)
    : fhat_(radial_fourier(f)), dk_(M_PI / f.grid().r_max()) {}

RadialFourierProfile::RadialFourierProfile(std::vector<double> fhat, double dk)
    : fhat_(std::move(fhat)), dk_(dk) {}

double RadialFourierProfile::operator()(double k) const {
  double t = k / dk_ - 1.0;  // grid k_m = (m+1) dk
  int i = static_cast<int>(std::floor(t));
  double u = t - i;
  auto at = [&](int m) {
    if (m < 0) {
      // odd reflection through k = 0 keeps profile * k smooth: profile of a
      // radial function behaves like a + b k^2 near 0, extended from node 0
      return m == -1 ? fhat_[0] : fhat_[0];
    }
    return m < static_cast<int>(fhat_.size()) ? fhat_[m] : 0.0;
  };
  // Catmull-Rom cubic
  double p0 = at(i - 1), p1 = at(i), p2 = at(i + 1), p3 = at(i + 2);
  double a = -0.5 * p0 + 1.5 * p1 - 1.5 * p2 + 0.5 * p3;
  double b = p0 - 2.5 * p1 + 2.0 * p2 - 0.5 * p3;
  double c = -0.5 * p0 + 0.5 * p2;
  return ((a * u + b) * u + c) * u + p1;
}

FieldProjection project_field(const CubeBasis& basis, const RadialFourierProfile& prof,
                              const Vec3& x, double norm2_full) {
  FieldProjection out;
  out.coeffs = basis.real_coeffs([&](const Vec3& k) {
    double ph = -k.dot(x);
    return prof(k.norm()) * Cplx(std::cos(ph), std::sin(ph));
  });
  out.norm2_in = out.coeffs.squaredNorm();
  out.norm2_full = norm2_full;
  double r2 = norm2_full - out.norm2_in;
  if (r2 < -1e-10) throw ComputeError("project_field: negative residual, quadrature inconsistency");
  out.residual = std::sqrt(std::max(0.0, r2));
  return out;
}

FieldProjection project_field_gradient(const CubeBasis& basis, const RadialFourierProfile& prof,
                                       int axis, double norm2_full) {
  FieldProjection out;
  out.coeffs = basis.real_coeffs([&](const Vec3& k) {
    double ka = axis == 0 ? k.x : (axis == 1 ? k.y : k.z);
    return Cplx(0.0, ka) * prof(k.norm());
  });
  out.norm2_in = out.coeffs.squaredNorm();
  out.norm2_full = norm2_full;
  double r2 = norm2_full - out.norm2_in;
  if (r2 < -1e-10)
    throw ComputeError("project_field_gradient: negative residual, quadrature inconsistency");
  out.residual = std::sqrt(std::max(0.0, r2));
  return out;
}

// ---- norm gap -----------------------------------------------------------------

namespace {

// stream over admissible lexicographically positive centers
void stream_centers(double lambda, double ell, const std::function<void(const Vec3&)>& fn) {
  int zmax = static_cast<int>(std::floor(lambda / (2 * ell))) + 1;
  const double sqrt3 = std::sqrt(3.0);
  for (int ix = -zmax; ix <= zmax; ++ix)
    for (int iy = -zmax; iy <= zmax; ++iy)
      for (int iz = -zmax; iz <= zmax; ++iz) {
        if (ix == 0 && iy == 0 && iz == 0) continue;
        Vec3 z{2 * ell * ix, 2 * ell * iy, 2 * ell * iz};
        if (z.norm() + sqrt3 * ell > lambda) continue;
        if (!lex_positive(z)) continue;
        fn(z);
      }
}

const Vec3 kGapDirection{0.48038446141526137, 0.6405126152203485, 0.6004805767690768};

struct CubeRule {
  std::vector<double> nx, wx, ny, wy, nz, wz;
  int o;
};

CubeRule cube_rule(const Vec3& z, double ell, int o) {
  CubeRule r;
  r.o = o;
  gauss_on(o, z.x - ell, z.x + ell, r.nx, r.wx);
  gauss_on(o, z.y - ell, z.y + ell, r.ny, r.wy);
  gauss_on(o, z.z - ell, z.z + ell, r.nz, r.wz);
  return r;
}

// int_{C_z} e^{i k d} / |k|^2 dk and int_{C_z} |k|^{-2} dk
void cube_integrals(const Vec3& z, double ell, const Vec3& d, int o, Cplx& I, double& c) {
  CubeRule r = cube_rule(z, ell, o);
  I = 0;
  c = 0;
  for (int a = 0; a < o; ++a)
    for (int b = 0; b < o; ++b)
      for (int cc = 0; cc < o; ++cc) {
        Vec3 k{r.nx[a], r.ny[b], r.nz[cc]};
        double w = r.wx[a] * r.wy[b] * r.wz[cc] / k.dot(k);
        double ph = k.dot(d);
        I += w * Cplx(std::cos(ph), std::sin(ph));
        c += w;
      }
}

int gap_order(const Vec3& z, double ell) {
  return (z.norm() - std::sqrt(3.0) * ell <= 4.0 * ell) ? 16 : 8;
}

}  // namespace

double norm_gap(double lambda, double ell, double dist) {
  Vec3 d = kGapDirection * dist;
  double covered = 0.0;
  std::vector<Vec3> centers;
  stream_centers(lambda, ell, [&](const Vec3& z) { centers.push_back(z); });
  std::vector<double> parts(centers.size());
  parallel_for(centers.size(), [&](std::size_t i) {
    Cplx I;
    double c;
    cube_integrals(centers[i], ell, d, gap_order(centers[i], ell), I, c);
    parts[i] = std::norm(I) / c;
  });
  for (double p : parts) covered += 2.0 * p;  // conjugate pair contributes equally
  double gap2 = 2.0 * lambda / M_PI - covered / (2.0 * M_PI * M_PI);
  return std::sqrt(std::max(0.0, gap2));
}

double norm_gap_oracle(double lambda, double ell, double dist, int order) {
  Vec3 d = kGapDirection * dist;
  std::vector<Vec3> centers;
  stream_centers(lambda, ell, [&](const Vec3& z) { centers.push_back(z); });
  std::vector<double> parts(centers.size()), cs(centers.size());
  parallel_for(centers.size(), [&](std::size_t i) {
    // inner average at an elevated rule, outer pointwise difference squared
    Cplx I;
    double c;
    cube_integrals(centers[i], ell, d, order + 4, I, c);
    cs[i] = c;
    Cplx avg = I / c;
    CubeRule r = cube_rule(centers[i], ell, order);
    double acc = 0.0;
    for (int a = 0; a < order; ++a)
      for (int b = 0; b < order; ++b)
        for (int cc = 0; cc < order; ++cc) {
          Vec3 k{r.nx[a], r.ny[b], r.nz[cc]};
          double ph = k.dot(d);
          acc += r.wx[a] * r.wy[b] * r.wz[cc] / k.dot(k) *
                 std::norm(avg - Cplx(std::cos(ph), std::sin(ph)));
        }
    parts[i] = acc;
  });
  double sum_sigma = 0.0, sum_c = 0.0;
  for (std::size_t i = 0; i < centers.size(); ++i) {
    sum_sigma += 2.0 * parts[i];
    sum_c += 2.0 * cs[i];
  }
  double gap2 = (sum_sigma + (4.0 * M_PI * lambda - sum_c)) / (2.0 * M_PI * M_PI);
  return std::sqrt(std::max(0.0, gap2));
}

GapSweepReport norm_gap_experiment(const std::vector<double>& lambdas,
                                   const std::vector<double>& ells,
                                   const std::vector<double>& dists,
                                   const std::string& csv_path) {
  GapSweepReport rep;
  for (double L : lambdas)
    for (double l : ells)
      for (double d : dists) rep.rows.push_back({L, l, d, norm_gap(L, l, d)});

  // l-exponent at zero displacement, pooled over the largest Lambda
  double Lref = *std::max_element(lambdas.begin(), lambdas.end());
  std::vector<double> lx, ly;
  for (const auto& r : rep.rows)
    if (r.lambda == Lref && r.dist == 0.0 && r.gap > 0) {
      lx.push_back(r.ell);
      ly.push_back(r.gap);
    }
  if (lx.size() >= 3) {
    rep.ell_fit = fit_power(lx, ly);
  } else {
    rep.fit_degenerate = true;
  }

  // displacement exponent after removing the d = 0 part in quadrature
  std::vector<double> dx, dy;
  double lref = ells.front();
  double base = 0.0;
  for (const auto& r : rep.rows)
    if (r.lambda == Lref && r.ell == lref && r.dist == 0.0) base = r.gap;
  for (const auto& r : rep.rows)
    if (r.lambda == Lref && r.ell == lref && r.dist > 0) {
      double resid2 = r.gap * r.gap - base * base;
      if (resid2 > 1e-12) {
        dx.push_back(r.dist);
        dy.push_back(std::sqrt(resid2));
      }
    }
  if (dx.size() >= 3) {
    rep.dist_fit = fit_power(dx, dy);
  } else if (!dists.empty() && dists.size() > 2) {
    rep.fit_degenerate = true;
  }

  rep.bound_constant = 0.0;
  for (const auto& r : rep.rows) {
    double envelope = r.dist * r.ell * std::sqrt(r.lambda) + std::sqrt(r.ell);
    rep.bound_constant = std::max(rep.bound_constant, r.gap / envelope);
  }

  if (!csv_path.empty()) {
    std::ofstream f(csv_path);
    f << "lambda,ell,dist,gap\n";
    f.precision(12);
    for (const auto& r : rep.rows)
      f << r.lambda << ',' << r.ell << ',' << r.dist << ',' << r.gap << '\n';
  }
  return rep;
}

// ---- localized Gram operators --------------------------------------------------

namespace {

// Per-pair tabulation of h_z = (-Lap)^{-1/2} e_z on a tensor position grid,
// streamed slab by slab (fixed x index). Axes are arbitrary point lists.
class ModeTabulator {
 public:
  ModeTabulator(const CubeBasis& basis, std::vector<double> ax, std::vector<double> ay,
                std::vector<double> az)
      : basis_(basis), ax_(std::move(ax)), ay_(std::move(ay)), az_(std::move(az)) {
    if (basis.shift().norm() > 1e-14)
      throw ComputeError("ModeTabulator: shifted bases not supported here");
    int P = basis.n_pairs();
    tabs_.resize(P);
    for (int p = 0; p < P; ++p) {
      const Vec3& z = basis_.center(p);
      int o = basis_.quad_order(p);
      PairTab& t = tabs_[p];
      t.o = o;
      std::vector<double> wx, wy, wz;
      gauss_on(o, z.x - basis_.ell(), z.x + basis_.ell(), t.nx, wx);
      gauss_on(o, z.y - basis_.ell(), z.y + basis_.ell(), t.ny, wy);
      gauss_on(o, z.z - basis_.ell(), z.z + basis_.ell(), t.nz, wz);
      t.W.resize(o * o * o);
      for (int a = 0; a < o; ++a)
        for (int b = 0; b < o; ++b)
          for (int c = 0; c < o; ++c) {
            Vec3 k{t.nx[a], t.ny[b], t.nz[c]};
            t.W[(a * o + b) * o + c] = wx[a] * wy[b] * wz[c] / k.dot(k);
          }
      auto phases = [&](const std::vector<double>& nodes, const std::vector<double>& axis,
                        std::vector<Cplx>& E) {
        E.resize(axis.size() * o);
        for (std::size_t i = 0; i < axis.size(); ++i)
          for (int a = 0; a < o; ++a)
            E[i * o + a] = Cplx(std::cos(nodes[a] * axis[i]), std::sin(nodes[a] * axis[i]));
      };
      phases(t.nx, ax_, t.Ex);
      phases(t.ny, ay_, t.Ey);
      phases(t.nz, az_, t.Ez);
      t.invnorm = std::pow(2.0 * M_PI, -1.5) / std::sqrt(basis_.norm_const(p));
    }
  }

  int nx() const { return static_cast<int>(ax_.size()); }
  int ny() const { return static_cast<int>(ay_.size()); }
  int nz() const { return static_cast<int>(az_.size()); }
  double x(int i) const { return ax_[i]; }
  double y(int i) const { return ay_[i]; }
  double z(int i) const { return az_[i]; }

  // writes h_z(pair) on the (y,z) slab at x index ia into out (ny*nz values)
  void slab(int pair, int ia, Cplx* out) const {
    const PairTab& t = tabs_[pair];
    int o = t.o, NY = ny(), NZ = nz();
    std::vector<Cplx> A1(o * o), A2(NY * o);
    for (int b = 0; b < o; ++b)
      for (int c = 0; c < o; ++c) {
        Cplx s = 0;
        for (int a = 0; a < o; ++a) s += t.W[(a * o + b) * o + c] * t.Ex[ia * o + a];
        A1[b * o + c] = s;
      }
    for (int iy = 0; iy < NY; ++iy)
      for (int c = 0; c < o; ++c) {
        Cplx s = 0;
        for (int b = 0; b < o; ++b) s += A1[b * o + c] * t.Ey[iy * o + b];
        A2[iy * o + c] = s;
      }
    for (int iy = 0; iy < NY; ++iy)
      for (int iz = 0; iz < NZ; ++iz) {
        Cplx s = 0;
        for (int c = 0; c < o; ++c) s += A2[iy * o + c] * t.Ez[iz * o + c];
        out[iy * NZ + iz] = s * t.invnorm;
      }
  }

 private:
  struct PairTab {
    int o;
    std::vector<double> nx, ny, nz;
    std::vector<double> W;
    std::vector<Cplx> Ex, Ey, Ez;
    double invnorm;
  };
  const CubeBasis& basis_;
  std::vector<double> ax_, ay_, az_;
  std::vector<PairTab> tabs_;
};

std::vector<double> midpoint_axis(double center, double extent, int G) {
  std::vector<double> a(G);
  double h = 2.0 * extent / G;
  for (int i = 0; i < G; ++i) a[i] = center - extent + (i + 0.5) * h;
  return a;
}

}  // namespace

DMat interior_gram(const CubeBasis& basis, const Vec3& x0, double radius) {
  int NR = basis.n_real();
  int G = std::max(36, std::min(72, static_cast<int>(radius * 30)));
  double hg = 2.0 * radius / G;
  std::size_t worst = static_cast<std::size_t>(G) * G * G;
  if (worst * NR > 160u * 1000 * 1000)
    throw ComputeError("interior_gram: grid times mode count too large");
  ModeTabulator tab(basis, midpoint_axis(x0.x, radius, G), midpoint_axis(x0.y, radius, G),
                    midpoint_axis(x0.z, radius, G));

  // kept points inside the ball
  std::vector<int> keep_idx(static_cast<std::size_t>(G) * G * G, -1);
  std::size_t P = 0;
  for (int a = 0; a < G; ++a)
    for (int b = 0; b < G; ++b)
      for (int c = 0; c < G; ++c) {
        Vec3 x{tab.x(a), tab.y(b), tab.z(c)};
        if ((x - x0).norm() <= radius) keep_idx[(static_cast<std::size_t>(a) * G + b) * G + c] = static_cast<int>(P++);
      }
  DMat H = DMat::Zero(P, NR);
  parallel_for(basis.n_pairs(), [&](std::size_t p) {
    std::vector<Cplx> slab(static_cast<std::size_t>(G) * G);
    for (int ia = 0; ia < G; ++ia) {
      tab.slab(static_cast<int>(p), ia, slab.data());
      for (int b = 0; b < G; ++b)
        for (int c = 0; c < G; ++c) {
          int q = keep_idx[(static_cast<std::size_t>(ia) * G + b) * G + c];
          if (q < 0) continue;
          Cplx J = slab[b * G + c];
          H(q, 2 * p) = std::sqrt(2.0) * J.real();
          H(q, 2 * p + 1) = std::sqrt(2.0) * J.imag();
        }
    }
  });
  return 16.0 * M_PI * hg * hg * hg * (H.transpose() * H);
}

DVec interior_gram_diagonal(const CubeBasis& basis, const Vec3& x0, double radius) {
  int G = std::max(36, std::min(96, static_cast<int>(radius * 24)));
  double hg = 2.0 * radius / G;
  ModeTabulator tab(basis, midpoint_axis(x0.x, radius, G), midpoint_axis(x0.y, radius, G),
                    midpoint_axis(x0.z, radius, G));
  DVec diag = DVec::Zero(basis.n_real());
  std::vector<double> parts(basis.n_pairs() * 2, 0.0);
  parallel_for(basis.n_pairs(), [&](std::size_t p) {
    std::vector<Cplx> slab(static_cast<std::size_t>(G) * G);
    double su = 0, sw = 0;
    for (int ia = 0; ia < G; ++ia) {
      tab.slab(static_cast<int>(p), ia, slab.data());
      for (int b = 0; b < G; ++b)
        for (int c = 0; c < G; ++c) {
          Vec3 x{tab.x(ia), tab.y(b), tab.z(c)};
          if ((x - x0).norm() > radius) continue;
          Cplx J = slab[b * G + c];
          su += 2.0 * J.real() * J.real();
          sw += 2.0 * J.imag() * J.imag();
        }
    }
    parts[2 * p] = su;
    parts[2 * p + 1] = sw;
  });
  for (int n = 0; n < basis.n_real(); ++n) diag[n] = 16.0 * M_PI * hg * hg * hg * parts[n];
  return diag;
}

DVec total_gram_diagonal(const CubeBasis& basis) {
  DVec d(basis.n_real());
  for (int p = 0; p < basis.n_pairs(); ++p) {
    // |h|^2 = (1/c) int_{C_z} |k|^{-4}
    double acc = 0.0;
    basis.for_each_node_ik2(p, [&](const Vec3& k, double w) { acc += w / k.dot(k); });
    double v = 16.0 * M_PI * acc / basis.norm_const(p);
    d[2 * p] = v;
    d[2 * p + 1] = v;
  }
  return d;
}

DMat far_gram(const CubeBasis& basis, double r) {
  if (!(r > 0)) throw ComputeError("far_gram: need r > 0");
  DMat inner = interior_gram(basis, {0, 0, 0}, r);
  DMat out = DMat(total_gram_diagonal(basis).asDiagonal()) - inner;
  Eigen::SelfAdjointEigenSolver<DMat> es(out);
  if (es.eigenvalues().minCoeff() < -1e-3 * std::max(1.0, es.eigenvalues().maxCoeff()))
    throw ComputeError("far_gram: non-PSD beyond quadrature tolerance");
  return out;
}

std::vector<double> exterior_hs_profile(const CubeBasis& basis, const std::vector<double>& radii) {
  // pair-summed densities |h_u|^2 + |h_w|^2 = 2 |h_z|^2 are smooth envelopes
  // (the e^{i z x} carrier cancels), so a midpoint grid of spacing well under
  // 1/l resolves them at any radius
  DVec total = total_gram_diagonal(basis);
  std::vector<double> out;
  for (double r : radii) {
    int G = std::max(48, std::min(144, static_cast<int>(2.0 * r / (0.22 / basis.ell()))));
    double hg = 2.0 * r / G;
    ModeTabulator tab(basis, midpoint_axis(0, r, G), midpoint_axis(0, r, G),
                      midpoint_axis(0, r, G));
    std::vector<double> inner(basis.n_pairs(), 0.0);
    parallel_for(basis.n_pairs(), [&](std::size_t p) {
      std::vector<Cplx> slab(static_cast<std::size_t>(G) * G);
      double acc = 0.0;
      for (int ia = 0; ia < G; ++ia) {
        tab.slab(static_cast<int>(p), ia, slab.data());
        for (int b = 0; b < G; ++b)
          for (int c = 0; c < G; ++c) {
            Vec3 x{tab.x(ia), tab.y(b), tab.z(c)};
            if (x.norm() > r) continue;
            acc += 2.0 * std::norm(slab[b * G + c]);
          }
      }
      inner[p] = 16.0 * M_PI * hg * hg * hg * acc;
    });
    double tr = 0.0;
    for (int p = 0; p < basis.n_pairs(); ++p)
      tr += std::max(0.0, total[2 * p] + total[2 * p + 1] - inner[p]);
    out.push_back(std::sqrt(tr));
  }
  return out;
}

double hs_norm(const DMat& gram) { return std::sqrt(std::max(0.0, gram.trace())); }

double op_norm(const DMat& gram) {
  Eigen::SelfAdjointEigenSolver<DMat> es(gram);
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

std::vector<double> tabulate_mode_field(const CubeBasis& basis, const DVec& lambda,
                                        const std::vector<double>& ax,
                                        const std::vector<double>& ay,
                                        const std::vector<double>& az) {
  if (lambda.size() != basis.n_real()) throw ComputeError("tabulate_mode_field: size mismatch");
  ModeTabulator tab(basis, ax, ay, az);
  int NX = static_cast<int>(ax.size()), NY = static_cast<int>(ay.size()),
      NZ = static_cast<int>(az.size());
  std::vector<double> field(static_cast<std::size_t>(NX) * NY * NZ, 0.0);
  std::mutex mu;
  parallel_for(basis.n_pairs(), [&](std::size_t p) {
    double wc = lambda[2 * p], ws = lambda[2 * p + 1];
    if (wc == 0 && ws == 0) return;
    std::vector<Cplx> slab(static_cast<std::size_t>(NY) * NZ);
    std::vector<double> local(field.size(), 0.0);
    for (int ia = 0; ia < NX; ++ia) {
      tab.slab(static_cast<int>(p), ia, slab.data());
      for (int b = 0; b < NY; ++b)
        for (int c = 0; c < NZ; ++c) {
          Cplx J = slab[b * NZ + c];
          local[(static_cast<std::size_t>(ia) * NY + b) * NZ + c] +=
              std::sqrt(2.0) * (wc * J.real() + ws * J.imag());
        }
    }
    std::lock_guard<std::mutex> lock(mu);
    for (std::size_t i = 0; i < field.size(); ++i) field[i] += local[i];
  });
  return field;
}

double diamond_norm_coords(const CubeBasis& basis, const DVec& lambda, double scan_radius,
                           double step) {
  if (lambda.size() != basis.n_real()) throw ComputeError("diamond_norm_coords: size mismatch");
  double extent = scan_radius + 1.2;
  int G = std::max(40, std::min(120, static_cast<int>(extent * 9)));
  double hg = 2.0 * extent / G;
  ModeTabulator tab(basis, midpoint_axis(0, extent, G), midpoint_axis(0, extent, G),
                    midpoint_axis(0, extent, G));
  std::vector<double> field(static_cast<std::size_t>(G) * G * G, 0.0);
  std::mutex mu;
  parallel_for(basis.n_pairs(), [&](std::size_t p) {
    double wc = lambda[2 * p], ws = lambda[2 * p + 1];
    if (wc == 0 && ws == 0) return;
    std::vector<Cplx> slab(static_cast<std::size_t>(G) * G);
    std::vector<double> local(field.size(), 0.0);
    for (int ia = 0; ia < G; ++ia) {
      tab.slab(static_cast<int>(p), ia, slab.data());
      for (int b = 0; b < G; ++b)
        for (int c = 0; c < G; ++c) {
          Cplx J = slab[b * G + c];
          local[(static_cast<std::size_t>(ia) * G + b) * G + c] +=
              std::sqrt(2.0) * (wc * J.real() + ws * J.imag());
        }
    }
    std::lock_guard<std::mutex> lock(mu);
    for (std::size_t i = 0; i < field.size(); ++i) field[i] += local[i];
  });

  double cell = hg * hg * hg;
  auto mass_at = [&](const Vec3& c0) {
    double m = 0.0;
    auto lo = [&](double v) { return std::max(0, static_cast<int>((v - 1.0 + extent) / hg) - 1); };
    auto hi = [&](double v) { return std::min(G - 1, static_cast<int>((v + 1.0 + extent) / hg) + 1); };
    for (int a = lo(c0.x); a <= hi(c0.x); ++a)
      for (int b = lo(c0.y); b <= hi(c0.y); ++b)
        for (int c = lo(c0.z); c <= hi(c0.z); ++c) {
          Vec3 x{-extent + (a + 0.5) * hg, -extent + (b + 0.5) * hg, -extent + (c + 0.5) * hg};
          if ((x - c0).norm() > 1.0) continue;
          double v = field[(static_cast<std::size_t>(a) * G + b) * G + c];
          m += v * v;
        }
    return 16.0 * M_PI * m * cell;
  };
  double best = 0.0;
  Vec3 bestc{0, 0, 0};
  for (double cx = -scan_radius; cx <= scan_radius; cx += step)
    for (double cy = -scan_radius; cy <= scan_radius; cy += step)
      for (double cz = -scan_radius; cz <= scan_radius; cz += step) {
        double m = mass_at({cx, cy, cz});
        if (m > best) {
          best = m;
          bestc = {cx, cy, cz};
        }
      }
  for (double sref = step / 2; sref > 0.05; sref /= 2) {
    Vec3 improved = bestc;
    for (int dx = -1; dx <= 1; ++dx)
      for (int dy = -1; dy <= 1; ++dy)
        for (int dz = -1; dz <= 1; ++dz) {
          Vec3 c0 = bestc + Vec3{dx * sref, dy * sref, dz * sref};
          double m = mass_at(c0);
          if (m > best) {
            best = m;
            improved = c0;
          }
        }
    bestc = improved;
  }
  return std::sqrt(best);
}

// ---- projected interaction tail -------------------------------------------------

double projected_w_radial(double K, double r) {
  double u = K * r;
  if (u < 1e-6) return std::pow(M_PI, -1.5) * K * K * (0.5 - u * u / 24.0);
  return std::pow(M_PI, -1.5) * (1.0 - std::cos(u)) / (r * r);
}

namespace {

// int_v^infinity (1 - cos u)^2 / u^2 du; the integrand equals
// (3/2 - 2 cos u + cos(2u)/2) / u^2
double tail_Q(double v) {
  double big = std::max(v, 300.0 * M_PI);
  // asymptotic remainder beyond `big` by repeated integration by parts
  auto osc_tail = [](double a, double U) {
    // int_U^inf cos(a u)/u^2 du for a > 0
    double s = std::sin(a * U), c = std::cos(a * U);
    return -s / (a * U * U) + 2.0 * c / (a * a * U * U * U) + 6.0 * s / (a * a * a * U * U * U * U);
  };
  double rem = 1.5 / big - 2.0 * osc_tail(1.0, big) + 0.5 * osc_tail(2.0, big);
  // quadrature on [v, big] with half-period panels
  double acc = 0.0;
  int panels = static_cast<int>(std::ceil((big - v) / M_PI)) + 1;
  panels = std::min(panels, 4000);
  double a = v;
  double width = (big - v) / panels;
  std::vector<double> x, w;
  for (int p2 = 0; p2 < panels; ++p2) {
    gauss_on(12, a + p2 * width, a + (p2 + 1) * width, x, w);
    for (std::size_t i = 0; i < x.size(); ++i) {
      double u = x[i];
      double f = (1.0 - std::cos(u));
      acc += w[i] * f * f / (u * u);
    }
  }
  return acc + rem;
}

}  // namespace

double projected_w_tail(double K, double r) {
  // |1_{|x|>=r} Pi_K w_0|^2 = (4 K / pi^2) Q(K r)
  return std::sqrt(4.0 * K / (M_PI * M_PI) * tail_Q(K * r));
}

double projected_w_norm2_position(double K) {
  return 4.0 * K / (M_PI * M_PI) * tail_Q(0.0);
}

}  // namespace pekar
