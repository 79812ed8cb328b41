#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace pekar {

struct ComputeError : std::runtime_error {
  explicit ComputeError(const std::string& msg) : std::runtime_error(msg) {}
};

// --- deterministic RNG ------------------------------------------------------

// splitmix64; used both as a stream-splitter and as the core generator so
// that audit samples are reproducible independently of thread scheduling.
inline uint64_t splitmix64(uint64_t& state) {
  uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

class Rng {
 public:
  explicit Rng(uint64_t seed) : s_(seed) { (void)splitmix64(s_); }
  // independent stream for sample #idx under a base seed
  static Rng stream(uint64_t seed, uint64_t idx) {
    uint64_t s = seed;
    uint64_t a = splitmix64(s);
    return Rng(a ^ (0x9e3779b97f4a7c15ULL * (idx + 1)));
  }
  uint64_t next_u64() { return splitmix64(s_); }
  double uniform() { return (next_u64() >> 11) * 0x1.0p-53; }
  double uniform(double a, double b) { return a + (b - a) * uniform(); }
  double normal() {
    // Box-Muller, cached second value
    if (have_cache_) {
      have_cache_ = false;
      return cache_;
    }
    double u1 = 0.0;
    while (u1 <= 1e-300) u1 = uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    cache_ = r * std::sin(2.0 * M_PI * u2);
    have_cache_ = true;
    return r * std::cos(2.0 * M_PI * u2);
  }
  int uniform_int(int n) { return static_cast<int>(next_u64() % static_cast<uint64_t>(n)); }

 private:
  uint64_t s_;
  double cache_ = 0.0;
  bool have_cache_ = false;
};

// --- parallel for -----------------------------------------------------------

void set_worker_count(int n);
int worker_count();

// Runs fn(i) for i in [0, n). Work is split in contiguous chunks; fn must be
// thread-safe. Falls back to serial when n is small or one worker requested.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

// --- Gauss-Legendre ---------------------------------------------------------

struct GaussRule {
  std::vector<double> x;  // nodes on [-1, 1]
  std::vector<double> w;
};

const GaussRule& gauss_legendre(int order);

// nodes/weights mapped to [a, b]
void gauss_on(int order, double a, double b, std::vector<double>& x, std::vector<double>& w);

// --- small numeric helpers --------------------------------------------------

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

// log-log power fit y ~ C x^p; returns slope = p
inline LineFit fit_power(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> lx(x.size()), ly(y.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
  }
  return fit_line(lx, ly);
}

// spherical Bessel j_0..j_lmax at x, stable for all x >= 0
void sph_bessel_stack(int lmax, double x, double* out);

// real spherical harmonics Y_lm, l <= lmax, at unit vector n.
// layout: out[l*(l+1)+m] for m in [-l, l]; orthonormal on the sphere.
void real_sph_harmonics(int lmax, const double n[3], double* out);

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;
  double norm() const { return std::sqrt(x * x + y * y + z * z); }
  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double c) const { return {c * x, c * y, c * z}; }
  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
};

// lowest eigenvalue of a symmetric operator given by its action, by Lanczos
// with full reorthogonalization; returns the eigenvalue, optionally the vector
double lanczos_lowest(std::size_t dim,
                      const std::function<void(const double*, double*)>& apply, int max_iter,
                      std::vector<double>* eigvec = nullptr, uint64_t seed = 7,
                      const std::vector<double>* start = nullptr);

}  // namespace pekar
