#pragma once

#include <memory>
#include <string>
#include <vector>

#include "pekar/util.hpp"

namespace pekar {

// Uniform radial grid on (0, r_max]; node i sits at (i+1)*dr so that the
// reduced wave u(r) = r f(r) satisfies Dirichlet conditions at 0 and r_max.
class RadialGrid {
 public:
  RadialGrid(double r_max, int n_points);

  double r_max() const { return r_max_; }
  int n() const { return n_; }
  double dr() const { return dr_; }
  double r(int i) const { return r_[i]; }
  const std::vector<double>& nodes() const { return r_; }

  bool operator==(const RadialGrid& o) const { return r_max_ == o.r_max_ && n_ == o.n_; }

 private:
  double r_max_;
  int n_;
  double dr_;
  std::vector<double> r_;
};

using GridPtr = std::shared_ptr<const RadialGrid>;

GridPtr make_grid(double r_max, int n_points);

// Real function of radius; values tabulated on the grid nodes. l_ang is the
// angular momentum channel the profile belongs to (0 for scalar profiles).
class RadialFunction {
 public:
  RadialFunction() = default;
  RadialFunction(GridPtr grid, int l_ang = 0);
  RadialFunction(GridPtr grid, std::vector<double> values, int l_ang = 0);

  const RadialGrid& grid() const { return *grid_; }
  GridPtr grid_ptr() const { return grid_; }
  int l_ang() const { return l_ang_; }
  int n() const { return static_cast<int>(v_.size()); }
  double& operator[](int i) { return v_[i]; }
  double operator[](int i) const { return v_[i]; }
  const std::vector<double>& values() const { return v_; }
  std::vector<double>& values() { return v_; }

  // trapezoid quadrature of 4*pi*r^2 f(r) g(r) dr (full-space inner product
  // of radial profiles); exactness to grid order is all downstream code needs
  double inner(const RadialFunction& g) const;
  double norm2() const { return inner(*this); }
  double norm() const;

  void check_finite(const char* what) const;

  // JSON header + little-endian float64 payload
  void save(const std::string& path) const;
  static RadialFunction load(const std::string& path);

 private:
  GridPtr grid_;
  int l_ang_ = 0;
  std::vector<double> v_;
};

// weighted trapezoid on tabulated samples, plain dx weight
double trapezoid(const std::vector<double>& y, double dx);

}  // namespace pekar
