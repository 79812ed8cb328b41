#include "pekar/grid.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>

#include "json.hpp"

namespace pekar {

RadialGrid::RadialGrid(double r_max, int n_points) : r_max_(r_max), n_(n_points) {
  if (r_max <= 0 || n_points < 8) throw ComputeError("RadialGrid: bad parameters");
  dr_ = r_max_ / (n_ + 1);
  r_.resize(n_);
  for (int i = 0; i < n_; ++i) r_[i] = (i + 1) * dr_;
}

GridPtr make_grid(double r_max, int n_points) {
  return std::make_shared<const RadialGrid>(r_max, n_points);
}

RadialFunction::RadialFunction(GridPtr grid, int l_ang)
    : grid_(std::move(grid)), l_ang_(l_ang), v_(grid_->n(), 0.0) {}

RadialFunction::RadialFunction(GridPtr grid, std::vector<double> values, int l_ang)
    : grid_(std::move(grid)), l_ang_(l_ang), v_(std::move(values)) {
  if (static_cast<int>(v_.size()) != grid_->n())
    throw ComputeError("RadialFunction: value count does not match grid");
}

double RadialFunction::inner(const RadialFunction& g) const {
  if (!(grid() == g.grid())) throw ComputeError("RadialFunction::inner: grid mismatch");
  const auto& r = grid_->nodes();
  double s = 0.0;
  int n = static_cast<int>(v_.size());
  for (int i = 0; i < n; ++i) s += r[i] * r[i] * v_[i] * g.v_[i];
  // trapezoid with implicit zeros at r=0 and r=r_max endpoints
  return 4.0 * M_PI * s * grid_->dr();
}

double RadialFunction::norm() const { return std::sqrt(norm2()); }

void RadialFunction::check_finite(const char* what) const {
  for (double x : v_)
    if (!std::isfinite(x)) throw ComputeError(std::string(what) + ": non-finite value");
}

void RadialFunction::save(const std::string& path) const {
  nlohmann::json h;
  h["r_max"] = grid_->r_max();
  h["n_points"] = grid_->n();
  h["spacing"] = "uniform";
  h["l_ang"] = l_ang_;
  std::string hs = h.dump();
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ComputeError("RadialFunction::save: cannot open " + path);
  uint64_t hlen = hs.size();
  f.write(reinterpret_cast<const char*>(&hlen), 8);
  f.write(hs.data(), static_cast<std::streamsize>(hs.size()));
  f.write(reinterpret_cast<const char*>(v_.data()), static_cast<std::streamsize>(v_.size() * 8));
}

RadialFunction RadialFunction::load(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ComputeError("RadialFunction::load: cannot open " + path);
  uint64_t hlen = 0;
  f.read(reinterpret_cast<char*>(&hlen), 8);
  std::string hs(hlen, '\0');
  f.read(hs.data(), static_cast<std::streamsize>(hlen));
  auto h = nlohmann::json::parse(hs);
  auto grid = make_grid(h["r_max"].get<double>(), h["n_points"].get<int>());
  RadialFunction out(grid, h.value("l_ang", 0));
  f.read(reinterpret_cast<char*>(out.values().data()),
         static_cast<std::streamsize>(out.values().size() * 8));
  if (!f) throw ComputeError("RadialFunction::load: short payload in " + path);
  return out;
}

double trapezoid(const std::vector<double>& y, double dx) {
  if (y.size() < 2) return 0.0;
  double s = 0.5 * (y.front() + y.back());
  for (std::size_t i = 1; i + 1 < y.size(); ++i) s += y[i];
  return s * dx;
}

}  // namespace pekar
