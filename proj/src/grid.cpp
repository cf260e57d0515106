#include "roughsde/grid.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace roughsde {

Grid::Grid(std::vector<Axis> axes) : axes_(std::move(axes)) {}

Index Grid::size() const {
  Index n = 1;
  for (const auto& a : axes_) n *= a.cells;
  return n;
}

double Grid::cell_volume() const {
  double v = 1.0;
  for (const auto& a : axes_) v *= a.width();
  return v;
}

double Grid::min_width() const {
  double h = axes_[0].width();
  for (const auto& a : axes_) h = std::min(h, a.width());
  return h;
}

double Grid::half_diameter() const {
  double s = 0.0;
  for (const auto& a : axes_) s += a.length() * a.length();
  return 0.5 * std::sqrt(s);
}

std::array<double, 2> Grid::node(Index n) const {
  auto ij = unflat(n);
  std::array<double, 2> x{axes_[0].center(ij[0]), 0.0};
  if (dim() == 2) x[1] = axes_[1].center(ij[1]);
  return x;
}

Array Grid::centers(int k) const {
  const Axis& a = axis(k);
  Array c(a.cells);
  for (Index i = 0; i < a.cells; ++i) c[i] = a.center(i);
  return c;
}

bool Grid::contains(std::span<const double> x) const {
  for (int k = 0; k < dim(); ++k) {
    const Axis& a = axis(k);
    if (!a.periodic && (x[static_cast<std::size_t>(k)] < a.lower || x[static_cast<std::size_t>(k)] > a.upper))
      return false;
  }
  return true;
}

bool Grid::operator==(const Grid& other) const {
  if (axes_.size() != other.axes_.size()) return false;
  for (std::size_t k = 0; k < axes_.size(); ++k) {
    const Axis& a = axes_[k];
    const Axis& b = other.axes_[k];
    if (a.lower != b.lower || a.upper != b.upper || a.cells != b.cells || a.periodic != b.periodic)
      return false;
  }
  return true;
}

Grid make_grid(int d, std::span<const std::array<double, 2>> bounds, std::span<const Index> counts,
               std::span<const bool> periodic) {
  if (d != 1 && d != 2) throw std::invalid_argument("grid dimension must be 1 or 2");
  const auto ud = static_cast<std::size_t>(d);
  if (bounds.size() != ud || counts.size() != ud || periodic.size() != ud)
    throw std::invalid_argument("grid: per-axis arguments must have length d");
  std::vector<Axis> axes;
  for (std::size_t k = 0; k < ud; ++k) {
    const double lo = bounds[k][0];
    const double hi = bounds[k][1];
    if (!std::isfinite(lo) || !std::isfinite(hi))
      throw std::invalid_argument("grid: non-finite bounds on axis " + std::to_string(k));
    if (!(lo < hi)) throw std::invalid_argument("grid: lower bound must be below upper bound");
    if (counts[k] < 8) throw std::invalid_argument("grid: cell count must be at least 8");
    axes.push_back(Axis{lo, hi, counts[k], periodic[k]});
  }
  return Grid(std::move(axes));
}

Grid make_line(double lower, double upper, Index cells, bool periodic) {
  const std::array<double, 2> b{lower, upper};
  const bool p[1] = {periodic};
  return make_grid(1, std::span(&b, 1), std::span(&cells, 1), std::span(p, 1));
}

ScalarField::ScalarField(Grid g, Array v) : grid(std::move(g)), values(std::move(v)) {
  if (values.size() != grid.size()) throw std::invalid_argument("field size does not match grid");
}

namespace {

// Position in units of cells relative to the first centre.
inline void locate(const Axis& a, double x, Index& i, double& w) {
  const double s = (x - a.lower) / a.width() - 0.5;
  const double f = std::floor(s);
  i = static_cast<Index>(f);
  w = s - f;
}

}  // namespace

double interpolate(const Grid& grid, const Array& values, const double* x) {
  const Axis& ax = grid.axis(0);
  Index i;
  double wx;
  locate(ax, x[0], i, wx);
  const Index i0 = ax.extend(i);
  const Index i1 = ax.extend(i + 1);
  if (grid.dim() == 1) return (1.0 - wx) * values[i0] + wx * values[i1];

  const Axis& ay = grid.axis(1);
  Index j;
  double wy;
  locate(ay, x[1], j, wy);
  const Index j0 = ay.extend(j);
  const Index j1 = ay.extend(j + 1);
  const Index nx = ax.cells;
  const double lo = (1.0 - wx) * values[i0 + nx * j0] + wx * values[i1 + nx * j0];
  const double hi = (1.0 - wx) * values[i0 + nx * j1] + wx * values[i1 + nx * j1];
  return (1.0 - wy) * lo + wy * hi;
}

std::vector<Array> gradient(const ScalarField& f) {
  const Grid& g = f.grid;
  std::vector<Array> out;
  for (int k = 0; k < g.dim(); ++k) {
    const Axis& a = g.axis(k);
    const double h = a.width();
    Array d(g.size());
    for (Index n = 0; n < g.size(); ++n) {
      auto ij = g.unflat(n);
      const Index i = ij[static_cast<std::size_t>(k)];
      auto at = [&](Index m) {
        auto c = ij;
        c[static_cast<std::size_t>(k)] = a.extend(m);
        return f.values[g.flat(c[0], c[1])];
      };
      if (a.periodic || (i > 0 && i < a.cells - 1)) {
        d[n] = (at(i + 1) - at(i - 1)) / (2.0 * h);
      } else if (i == 0) {
        d[n] = (at(1) - at(0)) / h;
      } else {
        d[n] = (at(i) - at(i - 1)) / h;
      }
    }
    out.push_back(std::move(d));
  }
  return out;
}

ScalarField gradient_magnitude(const ScalarField& f) {
  auto g = gradient(f);
  Array s = Array::Zero(f.grid.size());
  for (const auto& c : g) s += c.square();
  return ScalarField(f.grid, s.sqrt());
}

}  // namespace roughsde
