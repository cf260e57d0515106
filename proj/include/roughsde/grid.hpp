#ifndef ROUGHSDE_GRID_HPP
#define ROUGHSDE_GRID_HPP

#include <Eigen/Core>

#include <array>
#include <span>
#include <vector>

namespace roughsde {

using Index = Eigen::Index;
using Array = Eigen::ArrayXd;

/// One axis of a cell-centred tensor grid.
///
/// Cell i covers [lower + i h, lower + (i+1) h) and its node sits at the
/// cell centre. Outside [lower, upper) values are extended either by
/// periodic wrap or by repeating the boundary cell.
struct Axis {
  double lower = 0.0;
  double upper = 1.0;
  Index cells = 8;
  bool periodic = false;

  double width() const { return (upper - lower) / static_cast<double>(cells); }
  double length() const { return upper - lower; }
  double center(Index i) const { return lower + (static_cast<double>(i) + 0.5) * width(); }
  double face(Index i) const { return lower + static_cast<double>(i) * width(); }

  /// Maps an arbitrary (possibly out-of-range) cell index to a stored one.
  Index extend(Index i) const {
    if (i >= 0 && i < cells) return i;
    if (periodic) {
      Index m = i % cells;
      return m < 0 ? m + cells : m;
    }
    return i < 0 ? 0 : cells - 1;
  }
};

class Grid {
 public:
  Grid() = default;
  explicit Grid(std::vector<Axis> axes);

  int dim() const { return static_cast<int>(axes_.size()); }
  const Axis& axis(int k) const { return axes_[static_cast<std::size_t>(k)]; }
  const std::vector<Axis>& axes() const { return axes_; }

  Index size() const;
  Index cells(int k) const { return axis(k).cells; }
  double width(int k) const { return axis(k).width(); }
  /// Cell volume h_x (d=1) or h_x h_y (d=2).
  double cell_volume() const;
  /// Smallest cell width over the axes.
  double min_width() const;
  /// Half of the box diameter, the largest admissible averaging radius.
  double half_diameter() const;

  /// Flat index, x fastest.
  Index flat(Index i, Index j = 0) const { return i + axes_[0].cells * j; }
  std::array<Index, 2> unflat(Index n) const {
    return {n % axes_[0].cells, n / axes_[0].cells};
  }
  /// Coordinates of the node of flat cell n.
  std::array<double, 2> node(Index n) const;

  /// Node coordinates along axis k.
  Array centers(int k) const;

  bool contains(std::span<const double> x) const;

  bool operator==(const Grid& other) const;

 private:
  std::vector<Axis> axes_;
};

/// Validating constructor: counts >= 8, finite ordered bounds, d in {1,2}.
Grid make_grid(int d, std::span<const std::array<double, 2>> bounds, std::span<const Index> counts,
               std::span<const bool> periodic);

/// Convenience for the common 1-D case.
Grid make_line(double lower, double upper, Index cells, bool periodic = false);

/// A real value per cell of a grid.
struct ScalarField {
  Grid grid;
  Array values;

  ScalarField() = default;
  ScalarField(Grid g, Array v);

  double sup_norm() const { return values.abs().maxCoeff(); }
};

/// Multilinear interpolation of cell-centre values at an arbitrary point,
/// using the grid's extension rule beyond the box.
double interpolate(const Grid& grid, const Array& values, const double* x);
inline double interpolate(const ScalarField& f, std::span<const double> x) {
  return interpolate(f.grid, f.values, x.data());
}

/// Centred second-order differences, one-sided at non-periodic edges.
std::vector<Array> gradient(const ScalarField& f);

/// Euclidean norm of the finite-difference gradient, per cell.
ScalarField gradient_magnitude(const ScalarField& f);

/// Samples an analytic function at cell centres.
template <class Fn>
ScalarField sample(const Grid& grid, Fn&& fn) {
  Array v(grid.size());
  for (Index n = 0; n < grid.size(); ++n) {
    auto x = grid.node(n);
    v[n] = fn(x[0], x[1]);
  }
  return ScalarField(grid, std::move(v));
}

}  // namespace roughsde

#endif  // ROUGHSDE_GRID_HPP
