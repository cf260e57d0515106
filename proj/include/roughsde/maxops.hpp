#ifndef ROUGHSDE_MAXOPS_HPP
#define ROUGHSDE_MAXOPS_HPP

#include "roughsde/grid.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace roughsde {

/// Radii r_k = r_min 2^(k / per_octave) up to r_max.
struct RadiusSchedule {
  std::vector<double> radii;

  static RadiusSchedule geometric(double r_min, double r_max, int per_octave = 1);
  /// r_min = one cell width, r_max = half the box diameter.
  static RadiusSchedule for_grid(const Grid& grid, int per_octave = 1);

  /// Throws unless r_min >= one cell, r_max <= half diameter, strictly increasing.
  void validate(const Grid& grid) const;
};

/// Discrete Hardy-Littlewood maximal function: the largest ball average of f
/// over the scheduled radii. In 1-D averages are exact for the piecewise
/// constant cell representation; in 2-D the ball is the set of cells whose
/// centres lie within the radius. The input must be nonnegative.
ScalarField maximal(const ScalarField& f, const RadiusSchedule& schedule);
/// Same quantity at an arbitrary point (1-D only).
double maximal_at(const ScalarField& f, const RadiusSchedule& schedule, double x);

/// Thresholded maximal operator with the regularised singular kernel
///   sqrt(log L) + int_{B(x,1)} g 1{g >= sqrt(log L)} / ((1/L + |x-z|) |x-z|^(d-1)) dz.
/// Cells are integrated analytically in 1-D; in 2-D the cell containing x
/// uses the exact polar integral and nearby cells are subdivided.
ScalarField maximal_modified(const ScalarField& g, double L);
/// Point evaluation (1-D only); exact for piecewise constant g.
double maximal_modified_at(const ScalarField& g, double L, double x);

/// |xi_k|^power for the discrete Fourier modes of a periodic 1-D grid.
Array fourier_multiplier(const Grid& grid, double power);

/// Fourier multiplier |xi|^(1/2) on a periodic 1-D grid with a power-of-two
/// cell count.
ScalarField half_derivative(const ScalarField& sigma);

enum class BoundKind { classic, modified, half };

struct BoundParams {
  /// Empty means RadiusSchedule::for_grid.
  RadiusSchedule schedule;
  /// Threshold parameter of the modified operator.
  double L = 100.0;
  /// Discretisation allowance tau = c_disc * h * max |grad field|.
  double c_disc = 1.0;
  /// Multiplies the right side (used by kind=half).
  double k_cal = 1.0;
};

struct PointPair {
  Index a;
  Index b;
};

struct ViolationReport {
  std::size_t pairs_tested = 0;
  std::size_t violations = 0;
  /// Largest left side / right side over the tested pairs.
  double worst_ratio = 0.0;
  std::array<double, 2> worst_x{};
  std::array<double, 2> worst_y{};
  double tolerance = 0.0;
};

/// Uniformly drawn distinct cell pairs whose nodes lie in [lo, hi] on every axis.
std::vector<PointPair> random_pairs(const Grid& grid, std::size_t count, std::uint64_t seed, double lo, double hi);

/// Counts pairs where the pointwise difference inequality of the given kind
/// fails by more than the discretisation allowance:
///   classic   |s(x)-s(y)| <= (M|grad s|(x) + M|grad s|(y)) |x-y|
///   modified  |F(x)-F(y)| <= (h(x) + h(y)) (|x-y| + 1/L),  h = |F| + M_L |grad F|
///   half      |s(x)-s(y)| <= K (M|d^1/2 s|(x) + M|d^1/2 s|(y)) |x-y|^(1/2)
ViolationReport check_pointwise_bound(BoundKind kind, const ScalarField& field, std::span<const PointPair> pairs,
                                      const BoundParams& params = {});

}  // namespace roughsde

#endif  // ROUGHSDE_MAXOPS_HPP
