#ifndef ROUGHSDE_LAW_HPP
#define ROUGHSDE_LAW_HPP

#include "roughsde/grid.hpp"

#include <span>
#include <vector>

namespace roughsde {

/// Time-indexed probability on a grid.
///
/// `density[k]` holds cell averages at `times[k]` and integrates to one
/// against the cell volume. Empirical laws also keep their particles
/// (1-D only) so that transport distances can use the raw samples.
struct Law {
  Grid grid;
  std::vector<double> times;
  std::vector<Array> density;
  std::vector<std::vector<double>> samples;

  Index stamps() const { return static_cast<Index>(times.size()); }
  bool empirical() const { return !samples.empty(); }
  double mass(Index k) const;

  /// Throws unless every stamp has mass 1 within tol and no negative values.
  void check_normalized(double tol = 1e-6) const;

  /// Trapezoid weights for integrating over [0, T] along the stamps. A
  /// single stamp is treated as constant in time.
  std::vector<double> time_weights(double T) const;
};

/// Law that does not change in time.
Law constant_law(Grid grid, Array density);

/// Cell averages of a normal density (per-axis mean and sd), renormalised to
/// the box.
Array gaussian_density(const Grid& grid, std::array<double, 2> mean, std::array<double, 2> sd);
Array gaussian_density(const Grid& grid, double mean, double sd);

/// Cell averages of the uniform density on [lo, hi] (1-D).
Array uniform_density(const Grid& grid, double lo, double hi);

/// Normalised histogram on the grid cells; samples beyond the box go to the
/// cell given by the extension rule.
Array histogram_density(const Grid& grid, std::span<const double> samples);

/// Gaussian kernel estimate, integrated over each cell.
Array kde_density(const Grid& grid, std::span<const double> samples, double bandwidth);

enum class DensityEstimator { histogram, kde };

/// Empirical law from per-stamp particles (1-D). The default KDE bandwidth is
/// two cell widths.
Law empirical_law(const Grid& grid, std::vector<double> times, std::vector<std::vector<double>> samples,
                  DensityEstimator estimator = DensityEstimator::histogram, double bandwidth = 0.0);

/// Convolution of a density with the normal kernel of standard deviation
/// delta (1-D); delta = 0 returns the input.
Array heat_smooth(const Grid& grid, const Array& density, double delta);
Law heat_smooth(const Law& law, double delta);

/// Merges groups of `factor` neighbouring cells (1-D).
Law coarsen(const Law& law, Index factor);
Grid coarsen(const Grid& grid, Index factor);
Array coarsen(const Array& density, Index factor);

/// Cumulative distribution at the cell faces, size cells + 1 (1-D).
Array face_cdf(const Grid& grid, const Array& density);

}  // namespace roughsde

#endif  // ROUGHSDE_LAW_HPP
