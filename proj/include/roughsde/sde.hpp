#ifndef ROUGHSDE_SDE_HPP
#define ROUGHSDE_SDE_HPP

#include "roughsde/brownian.hpp"
#include "roughsde/field.hpp"
#include "roughsde/law.hpp"

#include <array>
#include <limits>
#include <vector>

namespace roughsde {

/// Initial condition X_0: a fixed point, a normal law, or a 1-D density on a
/// grid sampled by inverse transform. Random draws come from the store's
/// initial-condition stream, so coupled builds start from the same points.
struct InitialSpec {
  enum class Kind { point, gaussian, density };
  Kind kind = Kind::point;
  std::array<double, 2> point{};
  std::array<double, 2> mean{};
  std::array<double, 2> sd{1.0, 1.0};
  Grid grid;
  Array density;

  static InitialSpec at(double x, double y = 0.0);
  static InitialSpec gaussian(double mean, double sd);
  static InitialSpec gaussian(std::array<double, 2> mean, std::array<double, 2> sd);
  static InitialSpec from_density(Grid grid, Array density);
};

struct SimOptions {
  double T = 1.0;
  Index paths = 0;
  /// Index of the first store path used.
  Index first_path = 0;
  /// Time step is dt_factor times the store step.
  Index dt_factor = 1;
  /// Keep every record_stride-th step (the final time is always a stamp).
  Index record_stride = 1;
  /// Optional user cap on the time step.
  double dt_cap = std::numeric_limits<double>::infinity();
};

/// Euler-Maruyama paths of one discretisation.
///
/// `X[k]` is a paths x stamps array for coordinate k.
struct PathEnsemble {
  Provenance provenance;
  InitialSpec initial;
  BrownianStore store;
  Index first_path = 0;
  double dt = 0.0;
  std::vector<double> times;
  std::vector<Eigen::ArrayXXd> X;
  /// Paths that left the grid box at some step.
  Index exits = 0;

  Index paths() const { return X.empty() ? 0 : X[0].rows(); }
  Index stamps() const { return static_cast<Index>(times.size()); }
  int dim() const { return static_cast<int>(X.size()); }
  /// True when both ensembles use the same noise for the same paths.
  bool coupled_with(const PathEnsemble& other) const;
};

/// Largest admissible step 0.1 / (1 + |F|_inf + |sigma|_inf^2).
double stability_cap(const CoefficientField& field);

/// X_{k+1} = X_k + F(t_k, X_k) dt + sigma(t_k, X_k) dW_k with multilinear
/// interpolation of the coefficients. Paths run in parallel; the result
/// depends only on (store, field, initial spec, options).
PathEnsemble simulate_ensemble(const CoefficientField& field, const InitialSpec& initial, const BrownianStore& store,
                               const SimOptions& options);

/// Empirical law of an ensemble on a grid, one stamp per recorded time. 2-D
/// ensembles give plain histograms without particles.
Law ensemble_law(const PathEnsemble& ens, const Grid& grid, DensityEstimator estimator = DensityEstimator::histogram);

}  // namespace roughsde

#endif  // ROUGHSDE_SDE_HPP
