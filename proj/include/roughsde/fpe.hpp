#ifndef ROUGHSDE_FPE_HPP
#define ROUGHSDE_FPE_HPP

#include "roughsde/field.hpp"
#include "roughsde/law.hpp"
#include "roughsde/report.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace roughsde {

/// Densities produced by a finite-volume solver at the recorded times.
struct DensityEvolution {
  Grid grid;
  std::vector<double> times;
  std::vector<Array> density;
  std::vector<double> mass;
  /// Time step actually used and the number of steps between stamps.
  double dt = 0.0;
  Index stride = 1;
  std::string scheme;

  /// The evolution viewed as a time-indexed law.
  Law law() const;
};

/// Largest step accepted by solve_fp_1d for this field.
double fp_max_dt(const CoefficientField& field);

/// Explicit conservative scheme for du/dt + d/dx(F u) = d^2/dx^2 (a u):
/// upwind flux for F u, centred flux for d/dx(a u), zero flux through
/// non-periodic ends. T / dt is rounded up to whole steps; stamps are kept
/// every `stride` steps plus the final time.
DensityEvolution solve_fp_1d(const CoefficientField& field, const Array& u0, double T, double dt, Index stride = 1);

/// Pointwise check of u(t, x) <= C / a(x) exp(int_0^x F / a). Violations are
/// values above the bound by more than rel_tol relative and abs_tol absolute.
Report stationary_bound_check(const CoefficientField& field, const DensityEvolution& evolution, double C,
                              double rel_tol = 1e-8, double abs_tol = 1e-12);

/// Right side C / a(x) exp(int_0^x F/a dy) at the cell centres.
Array stationary_bound(const CoefficientField& field, double C);

struct EnergyReport {
  std::vector<double> alphas;
  std::vector<double> times;
  /// values[i][k] = int u(t_k)^alpha_i.
  std::vector<std::vector<double>> values;
  /// budgets[i][k] for k >= 1: allowed value at t_k given t_{k-1}.
  std::vector<std::vector<double>> budgets;
  double theta = 1.0;
  double p = 0.0;
  double q = 0.0;
  double ellipticity = 0.0;
  double K = 1.0;
  Index violations = 0;

  /// Columns t, alpha, lhs, budget (one row per step and alpha).
  CsvTable table() const;
};

nlohmann::json to_json(const EnergyReport& r);

/// Per step check of
///   I_{k+1} <= I_k (1 + dt C'' (1 + |grad a(t_k)|_{L^p}^{2/theta}))^m,
/// I = int u^alpha, 1 - theta = d / p, m the steps between stamps and
/// C'' = K (1 + alpha (alpha - 1) |F|_inf^2 / (4 c)), c the ellipticity.
/// Requires p > d, q >= 2 / theta and c > 0.
EnergyReport energy_monitor(const DensityEvolution& evolution, const CoefficientField& field,
                            const std::vector<double>& alphas, double p, double q, double K = 1.0);

/// Smallest K >= 1 for which the monitor has no violations on a reference run.
double calibrate_energy_constant(const DensityEvolution& evolution, const CoefficientField& field,
                                 const std::vector<double>& alphas, double p, double q);

enum class KineticScheme { upwind, centered_fixture };

/// Phase-space solver for du/dt + v du/dx + d/dv(F u) = d^2/dv^2 (a u) on a
/// 2-D grid (x, v). The field supplies the transport speeds as drift
/// components (v, F) and the diffusion a_vv; it must not diffuse in x.
/// Each step applies x transport, v transport and v diffusion in turn.
/// `centered_fixture` replaces the x upwind flux by a centred one and is only
/// meant to exercise max_principle_check.
DensityEvolution solve_kinetic(const CoefficientField& field, const Array& u0, double T, double dt, Index stride = 1,
                               KineticScheme scheme = KineticScheme::upwind);

/// Largest step accepted by solve_kinetic for this field.
double kinetic_max_dt(const CoefficientField& field);

/// max u(t_k) <= max u(0) (1 + tol) at every stamp.
Report max_principle_check(const DensityEvolution& evolution, double tol = 1e-8);

struct Distances {
  double l1 = 0.0;
  double w1 = 0.0;
};

/// L1 and Wasserstein-1 distances between two 1-D laws on the same grid at
/// the given stamps (last stamps by default). Particle laws with equal
/// sample counts use sorted samples; otherwise the cell CDFs are compared.
Distances law_compare(const Law& a, const Law& b, Index stamp_a = -1, Index stamp_b = -1);

/// CSV with columns t, x[, v], u for every stride-th stamp.
void write_density_csv(std::ostream& os, const DensityEvolution& evolution, Index stride = 1);

}  // namespace roughsde

#endif  // ROUGHSDE_FPE_HPP
