#ifndef ROUGHSDE_FIELD_HPP
#define ROUGHSDE_FIELD_HPP

#include "roughsde/grid.hpp"

#include <json.hpp>

#include <iosfwd>
#include <string>
#include <vector>

namespace roughsde {

/// Where a coefficient field came from: preset name, its parameters and the
/// mollification scale (0 means unmollified).
struct Provenance {
  std::string preset;
  nlohmann::json params = nlohmann::json::object();
  double delta = 0.0;
};

/// Drift and diffusion values at one time slice.
///
/// `drift[k]` is the k-th component of F, `diffusion[k * r + l]` is
/// sigma_{kl} for a d x r diffusion matrix.
struct FieldSlice {
  double t = 0.0;
  std::vector<Array> drift;
  std::vector<Array> diffusion;
};

/// Gridded coefficients (F, sigma) of dX = F dt + sigma dW.
///
/// Autonomous fields carry a single slice; time-dependent ones hold slices
/// sorted by start time and are piecewise constant in t.
class CoefficientField {
 public:
  CoefficientField(Grid grid, int noise_dim, std::vector<FieldSlice> slices, Provenance prov);

  const Grid& grid() const { return grid_; }
  int dim() const { return grid_.dim(); }
  int noise_dim() const { return noise_dim_; }
  const Provenance& provenance() const { return prov_; }
  bool autonomous() const { return slices_.size() == 1; }
  const std::vector<FieldSlice>& slices() const { return slices_; }

  /// Slice active at time t.
  const FieldSlice& slice_at(double t) const;
  Index slice_index(double t) const;

  ScalarField drift(int k, Index slice = 0) const;
  ScalarField diffusion(int k, int l, Index slice = 0) const;
  /// Diffusion matrix entry a_{kl} = (sigma sigma^T)_{kl} / 2.
  ScalarField a(int k, int l, Index slice = 0) const;

  /// |F| (Euclidean) per cell.
  ScalarField drift_norm(Index slice = 0) const;
  /// |sigma| (Frobenius) per cell.
  ScalarField diffusion_norm(Index slice = 0) const;

  double drift_sup() const;
  double diffusion_sup() const;
  /// Largest entry of a over all slices and cells.
  double a_sup() const;
  /// Smallest eigenvalue of a over all slices and cells.
  double ellipticity() const;

 private:
  Grid grid_;
  int noise_dim_;
  std::vector<FieldSlice> slices_;
  Provenance prov_;
};

/// Names accepted by preset_field.
const std::vector<std::string>& preset_names();

/// Analytic coefficient families:
///   ou               F = -theta x, sigma = s I          (theta=1, sigma=sqrt 2)
///   heat             F = 0, sigma = sqrt(2 a0) I        (a0=1/2)
///   sqrt_diffusion   F = 0, sigma = sqrt(min(|x|,1) + kappa)  (kappa=0), d=1
///   kink_drift       F = beta min(|x|,1) sign x, sigma = s    (beta=1, sigma=1), d=1
///   degenerate_1d    F = -theta x, sigma = min(|x|,1)^gamma   (theta=1, gamma=1/2), d=1
///   kinetic_langevin phase space (x,v): F = (v, -beta min(|x|,1) sign x),
///                    sigma = (0, sqrt(2 a0))^T              (beta=1, a0=1/2), d=2
CoefficientField preset_field(const std::string& name, const nlohmann::json& params, const Grid& grid);

/// Compactly supported bump exp(-1/(1-|x/delta|^2)), normalised to unit mass.
struct Mollifier {
  double delta;

  explicit Mollifier(double delta);
  /// Unnormalised profile at distance r.
  double profile(double r) const;
  /// Discrete stencil for a grid: offsets (in cells) and weights summing to 1.
  struct Stencil {
    std::vector<std::array<Index, 2>> offsets;
    std::vector<double> weights;
  };
  Stencil stencil(const Grid& grid) const;
};

/// Discrete convolution of a scalar field with the bump.
ScalarField mollify(const ScalarField& f, double delta);
/// Mollifies every component of every slice; provenance records delta.
CoefficientField mollify(const CoefficientField& field, double delta);

/// delta_n = 2^-n delta0.
double delta_schedule(double delta0, int n);

/// CSV dump: node coordinates, F components, sigma components.
void write_field_csv(std::ostream& os, const CoefficientField& field, Index slice = 0);

}  // namespace roughsde

#endif  // ROUGHSDE_FIELD_HPP
