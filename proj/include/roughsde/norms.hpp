#ifndef ROUGHSDE_NORMS_HPP
#define ROUGHSDE_NORMS_HPP

#include "roughsde/law.hpp"
#include "roughsde/maxops.hpp"
#include "roughsde/report.hpp"
#include "roughsde/sde.hpp"

#include <string>
#include <utility>
#include <vector>

namespace roughsde {

enum class NormKind { H1, W11, WphiWeak, Hhalf };
enum class NormMethod { quadrature, pathwise };

std::string to_string(NormKind k);
std::string to_string(NormMethod m);

struct NormValue {
  NormKind kind = NormKind::H1;
  double value = 0.0;
  NormMethod method = NormMethod::quadrature;
  double T = 0.0;
  std::vector<double> L_grid;
  double argmax_L = 0.0;
  /// Zero for quadrature.
  double mc_stderr = 0.0;
};

nlohmann::json to_json(const NormValue& v);

/// Super-linear weight phi used by the W^{phi,weak} norm.
class PhiWeight {
 public:
  /// phi(L) = L sqrt(1 + log L).
  static PhiWeight standard();
  /// L / phi(L) = C / sqrt(l) + C sqrt(l) / psi(sqrt(l)), l = log L. An empty
  /// psi table selects the piecewise linear interpolant of s (1 + log(1 + s))
  /// through s = 0, 1, 2, 4, ..., 2^40.
  static PhiWeight appendix(double C = 1.0, std::vector<std::pair<double, double>> psi = {});
  /// Table of (L, phi) pairs, interpolated linearly in log-log coordinates.
  static PhiWeight table(std::vector<std::pair<double, double>> points);

  double operator()(double L) const;
  std::string name() const;

 private:
  enum class Kind { standard, appendix, table };
  Kind kind_ = Kind::standard;
  double C_ = 1.0;
  std::vector<std::pair<double, double>> points_;
};

struct NormOptions {
  /// Empty means RadiusSchedule::for_grid.
  RadiusSchedule schedule;
  /// Skip the "box at least 4x the support of u" rule of the half norm for
  /// fields that are periodic in their own right.
  bool periodic_field = false;
};

/// sqrt( int int |sigma|^2 u + int int (M|grad sigma|)^2 u ) over [0, T].
NormValue h1_norm(const ScalarField& sigma, const Law& u, double T, const NormOptions& opt = {});
/// sqrt( E int_0^T [|sigma|^2 + (M|grad sigma|)^2](X_t) dt ), trapezoid in t.
NormValue h1_norm(const ScalarField& sigma, const PathEnsemble& paths, const NormOptions& opt = {});

/// int int M|grad F| u dt.
NormValue w11_norm(const ScalarField& F, const Law& u, double T, const NormOptions& opt = {});

/// max over L of phi(L) / (L log L) int int (|F| + M_L |grad F|) u dt; the L
/// grid must start at L >= e and increase.
NormValue wphi_weak_norm(const ScalarField& F, const Law& u, double T, const PhiWeight& phi,
                         const std::vector<double>& L_grid);

/// sqrt( int int (M|d^1/2 sigma|)^2 u dt ); sigma on a periodic 1-D grid.
NormValue h_half_norm(const ScalarField& sigma, const Law& u, double T, const NormOptions& opt = {});
NormValue h_half_norm(const ScalarField& sigma, const PathEnsemble& paths, const NormOptions& opt = {});

struct ProbeOptions {
  double rel_tol = 0.02;
  /// L grid used for kind WphiWeak.
  std::vector<double> L_grid;
  NormOptions norm;
};

/// Checks ||sigma|| <= min over the tail of ||sigma_n|| (sigma_n = mollified
/// sigma at scales sigma_deltas) and ||sigma||_u <= min over the tail of
/// ||sigma||_{u_n} (u_n = heat-smoothed u at scales law_deltas). The tail is
/// the second half of each schedule. Either schedule may be empty; non-empty
/// ones need at least 4 terms.
Report semicontinuity_probe(const ScalarField& sigma, const Law& u, double T, NormKind kind,
                            const std::vector<double>& sigma_deltas, const std::vector<double>& law_deltas,
                            const ProbeOptions& opt = {});

/// Both sides of int int (M|grad s|)^2 u <= ||(M|grad s|)^2||_{L^q(L^p)} ||u||_{L^q'(L^p')}.
Report holder_domination_check(const ScalarField& s, const Law& u, double T, double p, double q,
                               const NormOptions& opt = {});

}  // namespace roughsde

#endif  // ROUGHSDE_NORMS_HPP
