#ifndef ROUGHSDE_FUNCTIONALS_HPP
#define ROUGHSDE_FUNCTIONALS_HPP

#include "roughsde/report.hpp"
#include "roughsde/sde.hpp"

#include <string>
#include <vector>

namespace roughsde {

/// Expectation of a path functional per recorded time, with Monte Carlo
/// standard errors.
struct FunctionalSeries {
  std::string kind;
  double eps = 0.0;
  std::vector<double> times;
  std::vector<double> value;
  std::vector<double> std_error;

  /// Index of the largest value.
  std::size_t argsup() const;
  double sup() const { return value.at(argsup()); }
  /// Columns t, value, stderr.
  CsvTable table() const;
};

nlohmann::json to_json(const FunctionalSeries& s);

/// Sample mean and its standard error.
struct Estimate {
  double mean = 0.0;
  double std_error = 0.0;
};
Estimate estimate(const Eigen::ArrayXd& samples);

/// Per path and stamp |X^A - X^B| (Euclidean over coordinates).
Eigen::ArrayXXd path_distance(const PathEnsemble& a, const PathEnsemble& b);

/// E log(1 + |X^A - X^B|^2 / eps^2).
FunctionalSeries q_functional(const PathEnsemble& a, const PathEnsemble& b, double eps);

/// U with U_0 = 0 and dU = 4 (h(X^A) + h(X^B)) dt, left-point rule on the
/// recorded stamps (paths x stamps).
Eigen::ArrayXXd weight_process(const PathEnsemble& a, const PathEnsemble& b, const ScalarField& h);

/// E exp(-U) |X^A - X^B| log(1 + |X^A - X^B|^2 / eps^2), d = 1.
FunctionalSeries q_tilde_functional(const PathEnsemble& a, const PathEnsemble& b, double eps, const ScalarField& h);

enum class LepsFlavor { plateau, linear1d };

/// Cut-off functions: zero below eps/2, 1 (plateau) or |x| (linear1d) above
/// eps, joined by the quintic smoothstep 6s^5 - 15s^4 + 10s^3.
double l_eps(double x, double eps, LepsFlavor flavor);

FunctionalSeries l_eps_functional(const PathEnsemble& a, const PathEnsemble& b, double eps, LepsFlavor flavor);

/// Empirical P(|X^A - X^B| > eps) per stamp.
FunctionalSeries tail_probability(const PathEnsemble& a, const PathEnsemble& b, double eps);

struct CauchyOptions {
  double p = 2.0;
  /// Differences below round_off (1 + max |X|) count as zero in the
  /// monotonicity test; identical builds then compare equal.
  double round_off = 1e-10;
};

struct CauchyResult {
  /// E sup_t |X^n - X^m|^p and its standard error.
  Eigen::MatrixXd value;
  Eigen::MatrixXd std_error;
  /// int int (|sigma_n - sigma_m| + |F_n - F_m|) du_n dt.
  Eigen::MatrixXd eta;
  /// Selections eps^2 = eta, K = |log eps|^(1/8), L = |log eps|^(1/(8p)).
  Eigen::MatrixXd eps, K, L;
  /// Largest entry with min(n, m) = k, for k = 0 .. size-2.
  std::vector<double> row_max;
  std::vector<double> row_max_se;
  bool monotone = false;
  double finest = 0.0;
  /// Least-squares slope of log value against log eta.
  double rate = 0.0;
  Report report;
};

/// Cauchy table over a coupled family ordered from coarse to fine
/// regularisation. `fields[n]` is the coefficient field used by family[n].
CauchyResult cauchy_diagnostic(const std::vector<PathEnsemble>& family, const std::vector<CoefficientField>& fields,
                               const CauchyOptions& options = {});

struct EpsInterval {
  double a;
  double b;
};

/// Intervals [a_i, b_i) with b_0 = eps_max, a_i = b_i^2 and b_{i+1} = a_i,
/// ending with the first interval whose a_i < eps_min.
std::vector<EpsInterval> dyadic_eps_schedule(double eps_min, double eps_max);

struct BlockAverages {
  std::vector<EpsInterval> blocks;
  /// Averages over J_i = {k : [2^-k-1, 2^-k) in I_i} of
  /// beta_k = int_0^t E[(hb(X_s) + hb(Y_s)) 1{2^-k-1 <= |X_s - Y_s| <= 2^-k}] ds
  /// with hb = |F| + M_{1/a_i} |grad F|. NaN for blocks with empty J_i.
  std::vector<double> beta;
  /// Averages of sup_t E L_eps(X_t - Y_t) over eps = 2^-k, k in J_i.
  std::vector<double> l_eps;
  std::vector<int> shells;
  /// Longest run of consecutive blocks with strictly decreasing beta.
  int decreasing_run = 0;
};

/// 1-D only; `drift` is the drift of the build that produced `a`.
BlockAverages block_averages(const PathEnsemble& a, const PathEnsemble& b, const ScalarField& drift,
                             const std::vector<EpsInterval>& schedule);

struct Build {
  CoefficientField field;
  Index dt_factor = 1;
};

struct UniquenessOptions {
  Index paths = 1000;
  double T = 1.0;
  double eps = 1e-2;
  double threshold = 0.02;
  Index record_stride = 1;
};

struct UniquenessMap {
  std::vector<double> x;
  /// E |X_T^x - Xhat_T^x| and its standard error.
  std::vector<double> n_eps;
  std::vector<double> n_se;
  /// E int_0^T [(M|grad sigma|)^2 + |F| + M_{1/eps} |grad F|](X_s^x) ds.
  std::vector<double> m_eps;
  double fraction_below = 0.0;
  /// Columns x, N_eps, M_eps.
  CsvTable table() const;
};

/// Runs both builds from every x with paths [i N, (i+1) N) of the store.
UniquenessMap uniqueness_map(const std::vector<double>& xs, const Build& a, const Build& b, const BrownianStore& store,
                             const UniquenessOptions& options);

}  // namespace roughsde

#endif  // ROUGHSDE_FUNCTIONALS_HPP
