#include "roughsde/functionals.hpp"

#include "roughsde/maxops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace roughsde {

namespace {

void require_coupled(const PathEnsemble& a, const PathEnsemble& b) {
  if (!a.coupled_with(b))
    throw std::invalid_argument("ensembles are not coupled: they must share the Brownian store, paths and stamps");
}

void require_eps(double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
}

FunctionalSeries column_estimates(std::string kind, double eps, const std::vector<double>& times,
                                  const Eigen::ArrayXXd& v) {
  FunctionalSeries s{std::move(kind), eps, times, {}, {}};
  for (Index c = 0; c < v.cols(); ++c) {
    const Estimate e = estimate(v.col(c));
    s.value.push_back(e.mean);
    s.std_error.push_back(e.std_error);
  }
  return s;
}

// Trapezoid weights along recorded stamps.
std::vector<double> trapezoid(const std::vector<double>& t) {
  std::vector<double> w(t.size(), 0.0);
  for (std::size_t k = 0; k + 1 < t.size(); ++k) {
    const double h = t[k + 1] - t[k];
    w[k] += 0.5 * h;
    w[k + 1] += 0.5 * h;
  }
  return w;
}

// Per path time integral of g(X_s) over the recorded stamps (1-D).
Eigen::ArrayXd path_integral(const PathEnsemble& e, const ScalarField& g) {
  const std::vector<double> w = trapezoid(e.times);
  Eigen::ArrayXd out = Eigen::ArrayXd::Zero(e.paths());
  for (Index p = 0; p < e.paths(); ++p) {
    double s = 0.0;
    for (Index k = 0; k < e.stamps(); ++k) {
      const double x = e.X[0](p, k);
      s += w[static_cast<std::size_t>(k)] * interpolate(g.grid, g.values, &x);
    }
    out[p] = s;
  }
  return out;
}

double smoothstep5(double s) { return s * s * s * (10.0 + s * (-15.0 + 6.0 * s)); }

}  // namespace

std::size_t FunctionalSeries::argsup() const {
  if (value.empty()) throw std::logic_error("empty functional series");
  return static_cast<std::size_t>(std::max_element(value.begin(), value.end()) - value.begin());
}

CsvTable FunctionalSeries::table() const {
  CsvTable t({"t", "value", "stderr"});
  for (std::size_t k = 0; k < times.size(); ++k) t.add_row(std::vector<double>{times[k], value[k], std_error[k]});
  return t;
}

nlohmann::json to_json(const FunctionalSeries& s) {
  return {{"kind", s.kind}, {"eps", s.eps}, {"t", s.times}, {"value", s.value}, {"stderr", s.std_error}};
}

Estimate estimate(const Eigen::ArrayXd& x) {
  const Index n = x.size();
  if (n == 0) throw std::invalid_argument("estimate needs samples");
  double sum = 0.0;
  for (Index i = 0; i < n; ++i) sum += x[i];
  const double m = sum / static_cast<double>(n);
  if (n == 1) return {m, 0.0};
  double ss = 0.0;
  for (Index i = 0; i < n; ++i) ss += (x[i] - m) * (x[i] - m);
  return {m, std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n))};
}

Eigen::ArrayXXd path_distance(const PathEnsemble& a, const PathEnsemble& b) {
  require_coupled(a, b);
  Eigen::ArrayXXd d2 = Eigen::ArrayXXd::Zero(a.paths(), a.stamps());
  for (int k = 0; k < a.dim(); ++k) d2 += (a.X[static_cast<std::size_t>(k)] - b.X[static_cast<std::size_t>(k)]).square();
  return d2.sqrt();
}

FunctionalSeries q_functional(const PathEnsemble& a, const PathEnsemble& b, double eps) {
  require_eps(eps);
  const Eigen::ArrayXXd d = path_distance(a, b);
  return column_estimates("Q", eps, a.times, (d.square() / (eps * eps)).log1p());
}

Eigen::ArrayXXd weight_process(const PathEnsemble& a, const PathEnsemble& b, const ScalarField& h) {
  require_coupled(a, b);
  if (a.dim() != 1 || h.grid.dim() != 1) throw std::invalid_argument("weight process is one-dimensional");
  if ((h.values < 0.0).any()) throw std::invalid_argument("weight rate must be nonnegative");
  Eigen::ArrayXXd U = Eigen::ArrayXXd::Zero(a.paths(), a.stamps());
  for (Index k = 0; k + 1 < a.stamps(); ++k) {
    const double dt = a.times[static_cast<std::size_t>(k + 1)] - a.times[static_cast<std::size_t>(k)];
    for (Index p = 0; p < a.paths(); ++p) {
      const double xa = a.X[0](p, k), xb = b.X[0](p, k);
      const double lambda = 4.0 * (interpolate(h.grid, h.values, &xa) + interpolate(h.grid, h.values, &xb));
      U(p, k + 1) = U(p, k) + lambda * dt;
    }
  }
  return U;
}

FunctionalSeries q_tilde_functional(const PathEnsemble& a, const PathEnsemble& b, double eps, const ScalarField& h) {
  require_eps(eps);
  const Eigen::ArrayXXd U = weight_process(a, b, h);
  const Eigen::ArrayXXd d = path_distance(a, b);
  return column_estimates("Q_tilde", eps, a.times, (-U).exp() * d * (d.square() / (eps * eps)).log1p());
}

double l_eps(double x, double eps, LepsFlavor flavor) {
  const double ax = std::abs(x);
  const double top = flavor == LepsFlavor::plateau ? 1.0 : ax;
  if (ax >= eps) return top;
  if (ax <= 0.5 * eps) return 0.0;
  return top * smoothstep5((ax - 0.5 * eps) / (0.5 * eps));
}

FunctionalSeries l_eps_functional(const PathEnsemble& a, const PathEnsemble& b, double eps, LepsFlavor flavor) {
  require_eps(eps);
  if (flavor == LepsFlavor::linear1d && a.dim() != 1) throw std::invalid_argument("linear1d flavour needs d = 1");
  const Eigen::ArrayXXd d = path_distance(a, b);
  return column_estimates(flavor == LepsFlavor::plateau ? "L_eps" : "L_tilde_eps", eps, a.times,
                          d.unaryExpr([&](double x) { return l_eps(x, eps, flavor); }));
}

FunctionalSeries tail_probability(const PathEnsemble& a, const PathEnsemble& b, double eps) {
  require_eps(eps);
  const Eigen::ArrayXXd d = path_distance(a, b);
  return column_estimates("tail", eps, a.times, (d > eps).cast<double>());
}

CauchyResult cauchy_diagnostic(const std::vector<PathEnsemble>& family, const std::vector<CoefficientField>& fields,
                               const CauchyOptions& opt) {
  const Index n = static_cast<Index>(family.size());
  if (n < 4) throw std::invalid_argument("cauchy_diagnostic needs at least 4 ensembles");
  if (fields.size() != family.size()) throw std::invalid_argument("one coefficient field per ensemble is required");
  if (!(opt.p > 1.0)) throw std::invalid_argument("cauchy_diagnostic needs p > 1");
  const Grid& grid = fields[0].grid();
  for (const auto& f : fields)
    if (!(f.grid() == grid)) throw std::invalid_argument("fields of the family must share a grid");

  CauchyResult r;
  r.value = Eigen::MatrixXd::Zero(n, n);
  r.std_error = Eigen::MatrixXd::Zero(n, n);
  r.eta = Eigen::MatrixXd::Zero(n, n);
  r.eps = r.K = r.L = Eigen::MatrixXd::Constant(n, n, std::numeric_limits<double>::quiet_NaN());

  std::vector<Law> laws;
  for (const auto& e : family) laws.push_back(ensemble_law(e, grid));
  const double T = family[0].times.back();

  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) {
      if (i == j) continue;
      const auto& A = family[static_cast<std::size_t>(i)];
      const auto& B = family[static_cast<std::size_t>(j)];
      const Eigen::ArrayXXd d = path_distance(A, B);
      const Eigen::ArrayXd sup = d.pow(opt.p).rowwise().maxCoeff();
      const Estimate e = estimate(sup);
      r.value(i, j) = e.mean;
      r.std_error(i, j) = e.std_error;

      // eta on the law of build i, field differences frozen per slice 0.
      const auto& Fi = fields[static_cast<std::size_t>(i)];
      const auto& Fj = fields[static_cast<std::size_t>(j)];
      Array gap = Array::Zero(grid.size());
      {
        Array df = Array::Zero(grid.size());
        for (int k = 0; k < Fi.dim(); ++k) df += (Fi.drift(k).values - Fj.drift(k).values).square();
        Array ds = Array::Zero(grid.size());
        for (int k = 0; k < Fi.dim(); ++k)
          for (int l = 0; l < Fi.noise_dim(); ++l)
            ds += (Fi.diffusion(k, l).values - Fj.diffusion(k, l).values).square();
        gap = df.sqrt() + ds.sqrt();
      }
      const Law& u = laws[static_cast<std::size_t>(i)];
      const std::vector<double> w = u.time_weights(T);
      double eta = 0.0;
      for (Index k = 0; k < u.stamps(); ++k)
        eta += w[static_cast<std::size_t>(k)] * (gap * u.density[static_cast<std::size_t>(k)]).sum() * grid.cell_volume();
      r.eta(i, j) = eta;
      if (eta > 0.0 && eta < 1.0) {
        const double eps = std::sqrt(eta);
        const double le = std::abs(std::log(eps));
        r.eps(i, j) = eps;
        r.K(i, j) = std::pow(le, 1.0 / 8.0);
        r.L(i, j) = std::pow(le, 1.0 / (8.0 * opt.p));
      }
    }

  for (Index k = 0; k + 1 < n; ++k) {
    double best = -1.0, se = 0.0;
    for (Index j = k + 1; j < n; ++j)
      for (const auto& [a, b] : {std::pair{k, j}, std::pair{j, k}})
        if (r.value(a, b) > best) {
          best = r.value(a, b);
          se = r.std_error(a, b);
        }
    r.row_max.push_back(best);
    r.row_max_se.push_back(se);
  }
  double scale = 0.0;
  for (const auto& e : family)
    for (const auto& x : e.X) scale = std::max(scale, x.abs().maxCoeff());
  const double floor = std::pow(opt.round_off * (1.0 + scale), opt.p);
  r.monotone = true;
  for (std::size_t k = 0; k + 1 < r.row_max.size(); ++k) {
    const double tol = 2.0 * std::hypot(r.row_max_se[k], r.row_max_se[k + 1]) + floor;
    if (r.row_max[k + 1] > r.row_max[k] + tol) r.monotone = false;
  }
  r.finest = std::max(r.value(n - 2, n - 1), r.value(n - 1, n - 2));

  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int cnt = 0;
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j)
      if (r.value(i, j) > 0.0 && r.eta(i, j) > 0.0) {
        const double x = std::log(r.eta(i, j)), y = std::log(r.value(i, j));
        sx += x, sy += y, sxx += x * x, sxy += x * y, ++cnt;
      }
  r.rate = cnt >= 2 && cnt * sxx - sx * sx > 0 ? (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx)
                                                : std::numeric_limits<double>::quiet_NaN();

  auto rows = [](const Eigen::MatrixXd& m) {
    nlohmann::json j = nlohmann::json::array();
    for (Index i = 0; i < m.rows(); ++i) {
      std::vector<double> row(static_cast<std::size_t>(m.cols()));
      for (Index c = 0; c < m.cols(); ++c) row[static_cast<std::size_t>(c)] = m(i, c);
      j.push_back(row);
    }
    return j;
  };
  r.report.name = "cauchy_diagnostic";
  r.report.passed = r.monotone;
  r.report.details = {{"p", opt.p},
                      {"value", rows(r.value)},
                      {"stderr", rows(r.std_error)},
                      {"eta", rows(r.eta)},
                      {"row_max", r.row_max},
                      {"row_max_stderr", r.row_max_se},
                      {"monotone", r.monotone},
                      {"round_off_floor", floor},
                      {"finest", r.finest},
                      {"empirical_rate", r.rate}};
  return r;
}

std::vector<EpsInterval> dyadic_eps_schedule(double eps_min, double eps_max) {
  if (!(eps_min > 0.0) || !(eps_max < 1.0) || !(eps_min < eps_max))
    throw std::invalid_argument("dyadic schedule needs 0 < eps_min < eps_max < 1");
  std::vector<EpsInterval> out;
  double b = eps_max;
  for (;;) {
    const double a = b * b;
    out.push_back({a, b});
    if (a < eps_min || a == 0.0) break;
    b = a;
  }
  return out;
}

BlockAverages block_averages(const PathEnsemble& a, const PathEnsemble& b, const ScalarField& drift,
                             const std::vector<EpsInterval>& schedule) {
  if (a.dim() != 1) throw std::invalid_argument("block averages are one-dimensional");
  if (schedule.empty()) throw std::invalid_argument("empty eps schedule");
  const Eigen::ArrayXXd d = path_distance(a, b);
  const std::vector<double> w = trapezoid(a.times);
  const ScalarField grad = gradient_magnitude(drift);

  BlockAverages out;
  out.blocks = schedule;
  for (const auto& blk : schedule) {
    const ScalarField hb(drift.grid, drift.values.abs() + maximal_modified(grad, 1.0 / blk.a).values);
    // hb along both ensembles, per path and stamp.
    Eigen::ArrayXXd hsum(a.paths(), a.stamps());
    for (Index k = 0; k < a.stamps(); ++k)
      for (Index p = 0; p < a.paths(); ++p) {
        const double xa = a.X[0](p, k), xb = b.X[0](p, k);
        hsum(p, k) = interpolate(hb.grid, hb.values, &xa) + interpolate(hb.grid, hb.values, &xb);
      }
    double beta_sum = 0.0, l_sum = 0.0;
    int shells = 0;
    for (int k = 0; k < 2000; ++k) {
      const double hi = std::ldexp(1.0, -k), lo = std::ldexp(1.0, -k - 1);
      if (hi > blk.b) continue;
      if (lo < blk.a) break;
      double beta = 0.0;
      for (Index s = 0; s < a.stamps(); ++s) {
        const auto in = ((d.col(s) >= lo) && (d.col(s) <= hi)).cast<double>();
        beta += w[static_cast<std::size_t>(s)] * (hsum.col(s) * in).mean();
      }
      beta_sum += beta;
      double lsup = 0.0;
      for (Index s = 0; s < a.stamps(); ++s)
        lsup = std::max(lsup, d.col(s).unaryExpr([&](double x) { return l_eps(x, hi, LepsFlavor::plateau); }).mean());
      l_sum += lsup;
      ++shells;
    }
    out.shells.push_back(shells);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    out.beta.push_back(shells ? beta_sum / shells : nan);
    out.l_eps.push_back(shells ? l_sum / shells : nan);
  }
  int run = 1;
  for (std::size_t i = 1; i < out.beta.size(); ++i) {
    run = out.beta[i] < out.beta[i - 1] ? run + 1 : 1;
    out.decreasing_run = std::max(out.decreasing_run, run);
  }
  if (out.beta.size() == 1) out.decreasing_run = 1;
  return out;
}

CsvTable UniquenessMap::table() const {
  CsvTable t({"x", "N_eps", "M_eps"});
  for (std::size_t i = 0; i < x.size(); ++i) t.add_row(std::vector<double>{x[i], n_eps[i], m_eps[i]});
  return t;
}

UniquenessMap uniqueness_map(const std::vector<double>& xs, const Build& a, const Build& b, const BrownianStore& store,
                             const UniquenessOptions& opt) {
  if (xs.empty()) throw std::invalid_argument("uniqueness map needs initial points");
  if (a.field.dim() != 1 || b.field.dim() != 1) throw std::invalid_argument("uniqueness map is one-dimensional");
  require_eps(opt.eps);
  if (static_cast<Index>(xs.size()) * opt.paths > store.paths())
    throw std::invalid_argument("store has too few paths for every initial point");

  const Grid& g = a.field.grid();
  const RadiusSchedule sched = RadiusSchedule::for_grid(g);
  const ScalarField sigma = a.field.diffusion(0, 0);
  const ScalarField F = a.field.drift(0);
  const Array ms = maximal(gradient_magnitude(sigma), sched).values;
  const ScalarField integrand(
      g, ms.square() + F.values.abs() + maximal_modified(gradient_magnitude(F), 1.0 / opt.eps).values);

  UniquenessMap out;
  Index below = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    SimOptions so;
    so.T = opt.T;
    so.paths = opt.paths;
    so.first_path = static_cast<Index>(i) * opt.paths;
    so.record_stride = opt.record_stride;
    so.dt_factor = a.dt_factor;
    const PathEnsemble ea = simulate_ensemble(a.field, InitialSpec::at(xs[i]), store, so);
    so.dt_factor = b.dt_factor;
    PathEnsemble eb = simulate_ensemble(b.field, InitialSpec::at(xs[i]), store, so);
    if (!ea.store.shares_noise_with(eb.store)) throw std::invalid_argument("builds share no common store");
    if (ea.times.back() != eb.times.back()) throw std::invalid_argument("builds end at different times");
    const Estimate n =
        estimate((ea.X[0].col(ea.stamps() - 1) - eb.X[0].col(eb.stamps() - 1)).abs());
    out.x.push_back(xs[i]);
    out.n_eps.push_back(n.mean);
    out.n_se.push_back(n.std_error);
    out.m_eps.push_back(estimate(path_integral(ea, integrand)).mean);
    if (n.mean <= opt.threshold) ++below;
  }
  out.fraction_below = static_cast<double>(below) / static_cast<double>(xs.size());
  return out;
}

}  // namespace roughsde
