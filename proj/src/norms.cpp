#include "roughsde/norms.hpp"

#include "roughsde/functionals.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace roughsde {

namespace {

const RadiusSchedule& schedule_for(const Grid& g, const NormOptions& opt, RadiusSchedule& storage) {
  if (!opt.schedule.radii.empty()) return opt.schedule;
  storage = RadiusSchedule::for_grid(g);
  return storage;
}

void require_law(const ScalarField& f, const Law& u) {
  if (!(f.grid == u.grid)) throw std::invalid_argument("field and law live on different grids");
  u.check_normalized();
}

// int_0^T int g u dx dt on the law's stamps.
double integrate(const Array& g, const Law& u, double T) {
  const std::vector<double> w = u.time_weights(T);
  double s = 0.0;
  for (Index k = 0; k < u.stamps(); ++k)
    s += w[static_cast<std::size_t>(k)] * (g * u.density[static_cast<std::size_t>(k)]).sum();
  return s * u.grid.cell_volume();
}

// Per path trapezoid of g along the recorded stamps.
Eigen::ArrayXd along_paths(const Grid& grid, const Array& g, const PathEnsemble& e) {
  if (e.dim() != grid.dim()) throw std::invalid_argument("ensemble and field dimensions differ");
  std::vector<double> w(e.times.size(), 0.0);
  for (std::size_t k = 0; k + 1 < e.times.size(); ++k) {
    const double h = e.times[k + 1] - e.times[k];
    w[k] += 0.5 * h;
    w[k + 1] += 0.5 * h;
  }
  Eigen::ArrayXd out(e.paths());
  for (Index p = 0; p < e.paths(); ++p) {
    double s = 0.0;
    for (Index k = 0; k < e.stamps(); ++k) {
      double x[2] = {e.X[0](p, k), e.dim() > 1 ? e.X[1](p, k) : 0.0};
      s += w[static_cast<std::size_t>(k)] * interpolate(grid, g, x);
    }
    out[p] = s;
  }
  return out;
}

NormValue pathwise_sqrt(NormKind kind, const Eigen::ArrayXd& samples, double T) {
  const Estimate e = estimate(samples);
  NormValue v{kind, std::sqrt(std::max(0.0, e.mean)), NormMethod::pathwise, T, {}, 0.0, 0.0};
  v.mc_stderr = v.value > 0.0 ? e.std_error / (2.0 * v.value) : std::sqrt(e.std_error);
  return v;
}

Array h1_integrand(const ScalarField& sigma, const NormOptions& opt) {
  RadiusSchedule st;
  const Array m = maximal(gradient_magnitude(sigma), schedule_for(sigma.grid, opt, st)).values;
  return sigma.values.square() + m.square();
}

Array half_integrand(const ScalarField& sigma, const NormOptions& opt) {
  if (sigma.grid.dim() != 1) throw std::invalid_argument("the half norm is one-dimensional");
  RadiusSchedule st;
  const ScalarField d = half_derivative(sigma);
  return maximal(ScalarField(sigma.grid, d.values.abs()), schedule_for(sigma.grid, opt, st)).values.square();
}

// Width of the smallest index window that holds all but 1e-9 of the mass.
double support_width(const Law& u) {
  double lo = u.grid.axis(0).upper, hi = u.grid.axis(0).lower;
  for (const auto& d : u.density) {
    const Array c = face_cdf(u.grid, d);
    const double m = c[c.size() - 1];
    Index a = 0, b = c.size() - 1;
    while (a + 1 < c.size() && c[a + 1] <= 1e-9 * m) ++a;
    while (b > 0 && c[b - 1] >= (1.0 - 1e-9) * m) --b;
    lo = std::min(lo, u.grid.axis(0).face(a));
    hi = std::max(hi, u.grid.axis(0).face(b));
  }
  return hi - lo;
}

double interp_table(const std::vector<std::pair<double, double>>& t, double x, bool loglog) {
  auto tx = [&](double v) { return loglog ? std::log(v) : v; };
  if (t.size() < 2) throw std::invalid_argument("weight table needs at least two points");
  std::size_t i = 1;
  while (i + 1 < t.size() && t[i].first < x) ++i;
  const double x0 = tx(t[i - 1].first), x1 = tx(t[i].first);
  const double y0 = tx(t[i - 1].second), y1 = tx(t[i].second);
  const double y = y0 + (y1 - y0) * (tx(x) - x0) / (x1 - x0);
  return loglog ? std::exp(y) : y;
}

double norm_of(NormKind kind, const ScalarField& s, const Law& u, double T, const ProbeOptions& opt) {
  switch (kind) {
    case NormKind::H1:
      return h1_norm(s, u, T, opt.norm).value;
    case NormKind::W11:
      return w11_norm(s, u, T, opt.norm).value;
    case NormKind::WphiWeak: {
      std::vector<double> L = opt.L_grid;
      if (L.empty())
        for (double l : {1.0, 2.0, 4.0, 8.0, 16.0}) L.push_back(std::exp(l));
      return wphi_weak_norm(s, u, T, PhiWeight::standard(), L).value;
    }
    case NormKind::Hhalf:
      return h_half_norm(s, u, T, opt.norm).value;
  }
  return 0.0;
}

}  // namespace

std::string to_string(NormKind k) {
  switch (k) {
    case NormKind::H1:
      return "H1";
    case NormKind::W11:
      return "W11";
    case NormKind::WphiWeak:
      return "WphiWeak";
    case NormKind::Hhalf:
      return "Hhalf";
  }
  return "?";
}

std::string to_string(NormMethod m) { return m == NormMethod::quadrature ? "quadrature" : "pathwise"; }

nlohmann::json to_json(const NormValue& v) {
  nlohmann::json j = {{"kind", to_string(v.kind)},
                      {"value", v.value},
                      {"method", to_string(v.method)},
                      {"T", v.T},
                      {"L_grid", v.L_grid},
                      {"argmax_L", nullptr},
                      {"mc_stderr", v.mc_stderr}};
  if (v.kind == NormKind::WphiWeak) j["argmax_L"] = v.argmax_L;
  return j;
}

PhiWeight PhiWeight::standard() { return PhiWeight{}; }

PhiWeight PhiWeight::appendix(double C, std::vector<std::pair<double, double>> psi) {
  if (!(C > 0.0)) throw std::invalid_argument("appendix weight needs C > 0");
  if (psi.empty()) {
    psi.emplace_back(0.0, 0.0);
    for (int j = 0; j <= 40; ++j) {
      const double s = std::ldexp(1.0, j);
      psi.emplace_back(s, s * (1.0 + std::log1p(s)));
    }
  }
  for (std::size_t i = 1; i < psi.size(); ++i)
    if (!(psi[i].first > psi[i - 1].first) || !(psi[i].second > psi[i - 1].second))
      throw std::invalid_argument("psi table must be strictly increasing");
  PhiWeight w;
  w.kind_ = Kind::appendix;
  w.C_ = C;
  w.points_ = std::move(psi);
  return w;
}

PhiWeight PhiWeight::table(std::vector<std::pair<double, double>> points) {
  if (points.size() < 2) throw std::invalid_argument("phi table needs at least two points");
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!(points[i].first > 0.0) || !(points[i].second > 0.0))
      throw std::invalid_argument("phi table entries must be positive");
    if (i > 0 && !(points[i].first > points[i - 1].first)) throw std::invalid_argument("phi table L must increase");
  }
  PhiWeight w;
  w.kind_ = Kind::table;
  w.points_ = std::move(points);
  return w;
}

double PhiWeight::operator()(double L) const {
  if (!(L > 1.0)) throw std::invalid_argument("phi is evaluated for L > 1");
  const double l = std::log(L);
  switch (kind_) {
    case Kind::standard:
      return L * std::sqrt(1.0 + l);
    case Kind::appendix: {
      const double s = std::sqrt(l);
      const double psi = interp_table(points_, s, false);
      return L / (C_ / s + C_ * s / psi);
    }
    case Kind::table:
      return interp_table(points_, L, true);
  }
  return 0.0;
}

std::string PhiWeight::name() const {
  switch (kind_) {
    case Kind::standard:
      return "default";
    case Kind::appendix:
      return "appendix";
    case Kind::table:
      return "table";
  }
  return "?";
}

NormValue h1_norm(const ScalarField& sigma, const Law& u, double T, const NormOptions& opt) {
  require_law(sigma, u);
  return {NormKind::H1, std::sqrt(integrate(h1_integrand(sigma, opt), u, T)), NormMethod::quadrature, T, {}, 0.0, 0.0};
}

NormValue h1_norm(const ScalarField& sigma, const PathEnsemble& paths, const NormOptions& opt) {
  return pathwise_sqrt(NormKind::H1, along_paths(sigma.grid, h1_integrand(sigma, opt), paths), paths.times.back());
}

NormValue w11_norm(const ScalarField& F, const Law& u, double T, const NormOptions& opt) {
  require_law(F, u);
  RadiusSchedule st;
  const Array m = maximal(gradient_magnitude(F), schedule_for(F.grid, opt, st)).values;
  return {NormKind::W11, integrate(m, u, T), NormMethod::quadrature, T, {}, 0.0, 0.0};
}

NormValue wphi_weak_norm(const ScalarField& F, const Law& u, double T, const PhiWeight& phi,
                         const std::vector<double>& L_grid) {
  require_law(F, u);
  if (L_grid.empty()) throw std::invalid_argument("empty L grid");
  for (std::size_t i = 0; i < L_grid.size(); ++i) {
    if (!(L_grid[i] >= std::exp(1.0) * (1.0 - 1e-12))) throw std::invalid_argument("L grid must start at L >= e");
    if (i > 0 && !(L_grid[i] > L_grid[i - 1])) throw std::invalid_argument("L grid must increase");
  }
  double prev_ratio = 0.0;
  for (double L : L_grid) {
    const double r = phi(L) / L;
    if (r < prev_ratio * (1.0 - 1e-12)) throw std::invalid_argument("phi(L)/L must be nondecreasing on the L grid");
    prev_ratio = r;
  }
  const ScalarField grad = gradient_magnitude(F);
  const double base = integrate(F.values.abs(), u, T);
  NormValue v{NormKind::WphiWeak, -1.0, NormMethod::quadrature, T, L_grid, 0.0, 0.0};
  for (double L : L_grid) {
    const double term = base + integrate(maximal_modified(grad, L).values, u, T);
    const double weighted = phi(L) / (L * std::log(L)) * term;
    if (weighted > v.value) {
      v.value = weighted;
      v.argmax_L = L;
    }
  }
  return v;
}

NormValue h_half_norm(const ScalarField& sigma, const Law& u, double T, const NormOptions& opt) {
  require_law(sigma, u);
  if (sigma.grid.dim() != 1) throw std::invalid_argument("the half norm is one-dimensional");
  if (!opt.periodic_field && support_width(u) * 4.0 > sigma.grid.axis(0).length() * (1.0 + 1e-12))
    throw std::invalid_argument("periodic box must be at least 4 times the support of the law");
  return {NormKind::Hhalf, std::sqrt(integrate(half_integrand(sigma, opt), u, T)), NormMethod::quadrature, T, {},
          0.0, 0.0};
}

NormValue h_half_norm(const ScalarField& sigma, const PathEnsemble& paths, const NormOptions& opt) {
  return pathwise_sqrt(NormKind::Hhalf, along_paths(sigma.grid, half_integrand(sigma, opt), paths),
                       paths.times.back());
}

Report semicontinuity_probe(const ScalarField& sigma, const Law& u, double T, NormKind kind,
                            const std::vector<double>& sigma_deltas, const std::vector<double>& law_deltas,
                            const ProbeOptions& opt) {
  if (kind == NormKind::W11) throw std::invalid_argument("semicontinuity probe supports H1, WphiWeak and Hhalf");
  if (sigma_deltas.empty() && law_deltas.empty()) throw std::invalid_argument("no schedule given");
  for (const auto* s : {&sigma_deltas, &law_deltas})
    if (!s->empty() && s->size() < 4) throw std::invalid_argument("schedules need at least 4 terms");

  const double limit = norm_of(kind, sigma, u, T, opt);
  Report rep{"semicontinuity_" + to_string(kind), true, {{"kind", to_string(kind)}, {"limit", limit}}};
  auto judge = [&](const std::string& dir, const std::vector<double>& values) {
    const std::size_t start = values.size() / 2;
    const double tail_min = *std::min_element(values.begin() + static_cast<std::ptrdiff_t>(start), values.end());
    const double tol = opt.rel_tol * std::max(limit, tail_min) + 1e-12;
    const bool ok = limit <= tail_min + tol;
    rep.passed = rep.passed && ok;
    rep.details[dir] = {{"values", values},
                        {"tail_min", tail_min},
                        {"tolerance", tol},
                        {"last_rel_gap", limit > 0 ? std::abs(values.back() - limit) / limit : values.back()},
                        {"passed", ok}};
  };
  if (!sigma_deltas.empty()) {
    std::vector<double> v;
    for (double d : sigma_deltas) v.push_back(norm_of(kind, mollify(sigma, d), u, T, opt));
    rep.details["sigma_deltas"] = sigma_deltas;
    judge("sigma_n", v);
  }
  if (!law_deltas.empty()) {
    std::vector<double> v;
    for (double d : law_deltas) v.push_back(norm_of(kind, sigma, heat_smooth(u, d), T, opt));
    rep.details["law_deltas"] = law_deltas;
    judge("u_n", v);
  }
  return rep;
}

Report holder_domination_check(const ScalarField& s, const Law& u, double T, double p, double q,
                               const NormOptions& opt) {
  if (!(p > 1.0) || !(q > 1.0)) throw std::invalid_argument("Holder check needs p > 1 and q > 1");
  require_law(s, u);
  RadiusSchedule st;
  const Array g = maximal(gradient_magnitude(s), schedule_for(s.grid, opt, st)).values.square();
  const double vol = u.grid.cell_volume();
  const double pc = p / (p - 1.0), qc = q / (q - 1.0);
  const std::vector<double> w = u.time_weights(T);
  const double g_p = std::pow(g.pow(p).sum() * vol, 1.0 / p);
  double lhs = 0.0, g_mixed = 0.0, u_mixed = 0.0;
  for (Index k = 0; k < u.stamps(); ++k) {
    const Array& uk = u.density[static_cast<std::size_t>(k)];
    const double wk = w[static_cast<std::size_t>(k)];
    lhs += wk * (g * uk).sum() * vol;
    g_mixed += wk * std::pow(g_p, q);
    u_mixed += wk * std::pow(std::pow(uk.pow(pc).sum() * vol, 1.0 / pc), qc);
  }
  const double rhs = std::pow(g_mixed, 1.0 / q) * std::pow(u_mixed, 1.0 / qc);
  const bool ok = lhs <= rhs * (1.0 + 1e-12);
  return {"holder_domination",
          ok,
          {{"p", p}, {"q", q}, {"lhs", lhs}, {"rhs", rhs}, {"ratio", rhs > 0 ? lhs / rhs : 0.0}, {"violations", ok ? 0 : 1}}};
}

}  // namespace roughsde
