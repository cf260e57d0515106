#include "roughsde/fpe.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace roughsde {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double safe_div(double a, double b) { return b > 0.0 ? a / b : kInf; }

// Integral over one cell of |linear function| with end values d0, d1.
double abs_linear(double d0, double d1, double h) {
  if ((d0 >= 0.0) == (d1 >= 0.0)) return 0.5 * h * (std::abs(d0) + std::abs(d1));
  return 0.5 * h * (d0 * d0 + d1 * d1) / (std::abs(d0) + std::abs(d1));
}

Index resolve(Index k, const Law& u) {
  const Index idx = k < 0 ? u.stamps() - 1 : k;
  if (idx < 0 || idx >= u.stamps()) throw std::out_of_range("law stamp out of range");
  return idx;
}

}  // namespace

Law DensityEvolution::law() const { return Law{grid, times, density, {}}; }

double fp_max_dt(const CoefficientField& field) {
  const double h = field.grid().width(0);
  const double F = field.drift_sup();
  const double a = field.a_sup();
  const double combined = safe_div(1.0, 2.0 * F / h + 2.0 * a / (h * h));
  return std::min({safe_div(h, 2.0 * F), safe_div(h * h, 4.0 * a), combined});
}

DensityEvolution solve_fp_1d(const CoefficientField& field, const Array& u0, double T, double dt, Index stride) {
  const Grid& g = field.grid();
  if (g.dim() != 1) throw std::invalid_argument("solve_fp_1d needs a 1-D field");
  if (u0.size() != g.size()) throw std::invalid_argument("initial density does not match the grid");
  if ((u0 < 0.0).any() || !u0.allFinite()) throw std::invalid_argument("initial density must be finite and >= 0");
  if (!(T > 0.0) || !(dt > 0.0)) throw std::invalid_argument("T and dt must be positive");
  if (stride < 1) throw std::invalid_argument("stride must be >= 1");
  const double cap = fp_max_dt(field);
  if (dt > cap * (1.0 + 1e-12))
    throw std::invalid_argument("CFL violation: dt = " + std::to_string(dt) + " exceeds " + std::to_string(cap));

  const Axis& ax = g.axis(0);
  const double h = ax.width();
  const Index n = ax.cells;
  const auto steps = static_cast<Index>(std::ceil(T / dt - 1e-9));
  const double step = T / static_cast<double>(steps);

  Array u = u0 / (u0.sum() * h);
  DensityEvolution ev{g, {0.0}, {u}, {u.sum() * h}, step, stride, "upwind-advection/centred-diffusion"};

  Array J(n + 1);
  Index cached = -1;
  Array F, a;
  for (Index s = 0; s < steps; ++s) {
    const double t = static_cast<double>(s) * step;
    const Index si = field.slice_index(t);
    if (si != cached) {
      F = field.drift(0, si).values;
      a = field.a(0, 0, si).values;
      cached = si;
    }
    for (Index f = 0; f <= n; ++f) {
      Index l = f - 1, r = f;
      if (f == 0 || f == n) {
        if (!ax.periodic) {
          J[f] = 0.0;
          continue;
        }
        l = n - 1;
        r = 0;
      }
      const double Ff = 0.5 * (F[l] + F[r]);
      const double adv = Ff > 0.0 ? Ff * u[l] : Ff * u[r];
      J[f] = adv - (a[r] * u[r] - a[l] * u[l]) / h;
    }
    u -= (step / h) * (J.tail(n) - J.head(n));
    if ((s + 1) % stride == 0 || s + 1 == steps) {
      ev.times.push_back(static_cast<double>(s + 1) * step);
      ev.density.push_back(u);
      ev.mass.push_back(u.sum() * h);
    }
  }
  return ev;
}

Array stationary_bound(const CoefficientField& field, double C) {
  const Grid& g = field.grid();
  if (g.dim() != 1) throw std::invalid_argument("stationary bound is one-dimensional");
  if (!(C > 0.0)) throw std::invalid_argument("bound constant must be positive");
  const Array a = field.a(0, 0).values;
  if ((a <= 0.0).any()) throw std::invalid_argument("stationary bound needs a > 0 on the whole grid");
  const Array ratio = field.drift(0).values / a;
  const Axis& ax = g.axis(0);
  const Index n = ax.cells;
  Index i0 = 0;
  for (Index i = 1; i < n; ++i)
    if (std::abs(ax.center(i)) < std::abs(ax.center(i0))) i0 = i;
  const double zero = 0.0;
  const double r0 = interpolate(g, ratio, &zero);
  Array I(n);
  I[i0] = 0.5 * (r0 + ratio[i0]) * ax.center(i0);
  for (Index i = i0 + 1; i < n; ++i) I[i] = I[i - 1] + 0.5 * (ratio[i - 1] + ratio[i]) * ax.width();
  for (Index i = i0 - 1; i >= 0; --i) I[i] = I[i + 1] - 0.5 * (ratio[i + 1] + ratio[i]) * ax.width();
  return C / a * I.exp();
}

Report stationary_bound_check(const CoefficientField& field, const DensityEvolution& ev, double C, double rel_tol,
                              double abs_tol) {
  const Array B = stationary_bound(field, C);
  if (!(ev.grid == field.grid())) throw std::invalid_argument("evolution and field grids differ");
  auto excess = [&](const Array& u) { return u - (B * (1.0 + rel_tol) + abs_tol); };
  if ((excess(ev.density.front()) > 0.0).any())
    throw std::invalid_argument("initial density violates the stationary bound with this C");
  Index violations = 0;
  double worst = 0.0;
  for (const auto& u : ev.density) {
    violations += (excess(u) > 0.0).count();
    worst = std::max(worst, (u / B).maxCoeff());
  }
  return {"stationary_bound",
          violations == 0,
          {{"C", C},
           {"stamps", ev.times.size()},
           {"violations", violations},
           {"worst_ratio", worst},
           {"rel_tol", rel_tol},
           {"abs_tol", abs_tol}}};
}

CsvTable EnergyReport::table() const {
  CsvTable t({"t", "alpha", "lhs", "budget"});
  for (std::size_t i = 0; i < alphas.size(); ++i)
    for (std::size_t k = 1; k < times.size(); ++k)
      t.add_row(std::vector<double>{times[k], alphas[i], values[i][k], budgets[i][k]});
  return t;
}

nlohmann::json to_json(const EnergyReport& r) {
  return {{"alphas", r.alphas}, {"t", r.times},       {"values", r.values},
          {"budgets", r.budgets}, {"theta", r.theta}, {"p", r.p},
          {"q", r.q},           {"ellipticity", r.ellipticity}, {"K", r.K},
          {"violations", r.violations}};
}

namespace {

struct EnergySetup {
  double theta, c, Fsup;
  std::vector<double> grad_a;  // |grad a(t_k)|_{L^p} per stamp
};

EnergySetup energy_setup(const DensityEvolution& ev, const CoefficientField& field, const std::vector<double>& alphas,
                         double p, double q) {
  const Grid& g = field.grid();
  const double d = g.dim();
  if (!(p > d)) throw std::invalid_argument("energy monitor needs p > d");
  const double theta = 1.0 - d / p;
  if (!(q >= 2.0 / theta * (1.0 - 1e-12))) throw std::invalid_argument("energy monitor needs q >= 2 / theta");
  if (alphas.empty()) throw std::invalid_argument("energy monitor needs at least one alpha");
  for (double a : alphas)
    if (!(a > 1.0)) throw std::invalid_argument("energy exponents alpha must be > 1");
  if (!(ev.grid == g)) throw std::invalid_argument("evolution and field grids differ");
  const double c = field.ellipticity();
  if (!(c > 0.0)) throw std::invalid_argument("energy monitor needs a uniformly elliptic field");
  EnergySetup s{theta, c, field.drift_sup(), {}};
  for (double t : ev.times) {
    const Index si = field.slice_index(t);
    const Array ga = gradient_magnitude(field.a(0, 0, si)).values;
    s.grad_a.push_back(std::pow(ga.pow(p).sum() * g.cell_volume(), 1.0 / p));
  }
  return s;
}

double structural(double alpha, const EnergySetup& s) {
  return 1.0 + alpha * (alpha - 1.0) * s.Fsup * s.Fsup / (4.0 * s.c);
}

}  // namespace

EnergyReport energy_monitor(const DensityEvolution& ev, const CoefficientField& field,
                            const std::vector<double>& alphas, double p, double q, double K) {
  if (!(K >= 1.0)) throw std::invalid_argument("energy constant K must be >= 1");
  const EnergySetup s = energy_setup(ev, field, alphas, p, q);
  EnergyReport r{alphas, ev.times, {}, {}, s.theta, p, q, s.c, K, 0};
  const double vol = ev.grid.cell_volume();
  for (double alpha : alphas) {
    std::vector<double> I, B;
    for (std::size_t k = 0; k < ev.times.size(); ++k) I.push_back(ev.density[k].pow(alpha).sum() * vol);
    B.push_back(I[0]);
    const double C2 = K * structural(alpha, s);
    for (std::size_t k = 1; k < ev.times.size(); ++k) {
      const double m = std::round((ev.times[k] - ev.times[k - 1]) / ev.dt);
      const double rate = ev.dt * C2 * (1.0 + std::pow(s.grad_a[k - 1], 2.0 / s.theta));
      const double budget = I[k - 1] * std::pow(1.0 + rate, m);
      B.push_back(budget);
      if (I[k] > budget * (1.0 + 1e-12)) ++r.violations;
    }
    r.values.push_back(std::move(I));
    r.budgets.push_back(std::move(B));
  }
  return r;
}

double calibrate_energy_constant(const DensityEvolution& ev, const CoefficientField& field,
                                 const std::vector<double>& alphas, double p, double q) {
  const EnergySetup s = energy_setup(ev, field, alphas, p, q);
  const double vol = ev.grid.cell_volume();
  double K = 1.0;
  for (double alpha : alphas) {
    double prev = ev.density[0].pow(alpha).sum() * vol;
    for (std::size_t k = 1; k < ev.times.size(); ++k) {
      const double cur = ev.density[k].pow(alpha).sum() * vol;
      const double m = std::round((ev.times[k] - ev.times[k - 1]) / ev.dt);
      const double growth = std::pow(cur / prev, 1.0 / m) - 1.0;
      const double unit = ev.dt * structural(alpha, s) * (1.0 + std::pow(s.grad_a[k - 1], 2.0 / s.theta));
      if (growth > 0.0) K = std::max(K, growth / unit * (1.0 + 1e-9));
      prev = cur;
    }
  }
  return K;
}

Report max_principle_check(const DensityEvolution& ev, double tol) {
  if (ev.density.empty()) throw std::invalid_argument("empty evolution");
  const double m0 = ev.density.front().maxCoeff();
  std::vector<double> maxima;
  Index violations = 0;
  bool strictly_decreasing = true;
  for (std::size_t k = 0; k < ev.density.size(); ++k) {
    maxima.push_back(ev.density[k].maxCoeff());
    if (maxima.back() > m0 * (1.0 + tol)) ++violations;
    if (k > 0 && !(maxima[k] < maxima[k - 1])) strictly_decreasing = false;
  }
  return {"max_principle",
          violations == 0,
          {{"initial_max", m0},
           {"violations", violations},
           {"tolerance", tol},
           {"strictly_decreasing", strictly_decreasing},
           {"maxima", maxima}}};
}

Distances law_compare(const Law& a, const Law& b, Index ka, Index kb) {
  if (!(a.grid == b.grid)) throw std::invalid_argument("law_compare needs a common grid");
  if (a.grid.dim() != 1) throw std::invalid_argument("law_compare is one-dimensional");
  ka = resolve(ka, a);
  kb = resolve(kb, b);
  const double ma = a.mass(ka), mb = b.mass(kb);
  if (std::abs(ma - mb) > 1e-6 || std::abs(ma - 1.0) > 1e-6)
    throw std::invalid_argument("law_compare: mass mismatch beyond 1e-6");
  const Array ua = a.density[static_cast<std::size_t>(ka)] / ma;
  const Array ub = b.density[static_cast<std::size_t>(kb)] / mb;
  const double h = a.grid.width(0);
  Distances d;
  d.l1 = (ua - ub).abs().sum() * h;

  if (a.empirical() && b.empirical()) {
    std::vector<double> sa = a.samples[static_cast<std::size_t>(ka)];
    std::vector<double> sb = b.samples[static_cast<std::size_t>(kb)];
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());
    if (sa.size() == sb.size()) {
      double s = 0.0;
      for (std::size_t i = 0; i < sa.size(); ++i) s += std::abs(sa[i] - sb[i]);
      d.w1 = s / static_cast<double>(sa.size());
    } else {
      // int |F_a - F_b| over the merged breakpoints.
      std::size_t i = 0, j = 0;
      double prev = std::min(sa.front(), sb.front()), s = 0.0;
      while (i < sa.size() || j < sb.size()) {
        const double next = (j >= sb.size() || (i < sa.size() && sa[i] <= sb[j])) ? sa[i] : sb[j];
        const double fa = static_cast<double>(i) / static_cast<double>(sa.size());
        const double fb = static_cast<double>(j) / static_cast<double>(sb.size());
        s += std::abs(fa - fb) * (next - prev);
        prev = next;
        if (i < sa.size() && sa[i] == next) ++i;
        else ++j;
      }
      d.w1 = s;
    }
    return d;
  }
  const Array ca = face_cdf(a.grid, ua), cb = face_cdf(a.grid, ub);
  for (Index i = 0; i + 1 < ca.size(); ++i) d.w1 += abs_linear(ca[i] - cb[i], ca[i + 1] - cb[i + 1], h);
  return d;
}

void write_density_csv(std::ostream& os, const DensityEvolution& ev, Index stride) {
  if (stride < 1) throw std::invalid_argument("stride must be >= 1");
  CsvTable t(ev.grid.dim() == 1 ? std::vector<std::string>{"t", "x", "u"} : std::vector<std::string>{"t", "x", "v", "u"});
  for (std::size_t k = 0; k < ev.times.size(); k += static_cast<std::size_t>(stride))
    for (Index n = 0; n < ev.grid.size(); ++n) {
      const auto x = ev.grid.node(n);
      if (ev.grid.dim() == 1)
        t.add_row(std::vector<double>{ev.times[k], x[0], ev.density[k][n]});
      else
        t.add_row(std::vector<double>{ev.times[k], x[0], x[1], ev.density[k][n]});
    }
  t.write(os);
}

}  // namespace roughsde
