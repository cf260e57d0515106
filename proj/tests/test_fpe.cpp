#include <doctest.h>

#include "roughsde/fpe.hpp"
#include "roughsde/sde.hpp"

#include <cmath>
#include <sstream>

using namespace roughsde;

namespace {

// Cell averages of N(mean, sd^2) from the exact CDF, not renormalised.
Array exact_normal(const Grid& g, double mean, double sd) {
  const Axis& ax = g.axis(0);
  Array v(ax.cells);
  for (Index i = 0; i < ax.cells; ++i) {
    const double lo = ax.lower + i * ax.width(), hi = lo + ax.width();
    v[i] = 0.5 * (std::erf((hi - mean) / (sd * std::sqrt(2.0))) - std::erf((lo - mean) / (sd * std::sqrt(2.0)))) / ax.width();
  }
  return v;
}

double l1(const Grid& g, const Array& a, const Array& b) { return (a - b).abs().sum() * g.cell_volume(); }

CoefficientField constant_field(const Grid& g, double F, double a) {
  FieldSlice sl;
  sl.drift = {Array::Constant(g.size(), F)};
  sl.diffusion = {Array::Constant(g.size(), std::sqrt(2.0 * a))};
  return CoefficientField(g, 1, {sl}, Provenance{"constant", {{"F", F}, {"a", a}}});
}

Array spike(const Grid& g, double x) {
  Array u = Array::Zero(g.size());
  Index i = 0;
  for (Index k = 0; k < g.size(); ++k)
    if (std::abs(g.axis(0).center(k) - x) < std::abs(g.axis(0).center(i) - x)) i = k;
  u[i] = 1.0 / g.width(0);
  return u;
}

constexpr std::array<bool, 2> kPhase{true, false};

}  // namespace

TEST_CASE("heat kernel from a one-cell spike") {
  const Grid g = make_line(-8, 8, 512);
  const CoefficientField heat = constant_field(g, 0.0, 0.5);
  const Array u0 = spike(g, 0.0);
  const DensityEvolution ev = solve_fp_1d(heat, u0, 1.0, 0.9 * fp_max_dt(heat), 50);
  const double centre = g.axis(0).center(static_cast<Index>(std::distance(u0.data(), std::max_element(u0.data(), u0.data() + u0.size()))));
  CHECK(l1(g, ev.density.back(), exact_normal(g, centre, 1.0)) < 0.02);
  CHECK(ev.times.back() == doctest::Approx(1.0).epsilon(1e-14));
  for (double m : ev.mass) CHECK(std::abs(m - 1.0) <= 1e-10);
  for (const Array& u : ev.density) CHECK(u.minCoeff() >= 0.0);
}

TEST_CASE("Ornstein-Uhlenbeck density relaxes to N(0,1)") {
  const Grid g = make_line(-6, 6, 512);
  const CoefficientField ou = preset_field("ou", {}, g);
  const DensityEvolution ev = solve_fp_1d(ou, gaussian_density(g, 0.0, 0.5), 5.0, 0.9 * fp_max_dt(ou), 500);
  CHECK(l1(g, ev.density.back(), exact_normal(g, 0.0, 1.0)) < 0.01);
  for (double m : ev.mass) CHECK(std::abs(m - 1.0) <= 1e-10);
}

TEST_CASE("first-order refinement band with drift") {
  // Exact solution N(-1 + c t, 0.25 + 2 a t) for constant drift c and diffusion a.
  const double c = 0.5, a = 0.5, T = 1.0;
  std::vector<double> err;
  for (Index n : {256, 512, 1024}) {
    const Grid g = make_line(-8, 8, n);
    const CoefficientField f = constant_field(g, c, a);
    const DensityEvolution ev = solve_fp_1d(f, gaussian_density(g, -1.0, 0.5), T, 0.9 * fp_max_dt(f), 1000000);
    err.push_back(l1(g, ev.density.back(), exact_normal(g, -1.0 + c * T, std::sqrt(0.25 + 2 * a * T))));
  }
  for (std::size_t i = 0; i + 1 < err.size(); ++i) {
    const double ratio = err[i] / err[i + 1];
    CHECK(ratio >= 1.6);
    CHECK(ratio <= 2.4);
  }
}

TEST_CASE("FP solver preconditions") {
  const Grid g = make_line(-4, 4, 64);
  const CoefficientField f = preset_field("ou", {}, g);
  const Array u0 = gaussian_density(g, 0.0, 1.0);
  CHECK_THROWS_AS(solve_fp_1d(f, u0, 1.0, 2.0 * fp_max_dt(f)), std::invalid_argument);
  Array neg = u0;
  neg[3] = -1.0;
  CHECK_THROWS_AS(solve_fp_1d(f, neg, 1.0, fp_max_dt(f)), std::invalid_argument);
  // Step count is rounded up so the final stamp lands on T.
  const DensityEvolution ev = solve_fp_1d(f, u0, 0.1, 0.9 * fp_max_dt(f), 3);
  CHECK(ev.times.back() == doctest::Approx(0.1).epsilon(1e-14));
  CHECK(ev.dt <= 0.9 * fp_max_dt(f));
}

TEST_CASE("stationary bound") {
  const Grid g = make_line(-6, 6, 512);
  const CoefficientField ou = preset_field("ou", {}, g);
  const Array B = stationary_bound(ou, 1.0);
  for (Index i = 0; i < g.size(); ++i) {
    const double x = g.axis(0).center(i);
    // Trapezoid of the linear integrand -x is exact.
    CHECK(B[i] == doctest::Approx(std::exp(-x * x / 2)).epsilon(1e-12));
  }
  const DensityEvolution ev = solve_fp_1d(ou, gaussian_density(g, 0.0, 0.5), 2.0, 0.9 * fp_max_dt(ou), 100);
  const Report r = stationary_bound_check(ou, ev, 1.0);
  CHECK(r.passed);
  CHECK(r.details["violations"].get<Index>() == 0);

  const CoefficientField flat = constant_field(g, 0.0, 1.0);
  CHECK((stationary_bound(flat, 0.7) - 0.7).abs().maxCoeff() < 1e-15);
  const DensityEvolution evf = solve_fp_1d(flat, uniform_density(g, -2, 2), 1.0, 0.9 * fp_max_dt(flat), 50);
  CHECK(stationary_bound_check(flat, evf, 0.25).passed);

  CHECK_THROWS_AS(stationary_bound_check(ou, ev, 0.5), std::invalid_argument);
  // An odd cell count puts a node on the degenerate point x = 0.
  CHECK_THROWS_AS(stationary_bound(preset_field("sqrt_diffusion", {}, make_line(-6, 6, 513)), 1.0),
                  std::invalid_argument);
}

TEST_CASE("energy monitor") {
  const Grid g = make_line(-6, 6, 512);
  const CoefficientField heat = constant_field(g, 0.0, 1.0);
  const DensityEvolution hev = solve_fp_1d(heat, gaussian_density(g, 0.0, 0.3), 1.0, 0.9 * fp_max_dt(heat), 1);
  for (double alpha : {2.0, 3.0, 4.0}) {
    double prev = std::numeric_limits<double>::infinity();
    for (const Array& u : hev.density) {
      const double I = u.pow(alpha).sum() * g.width(0);
      CHECK(I <= prev);
      prev = I;
    }
  }
  const std::vector<double> alphas{2.0, 4.0};
  const double K = calibrate_energy_constant(hev, heat, alphas, 2.0, 4.0);
  CHECK(K == 1.0);
  CHECK(energy_monitor(hev, heat, alphas, 2.0, 4.0, K).violations == 0);

  const CoefficientField ou = preset_field("ou", {}, g);
  const DensityEvolution oev = solve_fp_1d(ou, gaussian_density(g, 1.0, 0.3), 2.0, 0.9 * fp_max_dt(ou), 4);
  const EnergyReport r = energy_monitor(oev, ou, alphas, 2.0, 4.0, K);
  CHECK(r.violations == 0);
  CHECK(r.theta == doctest::Approx(0.5));
  CHECK(r.table().columns() == std::vector<std::string>{"t", "alpha", "lhs", "budget"});

  CHECK_THROWS_AS(energy_monitor(oev, ou, alphas, 1.0, 4.0), std::invalid_argument);
  CHECK_THROWS_AS(energy_monitor(oev, ou, alphas, 2.0, 3.0), std::invalid_argument);
  CHECK_THROWS_AS(energy_monitor(oev, ou, alphas, 2.0, 4.0, 0.5), std::invalid_argument);
}

TEST_CASE("law comparison") {
  const Grid g = make_line(-8, 8, 1600);
  const Law a = constant_law(g, exact_normal(g, 0.0, 1.0) / (exact_normal(g, 0.0, 1.0).sum() * g.width(0)));
  const Distances same = law_compare(a, a);
  CHECK(same.l1 == 0.0);
  CHECK(same.w1 == 0.0);
  // Shift by exactly 16 cells.
  const double shift = 16 * g.width(0);
  const Law b = constant_law(g, exact_normal(g, shift, 1.0) / (exact_normal(g, shift, 1.0).sum() * g.width(0)));
  CHECK(law_compare(a, b).w1 == doctest::Approx(shift).epsilon(1e-6));

  std::vector<double> xs{-1.0, 0.0, 0.5, 2.0}, ys;
  for (double x : xs) ys.push_back(x + 0.1);
  const Law ea = empirical_law(g, {0.0}, {xs}), eb = empirical_law(g, {0.0}, {ys});
  CHECK(law_compare(ea, eb).w1 == doctest::Approx(0.1).epsilon(1e-12));
  // Unequal counts: F_a jumps at 0, F_b at 0 and 1 with half steps.
  const Law e1 = empirical_law(g, {0.0}, {{0.0}}), e2 = empirical_law(g, {0.0}, {{0.0, 1.0}});
  CHECK(law_compare(e1, e2).w1 == doctest::Approx(0.5).epsilon(1e-12));

  const Law other = constant_law(make_line(-8, 8, 800), Array::Constant(800, 1.0 / 16));
  CHECK_THROWS_AS(law_compare(a, other), std::invalid_argument);
}

TEST_CASE("Monte Carlo and PDE laws approach each other under joint refinement") {
  std::vector<double> d;
  Index N = 2500;
  for (Index n : {64, 128, 256}) {
    const Grid g = make_line(-6, 6, n);
    const CoefficientField ou = preset_field("ou", {}, g);
    const DensityEvolution ev = solve_fp_1d(ou, gaussian_density(g, 0.5, 0.5), 1.0, 0.9 * fp_max_dt(ou), 1000000);
    SimOptions o;
    o.T = 1.0;
    o.paths = N;
    o.record_stride = 256;
    const PathEnsemble e = simulate_ensemble(ou, InitialSpec::from_density(g, gaussian_density(g, 0.5, 0.5)),
                                             BrownianStore(8, N, 256, 1.0 / 256), o);
    const Law mc = ensemble_law(e, g);
    d.push_back(law_compare(mc, ev.law()).l1);
    N *= 4;
  }
  CHECK(d[1] < d[0]);
  CHECK(d[2] < d[1]);
}

TEST_CASE("free transport") {
  const std::array<std::array<double, 2>, 2> box{{{-3.0, 3.0}, {-2.0, 2.0}}};
  const std::array<Index, 2> cells{256, 256};
  const Grid g = make_grid(2, box, cells, kPhase);
  const CoefficientField f = preset_field("kinetic_langevin", {{"beta", 0.0}, {"a0", 0.0}}, g);
  const Array u0 = gaussian_density(g, {0.0, 0.0}, {0.4, 0.4});
  const DensityEvolution ev = solve_kinetic(f, u0, 0.5, 0.9 * kinetic_max_dt(f), 10);
  Array exact(g.size());
  for (Index n = 0; n < g.size(); ++n) {
    const auto p = g.node(n);
    const double x = p[0] - p[1] * 0.5;
    exact[n] = std::exp(-(x * x + p[1] * p[1]) / (2 * 0.16));
  }
  exact /= exact.sum() * g.cell_volume();
  CHECK(l1(g, ev.density.back(), exact) < 0.03);
  for (double m : ev.mass) CHECK(std::abs(m - 1.0) <= 1e-10);
  CHECK(max_principle_check(ev).passed);
}

TEST_CASE("v diffusion variance and strict max decrease") {
  const std::array<std::array<double, 2>, 2> box{{{-3.0, 3.0}, {-5.0, 5.0}}};
  const std::array<Index, 2> cells{64, 256};
  const Grid g = make_grid(2, box, cells, kPhase);
  const double a = 0.5;
  const CoefficientField f = preset_field("kinetic_langevin", {{"beta", 0.0}, {"a0", a}}, g);
  const DensityEvolution ev = solve_kinetic(f, gaussian_density(g, {0.0, 0.0}, {0.5, 0.3}), 0.5, 0.9 * kinetic_max_dt(f), 20);
  auto v_var = [&](const Array& u) {
    double m = 0.0, s = 0.0;
    for (Index n = 0; n < g.size(); ++n) {
      const auto p = g.node(n);
      m += p[1] * u[n] * g.cell_volume();
      s += p[1] * p[1] * u[n] * g.cell_volume();
    }
    return s - m * m;
  };
  const double v0 = v_var(ev.density.front());
  CHECK(v_var(ev.density.back()) - v0 == doctest::Approx(2 * a * 0.5).epsilon(0.02));
  const Report r = max_principle_check(ev);
  CHECK(r.passed);
  CHECK(r.details["strictly_decreasing"].get<bool>());
  for (double m : ev.mass) CHECK(std::abs(m - 1.0) <= 1e-10);
}

TEST_CASE("centred fixture violates the max principle") {
  const std::array<std::array<double, 2>, 2> box{{{-3.0, 3.0}, {-2.0, 2.0}}};
  const std::array<Index, 2> cells{128, 64};
  const Grid g = make_grid(2, box, cells, kPhase);
  const CoefficientField f = preset_field("kinetic_langevin", {{"beta", 0.0}, {"a0", 0.0}}, g);
  Array u0 = Array::Zero(g.size());
  for (Index n = 0; n < g.size(); ++n) u0[n] = std::abs(g.node(n)[0]) < 0.5 ? 1.0 : 0.0;
  const DensityEvolution ev =
      solve_kinetic(f, u0, 1.0, 0.9 * kinetic_max_dt(f), 10, KineticScheme::centered_fixture);
  const Report r = max_principle_check(ev);
  CHECK_FALSE(r.passed);
  CHECK(r.details["violations"].get<Index>() > 0);
  CHECK(max_principle_check(solve_kinetic(f, u0, 1.0, 0.9 * kinetic_max_dt(f), 10)).passed);
}

TEST_CASE("kinetic preconditions and density CSV") {
  const std::array<std::array<double, 2>, 2> box{{{-1.0, 1.0}, {-1.0, 1.0}}};
  const std::array<Index, 2> cells{8, 8};
  const Grid g = make_grid(2, box, cells, kPhase);
  const CoefficientField f = preset_field("kinetic_langevin", {}, g);
  const Array u0 = gaussian_density(g, {0.0, 0.0}, {0.3, 0.3});
  CHECK_THROWS_AS(solve_kinetic(f, u0, 1.0, 2.0 * kinetic_max_dt(f)), std::invalid_argument);
  CHECK_THROWS_AS(solve_kinetic(preset_field("ou", {}, make_line(-1, 1, 8)), Array::Ones(8), 1.0, 0.01),
                  std::invalid_argument);
  const DensityEvolution ev = solve_kinetic(f, u0, 0.1, kinetic_max_dt(f), 5);
  std::ostringstream os;
  write_density_csv(os, ev, 1000);
  const std::string s = os.str();
  CHECK(s.rfind("t,x,v,u\n", 0) == 0);
  CHECK(std::count(s.begin(), s.end(), '\n') == 1 + 64);
}
