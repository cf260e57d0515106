#include <doctest.h>

#include "roughsde/field.hpp"
#include "roughsde/law.hpp"
#include "roughsde/maxops.hpp"
#include "roughsde/norms.hpp"
#include "roughsde/sde.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace roughsde;

namespace {

constexpr double pi = std::numbers::pi;

double law_mean(const Grid& g, const Array& u) {
  double m = 0.0;
  for (Index i = 0; i < g.size(); ++i) m += g.axis(0).center(i) * u[i] * g.width(0);
  return m;
}

double law_var(const Grid& g, const Array& u) {
  const double m = law_mean(g, u);
  double v = 0.0;
  for (Index i = 0; i < g.size(); ++i) v += std::pow(g.axis(0).center(i) - m, 2) * u[i] * g.width(0);
  return v;
}

// Antiderivative of |cos|.
double abs_cos_primitive(double x) {
  const double k = std::floor((x + pi / 2) / pi);
  return 2.0 * k + ((static_cast<long>(k) % 2 == 0) ? 1.0 : -1.0) * std::sin(x);
}

}  // namespace

TEST_CASE("law builders are normalised") {
  const Grid g = make_line(-5, 5, 400);
  const Array gauss = gaussian_density(g, 0.5, 0.7);
  CHECK(gauss.sum() * g.width(0) == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(law_mean(g, gauss) == doctest::Approx(0.5).epsilon(1e-9));
  // Cell averaging adds h^2 / 12 to the variance of the midpoint rule.
  CHECK(law_var(g, gauss) == doctest::Approx(0.49 + std::pow(g.width(0), 2) / 12).epsilon(1e-6));

  const Array uni = uniform_density(g, -1.0, 1.0);
  CHECK(uni.sum() * g.width(0) == doctest::Approx(1.0));
  CHECK(uni.maxCoeff() == doctest::Approx(0.5));

  std::mt19937_64 rng(1);
  std::normal_distribution<double> nd;
  std::vector<double> xs(20000);
  for (double& x : xs) x = nd(rng);
  xs.push_back(100.0);
  const Array hist = histogram_density(g, xs);
  CHECK(hist.sum() * g.width(0) == doctest::Approx(1.0));
  CHECK(hist[g.size() - 1] > 0.0);
  const Array kde = kde_density(g, xs, 0.2);
  CHECK(kde.sum() * g.width(0) == doctest::Approx(1.0));
  CHECK(law_var(g, kde) > law_var(g, hist) - 0.01);

  const Law emp = empirical_law(g, {0.0}, {xs});
  CHECK(emp.empirical());
  emp.check_normalized();
  CHECK_THROWS_AS(constant_law(g, uni * 1.1), std::invalid_argument);
  Law bad{g, {0.0}, {uni * 1.1}, {}};
  CHECK_THROWS_AS(bad.check_normalized(), std::invalid_argument);
}

TEST_CASE("heat smoothing adds delta^2 to the variance") {
  const Grid g = make_line(-8, 8, 800);
  const Array u = gaussian_density(g, 0.0, 0.5);
  const Array s = heat_smooth(g, u, 0.3);
  CHECK(s.sum() * g.width(0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(law_var(g, s) == doctest::Approx(law_var(g, u) + 0.09).epsilon(1e-4));
  CHECK((heat_smooth(g, u, 0.0) == u).all());
}

TEST_CASE("coarsening and time weights") {
  const Grid g = make_line(0, 4, 64);
  const Array u = uniform_density(g, 1.0, 3.0);
  const Array c = coarsen(u, 4);
  CHECK(c.size() == 16);
  CHECK(c.sum() * coarsen(g, 4).width(0) == doctest::Approx(1.0));
  CHECK_THROWS_AS(coarsen(u, 5), std::invalid_argument);

  Law l{g, {0.0, 0.25, 1.0}, {u, u, u}, {}};
  const auto w = l.time_weights(1.0);
  CHECK(w[0] == doctest::Approx(0.125));
  CHECK(w[1] == doctest::Approx(0.5));
  CHECK(w[2] == doctest::Approx(0.375));
  CHECK(constant_law(g, u).time_weights(2.0) == std::vector<double>{2.0});
  CHECK_THROWS_AS(l.time_weights(2.0), std::invalid_argument);

  const Array F = face_cdf(g, u);
  CHECK(F[0] == 0.0);
  CHECK(F[64] == doctest::Approx(1.0));
  CHECK(F[32] == doctest::Approx(0.5));
}

TEST_CASE("H1 norm closed forms") {
  const Grid g = make_line(-1, 2, 3000);
  const Law u = constant_law(g, uniform_density(g, 0.0, 1.0));
  const ScalarField c = sample(g, [](double, double) { return -1.7; });
  CHECK(h1_norm(c, u, 2.0).value == doctest::Approx(1.7 * std::sqrt(2.0)).epsilon(1e-12));

  const double a = 1.3;
  const ScalarField lin = sample(g, [&](double x, double) { return a * x; });
  // int_0^1 (a x)^2 dx + a^2, midpoint rule correction -h^2/12.
  const double h = g.width(0);
  const double exact = a * a * (1.0 / 3.0 - h * h / 12.0) + a * a;
  CHECK(h1_norm(lin, u, 1.0).value == doctest::Approx(std::sqrt(exact)).epsilon(1e-10));
}

TEST_CASE("W11 norm closed forms") {
  const Grid g = make_line(-2, 2, 4096);
  const Law u = constant_law(g, uniform_density(g, -1.0, 1.0));
  CHECK(w11_norm(sample(g, [](double, double) { return 3.0; }), u, 1.0).value == 0.0);
  for (double beta : {0.5, 2.0}) {
    const ScalarField F = preset_field("kink_drift", {{"beta", beta}}, g).drift(0);
    const NormValue v = w11_norm(F, u, 1.0);
    CHECK(v.value == doctest::Approx(beta).epsilon(5e-3));
    ScalarField F2 = F;
    F2.values *= 2.0;
    CHECK(w11_norm(F2, u, 1.0).value == doctest::Approx(2.0 * v.value).epsilon(1e-12));
  }
}

TEST_CASE("Wphi weak norm") {
  const Grid g = make_line(-6, 6, 1024);
  const Law u = constant_law(g, uniform_density(g, -1.0, 1.0));
  const ScalarField zero = sample(g, [](double, double) { return 0.0; });
  const std::vector<double> Ls{std::exp(1.0), std::exp(2.0), std::exp(4.0)};
  const NormValue z = wphi_weak_norm(zero, u, 1.0, PhiWeight::standard(), Ls);
  CHECK(z.value == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
  CHECK(z.argmax_L == doctest::Approx(std::exp(1.0)));

  CHECK_THROWS_AS(wphi_weak_norm(zero, u, 1.0, PhiWeight::standard(), {2.0, 10.0}), std::invalid_argument);
  CHECK_THROWS_AS(wphi_weak_norm(zero, u, 1.0, PhiWeight::standard(), {20.0, 10.0}), std::invalid_argument);

  // Interior maximiser for a steep kink.
  std::vector<double> grid_L;
  for (double l = 1.0; l <= 64.0; l *= 2.0) grid_L.push_back(std::exp(l));
  const ScalarField F = preset_field("kink_drift", {{"beta", 4.0}}, g).drift(0);
  const NormValue v = wphi_weak_norm(F, u, 1.0, PhiWeight::standard(), grid_L);
  CHECK(v.argmax_L > grid_L.front());
  CHECK(v.argmax_L < grid_L.back());

  // Monotone in T and under domination.
  const ScalarField F2 = preset_field("kink_drift", {{"beta", 8.0}}, g).drift(0);
  CHECK(wphi_weak_norm(F, u, 2.0, PhiWeight::standard(), grid_L).value > v.value);
  CHECK(wphi_weak_norm(F2, u, 1.0, PhiWeight::standard(), grid_L).value >= v.value);
}

TEST_CASE("phi weights are super-linear") {
  const PhiWeight std_phi = PhiWeight::standard();
  const PhiWeight app = PhiWeight::appendix();
  const PhiWeight tab = PhiWeight::table({{std::exp(1.0), 5.0}, {std::exp(3.0), 200.0}});
  CHECK(std_phi(std::exp(3.0)) == doctest::Approx(std::exp(3.0) * 2.0));
  CHECK(tab(std::exp(1.0)) == doctest::Approx(5.0));
  CHECK(tab(std::exp(2.0)) == doctest::Approx(std::sqrt(1000.0)));
  double prev = 0.0;
  for (double l = 1.0; l < 200.0; l *= 1.3) {
    const double r = app(std::exp(l)) / std::exp(l);
    CHECK(r >= prev * (1 - 1e-12));
    prev = r;
  }
}

TEST_CASE("half norm of constants and of cos") {
  const Grid g = make_line(0, 2 * pi, 512, true);
  const Law u = constant_law(g, Array::Constant(512, 1.0 / (2 * pi)));
  NormOptions opt;
  opt.periodic_field = true;
  CHECK(h_half_norm(sample(g, [](double, double) { return 2.0; }), u, 1.0, opt).value < 1e-12);

  const ScalarField c = sample(g, [](double x, double) { return std::cos(x); });
  const double v = h_half_norm(c, u, 1.0, opt).value;
  // Oracle: continuous ball averages of |cos| over the same radii.
  const RadiusSchedule rs = RadiusSchedule::for_grid(g);
  double sq = 0.0;
  for (Index i = 0; i < 512; ++i) {
    const double x = g.axis(0).center(i);
    double m = 0.0;
    for (double r : rs.radii)
      m = std::max(m, (abs_cos_primitive(x + r) - abs_cos_primitive(x - r)) / (2 * r));
    sq += m * m / 512.0;
  }
  CHECK(v == doctest::Approx(std::sqrt(sq)).epsilon(1e-3));

  CHECK_THROWS_AS(h_half_norm(c, u, 1.0), std::invalid_argument);
  const Grid line = make_line(0, 2 * pi, 512);
  CHECK_THROWS_AS(h_half_norm(sample(line, [](double x, double) { return x; }), constant_law(line, u.density[0]), 1.0, opt),
                  std::invalid_argument);
}

TEST_CASE("half norm of the square-root diffusion is stable under refinement") {
  double prev = 0.0;
  for (Index n : {Index{1} << 12, Index{1} << 13}) {
    const Grid g = make_line(-8, 8, n, true);
    const ScalarField s = preset_field("sqrt_diffusion", {}, g).diffusion(0, 0);
    const double v = h_half_norm(s, constant_law(g, uniform_density(g, -2.0, 2.0)), 1.0).value;
    if (prev > 0) CHECK(std::abs(v - prev) / prev < 0.05);
    prev = v;
  }
}

TEST_CASE("norm axioms") {
  const Grid g = make_line(-8, 8, 2048, true);
  const Law u = constant_law(g, gaussian_density(g, 0.0, 0.3));
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(-1, 1);
  for (int trial = 0; trial < 5; ++trial) {
    const double a1 = U(rng), a2 = U(rng), k1 = 1 + 3 * std::abs(U(rng));
    const ScalarField f = sample(g, [&](double x, double) { return a1 * std::sin(k1 * pi * x / 4) + a2 * x * x / 16; });
    const ScalarField h = sample(g, [&](double x, double) { return std::abs(x) < 1 ? a2 : a1 * std::cos(pi * x / 4); });
    ScalarField sum = f;
    sum.values += h.values;
    ScalarField scaled = f;
    scaled.values *= -2.5;
    const double lam = 2.5;
    using Fn = NormValue (*)(const ScalarField&, const Law&, double, const NormOptions&);
    for (Fn norm : {static_cast<Fn>(&h1_norm), static_cast<Fn>(&w11_norm), static_cast<Fn>(&h_half_norm)}) {
      const double nf = norm(f, u, 1.0, {}).value, nh = norm(h, u, 1.0, {}).value;
      CHECK(norm(sum, u, 1.0, {}).value <= (nf + nh) * (1 + 1e-12));
      CHECK(norm(scaled, u, 1.0, {}).value == doctest::Approx(lam * nf).epsilon(1e-12));
    }
  }
}

TEST_CASE("quadrature and pathwise H1 agree") {
  const Grid g = make_line(-6, 6, 1024);
  const CoefficientField ou = preset_field("ou", {}, g);
  const ScalarField F = ou.drift(0);
  const Law stat = constant_law(g, gaussian_density(g, 0.0, 1.0));
  const double quad = h1_norm(F, stat, 1.0).value;
  SimOptions o;
  o.T = 1.0;
  o.paths = 20000;
  o.record_stride = 16;
  const PathEnsemble e = simulate_ensemble(ou, InitialSpec::gaussian(0.0, 1.0), BrownianStore(3, 20000, 256, 1.0 / 256), o);
  const NormValue mc = h1_norm(F, e);
  CHECK(mc.method == NormMethod::pathwise);
  CHECK(mc.mc_stderr > 0);
  CHECK(std::abs(mc.value - quad) <= 3.0 * mc.mc_stderr + 2e-3);
  CHECK(to_json(mc).contains("mc_stderr"));
}

TEST_CASE("Holder domination") {
  const Grid g = make_line(-1, 2, 3000);
  const double a = 0.8;
  const ScalarField lin = sample(g, [&](double x, double) { return a * x; });
  const Law u = constant_law(g, uniform_density(g, 0.0, 1.0));
  const Report r = holder_domination_check(lin, u, 1.0, 2.0, 2.0);
  CHECK(r.passed);
  CHECK(r.details["lhs"].get<double>() == doctest::Approx(a * a).epsilon(1e-10));
  CHECK(r.details["rhs"].get<double>() == doctest::Approx(a * a * std::sqrt(3.0)).epsilon(1e-10));

  // Equality when u is proportional to g^(p-1).
  const Grid s = make_line(0, 2 * pi, 1000);
  const ScalarField sn = sample(s, [](double x, double) { return std::sin(x); });
  Array gg = maximal(gradient_magnitude(sn), RadiusSchedule::for_grid(s)).values.square();
  gg /= gg.sum() * s.width(0);
  const Report eq = holder_domination_check(sn, constant_law(s, gg), 1.0, 2.0, 2.0);
  CHECK(eq.passed);
  CHECK(eq.details["ratio"].get<double>() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(holder_domination_check(sn, constant_law(s, gg), 1.0, 1.0, 2.0), std::invalid_argument);
}

TEST_CASE("semicontinuity probes") {
  const Grid g = make_line(-6, 6, 1024, true);
  const Law u = constant_law(g, gaussian_density(g, 0.0, 0.6));
  const std::vector<double> deltas{0.4, 0.2, 0.1, 0.05, 0.025, 0.0125};
  const ScalarField lin = sample(g, [](double x, double) { return 0.5 * x * std::exp(-x * x / 8); });
  const Report r = semicontinuity_probe(lin, u, 1.0, NormKind::H1, deltas, deltas);
  CHECK(r.passed);
  CHECK(r.details["u_n"]["last_rel_gap"].get<double>() < 0.01);

  // The continuum norm diverges logarithmically at the origin, so the tail of
  // the schedule has to reach the grid scale.
  const Grid line = make_line(-6, 6, 2048);
  const ScalarField sq = preset_field("sqrt_diffusion", {}, line).diffusion(0, 0);
  std::vector<double> fine;
  for (int n = 0; n < 6; ++n) fine.push_back(line.width(0) * (1.0 + std::ldexp(1.0, -n)));
  CHECK(semicontinuity_probe(sq, constant_law(line, uniform_density(line, -2, 2)), 1.0, NormKind::H1, fine, {}).passed);

  CHECK_THROWS_AS(semicontinuity_probe(lin, u, 1.0, NormKind::H1, {0.1, 0.05}, {}), std::invalid_argument);
  CHECK_THROWS_AS(semicontinuity_probe(lin, u, 1.0, NormKind::W11, deltas, {}), std::invalid_argument);
}
