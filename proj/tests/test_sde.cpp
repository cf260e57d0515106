#include <doctest.h>

#include "roughsde/functionals.hpp"
#include "roughsde/maxops.hpp"
#include "roughsde/parallel.hpp"
#include "roughsde/sde.hpp"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <limits>

using namespace roughsde;

namespace {

SimOptions opts(double T, Index paths, Index stride = 1) {
  SimOptions o;
  o.T = T;
  o.paths = paths;
  o.record_stride = stride;
  return o;
}

CoefficientField still_field(const Grid& g) {
  FieldSlice sl;
  sl.drift = {Array::Zero(g.size())};
  sl.diffusion = {Array::Zero(g.size())};
  return CoefficientField(g, 1, {sl}, Provenance{"zero", {}});
}

bool bit_equal(const PathEnsemble& a, const PathEnsemble& b) {
  if (a.X.size() != b.X.size() || a.times != b.times) return false;
  for (std::size_t k = 0; k < a.X.size(); ++k)
    if (std::memcmp(a.X[k].data(), b.X[k].data(), sizeof(double) * static_cast<std::size_t>(a.X[k].size())) != 0)
      return false;
  return true;
}

}  // namespace

TEST_CASE("Brownian increments have the right mean and variance") {
  const double dt = 1.0 / 64;
  const BrownianStore s(42, 2000, 64, dt);
  Array all(2000 * 64), inc;
  for (Index p = 0; p < 2000; ++p) {
    s.increments(p, inc);
    all.segment(p * 64, 64) = inc;
  }
  const double n = static_cast<double>(all.size());
  const double mean = all.mean();
  const double var = (all - mean).square().sum() / (n - 1);
  CHECK(std::abs(mean) <= 4.0 * std::sqrt(dt / n));
  CHECK(std::abs(var - dt) <= 4.0 * dt * std::sqrt(2.0 / n));
}

TEST_CASE("Brownian store persistence and coarsening") {
  const BrownianStore s(7, 5, 16, 0.125, 2);
  const auto file = std::filesystem::temp_directory_path() / "roughsde_store_test.bin";
  s.save(file);
  const BrownianStore l = BrownianStore::load(file);
  CHECK(l.seed() == 7);
  CHECK(l.steps() == 16);
  CHECK(l.noise_dim() == 2);
  Array a, b;
  for (Index p = 0; p < 5; ++p) {
    s.increments(p, a);
    l.increments(p, b);
    CHECK((a == b).all());
  }
  CHECK(std::filesystem::file_size(file) == 40 + 5 * 16 * 2 * 8);
  std::filesystem::remove(file);

  const BrownianStore c = s.coarsened(4);
  CHECK(c.steps() == 4);
  CHECK(c.dt() == 0.5);
  s.increments(3, a);
  c.increments(3, b);
  for (Index k = 0; k < 4; ++k)
    for (int r = 0; r < 2; ++r) {
      double sum = 0.0;
      for (Index j = 0; j < 4; ++j) sum += a[(4 * k + j) * 2 + r];
      CHECK(b[k * 2 + r] == sum);
    }
  CHECK(c.shares_noise_with(s));
  CHECK_FALSE(BrownianStore(8, 5, 16, 0.125, 2).shares_noise_with(s));
  CHECK_THROWS_AS(s.coarsened(3), std::invalid_argument);
}

TEST_CASE("zero coefficients keep the initial point") {
  const Grid g = make_line(-4, 4, 64);
  const CoefficientField still = still_field(g);
  const BrownianStore s(1, 10, 32, 1.0 / 32);
  const PathEnsemble e = simulate_ensemble(still, InitialSpec::at(0.7), s, opts(1.0, 10));
  CHECK((e.X[0] == 0.7).all());
  CHECK(e.stamps() == 33);
  CHECK(e.exits == 0);
}

TEST_CASE("Brownian motion has variance t") {
  const Grid g = make_line(-8, 8, 64);
  const CoefficientField bm = preset_field("heat", {{"a0", 0.5}}, g);
  const Index N = 100000;
  set_thread_count(4);
  const PathEnsemble e = simulate_ensemble(bm, InitialSpec::at(0.0), BrownianStore(2, N, 32, 1.0 / 32), opts(1.0, N, 32));
  set_thread_count(1);
  const Array x1 = e.X[0].col(1);
  const double var = (x1 - x1.mean()).square().sum() / (N - 1);
  CHECK(std::abs(var - 1.0) <= 4.0 * std::sqrt(2.0 / N));
}

TEST_CASE("Ornstein-Uhlenbeck mean decays like exp(-t)") {
  const Grid g = make_line(-6, 6, 1024);
  const CoefficientField ou = preset_field("ou", {}, g);
  const Index N = 100000;
  set_thread_count(4);
  const PathEnsemble e = simulate_ensemble(ou, InitialSpec::at(1.0), BrownianStore(3, N, 256, 1.0 / 256), opts(1.0, N, 128));
  set_thread_count(1);
  for (Index k : {1, 2}) {
    const Estimate m = estimate(e.X[0].col(k));
    CHECK(std::abs(m.mean - std::exp(-e.times[static_cast<std::size_t>(k)])) <= 3.0 * m.std_error);
  }
}

TEST_CASE("simulation is deterministic and thread independent") {
  const Grid g = make_line(-4, 4, 256);
  const CoefficientField f = mollify(preset_field("sqrt_diffusion", {}, g), 0.1);
  const BrownianStore s(11, 500, 64, 1.0 / 64);
  const PathEnsemble a = simulate_ensemble(f, InitialSpec::gaussian(0.0, 0.5), s, opts(1.0, 500));
  set_thread_count(3);
  const PathEnsemble b = simulate_ensemble(f, InitialSpec::gaussian(0.0, 0.5), s, opts(1.0, 500));
  set_thread_count(1);
  CHECK(bit_equal(a, b));
}

TEST_CASE("coarse store equals a factor-2 step on the fine store") {
  const Grid g = make_line(-4, 4, 256);
  const CoefficientField f = preset_field("kink_drift", {{"beta", 2.0}}, g);
  const BrownianStore fine(5, 200, 128, 1.0 / 128);
  SimOptions o = opts(1.0, 200);
  o.dt_factor = 2;
  const PathEnsemble a = simulate_ensemble(f, InitialSpec::gaussian(0.0, 1.0), fine, o);
  const PathEnsemble b = simulate_ensemble(f, InitialSpec::gaussian(0.0, 1.0), fine.coarsened(2), opts(1.0, 200));
  CHECK(bit_equal(a, b));
  CHECK(a.coupled_with(b));
}

TEST_CASE("simulation preconditions") {
  const Grid g = make_line(-4, 4, 64);
  const CoefficientField f = preset_field("ou", {}, g);
  const BrownianStore s(1, 10, 64, 1.0 / 64);
  CHECK_THROWS_AS(simulate_ensemble(f, InitialSpec::at(0), s, opts(2.0, 10)), std::invalid_argument);
  CHECK_THROWS_AS(simulate_ensemble(f, InitialSpec::at(0), s, opts(1.0, 11)), std::invalid_argument);
  CHECK_THROWS_AS(simulate_ensemble(f, InitialSpec::at(0), BrownianStore(1, 10, 4, 0.25), opts(1.0, 10)),
                  std::invalid_argument);
  CHECK_THROWS_AS(simulate_ensemble(f, InitialSpec::at(0), s, opts(1.0, 10, 3)), std::invalid_argument);
}

TEST_CASE("exits are counted") {
  const Grid g = make_line(-1, 1, 64);
  const CoefficientField bm = preset_field("heat", {{"a0", 0.5}}, g);
  const PathEnsemble e = simulate_ensemble(bm, InitialSpec::at(0.9), BrownianStore(4, 200, 64, 1.0 / 64), opts(1.0, 200));
  CHECK(e.exits > 0);
  CHECK(e.exits <= 200);
}

TEST_CASE("Q functional oracles") {
  const Grid g = make_line(-4, 4, 64);
  const CoefficientField still = still_field(g);
  const BrownianStore s(1, 20, 16, 1.0 / 16);
  const PathEnsemble a = simulate_ensemble(still, InitialSpec::at(0.0), s, opts(1.0, 20));
  const PathEnsemble b = simulate_ensemble(still, InitialSpec::at(0.3), s, opts(1.0, 20));
  const FunctionalSeries zero = q_functional(a, a, 0.01);
  for (double v : zero.value) CHECK(v == 0.0);
  const FunctionalSeries q = q_functional(a, b, 0.01);
  for (double v : q.value) CHECK(v == doctest::Approx(std::log1p(0.09 / 1e-4)).epsilon(1e-14));

  const PathEnsemble other = simulate_ensemble(still, InitialSpec::at(0.3), BrownianStore(2, 20, 16, 1.0 / 16), opts(1.0, 20));
  CHECK_THROWS_AS(q_functional(a, other, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(q_functional(a, b, 0.0), std::invalid_argument);
}

TEST_CASE("Q is nonincreasing in eps and the tilde version reduces without drift") {
  const Grid g = make_line(-6, 6, 512);
  const CoefficientField bm = preset_field("heat", {{"a0", 0.5}}, g);
  const BrownianStore s(9, 300, 64, 1.0 / 64);
  const PathEnsemble a = simulate_ensemble(bm, InitialSpec::at(0.0), s, opts(1.0, 300));
  const PathEnsemble b = simulate_ensemble(bm, InitialSpec::at(0.25), s, opts(1.0, 300));
  double prev = std::numeric_limits<double>::infinity();
  for (double eps : {1e-3, 1e-2, 1e-1, 1.0}) {
    const double v = q_functional(a, b, eps).sup();
    CHECK(v <= prev);
    prev = v;
  }
  const ScalarField h = maximal(gradient_magnitude(bm.drift(0)), RadiusSchedule::for_grid(g));
  CHECK(h.values.maxCoeff() == 0.0);
  const FunctionalSeries qt = q_tilde_functional(a, b, 0.01, h);
  for (double v : qt.value) CHECK(v == doctest::Approx(0.25 * std::log1p(0.0625 / 1e-4)).epsilon(1e-12));
  for (double v : q_tilde_functional(a, a, 0.01, h).value) CHECK(v == 0.0);
}

TEST_CASE("weight process is nondecreasing and matches its quadrature mean") {
  const Grid g = make_line(-6, 6, 512);
  const CoefficientField f = preset_field("kink_drift", {{"beta", 1.0}}, g);
  const CoefficientField fm = mollify(f, 0.1);
  const BrownianStore s(13, 4000, 128, 1.0 / 128);
  const PathEnsemble a = simulate_ensemble(f, InitialSpec::gaussian(0.0, 0.5), s, opts(1.0, 4000));
  const PathEnsemble b = simulate_ensemble(fm, InitialSpec::gaussian(0.0, 0.5), s, opts(1.0, 4000));
  const ScalarField h = maximal(gradient_magnitude(f.drift(0)), RadiusSchedule::for_grid(g));
  const Eigen::ArrayXXd U = weight_process(a, b, h);
  CHECK((U.col(0) == 0.0).all());
  for (Index k = 1; k < U.cols(); ++k) CHECK((U.col(k) >= U.col(k - 1)).all());

  // Oracle: the same left-point sum of 4 (h(X) + h(Y)) evaluated path by path.
  const Estimate eu = estimate(U.col(U.cols() - 1));
  double direct = 0.0;
  for (Index p = 0; p < 4000; ++p)
    for (Index k = 0; k + 1 < a.stamps(); ++k) {
      const double xa = a.X[0](p, k), xb = b.X[0](p, k);
      direct += 4.0 * (interpolate(h.grid, h.values, &xa) + interpolate(h.grid, h.values, &xb)) / 128.0;
    }
  CHECK(eu.mean == doctest::Approx(direct / 4000).epsilon(1e-12));
  // Bound 8 int h u dt with the shared law: both builds start from N(0, 1/4)
  // and h <= beta, so E U_T <= 8 beta T.
  CHECK(eu.mean <= 8.0 + 3 * eu.std_error);
}

TEST_CASE("L_eps cut-off") {
  for (auto fl : {LepsFlavor::plateau, LepsFlavor::linear1d}) {
    CHECK(l_eps(0.0, 0.1, fl) == 0.0);
    CHECK(l_eps(0.05, 0.1, fl) == 0.0);
    // C2 junctions, checked by finite differences.
    for (double x : {0.05, 0.1}) {
      const double e = 1e-6;
      const double top = [&](double y) { return fl == LepsFlavor::plateau ? 1.0 : y; }(x);
      const double bot = x == 0.05 ? 0.0 : top;
      CHECK(l_eps(x, 0.1, fl) == doctest::Approx(bot).epsilon(1e-12));
      const double d_left = (l_eps(x, 0.1, fl) - l_eps(x - e, 0.1, fl)) / e;
      const double d_right = (l_eps(x + e, 0.1, fl) - l_eps(x, 0.1, fl)) / e;
      CHECK(std::abs(d_left - d_right) < 1e-4);
    }
    // Nonincreasing in eps for fixed x.
    for (double x : {0.01, 0.06, 0.08, 0.2}) {
      double prev = std::numeric_limits<double>::infinity();
      for (double eps = 0.01; eps < 0.5; eps *= 1.1) {
        const double v = l_eps(x, eps, fl);
        CHECK(v <= prev);
        prev = v;
      }
    }
  }
  CHECK(l_eps(0.2, 0.1, LepsFlavor::plateau) == 1.0);
  CHECK(l_eps(-0.2, 0.1, LepsFlavor::linear1d) == 0.2);
}

TEST_CASE("L_eps functional dominates the tail probability") {
  const Grid g = make_line(-6, 6, 1024);
  const CoefficientField f = mollify(preset_field("sqrt_diffusion", {}, g), 0.05);
  const CoefficientField fm = mollify(preset_field("sqrt_diffusion", {}, g), 0.2);
  const BrownianStore s(21, 2000, 128, 1.0 / 128);
  const PathEnsemble a = simulate_ensemble(f, InitialSpec::gaussian(0.0, 0.5), s, opts(1.0, 2000));
  const PathEnsemble b = simulate_ensemble(fm, InitialSpec::gaussian(0.0, 0.5), s, opts(1.0, 2000));
  for (double eps : {1e-3, 1e-2, 0.05, 0.2}) {
    const FunctionalSeries L = l_eps_functional(a, b, eps, LepsFlavor::plateau);
    const FunctionalSeries P = tail_probability(a, b, eps);
    for (std::size_t k = 0; k < L.value.size(); ++k) {
      CHECK(L.value[k] >= P.value[k]);
      CHECK(L.value[k] <= 1.0);
    }
  }
  // Delta identically 2 eps.
  const CoefficientField still = still_field(g);
  const BrownianStore s2(1, 4, 16, 1.0 / 16);
  const PathEnsemble p0 = simulate_ensemble(still, InitialSpec::at(0.0), s2, opts(1.0, 4));
  const PathEnsemble p1 = simulate_ensemble(still, InitialSpec::at(0.2), s2, opts(1.0, 4));
  for (double v : l_eps_functional(p0, p1, 0.1, LepsFlavor::plateau).value) CHECK(v == 1.0);
  for (double v : l_eps_functional(p0, p0, 0.1, LepsFlavor::plateau).value) CHECK(v == 0.0);
}

TEST_CASE("Gronwall bound for deterministic Lipschitz flows") {
  const Grid g = make_line(-6, 6, 1024);
  const double beta = 1.5;
  const CoefficientField f = preset_field("kink_drift", {{"beta", beta}, {"sigma", 0.0}}, g);
  const BrownianStore s(3, 50, 128, 1.0 / 128);
  const PathEnsemble a = simulate_ensemble(f, InitialSpec::gaussian(0.0, 1.0), s, opts(1.0, 50));
  const PathEnsemble b = simulate_ensemble(f, InitialSpec::gaussian(0.01, 1.0), s, opts(1.0, 50));
  const Eigen::ArrayXXd d = path_distance(a, b);
  for (Index k = 0; k < d.cols(); ++k)
    CHECK((d.col(k) <= d.col(0) * std::exp(beta * a.times[static_cast<std::size_t>(k)]) * (1 + 1e-12)).all());
}

TEST_CASE("dyadic eps schedule") {
  const auto s = dyadic_eps_schedule(1e-4, 0.5);
  CHECK(s.front().a == 0.25);
  CHECK(s.front().b == 0.5);
  CHECK(s.back().a < 1e-4);
  for (std::size_t i = 0; i + 1 < s.size(); ++i) {
    CHECK(s[i + 1].b == s[i].a);
    CHECK(s[i].a >= 1e-4);
    CHECK(std::log(s[i + 1].a) == doctest::Approx(2.0 * std::log(s[i].a)));
  }
  CHECK_THROWS_AS(dyadic_eps_schedule(0.5, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(dyadic_eps_schedule(0.1, 1.0), std::invalid_argument);
}

TEST_CASE("block averages use whole dyadic shells") {
  const Grid g = make_line(-6, 6, 512);
  const CoefficientField f = preset_field("ou", {}, g);
  const BrownianStore s(17, 500, 256, 1.0 / 256);
  SimOptions o1 = opts(1.0, 500, 2);
  SimOptions o2 = opts(1.0, 500, 1);
  o2.dt_factor = 2;
  const PathEnsemble a = simulate_ensemble(f, InitialSpec::gaussian(0.0, 1.0), s, o1);
  const PathEnsemble b = simulate_ensemble(f, InitialSpec::gaussian(0.0, 1.0), s, o2);
  const auto sched = dyadic_eps_schedule(1e-12, 0.5);
  const BlockAverages ba = block_averages(a, b, f.drift(0), sched);
  REQUIRE(ba.beta.size() == sched.size());
  // Shell count is log2(b/a) for dyadic endpoints.
  for (std::size_t i = 0; i < sched.size(); ++i)
    CHECK(ba.shells[i] == static_cast<int>(std::round(std::log2(sched[i].b / sched[i].a))));
  for (double v : ba.beta) CHECK(v >= 0.0);
}

TEST_CASE("Cauchy diagnostic on the Lipschitz preset") {
  const Grid g = make_line(-6, 6, 2048);
  const CoefficientField base = preset_field("kink_drift", {{"beta", 1.0}}, g);
  const BrownianStore s(23, 2000, 256, 1.0 / 256);
  std::vector<PathEnsemble> fam;
  std::vector<CoefficientField> fields;
  for (int n = 2; n <= 5; ++n) {
    fields.push_back(mollify(base, delta_schedule(1.0, n)));
    fam.push_back(simulate_ensemble(fields.back(), InitialSpec::gaussian(0.0, 1.0), s, opts(1.0, 2000, 4)));
  }
  const CauchyResult r = cauchy_diagnostic(fam, fields);
  for (Index i = 0; i < 4; ++i) CHECK(r.value(i, i) == 0.0);
  CHECK(r.monotone);
  CHECK(r.finest < r.value(0, 1));
  CHECK(r.eta(0, 3) > r.eta(2, 3));
  CHECK(r.report.details.contains("empirical_rate"));
  fam.pop_back();
  fields.pop_back();
  CHECK_THROWS_AS(cauchy_diagnostic(fam, fields), std::invalid_argument);
}

TEST_CASE("uniqueness map of identical builds vanishes") {
  const Grid g = make_line(-6, 6, 512);
  const Build b{mollify(preset_field("ou", {}, g), 0.1), 1};
  const BrownianStore s(31, 8 * 50, 128, 1.0 / 128);
  UniquenessOptions o;
  o.paths = 50;
  const std::vector<double> xs{-1.5, -1.0, -0.5, 0.0, 0.25, 0.5, 1.0, 1.5};
  const UniquenessMap m = uniqueness_map(xs, b, b, s, o);
  for (double v : m.n_eps) CHECK(v == 0.0);
  for (double v : m.m_eps) CHECK(v > 0.0);
  CHECK(m.fraction_below == 1.0);
  CHECK(m.table().columns() == std::vector<std::string>{"x", "N_eps", "M_eps"});
}
