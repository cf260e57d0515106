#include "roughsde/field.hpp"

#include "roughsde/report.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace roughsde {

CoefficientField::CoefficientField(Grid grid, int noise_dim, std::vector<FieldSlice> slices, Provenance prov)
    : grid_(std::move(grid)), noise_dim_(noise_dim), slices_(std::move(slices)), prov_(std::move(prov)) {
  if (noise_dim_ < 1) throw std::invalid_argument("noise dimension must be >= 1");
  if (slices_.empty()) throw std::invalid_argument("coefficient field needs at least one slice");
  const auto d = static_cast<std::size_t>(dim());
  const auto r = static_cast<std::size_t>(noise_dim_);
  for (std::size_t s = 0; s < slices_.size(); ++s) {
    const auto& sl = slices_[s];
    if (s > 0 && !(sl.t > slices_[s - 1].t)) throw std::invalid_argument("time slices must be increasing");
    if (sl.drift.size() != d || sl.diffusion.size() != d * r)
      throw std::invalid_argument("slice component count does not match d and r");
    for (const auto& c : sl.drift)
      if (c.size() != grid_.size() || !c.allFinite()) throw std::invalid_argument("drift values must be finite");
    for (const auto& c : sl.diffusion)
      if (c.size() != grid_.size() || !c.allFinite())
        throw std::invalid_argument("diffusion values must be finite");
  }
}

Index CoefficientField::slice_index(double t) const {
  Index k = 0;
  for (std::size_t s = 1; s < slices_.size(); ++s)
    if (slices_[s].t <= t) k = static_cast<Index>(s);
  return k;
}

const FieldSlice& CoefficientField::slice_at(double t) const {
  return slices_[static_cast<std::size_t>(slice_index(t))];
}

ScalarField CoefficientField::drift(int k, Index slice) const {
  return ScalarField(grid_, slices_.at(static_cast<std::size_t>(slice)).drift.at(static_cast<std::size_t>(k)));
}

ScalarField CoefficientField::diffusion(int k, int l, Index slice) const {
  const auto idx = static_cast<std::size_t>(k * noise_dim_ + l);
  return ScalarField(grid_, slices_.at(static_cast<std::size_t>(slice)).diffusion.at(idx));
}

ScalarField CoefficientField::a(int k, int l, Index slice) const {
  const auto& sl = slices_.at(static_cast<std::size_t>(slice));
  Array s = Array::Zero(grid_.size());
  for (int m = 0; m < noise_dim_; ++m)
    s += sl.diffusion[static_cast<std::size_t>(k * noise_dim_ + m)] *
         sl.diffusion[static_cast<std::size_t>(l * noise_dim_ + m)];
  return ScalarField(grid_, 0.5 * s);
}

ScalarField CoefficientField::drift_norm(Index slice) const {
  const auto& sl = slices_.at(static_cast<std::size_t>(slice));
  Array s = Array::Zero(grid_.size());
  for (const auto& c : sl.drift) s += c.square();
  return ScalarField(grid_, s.sqrt());
}

ScalarField CoefficientField::diffusion_norm(Index slice) const {
  const auto& sl = slices_.at(static_cast<std::size_t>(slice));
  Array s = Array::Zero(grid_.size());
  for (const auto& c : sl.diffusion) s += c.square();
  return ScalarField(grid_, s.sqrt());
}

double CoefficientField::drift_sup() const {
  double m = 0.0;
  for (Index s = 0; s < static_cast<Index>(slices_.size()); ++s) m = std::max(m, drift_norm(s).sup_norm());
  return m;
}

double CoefficientField::diffusion_sup() const {
  double m = 0.0;
  for (Index s = 0; s < static_cast<Index>(slices_.size()); ++s) m = std::max(m, diffusion_norm(s).sup_norm());
  return m;
}

double CoefficientField::a_sup() const {
  double m = 0.0;
  for (Index s = 0; s < static_cast<Index>(slices_.size()); ++s)
    for (int k = 0; k < dim(); ++k)
      for (int l = 0; l < dim(); ++l) m = std::max(m, a(k, l, s).sup_norm());
  return m;
}

double CoefficientField::ellipticity() const {
  double c = std::numeric_limits<double>::infinity();
  for (Index s = 0; s < static_cast<Index>(slices_.size()); ++s) {
    if (dim() == 1) {
      c = std::min(c, a(0, 0, s).values.minCoeff());
      continue;
    }
    const Array a00 = a(0, 0, s).values;
    const Array a01 = a(0, 1, s).values;
    const Array a11 = a(1, 1, s).values;
    const Array mean = 0.5 * (a00 + a11);
    const Array rad = (0.25 * (a00 - a11).square() + a01.square()).sqrt();
    c = std::min(c, (mean - rad).minCoeff());
  }
  return c;
}

namespace {

double param(const nlohmann::json& p, const char* key, double fallback) {
  if (!p.contains(key)) return fallback;
  if (!p.at(key).is_number()) throw std::invalid_argument(std::string("preset parameter '") + key + "' must be a number");
  return p.at(key).get<double>();
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

void check_keys(const nlohmann::json& p, std::initializer_list<const char*> allowed, const std::string& preset) {
  if (p.is_null()) return;
  require(p.is_object(), "preset parameters must be an object");
  for (const auto& [k, v] : p.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || k == a;
    require(ok, "unknown parameter '" + k + "' for preset " + preset);
  }
}

double clip_unit(double x) { return std::min(std::abs(x), 1.0); }
double sgn(double x) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); }

}  // namespace

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{"ou",         "heat",          "sqrt_diffusion",
                                              "kink_drift", "degenerate_1d", "kinetic_langevin"};
  return names;
}

CoefficientField preset_field(const std::string& name, const nlohmann::json& params, const Grid& grid) {
  const nlohmann::json p = params.is_null() ? nlohmann::json::object() : params;
  const int d = grid.dim();
  FieldSlice sl;
  int r = d;
  nlohmann::json echo = nlohmann::json::object();

  auto fill = [&](auto drift_fn, auto diff_fn, int nd, int nr) {
    r = nr;
    for (int k = 0; k < nd; ++k) sl.drift.push_back(sample(grid, [&](double x, double y) { return drift_fn(k, x, y); }).values);
    for (int k = 0; k < nd; ++k)
      for (int l = 0; l < nr; ++l)
        sl.diffusion.push_back(sample(grid, [&](double x, double y) { return diff_fn(k, l, x, y); }).values);
  };

  if (name == "ou") {
    check_keys(p, {"theta", "sigma"}, name);
    const double theta = param(p, "theta", 1.0);
    const double s = param(p, "sigma", std::sqrt(2.0));
    require(theta > 0 && s > 0, "ou: theta and sigma must be positive");
    echo = {{"theta", theta}, {"sigma", s}};
    fill([&](int k, double x, double y) { return -theta * (k == 0 ? x : y); },
         [&](int k, int l, double, double) { return k == l ? s : 0.0; }, d, d);
  } else if (name == "heat") {
    check_keys(p, {"a0"}, name);
    const double a0 = param(p, "a0", 0.5);
    require(a0 > 0, "heat: a0 must be positive");
    echo = {{"a0", a0}};
    const double s = std::sqrt(2.0 * a0);
    fill([](int, double, double) { return 0.0; }, [&](int k, int l, double, double) { return k == l ? s : 0.0; }, d, d);
  } else if (name == "sqrt_diffusion") {
    check_keys(p, {"kappa"}, name);
    require(d == 1, "sqrt_diffusion is one-dimensional");
    const double kappa = param(p, "kappa", 0.0);
    require(kappa >= 0, "sqrt_diffusion: kappa must be >= 0");
    echo = {{"kappa", kappa}};
    fill([](int, double, double) { return 0.0; },
         [&](int, int, double x, double) { return std::sqrt(clip_unit(x) + kappa); }, 1, 1);
  } else if (name == "kink_drift") {
    check_keys(p, {"beta", "sigma"}, name);
    require(d == 1, "kink_drift is one-dimensional");
    const double beta = param(p, "beta", 1.0);
    const double s = param(p, "sigma", 1.0);
    require(beta > 0 && s >= 0, "kink_drift: beta must be positive and sigma >= 0");
    echo = {{"beta", beta}, {"sigma", s}};
    fill([&](int, double x, double) { return beta * clip_unit(x) * sgn(x); },
         [&](int, int, double, double) { return s; }, 1, 1);
  } else if (name == "degenerate_1d") {
    check_keys(p, {"theta", "gamma"}, name);
    require(d == 1, "degenerate_1d is one-dimensional");
    const double theta = param(p, "theta", 1.0);
    const double gamma = param(p, "gamma", 0.5);
    require(theta >= 0, "degenerate_1d: theta must be >= 0");
    require(gamma > 0 && gamma <= 1, "degenerate_1d: gamma must lie in (0,1]");
    echo = {{"theta", theta}, {"gamma", gamma}};
    fill([&](int, double x, double) { return -theta * x; },
         [&](int, int, double x, double) { return std::pow(clip_unit(x), gamma); }, 1, 1);
  } else if (name == "kinetic_langevin") {
    check_keys(p, {"beta", "a0"}, name);
    require(d == 2, "kinetic_langevin needs a 2-D phase-space grid (x, v)");
    const double beta = param(p, "beta", 1.0);
    const double a0 = param(p, "a0", 0.5);
    require(beta >= 0 && a0 >= 0, "kinetic_langevin: beta and a0 must be >= 0");
    echo = {{"beta", beta}, {"a0", a0}};
    const double s = std::sqrt(2.0 * a0);
    fill([&](int k, double x, double v) { return k == 0 ? v : -beta * clip_unit(x) * sgn(x); },
         [&](int k, int, double, double) { return k == 1 ? s : 0.0; }, 2, 1);
  } else {
    throw std::invalid_argument("unknown preset '" + name + "'");
  }
  std::vector<FieldSlice> slices{std::move(sl)};
  return CoefficientField(grid, r, std::move(slices), Provenance{name, echo, 0.0});
}

Mollifier::Mollifier(double d) : delta(d) {
  if (!(d > 0) || !std::isfinite(d)) throw std::invalid_argument("mollifier scale must be positive");
}

double Mollifier::profile(double r) const {
  const double s = r / delta;
  if (s >= 1.0) return 0.0;
  return std::exp(-1.0 / (1.0 - s * s));
}

Mollifier::Stencil Mollifier::stencil(const Grid& grid) const {
  if (delta < grid.min_width()) throw std::invalid_argument("mollifier scale below one cell width (under-resolved kernel)");
  Stencil st;
  const Index rx = static_cast<Index>(std::ceil(delta / grid.width(0)));
  const Index ry = grid.dim() == 2 ? static_cast<Index>(std::ceil(delta / grid.width(1))) : 0;
  double mass = 0.0;
  for (Index j = -ry; j <= ry; ++j) {
    for (Index i = -rx; i <= rx; ++i) {
      const double dx = static_cast<double>(i) * grid.width(0);
      const double dy = grid.dim() == 2 ? static_cast<double>(j) * grid.width(1) : 0.0;
      const double w = profile(std::hypot(dx, dy));
      if (w <= 0.0) continue;
      st.offsets.push_back({i, j});
      st.weights.push_back(w);
      mass += w;
    }
  }
  for (double& w : st.weights) w /= mass;
  return st;
}

ScalarField mollify(const ScalarField& f, double delta) {
  const Mollifier m(delta);
  const auto st = m.stencil(f.grid);
  const Grid& g = f.grid;
  Array out(g.size());
  for (Index n = 0; n < g.size(); ++n) {
    auto ij = g.unflat(n);
    double s = 0.0;
    for (std::size_t k = 0; k < st.weights.size(); ++k) {
      const Index i = g.axis(0).extend(ij[0] + st.offsets[k][0]);
      const Index j = g.dim() == 2 ? g.axis(1).extend(ij[1] + st.offsets[k][1]) : 0;
      s += st.weights[k] * f.values[g.flat(i, j)];
    }
    out[n] = s;
  }
  return ScalarField(g, std::move(out));
}

CoefficientField mollify(const CoefficientField& field, double delta) {
  std::vector<FieldSlice> slices;
  for (const auto& sl : field.slices()) {
    FieldSlice m;
    m.t = sl.t;
    for (const auto& c : sl.drift) m.drift.push_back(mollify(ScalarField(field.grid(), c), delta).values);
    for (const auto& c : sl.diffusion) m.diffusion.push_back(mollify(ScalarField(field.grid(), c), delta).values);
    slices.push_back(std::move(m));
  }
  Provenance prov = field.provenance();
  prov.delta = delta;
  return CoefficientField(field.grid(), field.noise_dim(), std::move(slices), prov);
}

double delta_schedule(double delta0, int n) { return std::ldexp(delta0, -n); }

void write_field_csv(std::ostream& os, const CoefficientField& field, Index slice) {
  const Grid& g = field.grid();
  std::vector<std::string> cols{"x"};
  if (g.dim() == 2) cols.push_back("y");
  for (int k = 0; k < g.dim(); ++k) cols.push_back("F" + std::to_string(k));
  for (int k = 0; k < g.dim(); ++k)
    for (int l = 0; l < field.noise_dim(); ++l) cols.push_back("sigma" + std::to_string(k) + std::to_string(l));
  CsvTable t(cols);
  const auto& sl = field.slices().at(static_cast<std::size_t>(slice));
  for (Index n = 0; n < g.size(); ++n) {
    auto x = g.node(n);
    std::vector<double> row{x[0]};
    if (g.dim() == 2) row.push_back(x[1]);
    for (const auto& c : sl.drift) row.push_back(c[n]);
    for (const auto& c : sl.diffusion) row.push_back(c[n]);
    t.add_row(row);
  }
  t.write(os);
}

}  // namespace roughsde
