#include "roughsde/law.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace roughsde {

namespace {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

void require_1d(const Grid& g, const char* what) {
  if (g.dim() != 1) throw std::invalid_argument(std::string(what) + " needs a 1-D grid");
}

Array normalised(Array v, double volume) {
  const double m = v.sum() * volume;
  if (!(m > 0.0)) throw std::invalid_argument("density has no mass on the grid");
  return v / m;
}

Array axis_gaussian(const Axis& ax, double mean, double sd) {
  Array v(ax.cells);
  for (Index i = 0; i < ax.cells; ++i)
    v[i] = normal_cdf((ax.face(i + 1) - mean) / sd) - normal_cdf((ax.face(i) - mean) / sd);
  return v / ax.width();
}

}  // namespace

double Law::mass(Index k) const { return density.at(static_cast<std::size_t>(k)).sum() * grid.cell_volume(); }

void Law::check_normalized(double tol) const {
  if (times.size() != density.size() || times.empty()) throw std::invalid_argument("law needs one density per stamp");
  for (Index k = 0; k < stamps(); ++k) {
    const Array& u = density[static_cast<std::size_t>(k)];
    if (u.size() != grid.size()) throw std::invalid_argument("law density does not match its grid");
    if ((u < 0.0).any() || !u.allFinite()) throw std::invalid_argument("law density must be finite and >= 0");
    if (std::abs(mass(k) - 1.0) > tol) throw std::invalid_argument("law is not normalised");
  }
}

std::vector<double> Law::time_weights(double T) const {
  if (!(T > 0.0)) throw std::invalid_argument("horizon T must be positive");
  if (times.size() == 1) return {T};
  if (std::abs(times.front()) > 1e-12 || std::abs(times.back() - T) > 1e-9 * std::max(1.0, T))
    throw std::invalid_argument("law stamps must span [0, T]");
  std::vector<double> w(times.size(), 0.0);
  for (std::size_t k = 0; k + 1 < times.size(); ++k) {
    const double dt = times[k + 1] - times[k];
    w[k] += 0.5 * dt;
    w[k + 1] += 0.5 * dt;
  }
  return w;
}

Law constant_law(Grid grid, Array density) {
  Law u{std::move(grid), {0.0}, {std::move(density)}, {}};
  u.check_normalized();
  return u;
}

Array gaussian_density(const Grid& grid, std::array<double, 2> mean, std::array<double, 2> sd) {
  if (!(sd[0] > 0.0) || (grid.dim() == 2 && !(sd[1] > 0.0)))
    throw std::invalid_argument("standard deviation must be positive");
  const Array gx = axis_gaussian(grid.axis(0), mean[0], sd[0]);
  if (grid.dim() == 1) return normalised(gx, grid.cell_volume());
  const Array gy = axis_gaussian(grid.axis(1), mean[1], sd[1]);
  Array v(grid.size());
  for (Index j = 0; j < gy.size(); ++j) v.segment(j * gx.size(), gx.size()) = gx * gy[j];
  return normalised(v, grid.cell_volume());
}

Array gaussian_density(const Grid& grid, double mean, double sd) { return gaussian_density(grid, {mean, 0}, {sd, 1}); }

Array uniform_density(const Grid& grid, double lo, double hi) {
  require_1d(grid, "uniform_density");
  if (!(hi > lo)) throw std::invalid_argument("uniform law needs lo < hi");
  const Axis& ax = grid.axis(0);
  Array v(ax.cells);
  for (Index i = 0; i < ax.cells; ++i)
    v[i] = std::max(0.0, std::min(hi, ax.face(i + 1)) - std::max(lo, ax.face(i))) / ax.width();
  return normalised(v, grid.cell_volume());
}

Array histogram_density(const Grid& grid, std::span<const double> samples) {
  require_1d(grid, "histogram_density");
  if (samples.empty()) throw std::invalid_argument("histogram needs samples");
  const Axis& ax = grid.axis(0);
  Array v = Array::Zero(ax.cells);
  for (double x : samples) {
    const auto i = static_cast<Index>(std::floor((x - ax.lower) / ax.width()));
    v[ax.extend(i)] += 1.0;
  }
  return v / (static_cast<double>(samples.size()) * ax.width());
}

Array kde_density(const Grid& grid, std::span<const double> samples, double bandwidth) {
  require_1d(grid, "kde_density");
  if (samples.empty()) throw std::invalid_argument("kde needs samples");
  if (!(bandwidth > 0.0)) throw std::invalid_argument("kde bandwidth must be positive");
  // Bin first, then smooth the histogram: exact for the cell-averaged kernel up
  // to the sub-cell position of each sample.
  return heat_smooth(grid, histogram_density(grid, samples), bandwidth);
}

Law empirical_law(const Grid& grid, std::vector<double> times, std::vector<std::vector<double>> samples,
                  DensityEstimator estimator, double bandwidth) {
  if (times.size() != samples.size()) throw std::invalid_argument("one sample set per stamp is required");
  if (bandwidth == 0.0) bandwidth = 2.0 * grid.width(0);
  Law u{grid, std::move(times), {}, std::move(samples)};
  u.density.reserve(u.samples.size());
  for (const auto& s : u.samples)
    u.density.push_back(estimator == DensityEstimator::kde ? kde_density(grid, s, bandwidth)
                                                           : histogram_density(grid, s));
  return u;
}

Array heat_smooth(const Grid& grid, const Array& density, double delta) {
  require_1d(grid, "heat_smooth");
  if (delta < 0.0) throw std::invalid_argument("smoothing scale must be >= 0");
  if (delta == 0.0) return density;
  const Axis& ax = grid.axis(0);
  const double h = ax.width();
  // Weight of offset j: probability that a normal step lands j cells away,
  // integrated over the source cell as well (triangle of two boxes).
  const auto reach = static_cast<Index>(std::ceil(8.0 * delta / h)) + 1;
  std::vector<double> w(static_cast<std::size_t>(2 * reach + 1));
  auto box = [&](double a, double b) { return normal_cdf(b / delta) - normal_cdf(a / delta); };
  for (Index j = -reach; j <= reach; ++j) {
    // Average over source offset s in [-h/2, h/2] by Simpson on three points.
    const double c = j * h;
    const double mid = box(c - 0.5 * h, c + 0.5 * h);
    const double lo = box(c - h, c);
    const double hi = box(c, c + h);
    w[static_cast<std::size_t>(j + reach)] = (lo + 4.0 * mid + hi) / 6.0;
  }
  Array out = Array::Zero(ax.cells);
  for (Index i = 0; i < ax.cells; ++i) {
    if (density[i] == 0.0) continue;
    for (Index j = -reach; j <= reach; ++j) {
      const Index t = i + j;
      if (!ax.periodic && (t < 0 || t >= ax.cells)) continue;
      out[ax.extend(t)] += density[i] * w[static_cast<std::size_t>(j + reach)];
    }
  }
  return normalised(out, h);
}

Law heat_smooth(const Law& law, double delta) {
  Law u = law;
  u.samples.clear();
  for (auto& d : u.density) d = heat_smooth(law.grid, d, delta);
  return u;
}

Grid coarsen(const Grid& grid, Index factor) {
  require_1d(grid, "coarsen");
  const Axis& ax = grid.axis(0);
  if (factor < 1 || ax.cells % factor != 0) throw std::invalid_argument("coarsening factor must divide the cell count");
  return make_line(ax.lower, ax.upper, ax.cells / factor, ax.periodic);
}

Array coarsen(const Array& density, Index factor) {
  if (factor < 1 || density.size() % factor != 0)
    throw std::invalid_argument("coarsening factor must divide the cell count");
  Array out(density.size() / factor);
  for (Index i = 0; i < out.size(); ++i) out[i] = density.segment(i * factor, factor).mean();
  return out;
}

Law coarsen(const Law& law, Index factor) {
  Law u{coarsen(law.grid, factor), law.times, {}, law.samples};
  for (const auto& d : law.density) u.density.push_back(coarsen(d, factor));
  return u;
}

Array face_cdf(const Grid& grid, const Array& density) {
  require_1d(grid, "face_cdf");
  Array c(density.size() + 1);
  c[0] = 0.0;
  const double h = grid.width(0);
  for (Index i = 0; i < density.size(); ++i) c[i + 1] = c[i] + density[i] * h;
  return c;
}

}  // namespace roughsde
