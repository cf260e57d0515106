#include "roughsde/maxops.hpp"

#include "roughsde/parallel.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <random>
#include <stdexcept>

namespace roughsde {

RadiusSchedule RadiusSchedule::geometric(double r_min, double r_max, int per_octave) {
  if (!(r_min > 0) || !(r_max >= r_min)) throw std::invalid_argument("radius schedule: need 0 < r_min <= r_max");
  if (per_octave < 1) throw std::invalid_argument("radius schedule: per_octave must be >= 1");
  RadiusSchedule s;
  for (int k = 0;; ++k) {
    const double r = r_min * std::exp2(static_cast<double>(k) / per_octave);
    if (r > r_max * (1.0 + 1e-12)) break;
    s.radii.push_back(r);
  }
  return s;
}

RadiusSchedule RadiusSchedule::for_grid(const Grid& grid, int per_octave) {
  return geometric(grid.min_width(), grid.half_diameter(), per_octave);
}

void RadiusSchedule::validate(const Grid& grid) const {
  if (radii.empty()) throw std::invalid_argument("radius schedule is empty");
  if (radii.front() < grid.min_width() * (1.0 - 1e-12))
    throw std::invalid_argument("radius schedule: r_min below one cell width");
  if (radii.back() > grid.half_diameter() * (1.0 + 1e-12))
    throw std::invalid_argument("radius schedule: r_max above half the box diameter");
  for (std::size_t k = 1; k < radii.size(); ++k)
    if (!(radii[k] > radii[k - 1])) throw std::invalid_argument("radius schedule must be strictly increasing");
}

namespace {

Index floor_div(Index a, Index b) {
  Index q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

void require_nonnegative(const ScalarField& f) {
  if ((f.values < 0.0).any()) throw std::invalid_argument("maximal operator input must be nonnegative");
}

/// Cumulative integral of piecewise constant cell data with the axis'
/// extension rule, usable for any real or integer argument.
class Cumulative {
 public:
  Cumulative(const Axis& axis, const double* values, Index stride)
      : axis_(axis), values_(values), stride_(stride), prefix_(axis.cells + 1) {
    prefix_[0] = 0.0;
    for (Index i = 0; i < axis.cells; ++i) prefix_[i + 1] = prefix_[i] + value(i);
  }

  double value(Index i) const { return values_[i * stride_]; }

  /// Sum of cells [0, k) (k may be out of range).
  double cells_before(Index k) const {
    const Index n = axis_.cells;
    if (axis_.periodic) {
      const Index q = floor_div(k, n);
      return static_cast<double>(q) * prefix_[n] + prefix_[k - q * n];
    }
    if (k <= 0) return static_cast<double>(k) * value(0);
    if (k >= n) return prefix_[n] + static_cast<double>(k - n) * value(n - 1);
    return prefix_[k];
  }

  /// Integral of the extended function from `lower` to y.
  double integral_to(double y) const {
    const double h = axis_.width();
    const double s = (y - axis_.lower) / h;
    const double f = std::floor(s);
    const Index k = static_cast<Index>(f);
    return h * (cells_before(k) + (s - f) * value(axis_.extend(k)));
  }

  double range_sum(Index i0, Index i1) const { return cells_before(i1 + 1) - cells_before(i0); }

 private:
  const Axis& axis_;
  const double* values_;
  Index stride_;
  std::vector<double> prefix_;
};

}  // namespace

ScalarField maximal(const ScalarField& f, const RadiusSchedule& schedule) {
  require_nonnegative(f);
  schedule.validate(f.grid);
  const Grid& g = f.grid;
  Array out(g.size());
  if (g.dim() == 1) {
    const Cumulative cum(g.axis(0), f.values.data(), 1);
    parallel_for(g.size(), [&](Index b, Index e) {
      for (Index i = b; i < e; ++i) {
        const double x = g.axis(0).center(i);
        double best = 0.0;
        for (double r : schedule.radii)
          best = std::max(best, (cum.integral_to(x + r) - cum.integral_to(x - r)) / (2.0 * r));
        out[i] = best;
      }
    });
    return ScalarField(g, std::move(out));
  }

  const Axis& ax = g.axis(0);
  const Axis& ay = g.axis(1);
  std::vector<Cumulative> rows;
  rows.reserve(static_cast<std::size_t>(ay.cells));
  for (Index j = 0; j < ay.cells; ++j) rows.emplace_back(ax, f.values.data() + j * ax.cells, 1);
  const double hx = ax.width();
  const double hy = ay.width();
  parallel_for(g.size(), [&](Index b, Index e) {
    for (Index n = b; n < e; ++n) {
      auto ij = g.unflat(n);
      double best = 0.0;
      for (double r : schedule.radii) {
        const Index R = static_cast<Index>(std::floor(r / hy + 1e-12));
        double sum = 0.0;
        double count = 0.0;
        for (Index dj = -R; dj <= R; ++dj) {
          const double dy = static_cast<double>(dj) * hy;
          const Index w = static_cast<Index>(std::floor(std::sqrt(std::max(0.0, r * r - dy * dy)) / hx + 1e-12));
          const auto& row = rows[static_cast<std::size_t>(ay.extend(ij[1] + dj))];
          sum += row.range_sum(ij[0] - w, ij[0] + w);
          count += static_cast<double>(2 * w + 1);
        }
        best = std::max(best, sum / count);
      }
      out[n] = best;
    }
  });
  return ScalarField(g, std::move(out));
}

double maximal_at(const ScalarField& f, const RadiusSchedule& schedule, double x) {
  if (f.grid.dim() != 1) throw std::invalid_argument("maximal_at is one-dimensional");
  require_nonnegative(f);
  schedule.validate(f.grid);
  const Cumulative cum(f.grid.axis(0), f.values.data(), 1);
  double best = 0.0;
  for (double r : schedule.radii)
    best = std::max(best, (cum.integral_to(x + r) - cum.integral_to(x - r)) / (2.0 * r));
  return best;
}

namespace {

double threshold(double L) {
  if (!(L >= 1.0) || !std::isfinite(L)) throw std::invalid_argument("modified maximal operator needs L >= 1");
  return std::sqrt(std::log(L));
}

// Values within 1e-12 (relative) of the threshold count as reaching it.
bool above(double v, double thr) { return v > 0.0 && v >= thr * (1.0 - 1e-12); }

// int_a^b dz / (eps + |x - z|) for a <= b.
double kernel_1d(double x, double a, double b, double eps) {
  if (b <= x) return std::log1p((b - a) / (eps + x - b));
  if (a >= x) return std::log1p((b - a) / (eps + a - x));
  return std::log1p((x - a) / eps) + std::log1p((b - x) / eps);
}

double modified_1d(const Axis& ax, const Array& g, double thr, double eps, double x) {
  const double h = ax.width();
  const Index k0 = static_cast<Index>(std::floor((x - 1.0 - ax.lower) / h));
  const Index k1 = static_cast<Index>(std::floor((x + 1.0 - ax.lower) / h));
  double s = 0.0;
  for (Index k = k0; k <= k1; ++k) {
    const double v = g[ax.extend(k)];
    if (!above(v, thr)) continue;
    const double a = std::max(ax.face(k), x - 1.0);
    const double b = std::min(ax.face(k) + h, x + 1.0);
    if (b > a) s += v * kernel_1d(x, a, b, eps);
  }
  return thr + s;
}

// int over the rectangle [-hx/2,hx/2] x [-hy/2,hy/2] of 1/((eps+s) s) in polar
// coordinates: int_0^{2pi} log(1 + R(theta)/eps) dtheta.
double self_cell_2d(double hx, double hy, double eps) {
  static const double gx[8] = {-0.9602898564975363, -0.7966664774136267, -0.5255324099163290, -0.1834346424956498,
                               0.1834346424956498,  0.5255324099163290,  0.7966664774136267,  0.9602898564975363};
  static const double gw[8] = {0.1012285362903763, 0.2223810344533745, 0.3137066458778873, 0.3626837833783620,
                               0.3626837833783620, 0.3137066458778873, 0.2223810344533745, 0.1012285362903763};
  const double corner = std::atan2(hy, hx);
  auto piece = [&](double t0, double t1, bool vertical_edge) {
    double s = 0.0;
    const double half = 0.5 * (t1 - t0);
    const double mid = 0.5 * (t1 + t0);
    for (int q = 0; q < 8; ++q) {
      const double t = mid + half * gx[q];
      const double R = vertical_edge ? 0.5 * hx / std::cos(t) : 0.5 * hy / std::sin(t);
      s += gw[q] * std::log1p(R / eps);
    }
    return s * half;
  };
  // One quadrant, then symmetry.
  return 4.0 * (piece(0.0, corner, true) + piece(corner, 0.5 * M_PI, false));
}

}  // namespace

ScalarField maximal_modified(const ScalarField& g, double L) {
  require_nonnegative(g);
  const double thr = threshold(L);
  const double eps = 1.0 / L;
  const Grid& grid = g.grid;
  Array out(grid.size());
  if (grid.dim() == 1) {
    parallel_for(grid.size(), [&](Index b, Index e) {
      for (Index i = b; i < e; ++i) out[i] = modified_1d(grid.axis(0), g.values, thr, eps, grid.axis(0).center(i));
    });
    return ScalarField(grid, std::move(out));
  }

  const Axis& ax = grid.axis(0);
  const Axis& ay = grid.axis(1);
  const double hx = ax.width();
  const double hy = ay.width();
  const double self = self_cell_2d(hx, hy, eps);
  const Index Rx = static_cast<Index>(std::ceil(1.0 / hx));
  const Index Ry = static_cast<Index>(std::ceil(1.0 / hy));
  const double near = 2.0 * std::max(hx, hy);
  constexpr int sub = 4;
  parallel_for(grid.size(), [&](Index b, Index e) {
    for (Index n = b; n < e; ++n) {
      auto ij = grid.unflat(n);
      double s = 0.0;
      for (Index dj = -Ry; dj <= Ry; ++dj) {
        for (Index di = -Rx; di <= Rx; ++di) {
          const double dx = static_cast<double>(di) * hx;
          const double dy = static_cast<double>(dj) * hy;
          const double dist = std::hypot(dx, dy);
          if (dist > 1.0) continue;
          const double v = g.values[grid.flat(ax.extend(ij[0] + di), ay.extend(ij[1] + dj))];
          if (!above(v, thr)) continue;
          if (di == 0 && dj == 0) {
            s += v * self;
          } else if (dist < near) {
            double acc = 0.0;
            for (int p = 0; p < sub; ++p)
              for (int q = 0; q < sub; ++q) {
                const double zx = dx + ((p + 0.5) / sub - 0.5) * hx;
                const double zy = dy + ((q + 0.5) / sub - 0.5) * hy;
                const double r = std::hypot(zx, zy);
                acc += 1.0 / ((eps + r) * r);
              }
            s += v * acc * hx * hy / (sub * sub);
          } else {
            s += v * hx * hy / ((eps + dist) * dist);
          }
        }
      }
      out[n] = thr + s;
    }
  });
  return ScalarField(grid, std::move(out));
}

double maximal_modified_at(const ScalarField& g, double L, double x) {
  if (g.grid.dim() != 1) throw std::invalid_argument("maximal_modified_at is one-dimensional");
  require_nonnegative(g);
  const double thr = threshold(L);
  return modified_1d(g.grid.axis(0), g.values, thr, 1.0 / L, x);
}

Array fourier_multiplier(const Grid& grid, double power) {
  if (grid.dim() != 1 || !grid.axis(0).periodic)
    throw std::invalid_argument("Fourier multiplier needs a periodic 1-D grid");
  const Index n = grid.cells(0);
  const double base = 2.0 * M_PI / grid.axis(0).length();
  Array m(n);
  for (Index k = 0; k < n; ++k) {
    const Index mode = k <= n / 2 ? k : k - n;
    m[k] = std::pow(std::abs(static_cast<double>(mode)) * base, power);
  }
  return m;
}

ScalarField half_derivative(const ScalarField& sigma) {
  const Grid& g = sigma.grid;
  if (g.dim() != 1 || !g.axis(0).periodic)
    throw std::invalid_argument("half derivative needs a periodic 1-D grid (embed sigma in a periodic box)");
  const Index n = g.cells(0);
  if ((n & (n - 1)) != 0) throw std::invalid_argument("half derivative needs a power-of-two cell count");
  const Array mult = fourier_multiplier(g, 0.5);
  Eigen::FFT<double> fft;
  std::vector<double> in(sigma.values.data(), sigma.values.data() + n);
  std::vector<std::complex<double>> spec;
  fft.fwd(spec, in);
  for (Index k = 0; k < n; ++k) spec[static_cast<std::size_t>(k)] *= mult[k];
  std::vector<double> back;
  fft.inv(back, spec);
  Array out(n);
  for (Index k = 0; k < n; ++k) out[k] = back[static_cast<std::size_t>(k)];
  return ScalarField(g, std::move(out));
}

std::vector<PointPair> random_pairs(const Grid& grid, std::size_t count, std::uint64_t seed, double lo, double hi) {
  std::vector<Index> eligible;
  for (Index n = 0; n < grid.size(); ++n) {
    auto x = grid.node(n);
    bool ok = true;
    for (int k = 0; k < grid.dim(); ++k) ok = ok && x[static_cast<std::size_t>(k)] >= lo && x[static_cast<std::size_t>(k)] <= hi;
    if (ok) eligible.push_back(n);
  }
  if (eligible.size() < 2) throw std::invalid_argument("random_pairs: fewer than two nodes in the window");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, eligible.size() - 1);
  std::vector<PointPair> pairs;
  pairs.reserve(count);
  while (pairs.size() < count) {
    const std::size_t a = pick(rng);
    const std::size_t b = pick(rng);
    if (a != b) pairs.push_back({eligible[a], eligible[b]});
  }
  return pairs;
}

ViolationReport check_pointwise_bound(BoundKind kind, const ScalarField& field, std::span<const PointPair> pairs,
                                      const BoundParams& params) {
  if (pairs.empty()) throw std::invalid_argument("check_pointwise_bound: empty pair sample");
  const Grid& g = field.grid;
  const RadiusSchedule schedule = params.schedule.radii.empty() ? RadiusSchedule::for_grid(g) : params.schedule;
  const ScalarField grad = gradient_magnitude(field);

  ViolationReport rep;
  rep.tolerance = params.c_disc * g.min_width() * grad.sup_norm();

  Array weight;  // per-node factor on the right side
  double exponent = 1.0;
  double offset = 0.0;
  switch (kind) {
    case BoundKind::classic:
      weight = maximal(grad, schedule).values;
      break;
    case BoundKind::modified:
      weight = field.values.abs() + maximal_modified(grad, params.L).values;
      offset = 1.0 / params.L;
      break;
    case BoundKind::half: {
      if (g.dim() != 1) throw std::invalid_argument("half-derivative bound is one-dimensional");
      const ScalarField d = half_derivative(field);
      weight = params.k_cal * maximal(ScalarField(g, d.values.abs()), schedule).values;
      exponent = 0.5;
      break;
    }
  }

  for (const auto& p : pairs) {
    const auto x = g.node(p.a);
    const auto y = g.node(p.b);
    const double dist = std::hypot(x[0] - y[0], x[1] - y[1]);
    const double lhs = std::abs(field.values[p.a] - field.values[p.b]);
    const double rhs = (weight[p.a] + weight[p.b]) * (std::pow(dist, exponent) + offset);
    ++rep.pairs_tested;
    if (lhs > rhs + rep.tolerance) ++rep.violations;
    const double ratio = rhs > 0.0 ? lhs / rhs : (lhs > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
    if (ratio > rep.worst_ratio) {
      rep.worst_ratio = ratio;
      rep.worst_x = x;
      rep.worst_y = y;
    }
  }
  return rep;
}

}  // namespace roughsde
