#include "roughsde/fpe.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace roughsde {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double safe_div(double a, double b) { return b > 0.0 ? a / b : kInf; }

// Visits every grid line along `axis` as (first flat index, stride, length).
template <class Fn>
void for_lines(const Grid& g, int axis, Fn&& fn) {
  const Index nx = g.cells(0), nv = g.cells(1);
  if (axis == 0)
    for (Index j = 0; j < nv; ++j) fn(j * nx, Index{1}, nx);
  else
    for (Index i = 0; i < nx; ++i) fn(i, nx, nv);
}

// Conservative update of u along one axis with face fluxes from `flux`.
template <class Flux>
void sweep(Array& u, const Grid& g, int axis, double dt, Flux&& flux) {
  const Axis& ax = g.axis(axis);
  const double h = ax.width();
  std::vector<double> J(static_cast<std::size_t>(ax.cells + 1));
  for_lines(g, axis, [&](Index first, Index step, Index n) {
    for (Index f = 0; f <= n; ++f) {
      Index l = f - 1, r = f;
      if (f == 0 || f == n) {
        if (!ax.periodic) {
          J[static_cast<std::size_t>(f)] = 0.0;
          continue;
        }
        l = n - 1;
        r = 0;
      }
      J[static_cast<std::size_t>(f)] = flux(first + l * step, first + r * step);
    }
    for (Index i = 0; i < n; ++i)
      u[first + i * step] -= dt / h * (J[static_cast<std::size_t>(i + 1)] - J[static_cast<std::size_t>(i)]);
  });
}

}  // namespace

double kinetic_max_dt(const CoefficientField& field) {
  const Grid& g = field.grid();
  const double hx = g.width(0), hv = g.width(1);
  const double sx = field.drift(0).sup_norm();
  const double sv = field.drift(1).sup_norm();
  const double av = field.a(1, 1).values.maxCoeff();
  return std::min({safe_div(hx, 2.0 * sx), safe_div(hv, 2.0 * sv), safe_div(hv * hv, 4.0 * av)});
}

DensityEvolution solve_kinetic(const CoefficientField& field, const Array& u0, double T, double dt, Index stride,
                               KineticScheme scheme) {
  const Grid& g = field.grid();
  if (g.dim() != 2) throw std::invalid_argument("solve_kinetic needs a 2-D phase-space field");
  if (!field.autonomous()) throw std::invalid_argument("solve_kinetic supports autonomous fields");
  if (field.a(0, 0).sup_norm() > 0.0 || field.a(0, 1).sup_norm() > 0.0)
    throw std::invalid_argument("kinetic field must not diffuse in x");
  if (u0.size() != g.size() || (u0 < 0.0).any() || !u0.allFinite())
    throw std::invalid_argument("initial density must match the grid and be >= 0");
  if (!(T > 0.0) || !(dt > 0.0) || stride < 1) throw std::invalid_argument("T, dt and stride must be positive");
  const double cap = kinetic_max_dt(field);
  if (dt > cap * (1.0 + 1e-12))
    throw std::invalid_argument("CFL violation: dt = " + std::to_string(dt) + " exceeds " + std::to_string(cap));

  const Array sx = field.drift(0).values;
  const Array sv = field.drift(1).values;
  const Array av = field.a(1, 1).values;
  const double hv = g.width(1);
  const auto steps = static_cast<Index>(std::ceil(T / dt - 1e-9));
  const double step = T / static_cast<double>(steps);
  const double vol = g.cell_volume();

  Array u = u0 / (u0.sum() * vol);
  DensityEvolution ev{g,      {0.0},  {u},
                      {u.sum() * vol}, step, stride,
                      scheme == KineticScheme::upwind ? "split-upwind" : "split-centred-fixture"};

  auto upwind = [&](const Array& s) {
    return [&s, &u](Index l, Index r) {
      const double f = 0.5 * (s[l] + s[r]);
      return f > 0.0 ? f * u[l] : f * u[r];
    };
  };
  for (Index k = 0; k < steps; ++k) {
    if (scheme == KineticScheme::upwind)
      sweep(u, g, 0, step, upwind(sx));
    else
      sweep(u, g, 0, step, [&](Index l, Index r) { return 0.5 * (sx[l] + sx[r]) * 0.5 * (u[l] + u[r]); });
    sweep(u, g, 1, step, upwind(sv));
    sweep(u, g, 1, step, [&](Index l, Index r) { return -(av[r] * u[r] - av[l] * u[l]) / hv; });
    if ((k + 1) % stride == 0 || k + 1 == steps) {
      ev.times.push_back(static_cast<double>(k + 1) * step);
      ev.density.push_back(u);
      ev.mass.push_back(u.sum() * vol);
    }
  }
  return ev;
}

}  // namespace roughsde
