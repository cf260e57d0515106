#include "roughsde/sde.hpp"

#include "roughsde/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <string>

namespace roughsde {

InitialSpec InitialSpec::at(double x, double y) {
  InitialSpec s;
  s.kind = Kind::point;
  s.point = {x, y};
  return s;
}

InitialSpec InitialSpec::gaussian(double mean, double sd) { return gaussian({mean, 0.0}, {sd, 1.0}); }

InitialSpec InitialSpec::gaussian(std::array<double, 2> mean, std::array<double, 2> sd) {
  if (!(sd[0] >= 0.0) || !(sd[1] >= 0.0)) throw std::invalid_argument("initial sd must be >= 0");
  InitialSpec s;
  s.kind = Kind::gaussian;
  s.mean = mean;
  s.sd = sd;
  return s;
}

InitialSpec InitialSpec::from_density(Grid grid, Array density) {
  if (grid.dim() != 1) throw std::invalid_argument("density initial condition needs a 1-D grid");
  if (density.size() != grid.size() || (density < 0.0).any() || !(density.sum() > 0.0))
    throw std::invalid_argument("initial density must be nonnegative with positive mass");
  InitialSpec s;
  s.kind = Kind::density;
  s.grid = std::move(grid);
  s.density = std::move(density);
  return s;
}

bool PathEnsemble::coupled_with(const PathEnsemble& o) const {
  return store.shares_noise_with(o.store) && first_path == o.first_path && paths() == o.paths() &&
         times == o.times && dim() == o.dim();
}

double stability_cap(const CoefficientField& field) {
  const double s = field.diffusion_sup();
  return 0.1 / (1.0 + field.drift_sup() + s * s);
}

namespace {

double standard_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// Inverse transform on the piecewise constant density.
double sample_density(const Grid& g, const Array& cdf, double u) {
  const auto it = std::upper_bound(cdf.data(), cdf.data() + cdf.size(), u);
  const Index i = std::clamp<Index>(static_cast<Index>(it - cdf.data()) - 1, 0, g.size() - 1);
  const double lo = cdf[i], hi = cdf[i + 1];
  const double frac = hi > lo ? (u - lo) / (hi - lo) : 0.5;
  return g.axis(0).face(i) + frac * g.width(0);
}

}  // namespace

PathEnsemble simulate_ensemble(const CoefficientField& field, const InitialSpec& initial, const BrownianStore& store,
                               const SimOptions& opt) {
  const int d = field.dim();
  const int r = field.noise_dim();
  if (store.noise_dim() != r) throw std::invalid_argument("store noise dimension does not match the field");
  if (opt.paths < 1 || opt.first_path < 0 || opt.first_path + opt.paths > store.paths())
    throw std::invalid_argument("store has too few paths for the requested ensemble");
  if (opt.dt_factor < 1 || store.steps() % opt.dt_factor != 0)
    throw std::invalid_argument("time step factor must divide the store step count");
  const BrownianStore noise = opt.dt_factor == 1 ? store : store.coarsened(opt.dt_factor);
  const Index steps = noise.steps();
  const double dt = noise.dt();
  if (std::abs(static_cast<double>(steps) * dt - opt.T) > 1e-9 * std::max(1.0, opt.T))
    throw std::invalid_argument("store steps times dt does not match the horizon T");
  const double cap = std::min(stability_cap(field), opt.dt_cap);
  if (dt > cap * (1.0 + 1e-12))
    throw std::invalid_argument("time step " + std::to_string(dt) + " exceeds the stability cap " +
                                std::to_string(cap));
  if (opt.record_stride < 1 || steps % opt.record_stride != 0)
    throw std::invalid_argument("record stride must divide the step count");

  PathEnsemble ens{field.provenance(), initial, noise, opt.first_path, dt, {}, {}, 0};
  const Index stamps = steps / opt.record_stride + 1;
  for (Index s = 0; s < stamps; ++s) ens.times.push_back(static_cast<double>(s * opt.record_stride) * dt);
  ens.X.assign(static_cast<std::size_t>(d), Eigen::ArrayXXd(opt.paths, stamps));

  Array init_cdf;
  if (initial.kind == InitialSpec::Kind::density) init_cdf = face_cdf(initial.grid, initial.density / initial.density.sum() / initial.grid.width(0));

  const Grid& grid = field.grid();
  std::vector<std::atomic<unsigned char>> exited(static_cast<std::size_t>(opt.paths));

  parallel_for(opt.paths, [&](Index b, Index e) {
    Array dw;
    double x[2] = {0.0, 0.0};
    double xn[2];
    for (Index p = b; p < e; ++p) {
      const Index sp = opt.first_path + p;
      switch (initial.kind) {
        case InitialSpec::Kind::point:
          for (int k = 0; k < d; ++k) x[k] = initial.point[static_cast<std::size_t>(k)];
          break;
        case InitialSpec::Kind::gaussian:
          for (int k = 0; k < d; ++k)
            x[k] = initial.mean[static_cast<std::size_t>(k)] +
                   initial.sd[static_cast<std::size_t>(k)] * noise.initial_normal(sp, k);
          break;
        case InitialSpec::Kind::density:
          x[0] = sample_density(initial.grid, init_cdf, standard_normal_cdf(noise.initial_normal(sp, 0)));
          break;
      }
      noise.increments(sp, dw);
      bool out = false;
      for (int k = 0; k < d; ++k) ens.X[static_cast<std::size_t>(k)](p, 0) = x[k];
      for (Index s = 0; s < steps; ++s) {
        const double t = static_cast<double>(s) * dt;
        const FieldSlice& sl = field.slice_at(t);
        for (int k = 0; k < d; ++k) {
          double v = x[k] + interpolate(grid, sl.drift[static_cast<std::size_t>(k)], x) * dt;
          for (int l = 0; l < r; ++l)
            v += interpolate(grid, sl.diffusion[static_cast<std::size_t>(k * r + l)], x) * dw[s * r + l];
          xn[k] = v;
        }
        for (int k = 0; k < d; ++k) {
          if (!std::isfinite(xn[k]))
            throw std::runtime_error("non-finite value in path " + std::to_string(sp) + " at step " +
                                     std::to_string(s + 1));
          x[k] = xn[k];
        }
        out = out || !grid.contains(std::span<const double>(x, static_cast<std::size_t>(d)));
        if ((s + 1) % opt.record_stride == 0)
          for (int k = 0; k < d; ++k) ens.X[static_cast<std::size_t>(k)](p, (s + 1) / opt.record_stride) = x[k];
      }
      exited[static_cast<std::size_t>(p)] = out ? 1 : 0;
    }
  });
  for (const auto& f : exited) ens.exits += f;
  return ens;
}

Law ensemble_law(const PathEnsemble& ens, const Grid& grid, DensityEstimator estimator) {
  if (ens.dim() != grid.dim()) throw std::invalid_argument("ensemble and grid dimensions differ");
  if (grid.dim() == 2) {
    // Plain 2-D histogram; particles are not kept.
    if (estimator != DensityEstimator::histogram) throw std::invalid_argument("2-D ensemble laws are histograms");
    const Axis &ax = grid.axis(0), &ay = grid.axis(1);
    Law u{grid, ens.times, {}, {}};
    const double norm = static_cast<double>(ens.paths()) * grid.cell_volume();
    for (Index s = 0; s < ens.stamps(); ++s) {
      Array v = Array::Zero(grid.size());
      for (Index p = 0; p < ens.paths(); ++p) {
        const Index i = ax.extend(static_cast<Index>(std::floor((ens.X[0](p, s) - ax.lower) / ax.width())));
        const Index j = ay.extend(static_cast<Index>(std::floor((ens.X[1](p, s) - ay.lower) / ay.width())));
        v[grid.flat(i, j)] += 1.0;
      }
      u.density.push_back(v / norm);
    }
    return u;
  }
  std::vector<std::vector<double>> samples(ens.times.size());
  for (Index s = 0; s < ens.stamps(); ++s) {
    const auto col = ens.X[0].col(s);
    samples[static_cast<std::size_t>(s)].assign(col.data(), col.data() + col.size());
  }
  return empirical_law(grid, ens.times, std::move(samples), estimator);
}

}  // namespace roughsde
