#ifndef ROUGHSDE_BROWNIAN_HPP
#define ROUGHSDE_BROWNIAN_HPP

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <memory>
#include <vector>

namespace roughsde {

/// SplitMix64 finaliser, used to derive independent stream seeds.
std::uint64_t splitmix64(std::uint64_t x);

/// Brownian increments for a family of paths.
///
/// Increments are regenerated on demand from (seed, path index), so a store
/// costs nothing until it is persisted. A store loaded from disk replays the
/// stored values instead. A coarsened store sums consecutive fine
/// increments, which keeps the noise shared across time steps.
class BrownianStore {
 public:
  BrownianStore(std::uint64_t seed, Eigen::Index paths, Eigen::Index steps, double dt, int noise_dim = 1);

  static BrownianStore load(const std::filesystem::path& file);
  /// Header: seed, paths, steps (u64), dt (f64), noise dim (u64); then the
  /// fine increments as little-endian f64, path-major then step then noise.
  void save(const std::filesystem::path& file) const;

  std::uint64_t seed() const { return seed_; }
  Eigen::Index paths() const { return paths_; }
  Eigen::Index steps() const { return fine_steps_ / factor_; }
  double dt() const { return fine_dt_ * static_cast<double>(factor_); }
  int noise_dim() const { return r_; }
  Eigen::Index factor() const { return factor_; }

  /// Store whose increments are sums of `factor` consecutive ones of this store.
  BrownianStore coarsened(Eigen::Index factor) const;

  /// All increments of one path, out[k * r + l] for step k and noise l.
  void increments(Eigen::Index path, Eigen::ArrayXd& out) const;

  /// Standard normal draws for initial conditions, from a stream separate
  /// from the increments.
  double initial_normal(Eigen::Index path, int component) const;

  /// True when both stores are views of the same fine noise.
  bool shares_noise_with(const BrownianStore& other) const;

 private:
  void fine_increments(Eigen::Index path, Eigen::ArrayXd& out) const;

  std::uint64_t seed_;
  Eigen::Index paths_;
  Eigen::Index fine_steps_;
  double fine_dt_;
  int r_;
  Eigen::Index factor_ = 1;
  std::shared_ptr<const std::vector<double>> data_;
};

}  // namespace roughsde

#endif  // ROUGHSDE_BROWNIAN_HPP
