#include "roughsde/brownian.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <stdexcept>

namespace roughsde {

namespace {

constexpr std::uint64_t kIncrementStream = 0x6a09e667f3bcc909ULL;
constexpr std::uint64_t kInitialStream = 0xbb67ae8584caa73bULL;

// Uniform on (0, 1] with 53 random bits.
double unit(std::mt19937_64& rng) { return (static_cast<double>(rng() >> 11) + 1.0) * 0x1.0p-53; }

// Box-Muller, both outputs used in order.
void normals(std::mt19937_64& rng, double* out, Eigen::Index n) {
  constexpr double two_pi = 6.283185307179586476925286766559;
  for (Eigen::Index i = 0; i < n; i += 2) {
    const double rad = std::sqrt(-2.0 * std::log(unit(rng)));
    const double ang = two_pi * unit(rng);
    out[i] = rad * std::cos(ang);
    if (i + 1 < n) out[i + 1] = rad * std::sin(ang);
  }
}

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  return splitmix64(splitmix64(seed ^ stream) + index);
}

void write_u64(std::ofstream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t read_u64(std::ifstream& is) {
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char*>(b), 8)) throw std::runtime_error("truncated Brownian store file");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

void write_f64(std::ofstream& os, double d) { write_u64(os, std::bit_cast<std::uint64_t>(d)); }
double read_f64(std::ifstream& is) { return std::bit_cast<double>(read_u64(is)); }

}  // namespace

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

BrownianStore::BrownianStore(std::uint64_t seed, Eigen::Index paths, Eigen::Index steps, double dt, int noise_dim)
    : seed_(seed), paths_(paths), fine_steps_(steps), fine_dt_(dt), r_(noise_dim) {
  if (paths < 1 || steps < 1) throw std::invalid_argument("Brownian store needs paths >= 1 and steps >= 1");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("Brownian store needs dt > 0");
  if (noise_dim < 1) throw std::invalid_argument("noise dimension must be >= 1");
}

BrownianStore BrownianStore::coarsened(Eigen::Index factor) const {
  if (factor < 1 || steps() % factor != 0) throw std::invalid_argument("coarsening factor must divide the step count");
  BrownianStore s = *this;
  s.factor_ = factor_ * factor;
  return s;
}

void BrownianStore::fine_increments(Eigen::Index path, Eigen::ArrayXd& out) const {
  if (path < 0 || path >= paths_) throw std::out_of_range("path index outside the Brownian store");
  const Eigen::Index n = fine_steps_ * r_;
  out.resize(n);
  if (data_) {
    std::memcpy(out.data(), data_->data() + path * n, static_cast<std::size_t>(n) * sizeof(double));
    return;
  }
  std::mt19937_64 rng(stream_seed(seed_, kIncrementStream, static_cast<std::uint64_t>(path)));
  normals(rng, out.data(), n);
  out *= std::sqrt(fine_dt_);
}

void BrownianStore::increments(Eigen::Index path, Eigen::ArrayXd& out) const {
  if (factor_ == 1) {
    fine_increments(path, out);
    return;
  }
  Eigen::ArrayXd fine;
  fine_increments(path, fine);
  const Eigen::Index coarse = steps();
  out.resize(coarse * r_);
  for (Eigen::Index k = 0; k < coarse; ++k)
    for (int l = 0; l < r_; ++l) {
      double s = 0.0;
      for (Eigen::Index j = 0; j < factor_; ++j) s += fine[(k * factor_ + j) * r_ + l];
      out[k * r_ + l] = s;
    }
}

double BrownianStore::initial_normal(Eigen::Index path, int component) const {
  if (component < 0) throw std::out_of_range("negative component");
  std::mt19937_64 rng(stream_seed(seed_, kInitialStream, static_cast<std::uint64_t>(path)));
  std::vector<double> z(static_cast<std::size_t>(component + 2));
  normals(rng, z.data(), static_cast<Eigen::Index>(z.size()));
  return z[static_cast<std::size_t>(component)];
}

bool BrownianStore::shares_noise_with(const BrownianStore& o) const {
  return seed_ == o.seed_ && paths_ == o.paths_ && fine_steps_ == o.fine_steps_ && fine_dt_ == o.fine_dt_ &&
         r_ == o.r_ && (data_ == o.data_ || (data_ && o.data_ && *data_ == *o.data_));
}

void BrownianStore::save(const std::filesystem::path& file) const {
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  std::ofstream os(file, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + file.string() + " for writing");
  write_u64(os, seed_);
  write_u64(os, static_cast<std::uint64_t>(paths_));
  write_u64(os, static_cast<std::uint64_t>(fine_steps_));
  write_f64(os, fine_dt_);
  write_u64(os, static_cast<std::uint64_t>(r_));
  Eigen::ArrayXd buf;
  for (Eigen::Index p = 0; p < paths_; ++p) {
    fine_increments(p, buf);
    for (Eigen::Index i = 0; i < buf.size(); ++i) write_f64(os, buf[i]);
  }
  if (!os) throw std::runtime_error("failed writing " + file.string());
}

BrownianStore BrownianStore::load(const std::filesystem::path& file) {
  std::ifstream is(file, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + file.string());
  const std::uint64_t seed = read_u64(is);
  const auto paths = static_cast<Eigen::Index>(read_u64(is));
  const auto steps = static_cast<Eigen::Index>(read_u64(is));
  const double dt = read_f64(is);
  const auto r = static_cast<int>(read_u64(is));
  BrownianStore s(seed, paths, steps, dt, r);
  auto data = std::make_shared<std::vector<double>>(static_cast<std::size_t>(paths * steps * r));
  for (double& v : *data) v = read_f64(is);
  s.data_ = std::move(data);
  return s;
}

}  // namespace roughsde
