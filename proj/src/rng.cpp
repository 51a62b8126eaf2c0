#include "sgps/rng.hpp"

namespace sgps {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

namespace {

std::uint64_t fold(std::uint64_t start, std::uint64_t seed,
                   std::initializer_list<std::uint64_t> path) {
  std::uint64_t key = splitmix64(start ^ splitmix64(seed));
  std::uint64_t k = 1;
  for (std::uint64_t component : path) {
    key = splitmix64(key ^ splitmix64(component + k));
    ++k;
  }
  return key;
}

std::mt19937_64 seeded_engine(std::uint64_t lo, std::uint64_t hi) {
  std::seed_seq seq{static_cast<std::uint32_t>(lo), static_cast<std::uint32_t>(lo >> 32),
                    static_cast<std::uint32_t>(hi), static_cast<std::uint32_t>(hi >> 32)};
  return std::mt19937_64(seq);
}

constexpr std::uint64_t kLane0 = 0x5347505300000001ULL;
constexpr std::uint64_t kLane1 = 0x5347505300000002ULL;

}  // namespace

Rng::Rng(std::uint64_t seed) : engine_(seeded_engine(fold(kLane0, seed, {}), fold(kLane1, seed, {}))) {}

Rng Rng::stream(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
  Rng rng(0);
  rng.engine_ = seeded_engine(fold(kLane0, seed, path), fold(kLane1, seed, path));
  return rng;
}

std::uint64_t Rng::derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
  return fold(kLane0 ^ kLane1, seed, path);
}

double Rng::uniform() { return uniform_(engine_); }

double Rng::normal() { return normal_(engine_); }

double Rng::gamma(double shape, double scale) {
  std::gamma_distribution<double> dist(shape, scale);
  return dist(engine_);
}

bool Rng::bernoulli(double p) { return uniform() < p; }

Eigen::MatrixXd Rng::standard_normal(Eigen::Index rows, Eigen::Index cols) {
  Eigen::MatrixXd out(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) out(i, j) = normal();
  return out;
}

}  // namespace sgps
