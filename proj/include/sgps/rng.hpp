#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

#include <Eigen/Core>

namespace sgps {

/// Mix a 64-bit word (SplitMix64 finalizer).
std::uint64_t splitmix64(std::uint64_t x);

/// Pseudo-random source with reproducible stream splitting.
///
/// A stream is addressed by a root seed and a path of integers, e.g.
/// `Rng::stream(seed, {variant, repetition, model})`. The path is folded into
/// a 128-bit key with SplitMix64 (`key = mix(key ^ mix(component + k))` per
/// component, once from each of two distinct starting constants), and that key
/// seeds an mt19937_64 through std::seed_seq. Distinct paths give statistically
/// independent streams, so replicates can be generated in any order or in
/// parallel and still reproduce bit-for-bit.
class Rng {
 public:
  using Engine = std::mt19937_64;

  explicit Rng(std::uint64_t seed);

  static Rng stream(std::uint64_t seed, std::initializer_list<std::uint64_t> path);

  /// Derive a child seed (same folding as `stream`), for handing to configs.
  static std::uint64_t derive_seed(std::uint64_t seed,
                                   std::initializer_list<std::uint64_t> path);

  double uniform();
  double normal();
  double gamma(double shape, double scale);
  bool bernoulli(double p);

  Eigen::MatrixXd standard_normal(Eigen::Index rows, Eigen::Index cols);

  Engine& engine() { return engine_; }

 private:
  Engine engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace sgps
