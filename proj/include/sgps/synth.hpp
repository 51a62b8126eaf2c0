#pragma once

#include <cstdint>
#include <string>

#include <Eigen/Cholesky>

#include "sgps/rng.hpp"
#include "sgps/spatial.hpp"

namespace sgps {

/// Confounder transform h applied to the smoothed covariate W.
enum class ConfounderVariant { identity, negcube, exp };

const char* to_string(ConfounderVariant v);
ConfounderVariant confounder_variant_from_string(const std::string& name);
double apply_variant(ConfounderVariant v, double w);

struct ScenarioConfig {
  int side_count = 10;
  int replicates = 100;
  double gp_range = 0.6;
  double treat_intercept = -3.0;
  double true_tau = 0.3;
  ConfounderVariant variant = ConfounderVariant::identity;
  double beta0 = 0.0;
  double delta1 = 1.0;
  double delta2 = 1.0;
  double noise_sd = 1.0;
  std::uint64_t seed = 1;
  double confounder_bandwidth = 0.5;
  bool confounder_includes_self = true;

  void validate() const;
};

struct SyntheticDataset {
  SpatialGrid grid;
  Field X, A, spill, W, h, Y;
  ScenarioConfig config;
};

/// exp(-d / range) over a distance matrix.
Eigen::MatrixXd exponential_covariance(const Eigen::MatrixXd& distances, double range);

/// Draws mean-zero, unit-variance Gaussian fields with exponential covariance.
///
/// The covariance is factored once (Cholesky). On failure the diagonal gets a jitter
/// of 1e-10, then up to 3 retries at 10x the previous jitter before giving up.
class GaussianFieldSampler {
 public:
  GaussianFieldSampler(const SpatialGrid& grid, double range);

  /// `count` independent fields, one per column.
  Field draw(Rng& rng, Eigen::Index count = 1) const;

  double jitter() const { return jitter_; }
  const Eigen::MatrixXd& factor() const { return factor_; }

 private:
  Eigen::MatrixXd factor_;
  double jitter_ = 0.0;
};

Field sample_gp_field(const SpatialGrid& grid, double range, Rng& rng, Eigen::Index count = 1);

inline double expit(double x) { return 1.0 / (1.0 + std::exp(-x)); }
inline double logit(double p) { return std::log(p) - std::log1p(-p); }

/// Independent Bernoulli{expit(X + intercept)} treatments.
Field assign_treatment(const Field& X, double intercept, Rng& rng);

struct ConfounderFields {
  Field W;
  Field h;
};

/// W = normalized Gaussian-kernel average of X (bandwidth 0.5 by default), h = variant(W).
ConfounderFields confounder_field(const Field& X, const SpatialGrid& grid, ConfounderVariant variant,
                                  double bandwidth = 0.5, bool include_self = true);

/// Row-normalized smoothing weights used for W.
Eigen::MatrixXd confounder_weights(const SpatialGrid& grid, double bandwidth, bool include_self);

/// Full scenario. Replicate r draws from stream (seed, {r}): X, then A, then noise.
SyntheticDataset generate_scenario(const ScenarioConfig& config);

}  // namespace sgps
