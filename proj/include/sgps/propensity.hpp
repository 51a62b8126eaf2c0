#pragma once

#include <filesystem>
#include <vector>

#include <Eigen/Core>

#include "sgps/bspline.hpp"
#include "sgps/rng.hpp"
#include "sgps/spatial.hpp"

namespace sgps {

struct LogisticOptions {
  int max_iterations = 100;
  double tolerance = 1e-8;  // on max |coefficient change|
};

struct LogisticModel {
  Eigen::VectorXd coefficients;
  int iterations = 0;
  bool converged = false;
  double gradient_norm = 0.0;
  double log_likelihood = 0.0;

  Eigen::VectorXd linear_predictor(const Eigen::MatrixXd& design) const;
  Eigen::VectorXd fitted(const Eigen::MatrixXd& design) const;
};

/// Maximum-likelihood logistic regression by iteratively reweighted least squares.
///
/// Throws SingularDesign when the design is rank deficient, and NonConvergence when the
/// labels are constant, the data are separable, or the iteration cap is reached.
LogisticModel fit_logistic(const Eigen::MatrixXd& design, const Eigen::VectorXd& labels,
                           const LogisticOptions& options = {});

/// Which scale the direct-propensity summary is reported on.
enum class DirectScale { log, raw };

/// Z1 = log p (or p itself for DirectScale::raw) with p = expit(design * coefficients).
Eigen::VectorXd direct_summary(const LogisticModel& model, const Eigen::MatrixXd& design,
                               DirectScale scale = DirectScale::log);

struct ClampPolicy {
  double p0_margin = 1e-12;   // p0 kept in [margin, 1 - margin] before logit
  double moment_floor = 1e-12;  // E and Var floored before log
};

struct ClampCounts {
  long p0 = 0;
  long mean = 0;
  long variance = 0;
  long total() const { return p0 + mean + variance; }
  ClampCounts& operator+=(const ClampCounts& o) {
    p0 += o.p0;
    mean += o.mean;
    variance += o.variance;
    return *this;
  }
};

/// Zero-inflated spill-over law summaries at one bandwidth, each locations x replicates.
struct SpilloverSummary {
  double tau = 0.0;
  Eigen::MatrixXd logit_p0;
  Eigen::MatrixXd log_mean;
  Eigen::MatrixXd log_variance;
  ClampCounts clamped;
};

/// Untransformed moments of the spill-over treatment under independent Bernoulli(p)
/// treatments, each locations x replicates.
struct SpilloverMoments {
  Eigen::MatrixXd p0;
  Eigen::MatrixXd mean;
  Eigen::MatrixXd variance;
};

/// p0 = prod (1 - p') over other locations with positive weight,
/// E = sum w p', Var = sum w^2 p'(1 - p').
SpilloverMoments spillover_moments(const Eigen::MatrixXd& probabilities,
                                   const Eigen::MatrixXd& distances, const KernelSpec& spec);

/// Transformed and clamped (logit p0, log E, log Var).
SpilloverSummary spillover_summary(const Eigen::MatrixXd& probabilities,
                                   const Eigen::MatrixXd& distances, const KernelSpec& spec,
                                   const ClampPolicy& clamp = {});
SpilloverSummary spillover_summary(const Eigen::MatrixXd& probabilities, const SpatialGrid& grid,
                                   const KernelSpec& spec, const ClampPolicy& clamp = {});

/// Simulated spill-over values: one matrix per tau, draws x locations, from independent
/// Bernoulli(p) treatment fields. `probabilities` has one entry per location.
std::vector<Eigen::MatrixXd> simulate_spillover_distribution(
    const Eigen::VectorXd& probabilities, const SpatialGrid& grid, const std::vector<double>& taus,
    int draws, Rng& rng, KernelFamily family = KernelFamily::gaussian);

/// Design for the direct propensity: intercept plus either the raw covariates (affine)
/// or a B-spline expansion of each covariate with its first basis column dropped.
enum class PropensityDesign { affine, spline };

struct PropensityDesignSpec {
  PropensityDesign kind = PropensityDesign::affine;
  int basis_count = 5;
  int degree = 3;
};

/// `covariates` is observations x p.
Eigen::MatrixXd propensity_design(const Eigen::MatrixXd& covariates, const PropensityDesignSpec& spec);

/// Direct and spill-over summaries for every location, replicate and candidate tau.
struct PropensitySummary {
  Eigen::MatrixXd probabilities;  // fitted p, locations x replicates
  Eigen::MatrixXd direct;         // Z1
  DirectScale direct_scale = DirectScale::log;
  std::vector<SpilloverSummary> spill;  // one per tau
  ClampCounts clamped;

  std::vector<double> taus() const;
};

/// Summaries for a list of bandwidths from a fitted probability field.
PropensitySummary summarize_propensity(const Eigen::MatrixXd& probabilities, const SpatialGrid& grid,
                                       const std::vector<double>& taus, KernelFamily family,
                                       DirectScale scale = DirectScale::log,
                                       const ClampPolicy& clamp = {});

/// CSV with columns location_id,replicate_id,tau,z1,z2,z3,z4.
void write_propensity_csv(const std::filesystem::path& path, const PropensitySummary& summary);

}  // namespace sgps
