#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "sgps/design.hpp"
#include "sgps/propensity.hpp"
#include "sgps/sampler.hpp"
#include "sgps/spatial.hpp"
#include "sgps/synth.hpp"

namespace sgps {

/// Fields on a grid over N replicates, with responses at a subset of cells.
///
/// Simulated data observe every cell; gridded field data observe only the block
/// centre. Cells are addressed by flat index location + n * replicate.
struct SpatialStudy {
  SpatialGrid grid{2, 1.0};
  Field treatment;
  std::vector<Field> covariates;
  std::vector<Eigen::Index> observed;
  Eigen::VectorXd response;
  std::optional<Field> confounder;

  static SpatialStudy from_synthetic(const SyntheticDataset& data);

  void validate() const;
  Eigen::Index observation_count() const { return Eigen::Index(observed.size()); }

  /// Values of `field` at the observed cells.
  Eigen::VectorXd at_observed(const Field& field) const;
  Eigen::VectorXd own_treatment() const { return at_observed(treatment); }
  /// observed x p matrix of local covariates.
  Eigen::MatrixXd local_covariates() const;
  /// (location, replicate) cells x p matrix of covariates over every cell.
  Eigen::MatrixXd all_covariates() const;
};

enum class ModelKind { gps, oracle, local_only, naive };

const char* to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& name);

struct GpsOptions {
  KernelFamily family = KernelFamily::gaussian;
  PropensityDesignSpec propensity;
  DirectScale direct_scale = DirectScale::log;
  ClampPolicy clamp;
  SplineSpec spline;
  // Fixed conditioning bandwidths; empty runs the preliminary tau fit and the grid recipe.
  std::vector<double> tau_grid;
  int tau_grid_count = 5;
};

/// Default tau floor: 1 / (cells per axis).
double default_tau_floor(const SpatialStudy& study);

struct PropensityStage {
  LogisticModel model;
  Eigen::MatrixXd probabilities;  // locations x replicates
};

/// Fit the direct-treatment propensity over every cell.
PropensityStage estimate_propensity(const SpatialStudy& study, const GpsOptions& options);

/// Conditioning terms at the observed cells for the given bandwidths: the direct term
/// once, then (logit p0, log E, log Var) per bandwidth.
std::vector<ConditioningTerm> propensity_terms(const SpatialStudy& study,
                                               const PropensitySummary& summary);

struct Step2Result {
  PosteriorSamples samples;
  double tau_mean = 0.0;
  double tau_sd = 0.0;
  double z_sd = 0.0;             // posterior sd of log(tau - floor)
  bool weakly_identified = false;  // z posterior sd >= half the prior sd
};

/// Preliminary tau fit with the summaries tied to the current tau. The tau move sees
/// the summaries as fixed; they are recomputed after each accepted move.
Step2Result run_step2(const SpatialStudy& study, const PropensityStage& propensity,
                      const GpsOptions& options, const SamplerConfig& config);

/// {mean + 2k sd} for k centred on zero ({t, t +- 2s, t +- 4s} for count 5), floored
/// just above `floor`, deduplicated and sorted.
std::vector<double> select_tau_grid(double mean, double sd, int count = 5, double floor = 0.0);

/// Final model with the summaries precomputed at fixed bandwidths. Tau moves only
/// through the spill-over column.
PosteriorSamples run_step3(const SpatialStudy& study, const PropensitySummary& frozen,
                           const GpsOptions& options, const SamplerConfig& config);

/// Oracle (h as a covariate), local-only (splines of local X) or naive (treatments only).
PosteriorSamples run_comparison(const SpatialStudy& study, ModelKind kind, const GpsOptions& options,
                                const SamplerConfig& config);

/// Design used by `run_comparison` (and by run_step3 when `terms` is non-empty).
RegressionDesign comparison_design(const SpatialStudy& study, ModelKind kind, const SplineSpec& spline,
                                   KernelFamily family);

struct GpsFit {
  PropensityStage propensity;
  std::optional<Step2Result> step2;
  std::vector<double> tau_grid;
  PropensitySummary summary;
  PosteriorSamples posterior;
};

/// The full three-step estimator.
GpsFit fit_gps(const SpatialStudy& study, const GpsOptions& options, const SamplerConfig& config);

/// Dispatch on model kind; returns the final posterior.
PosteriorSamples fit_model(const SpatialStudy& study, ModelKind kind, const GpsOptions& options,
                           const SamplerConfig& config);

}  // namespace sgps
