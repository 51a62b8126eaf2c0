#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "sgps/design.hpp"
#include "sgps/rng.hpp"
#include "sgps/summary.hpp"

namespace sgps {

struct SamplerConfig {
  int burn_in = 7500;
  int samples = 22500;
  int thin = 1;
  double prior_variance = 1000.0;  // diagonal of the coefficient prior covariance
  double sigma2_shape = 0.001;
  double sigma2_rate = 0.001;
  // Prior on z = log(tau - floor). The declared prior is Normal(-1, 1); the alternative
  // Normal(0, 100) (variance) is selected with tau_prior_mean = 0, tau_prior_sd = 10.
  double tau_prior_mean = -1.0;
  double tau_prior_sd = 1.0;
  double initial_proposal_sd = 0.5;
  int adaptation_window = 100;
  double target_acceptance = 0.44;
  std::optional<double> tau_floor;    // default 1 / side_count
  std::optional<double> initial_tau;  // default floor + exp(tau_prior_mean)
  bool likelihood_enabled = true;     // false: tau targets its prior only
  std::uint64_t seed = 1;

  void validate() const;

  /// Reduced chain lengths for desk-scale studies (2,000 burn-in, 6,000 kept).
  static SamplerConfig desk();
};

/// Maps tau to z = log(tau - floor) and back; every z gives tau > floor.
struct TauTransform {
  double floor;
  double to_z(double tau) const { return std::log(tau - floor); }
  double to_tau(double z) const { return floor + std::exp(z); }
};

/// One draw from Normal(P^{-1} c / s2, P^{-1}) with P = prior_precision + gram / s2.
Eigen::VectorXd gibbs_update_beta(const Eigen::MatrixXd& gram, const Eigen::VectorXd& cross,
                                  double sigma2, const Eigen::MatrixXd& prior_precision, Rng& rng);

/// Same draw from the design M and response Y directly, with prior covariance Sigma0.
Eigen::VectorXd gibbs_update_beta_from_data(const Eigen::MatrixXd& M, const Eigen::VectorXd& Y,
                                            double sigma2, const Eigen::MatrixXd& prior_covariance,
                                            Rng& rng);

/// Posterior mean and covariance of beta given sigma2 (the target of gibbs_update_beta).
struct GaussianMoments {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
};
GaussianMoments beta_conditional(const Eigen::MatrixXd& gram, const Eigen::VectorXd& cross,
                                 double sigma2, const Eigen::MatrixXd& prior_precision);

/// InverseGamma(shape + n/2, rate + rss/2) draw.
double gibbs_update_sigma2(double rss, Eigen::Index count, double shape, double rate, Rng& rng);
double gibbs_update_sigma2(const Eigen::VectorXd& residuals, double shape, double rate, Rng& rng);

/// min(1, exp(log_proposed - log_current)).
inline double acceptance_probability(double log_current, double log_proposed) {
  if (log_proposed >= log_current) return 1.0;
  return std::exp(log_proposed - log_current);
}

struct TauStep {
  double tau;
  bool accepted;
};

/// Random-walk Metropolis step on z = log(tau - floor). `log_target` is the log density
/// of z (prior included), evaluated at a tau value.
template <typename LogTarget>
TauStep metropolis_update_tau(double tau, double log_current, double proposal_sd,
                              const TauTransform& transform, LogTarget&& log_target, Rng& rng,
                              double* log_accepted = nullptr) {
  const double z_new = transform.to_z(tau) + proposal_sd * rng.normal();
  const double tau_new = transform.to_tau(z_new);
  // floor + exp(z) can round to the floor itself for very negative z
  const double log_new = tau_new > transform.floor ? log_target(tau_new) : -HUGE_VAL;
  const double u = rng.uniform();
  if (std::isfinite(log_new) && u < acceptance_probability(log_current, log_new)) {
    if (log_accepted) *log_accepted = log_new;
    return {tau_new, true};
  }
  if (log_accepted) *log_accepted = log_current;
  return {tau, false};
}

struct AdaptationRecord {
  int iteration;           // last iteration of the window
  double acceptance_rate;  // within the window
  double proposal_sd;      // in force after the window
};

struct PosteriorSamples {
  std::vector<std::string> labels;
  Eigen::MatrixXd coefficients;  // draws x coefficients, labels order
  Eigen::VectorXd sigma2;
  Eigen::VectorXd tau;
  std::vector<AdaptationRecord> adaptation;
  double acceptance_rate = 0.0;  // after burn-in
  double proposal_sd = 0.0;      // frozen after burn-in
  double tau_floor = 0.0;
  std::vector<std::string> notes;

  Eigen::Index draws() const { return tau.size(); }
  Eigen::Index index_of(const std::string& label) const;
  Eigen::VectorXd draws_of(const std::string& name) const;  // coefficient, "sigma2" or "tau"
  ParameterSummary summarize(const std::string& name) const;
  std::vector<ParameterSummary> summaries() const;
};

/// Hook invoked after an accepted tau move; may rewrite the tau-dependent fixed columns
/// (their count must not change).
using DesignRefresh = std::function<void(double tau, RegressionDesign& design)>;

/// Metropolis-within-Gibbs for the spill-over regression.
///
/// Each iteration draws beta | tau, sigma2 (multivariate normal), sigma2 | beta, tau
/// (inverse gamma), then tau | beta, sigma2 by a random walk on log(tau - floor). During
/// burn-in the proposal sd is multiplied by exp(rate - target) after every adaptation
/// window; it is frozen afterwards. Coefficients and sigma2 start at least-squares values
/// for the initial tau.
PosteriorSamples run_sampler(RegressionDesign design, const SamplerConfig& config, double tau_floor,
                             const DesignRefresh& refresh = {});

void write_samples_csv(const std::filesystem::path& path, const PosteriorSamples& samples);
void write_summary_csv(const std::filesystem::path& path, const PosteriorSamples& samples);

}  // namespace sgps
