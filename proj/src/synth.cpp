#include "sgps/synth.hpp"

#include <cmath>

namespace sgps {

const char* to_string(ConfounderVariant v) {
  switch (v) {
    case ConfounderVariant::identity: return "identity";
    case ConfounderVariant::negcube: return "negcube";
    case ConfounderVariant::exp: return "exp";
  }
  return "?";
}

ConfounderVariant confounder_variant_from_string(const std::string& name) {
  if (name == "identity") return ConfounderVariant::identity;
  if (name == "negcube") return ConfounderVariant::negcube;
  if (name == "exp") return ConfounderVariant::exp;
  throw InvalidSpec("unknown confounder variant '" + name + "'");
}

double apply_variant(ConfounderVariant v, double w) {
  switch (v) {
    case ConfounderVariant::identity: return w;
    case ConfounderVariant::negcube: return -w * w * w;
    case ConfounderVariant::exp: return std::exp(w);
  }
  return w;
}

void ScenarioConfig::validate() const {
  if (side_count < 2) throw InvalidSpec("side_count must be >= 2");
  if (replicates < 1) throw InvalidSpec("replicates must be >= 1");
  if (!(gp_range > 0.0)) throw InvalidSpec("gp_range must be positive");
  if (!(true_tau > 0.0)) throw InvalidSpec("true_tau must be positive");
  if (!(noise_sd >= 0.0)) throw InvalidSpec("noise_sd must be nonnegative");
  if (!(confounder_bandwidth > 0.0)) throw InvalidSpec("confounder_bandwidth must be positive");
  if (!std::isfinite(treat_intercept) || !std::isfinite(beta0) || !std::isfinite(delta1) ||
      !std::isfinite(delta2))
    throw InvalidSpec("scenario coefficients must be finite");
}

Eigen::MatrixXd exponential_covariance(const Eigen::MatrixXd& distances, double range) {
  if (!(range > 0.0)) throw InvalidSpec("covariance range must be positive");
  return (-distances.array() / range).exp().matrix();
}

GaussianFieldSampler::GaussianFieldSampler(const SpatialGrid& grid, double range) {
  const Eigen::MatrixXd cov = exponential_covariance(grid.distances(), range);
  const Eigen::Index n = cov.rows();
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) {
    double jitter = 1e-10;
    for (int attempt = 0; attempt <= 3; ++attempt, jitter *= 10.0) {
      llt.compute(cov + jitter * Eigen::MatrixXd::Identity(n, n));
      if (llt.info() == Eigen::Success) {
        jitter_ = jitter;
        break;
      }
    }
    if (llt.info() != Eigen::Success)
      throw NumericalError("GP covariance factorization failed after jitter retries");
  }
  factor_ = llt.matrixL();
}

Field GaussianFieldSampler::draw(Rng& rng, Eigen::Index count) const {
  return factor_ * rng.standard_normal(factor_.rows(), count);
}

Field sample_gp_field(const SpatialGrid& grid, double range, Rng& rng, Eigen::Index count) {
  return GaussianFieldSampler(grid, range).draw(rng, count);
}

Field assign_treatment(const Field& X, double intercept, Rng& rng) {
  if (!X.allFinite()) throw DomainError("assign_treatment: non-finite covariate");
  Field A(X.rows(), X.cols());
  for (Eigen::Index r = 0; r < X.cols(); ++r)
    for (Eigen::Index s = 0; s < X.rows(); ++s)
      A(s, r) = rng.bernoulli(expit(X(s, r) + intercept)) ? 1.0 : 0.0;
  return A;
}

Eigen::MatrixXd confounder_weights(const SpatialGrid& grid, double bandwidth, bool include_self) {
  Eigen::MatrixXd w = kernel_matrix(grid.distances(), KernelSpec{KernelFamily::gaussian, bandwidth});
  if (!include_self) w.diagonal().setZero();
  const Eigen::VectorXd rows = w.rowwise().sum();
  return rows.cwiseInverse().asDiagonal() * w;
}

ConfounderFields confounder_field(const Field& X, const SpatialGrid& grid, ConfounderVariant variant,
                                  double bandwidth, bool include_self) {
  if (X.rows() != grid.size()) throw ShapeError("confounder_field: X rows do not match grid");
  ConfounderFields out;
  out.W = confounder_weights(grid, bandwidth, include_self) * X;
  out.h = out.W.unaryExpr([variant](double w) { return apply_variant(variant, w); });
  return out;
}

SyntheticDataset generate_scenario(const ScenarioConfig& config) {
  config.validate();
  SpatialGrid grid = SpatialGrid::unit_square(config.side_count);
  const Eigen::Index n = grid.size();
  const Eigen::Index reps = config.replicates;
  const GaussianFieldSampler gp(grid, config.gp_range);

  Field X(n, reps), A(n, reps), noise(n, reps);
  for (Eigen::Index r = 0; r < reps; ++r) {
    Rng rng = Rng::stream(config.seed, {static_cast<std::uint64_t>(r)});
    X.col(r) = gp.draw(rng, 1);
    A.col(r) = assign_treatment(X.col(r), config.treat_intercept, rng);
    noise.col(r) = config.noise_sd * rng.standard_normal(n, 1);
  }
  Field spill = spillover_field(A, grid, KernelSpec{KernelFamily::gaussian, config.true_tau});
  auto [W, h] = confounder_field(X, grid, config.variant, config.confounder_bandwidth,
                                 config.confounder_includes_self);
  Field Y = (config.beta0 + (config.delta1 * A + config.delta2 * spill + h + noise).array()).matrix();
  return SyntheticDataset{std::move(grid), std::move(X), std::move(A), std::move(spill),
                          std::move(W), std::move(h), std::move(Y), config};
}

}  // namespace sgps
