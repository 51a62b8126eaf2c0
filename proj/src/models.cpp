#include "sgps/models.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace sgps {

SpatialStudy SpatialStudy::from_synthetic(const SyntheticDataset& data) {
  SpatialStudy s;
  s.grid = data.grid;
  s.treatment = data.A;
  s.covariates = {data.X};
  const Eigen::Index cells = data.Y.size();
  s.observed.resize(static_cast<std::size_t>(cells));
  for (Eigen::Index i = 0; i < cells; ++i) s.observed[static_cast<std::size_t>(i)] = i;
  s.response = data.Y.reshaped();
  s.confounder = data.h;
  return s;
}

void SpatialStudy::validate() const {
  const Eigen::Index n = grid.size();
  if (treatment.rows() != n) throw ShapeError("study: treatment rows do not match grid");
  for (const auto& x : covariates)
    if (x.rows() != n || x.cols() != treatment.cols())
      throw ShapeError("study: covariate field misaligned with treatment");
  if (confounder && (confounder->rows() != n || confounder->cols() != treatment.cols()))
    throw ShapeError("study: confounder field misaligned with treatment");
  if (response.size() != observation_count())
    throw ShapeError("study: response length differs from observed cell count");
  for (Eigen::Index c : observed)
    if (c < 0 || c >= treatment.size()) throw ShapeError("study: observed cell out of range");
  if (!((treatment.array() == 0.0) || (treatment.array() == 1.0)).all())
    throw ValidationError("study: treatment must be 0/1");
}

Eigen::VectorXd SpatialStudy::at_observed(const Field& field) const {
  Eigen::VectorXd out(observation_count());
  for (std::size_t i = 0; i < observed.size(); ++i) out(Eigen::Index(i)) = field.reshaped()(observed[i]);
  return out;
}

Eigen::MatrixXd SpatialStudy::local_covariates() const {
  Eigen::MatrixXd out(observation_count(), Eigen::Index(covariates.size()));
  for (std::size_t j = 0; j < covariates.size(); ++j) out.col(Eigen::Index(j)) = at_observed(covariates[j]);
  return out;
}

Eigen::MatrixXd SpatialStudy::all_covariates() const {
  Eigen::MatrixXd out(treatment.size(), Eigen::Index(covariates.size()));
  for (std::size_t j = 0; j < covariates.size(); ++j) out.col(Eigen::Index(j)) = covariates[j].reshaped();
  return out;
}

const char* to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::gps: return "gps";
    case ModelKind::oracle: return "oracle";
    case ModelKind::local_only: return "local_only";
    case ModelKind::naive: return "naive";
  }
  return "?";
}

ModelKind model_kind_from_string(const std::string& name) {
  if (name == "gps") return ModelKind::gps;
  if (name == "oracle") return ModelKind::oracle;
  if (name == "local_only") return ModelKind::local_only;
  if (name == "naive") return ModelKind::naive;
  throw InvalidSpec("unknown model '" + name + "'");
}

double default_tau_floor(const SpatialStudy& study) { return 1.0 / study.grid.side_count(); }

namespace {

double floor_of(const SpatialStudy& study, const SamplerConfig& config) {
  return config.tau_floor.value_or(default_tau_floor(study));
}

struct SpillBasis {
  Eigen::MatrixXd sums;
  Eigen::VectorXd radii;
};

SpillBasis spill_basis(const SpatialStudy& study) {
  const DistanceShells shells(study.grid);
  return {shells.sums_for(study.treatment, study.observed), shells.radii()};
}

std::string tau_tag(double tau) {
  std::ostringstream s;
  s << tau;
  return s.str();
}

}  // namespace

PropensityStage estimate_propensity(const SpatialStudy& study, const GpsOptions& options) {
  study.validate();
  if (study.covariates.empty()) throw InvalidSpec("propensity: study has no covariates");
  const Eigen::MatrixXd design = propensity_design(study.all_covariates(), options.propensity);
  PropensityStage stage;
  stage.model = fit_logistic(design, study.treatment.reshaped());
  stage.probabilities = stage.model.fitted(design).reshaped(study.treatment.rows(), study.treatment.cols());
  return stage;
}

std::vector<ConditioningTerm> propensity_terms(const SpatialStudy& study,
                                               const PropensitySummary& summary) {
  std::vector<ConditioningTerm> terms;
  terms.push_back({summary.direct_scale == DirectScale::log ? "z1" : "e", study.at_observed(summary.direct)});
  for (const auto& sp : summary.spill) {
    const std::string tag = "@" + tau_tag(sp.tau);
    terms.push_back({"z2" + tag, study.at_observed(sp.logit_p0)});
    terms.push_back({"z3" + tag, study.at_observed(sp.log_mean)});
    terms.push_back({"z4" + tag, study.at_observed(sp.log_variance)});
  }
  return terms;
}

Step2Result run_step2(const SpatialStudy& study, const PropensityStage& propensity,
                      const GpsOptions& options, const SamplerConfig& config) {
  study.validate();
  const double floor = floor_of(study, config);
  const double tau0 = config.initial_tau.value_or(floor + std::exp(config.tau_prior_mean));
  const SpillBasis basis = spill_basis(study);
  const Eigen::VectorXd own = study.own_treatment();

  auto design_at = [&](double tau) {
    const PropensitySummary summary = summarize_propensity(
        propensity.probabilities, study.grid, {tau}, options.family, options.direct_scale, options.clamp);
    return build_design(study.response, own, basis.sums, basis.radii, options.family, {},
                        propensity_terms(study, summary), options.spline);
  };

  DesignRefresh refresh = [&](double tau, RegressionDesign& design) {
    RegressionDesign next = design_at(tau);
    design.fixed = std::move(next.fixed);
    design.blocks = std::move(next.blocks);
  };

  SamplerConfig c = config;
  c.initial_tau = tau0;
  Step2Result r;
  r.samples = run_sampler(design_at(tau0), c, floor, refresh);
  const ParameterSummary t = r.samples.summarize("tau");
  r.tau_mean = t.mean;
  r.tau_sd = t.sd;
  const Eigen::VectorXd z = (r.samples.tau.array() - floor).log().matrix();
  r.z_sd = summarize_draws("z", z).sd;
  r.weakly_identified = r.z_sd >= 0.5 * config.tau_prior_sd;
  return r;
}

std::vector<double> select_tau_grid(double mean, double sd, int count, double floor) {
  if (!(sd >= 0.0)) throw DomainError("select_tau_grid: sd must be nonnegative");
  if (count < 1) throw InvalidSpec("select_tau_grid: count must be positive");
  const double lowest = floor + 1e-6 * std::max(1.0, floor);
  std::vector<double> grid;
  for (int k = 0; k < count; ++k) {
    const double offset = 2.0 * sd * (k - 0.5 * (count - 1));
    grid.push_back(std::max(mean + offset, lowest));
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end(),
                         [](double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(a)); }),
             grid.end());
  return grid;
}

PosteriorSamples run_step3(const SpatialStudy& study, const PropensitySummary& frozen,
                           const GpsOptions& options, const SamplerConfig& config) {
  study.validate();
  const SpillBasis basis = spill_basis(study);
  RegressionDesign design =
      build_design(study.response, study.own_treatment(), basis.sums, basis.radii, options.family, {},
                   propensity_terms(study, frozen), options.spline);
  return run_sampler(std::move(design), config, floor_of(study, config));
}

RegressionDesign comparison_design(const SpatialStudy& study, ModelKind kind, const SplineSpec& spline,
                                   KernelFamily family) {
  study.validate();
  const SpillBasis basis = spill_basis(study);
  std::vector<ConditioningTerm> linear, splines;
  switch (kind) {
    case ModelKind::oracle:
      if (!study.confounder) throw Unsupported("oracle model needs the true confounder field h");
      linear.push_back({"h", study.at_observed(*study.confounder)});
      break;
    case ModelKind::local_only: {
      const Eigen::MatrixXd x = study.local_covariates();
      for (Eigen::Index j = 0; j < x.cols(); ++j) splines.push_back({"x" + std::to_string(j + 1), x.col(j)});
      break;
    }
    case ModelKind::naive: break;
    case ModelKind::gps: throw InvalidSpec("comparison_design: gps is not a comparison model");
  }
  return build_design(study.response, study.own_treatment(), basis.sums, basis.radii, family, linear,
                      splines, spline);
}

PosteriorSamples run_comparison(const SpatialStudy& study, ModelKind kind, const GpsOptions& options,
                                const SamplerConfig& config) {
  return run_sampler(comparison_design(study, kind, options.spline, options.family), config,
                     floor_of(study, config));
}

GpsFit fit_gps(const SpatialStudy& study, const GpsOptions& options, const SamplerConfig& config) {
  GpsFit fit;
  fit.propensity = estimate_propensity(study, options);
  if (options.tau_grid.empty()) {
    SamplerConfig c2 = config;
    c2.seed = Rng::derive_seed(config.seed, {2});
    fit.step2 = run_step2(study, fit.propensity, options, c2);
    fit.tau_grid = select_tau_grid(fit.step2->tau_mean, fit.step2->tau_sd, options.tau_grid_count,
                                   floor_of(study, config));
  } else {
    fit.tau_grid = options.tau_grid;
  }
  fit.summary = summarize_propensity(fit.propensity.probabilities, study.grid, fit.tau_grid,
                                     options.family, options.direct_scale, options.clamp);
  fit.posterior = run_step3(study, fit.summary, options, config);
  return fit;
}

PosteriorSamples fit_model(const SpatialStudy& study, ModelKind kind, const GpsOptions& options,
                           const SamplerConfig& config) {
  if (kind == ModelKind::gps) return fit_gps(study, options, config).posterior;
  return run_comparison(study, kind, options, config);
}

}  // namespace sgps
