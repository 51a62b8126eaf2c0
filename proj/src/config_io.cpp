#include "sgps/config_io.hpp"

#include <cstdio>

namespace sgps {

using nlohmann::json;

namespace {

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key) && !j.at(key).is_null()) out = j.at(key).get<T>();
}

}  // namespace

json to_json(const ScenarioConfig& c) {
  return json{{"side_count", c.side_count},
              {"replicates", c.replicates},
              {"gp_range", c.gp_range},
              {"treat_intercept", c.treat_intercept},
              {"true_tau", c.true_tau},
              {"variant", to_string(c.variant)},
              {"beta0", c.beta0},
              {"delta1", c.delta1},
              {"delta2", c.delta2},
              {"noise_sd", c.noise_sd},
              {"seed", c.seed},
              {"confounder_bandwidth", c.confounder_bandwidth},
              {"confounder_includes_self", c.confounder_includes_self}};
}

ScenarioConfig scenario_from_json(const json& j, ScenarioConfig c) {
  read(j, "side_count", c.side_count);
  read(j, "replicates", c.replicates);
  read(j, "gp_range", c.gp_range);
  read(j, "treat_intercept", c.treat_intercept);
  read(j, "true_tau", c.true_tau);
  if (j.contains("variant")) c.variant = confounder_variant_from_string(j.at("variant").get<std::string>());
  read(j, "beta0", c.beta0);
  read(j, "delta1", c.delta1);
  read(j, "delta2", c.delta2);
  read(j, "noise_sd", c.noise_sd);
  read(j, "seed", c.seed);
  read(j, "confounder_bandwidth", c.confounder_bandwidth);
  read(j, "confounder_includes_self", c.confounder_includes_self);
  c.validate();
  return c;
}

json to_json(const SamplerConfig& c) {
  json j{{"burn_in", c.burn_in},
         {"samples", c.samples},
         {"thin", c.thin},
         {"prior_variance", c.prior_variance},
         {"sigma2_shape", c.sigma2_shape},
         {"sigma2_rate", c.sigma2_rate},
         {"tau_prior_mean", c.tau_prior_mean},
         {"tau_prior_sd", c.tau_prior_sd},
         {"initial_proposal_sd", c.initial_proposal_sd},
         {"adaptation_window", c.adaptation_window},
         {"target_acceptance", c.target_acceptance},
         {"likelihood_enabled", c.likelihood_enabled},
         {"seed", c.seed}};
  j["tau_floor"] = c.tau_floor ? json(*c.tau_floor) : json(nullptr);
  j["initial_tau"] = c.initial_tau ? json(*c.initial_tau) : json(nullptr);
  return j;
}

SamplerConfig sampler_from_json(const json& j, SamplerConfig c) {
  read(j, "burn_in", c.burn_in);
  read(j, "samples", c.samples);
  read(j, "thin", c.thin);
  read(j, "prior_variance", c.prior_variance);
  read(j, "sigma2_shape", c.sigma2_shape);
  read(j, "sigma2_rate", c.sigma2_rate);
  read(j, "tau_prior_mean", c.tau_prior_mean);
  read(j, "tau_prior_sd", c.tau_prior_sd);
  read(j, "initial_proposal_sd", c.initial_proposal_sd);
  read(j, "adaptation_window", c.adaptation_window);
  read(j, "target_acceptance", c.target_acceptance);
  read(j, "likelihood_enabled", c.likelihood_enabled);
  read(j, "seed", c.seed);
  if (j.contains("tau_floor") && !j.at("tau_floor").is_null()) c.tau_floor = j.at("tau_floor").get<double>();
  if (j.contains("initial_tau") && !j.at("initial_tau").is_null())
    c.initial_tau = j.at("initial_tau").get<double>();
  c.validate();
  return c;
}

json to_json(const GpsOptions& o) {
  return json{{"kernel", to_string(o.family)},
              {"propensity_design", o.propensity.kind == PropensityDesign::affine ? "affine" : "spline"},
              {"propensity_basis_count", o.propensity.basis_count},
              {"direct_scale", o.direct_scale == DirectScale::log ? "log" : "raw"},
              {"p0_margin", o.clamp.p0_margin},
              {"moment_floor", o.clamp.moment_floor},
              {"basis_count", o.spline.basis_count},
              {"degree", o.spline.degree},
              {"standardize", o.spline.standardize},
              {"tau_grid", o.tau_grid},
              {"tau_grid_count", o.tau_grid_count}};
}

GpsOptions gps_options_from_json(const json& j, GpsOptions o) {
  if (j.contains("kernel")) o.family = kernel_family_from_string(j.at("kernel").get<std::string>());
  if (j.contains("propensity_design")) {
    const auto k = j.at("propensity_design").get<std::string>();
    if (k == "affine") o.propensity.kind = PropensityDesign::affine;
    else if (k == "spline") o.propensity.kind = PropensityDesign::spline;
    else throw InvalidSpec("propensity_design must be 'affine' or 'spline'");
  }
  read(j, "propensity_basis_count", o.propensity.basis_count);
  if (j.contains("direct_scale")) {
    const auto s = j.at("direct_scale").get<std::string>();
    if (s == "log") o.direct_scale = DirectScale::log;
    else if (s == "raw") o.direct_scale = DirectScale::raw;
    else throw InvalidSpec("direct_scale must be 'log' or 'raw'");
  }
  read(j, "p0_margin", o.clamp.p0_margin);
  read(j, "moment_floor", o.clamp.moment_floor);
  read(j, "basis_count", o.spline.basis_count);
  read(j, "degree", o.spline.degree);
  read(j, "standardize", o.spline.standardize);
  read(j, "tau_grid", o.tau_grid);
  read(j, "tau_grid_count", o.tau_grid_count);
  return o;
}

json to_json(const BSplineBasis<double>& basis) {
  std::vector<double> knots(basis.knots().data(), basis.knots().data() + basis.knots().size());
  return json{{"degree", basis.degree()},
              {"basis_count", basis.basis_count()},
              {"lo", basis.lo()},
              {"hi", basis.hi()},
              {"knots", knots}};
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace sgps
