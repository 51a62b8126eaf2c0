#include "sgps/sampler.hpp"

#include <fstream>
#include <sstream>

#include <Eigen/Cholesky>

#include "sgps/errors.hpp"
#include "sgps/field_io.hpp"

namespace sgps {

void SamplerConfig::validate() const {
  if (burn_in < 0) throw InvalidSpec("burn_in must be nonnegative");
  if (samples < 1) throw InvalidSpec("samples must be positive");
  if (thin < 1) throw InvalidSpec("thin must be positive");
  if (!(prior_variance > 0.0)) throw InvalidSpec("prior_variance must be positive");
  if (!(sigma2_shape > 0.0) || !(sigma2_rate > 0.0)) throw InvalidSpec("sigma2 prior must be positive");
  if (!(tau_prior_sd > 0.0)) throw InvalidSpec("tau_prior_sd must be positive");
  if (!(initial_proposal_sd > 0.0)) throw InvalidSpec("initial_proposal_sd must be positive");
  if (adaptation_window < 1) throw InvalidSpec("adaptation_window must be positive");
  if (!(target_acceptance > 0.0 && target_acceptance < 1.0))
    throw InvalidSpec("target_acceptance must lie in (0, 1)");
  if (tau_floor && !(*tau_floor >= 0.0)) throw InvalidSpec("tau_floor must be nonnegative");
}

SamplerConfig SamplerConfig::desk() {
  SamplerConfig c;
  c.burn_in = 2000;
  c.samples = 6000;
  return c;
}

GaussianMoments beta_conditional(const Eigen::MatrixXd& gram, const Eigen::VectorXd& cross,
                                 double sigma2, const Eigen::MatrixXd& prior_precision) {
  const Eigen::MatrixXd precision = prior_precision + gram / sigma2;
  Eigen::LLT<Eigen::MatrixXd> llt(precision);
  if (llt.info() != Eigen::Success) throw NumericalError("beta_conditional: precision not positive definite");
  GaussianMoments m;
  m.mean = llt.solve(cross / sigma2);
  m.covariance = llt.solve(Eigen::MatrixXd::Identity(gram.rows(), gram.cols()));
  return m;
}

Eigen::VectorXd gibbs_update_beta(const Eigen::MatrixXd& gram, const Eigen::VectorXd& cross,
                                  double sigma2, const Eigen::MatrixXd& prior_precision, Rng& rng) {
  if (!(sigma2 > 0.0)) throw DomainError("gibbs_update_beta: sigma2 must be positive");
  if (gram.rows() != cross.size() || prior_precision.rows() != cross.size())
    throw ShapeError("gibbs_update_beta: dimension mismatch");
  Eigen::LLT<Eigen::MatrixXd> llt(prior_precision + gram / sigma2);
  if (llt.info() != Eigen::Success)
    throw NumericalError("gibbs_update_beta: posterior precision is not positive definite");
  const Eigen::VectorXd mean = llt.solve(cross / sigma2);
  const Eigen::VectorXd z = rng.standard_normal(cross.size(), 1);
  // precision = L L^T, so L^{-T} z has covariance precision^{-1}
  return mean + llt.matrixU().solve(z);
}

Eigen::VectorXd gibbs_update_beta_from_data(const Eigen::MatrixXd& M, const Eigen::VectorXd& Y,
                                            double sigma2, const Eigen::MatrixXd& prior_covariance,
                                            Rng& rng) {
  if (M.rows() != Y.size()) throw ShapeError("gibbs_update_beta: M rows and Y differ");
  const Eigen::MatrixXd prior_precision =
      prior_covariance.llt().solve(Eigen::MatrixXd::Identity(M.cols(), M.cols()));
  return gibbs_update_beta(M.transpose() * M, M.transpose() * Y, sigma2, prior_precision, rng);
}

double gibbs_update_sigma2(double rss, Eigen::Index count, double shape, double rate, Rng& rng) {
  if (!std::isfinite(rss) || rss < 0.0) throw DomainError("gibbs_update_sigma2: invalid residual sum");
  const double post_shape = shape + 0.5 * double(count);
  const double post_rate = rate + 0.5 * rss;
  return 1.0 / rng.gamma(post_shape, 1.0 / post_rate);
}

double gibbs_update_sigma2(const Eigen::VectorXd& residuals, double shape, double rate, Rng& rng) {
  if (!residuals.allFinite()) throw DomainError("gibbs_update_sigma2: non-finite residuals");
  return gibbs_update_sigma2(residuals.squaredNorm(), residuals.size(), shape, rate, rng);
}

Eigen::Index PosteriorSamples::index_of(const std::string& label) const {
  for (std::size_t j = 0; j < labels.size(); ++j)
    if (labels[j] == label) return Eigen::Index(j);
  return -1;
}

Eigen::VectorXd PosteriorSamples::draws_of(const std::string& name) const {
  if (name == "tau") return tau;
  if (name == "sigma2") return sigma2;
  const Eigen::Index j = index_of(name);
  if (j < 0) throw std::out_of_range("no parameter named '" + name + "'");
  return coefficients.col(j);
}

ParameterSummary PosteriorSamples::summarize(const std::string& name) const {
  return summarize_draws(name, draws_of(name));
}

std::vector<ParameterSummary> PosteriorSamples::summaries() const {
  std::vector<ParameterSummary> out;
  for (const auto& l : labels) out.push_back(summarize(l));
  out.push_back(summarize("sigma2"));
  out.push_back(summarize("tau"));
  return out;
}

namespace {

/// Cross products of [F, S] with themselves and with Y.
struct CrossProducts {
  Eigen::MatrixXd FtF, FtS, StS;
  Eigen::VectorXd FtY, StY;
  double YtY = 0.0;

  explicit CrossProducts(const RegressionDesign& d) {
    StS = d.shell_sums.transpose() * d.shell_sums;
    StY = d.shell_sums.transpose() * d.response;
    YtY = d.response.squaredNorm();
    refresh_fixed(d);
  }

  void refresh_fixed(const RegressionDesign& d) {
    FtF = d.fixed.transpose() * d.fixed;
    FtS = d.fixed.transpose() * d.shell_sums;
    FtY = d.fixed.transpose() * d.response;
  }

  // Gram matrix and cross vector in internal order [F, spill].
  void assemble(const Eigen::VectorXd& w, Eigen::MatrixXd& gram, Eigen::VectorXd& cross) const {
    const Eigen::Index q = FtF.rows();
    gram.resize(q + 1, q + 1);
    cross.resize(q + 1);
    const Eigen::VectorXd fts = FtS * w;
    gram.topLeftCorner(q, q) = FtF;
    gram.col(q).head(q) = fts;
    gram.row(q).head(q) = fts.transpose();
    gram(q, q) = w.dot(StS * w);
    cross.head(q) = FtY;
    cross(q) = w.dot(StY);
  }
};

double residual_sum(const Eigen::MatrixXd& gram, const Eigen::VectorXd& cross, double yty,
                    const Eigen::VectorXd& beta) {
  return std::max(0.0, yty - 2.0 * beta.dot(cross) + beta.dot(gram * beta));
}

}  // namespace

PosteriorSamples run_sampler(RegressionDesign design, const SamplerConfig& config, double tau_floor,
                             const DesignRefresh& refresh) {
  config.validate();
  const Eigen::Index n = design.observation_count();
  if (n < 1) throw ShapeError("run_sampler: no observations");
  const Eigen::Index q = design.fixed.cols();
  const Eigen::Index p = q + 1;
  const TauTransform transform{tau_floor};

  double tau = config.initial_tau.value_or(tau_floor + std::exp(config.tau_prior_mean));
  if (!(tau > tau_floor)) throw InvalidSpec("initial tau must exceed the tau floor");

  Rng rng = Rng::stream(config.seed, {0x5A4D50ULL});
  CrossProducts cp(design);
  const Eigen::MatrixXd prior_precision =
      Eigen::MatrixXd::Identity(p, p) / config.prior_variance;

  Eigen::VectorXd w = design.shell_weights(tau);
  Eigen::MatrixXd gram;
  Eigen::VectorXd cross;
  cp.assemble(w, gram, cross);

  // least-squares start; a vanishing ridge keeps collinear designs solvable
  const double ridge = 1e-10 * std::max(1.0, gram.diagonal().maxCoeff());
  Eigen::VectorXd beta = (gram + ridge * Eigen::MatrixXd::Identity(p, p)).ldlt().solve(cross);
  double sigma2 = residual_sum(gram, cross, cp.YtY, beta) / double(n);
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) sigma2 = 1.0;

  auto log_prior = [&](double t) {
    const double z = (transform.to_z(t) - config.tau_prior_mean) / config.tau_prior_sd;
    return -0.5 * z * z;
  };
  // tau-dependent part of -RSS/(2 sigma2) for the current b and delta2
  auto log_target = [&](double t) {
    double lp = log_prior(t);
    if (!config.likelihood_enabled) return lp;
    const Eigen::VectorXd wt = design.shell_weights(t);
    const double d2 = beta(q);
    const Eigen::VectorXd b = beta.head(q);
    const double part =
        -2.0 * d2 * wt.dot(cp.StY) + 2.0 * d2 * b.dot(cp.FtS * wt) + d2 * d2 * wt.dot(cp.StS * wt);
    return lp - part / (2.0 * sigma2);
  };

  const int kept = config.samples;
  const long total = long(config.burn_in) + long(kept) * config.thin;
  PosteriorSamples out;
  out.labels = design.labels();
  out.tau_floor = tau_floor;
  out.notes = design.notes;
  out.coefficients.resize(kept, p);
  out.sigma2.resize(kept);
  out.tau.resize(kept);

  double proposal_sd = config.initial_proposal_sd;
  int window_accepts = 0;
  long post_accepts = 0;
  int stored = 0;

  for (long it = 0; it < total; ++it) {
    if (config.likelihood_enabled) {
      beta = gibbs_update_beta(gram, cross, sigma2, prior_precision, rng);
      const double rss = residual_sum(gram, cross, cp.YtY, beta);
      sigma2 = gibbs_update_sigma2(rss, n, config.sigma2_shape, config.sigma2_rate, rng);
      if (!std::isfinite(sigma2) || !beta.allFinite()) {
        std::ostringstream msg;
        msg << "run_sampler: non-finite state at iteration " << it << " (tau = " << tau
            << ", sigma2 = " << sigma2 << ", rss = " << rss << ")";
        throw NumericalError(msg.str());
      }
    }

    const double log_current = log_target(tau);
    if (!std::isfinite(log_current)) {
      std::ostringstream msg;
      msg << "run_sampler: non-finite log target at iteration " << it << " (tau = " << tau
          << ", sigma2 = " << sigma2 << ")";
      throw NumericalError(msg.str());
    }
    const TauStep step = metropolis_update_tau(tau, log_current, proposal_sd, transform, log_target, rng);
    if (step.accepted) {
      tau = step.tau;
      if (refresh) {
        refresh(tau, design);
        if (design.fixed.cols() != q) throw ShapeError("run_sampler: refresh changed the column count");
        cp.refresh_fixed(design);
      }
      w = design.shell_weights(tau);
      cp.assemble(w, gram, cross);
    }

    if (it < config.burn_in) {
      window_accepts += step.accepted;
      if ((it + 1) % config.adaptation_window == 0) {
        const double rate = double(window_accepts) / config.adaptation_window;
        proposal_sd *= std::exp(rate - config.target_acceptance);
        out.adaptation.push_back({int(it), rate, proposal_sd});
        window_accepts = 0;
      }
    } else {
      post_accepts += step.accepted;
      if ((it - config.burn_in) % config.thin == 0) {
        // reporting order: F0, F1, spill, F2...
        out.coefficients(stored, 0) = beta(0);
        out.coefficients(stored, 1) = beta(1);
        out.coefficients(stored, 2) = beta(q);
        if (q > 2) out.coefficients.row(stored).tail(q - 2) = beta.segment(2, q - 2).transpose();
        out.sigma2(stored) = sigma2;
        out.tau(stored) = tau;
        ++stored;
      }
    }
  }
  out.proposal_sd = proposal_sd;
  out.acceptance_rate = double(post_accepts) / double(total - config.burn_in);
  return out;
}

void write_samples_csv(const std::filesystem::path& path, const PosteriorSamples& samples) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << "iteration";
  for (const auto& l : samples.labels) out << ',' << l;
  out << ",sigma2,tau\n";
  for (Eigen::Index i = 0; i < samples.draws(); ++i) {
    out << i;
    for (Eigen::Index j = 0; j < samples.coefficients.cols(); ++j)
      out << ',' << csv::format(samples.coefficients(i, j));
    out << ',' << csv::format(samples.sigma2(i)) << ',' << csv::format(samples.tau(i)) << '\n';
  }
}

void write_summary_csv(const std::filesystem::path& path, const PosteriorSamples& samples) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << "parameter,mean,sd,q2.5,q97.5,acceptance_rate\n";
  for (const auto& s : samples.summaries()) {
    out << s.name << ',' << csv::format(s.mean) << ',' << csv::format(s.sd) << ','
        << csv::format(s.q025) << ',' << csv::format(s.q975) << ','
        << (s.name == "tau" ? csv::format(samples.acceptance_rate) : std::string()) << '\n';
  }
}

}  // namespace sgps
