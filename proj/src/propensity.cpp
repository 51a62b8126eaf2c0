#include "sgps/propensity.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include "sgps/field_io.hpp"
#include "sgps/synth.hpp"

namespace sgps {

Eigen::VectorXd LogisticModel::linear_predictor(const Eigen::MatrixXd& design) const {
  if (design.cols() != coefficients.size())
    throw ShapeError("logistic design has " + std::to_string(design.cols()) + " columns, model has " +
                     std::to_string(coefficients.size()));
  return design * coefficients;
}

Eigen::VectorXd LogisticModel::fitted(const Eigen::MatrixXd& design) const {
  return linear_predictor(design).unaryExpr([](double eta) { return expit(eta); });
}

namespace {

double log_likelihood(const Eigen::VectorXd& eta, const Eigen::VectorXd& y) {
  // y*eta - log(1 + e^eta), evaluated without overflow
  double ll = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    const double e = eta(i);
    const double softplus = e > 0 ? e + std::log1p(std::exp(-e)) : std::log1p(std::exp(e));
    ll += y(i) * e - softplus;
  }
  return ll;
}

}  // namespace

LogisticModel fit_logistic(const Eigen::MatrixXd& design, const Eigen::VectorXd& labels,
                           const LogisticOptions& options) {
  const Eigen::Index n = design.rows();
  const Eigen::Index p = design.cols();
  if (labels.size() != n) throw ShapeError("fit_logistic: labels and design rows differ");
  if (n == 0 || p == 0) throw ShapeError("fit_logistic: empty design");
  for (Eigen::Index i = 0; i < n; ++i)
    if (labels(i) != 0.0 && labels(i) != 1.0) throw DomainError("fit_logistic: labels must be 0/1");
  if (!design.allFinite()) throw DomainError("fit_logistic: non-finite design entries");

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < p)
    throw SingularDesign("fit_logistic: design has rank " + std::to_string(qr.rank()) + " < " +
                         std::to_string(p) + " columns");

  const double mean = labels.mean();
  if (mean == 0.0 || mean == 1.0)
    throw NonConvergence("fit_logistic: all labels equal " + std::to_string(int(mean)) +
                         "; the MLE does not exist (complete separation)");

  LogisticModel model;
  model.coefficients = Eigen::VectorXd::Zero(p);
  for (int iter = 1; iter <= options.max_iterations; ++iter) {
    const Eigen::VectorXd eta = design * model.coefficients;
    const Eigen::VectorXd prob = eta.unaryExpr([](double e) { return expit(e); });
    const Eigen::VectorXd w = prob.array() * (1.0 - prob.array());
    const Eigen::VectorXd grad = design.transpose() * (labels - prob);
    const Eigen::MatrixXd info = design.transpose() * w.asDiagonal() * design;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
    const Eigen::VectorXd step = ldlt.solve(grad);
    if (ldlt.info() != Eigen::Success || !step.allFinite() || (w.array() == 0.0).any() ||
        model.coefficients.cwiseAbs().maxCoeff() > 1e6) {
      std::ostringstream msg;
      msg << "fit_logistic: IRLS diverged at iteration " << iter
          << " (max |coef| = " << model.coefficients.cwiseAbs().maxCoeff()
          << ", log-likelihood = " << log_likelihood(eta, labels)
          << "); data are likely separable";
      throw NonConvergence(msg.str());
    }
    model.coefficients += step;
    model.iterations = iter;
    if (step.cwiseAbs().maxCoeff() < options.tolerance) {
      const Eigen::VectorXd eta_new = design * model.coefficients;
      const Eigen::VectorXd p_new = eta_new.unaryExpr([](double e) { return expit(e); });
      model.gradient_norm = (design.transpose() * (labels - p_new)).norm();
      model.log_likelihood = log_likelihood(eta_new, labels);
      model.converged = model.gradient_norm < std::sqrt(options.tolerance) * std::max<double>(1.0, n);
      if (model.converged) return model;
    }
  }
  std::ostringstream msg;
  msg << "fit_logistic: no convergence in " << options.max_iterations
      << " iterations (max |coef| = " << model.coefficients.cwiseAbs().maxCoeff() << ")";
  throw NonConvergence(msg.str());
}

Eigen::VectorXd direct_summary(const LogisticModel& model, const Eigen::MatrixXd& design,
                               DirectScale scale) {
  const Eigen::VectorXd eta = model.linear_predictor(design);
  if (scale == DirectScale::raw) return eta.unaryExpr([](double e) { return expit(e); });
  // log expit(eta) = -softplus(-eta)
  return eta.unaryExpr([](double e) {
    return e < 0 ? e - std::log1p(std::exp(e)) : -std::log1p(std::exp(-e));
  });
}

SpilloverMoments spillover_moments(const Eigen::MatrixXd& probabilities,
                                   const Eigen::MatrixXd& distances, const KernelSpec& spec) {
  if (distances.rows() != distances.cols() || probabilities.rows() != distances.rows())
    throw ShapeError("spillover_moments: probabilities rows do not match location count");
  if ((probabilities.array() < 0.0).any() || (probabilities.array() > 1.0).any())
    throw DomainError("spillover_moments: probabilities must lie in [0, 1]");
  Eigen::MatrixXd k = kernel_matrix(distances, spec);
  k.diagonal().setZero();
  const Eigen::MatrixXd support = (k.array() > 0.0).cast<double>().matrix();
  // Finite stand-in for log 0 so that zero-support entries do not produce 0 * -inf.
  const Eigen::MatrixXd log_untreated =
      probabilities.unaryExpr([](double p) { return std::max(std::log1p(-p), -1e300); });

  SpilloverMoments m;
  m.p0 = (support * log_untreated).array().exp().matrix();
  m.mean = k * probabilities;
  m.variance = k.cwiseAbs2() * (probabilities.array() * (1.0 - probabilities.array())).matrix();
  return m;
}

SpilloverSummary spillover_summary(const Eigen::MatrixXd& probabilities,
                                   const Eigen::MatrixXd& distances, const KernelSpec& spec,
                                   const ClampPolicy& clamp) {
  const SpilloverMoments m = spillover_moments(probabilities, distances, spec);
  SpilloverSummary out;
  out.tau = spec.bandwidth;
  out.logit_p0.resize(m.p0.rows(), m.p0.cols());
  out.log_mean.resize(m.p0.rows(), m.p0.cols());
  out.log_variance.resize(m.p0.rows(), m.p0.cols());
  const double lo = clamp.p0_margin, hi = 1.0 - clamp.p0_margin;
  for (Eigen::Index j = 0; j < m.p0.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.p0.rows(); ++i) {
      double p0 = m.p0(i, j);
      if (p0 < lo || p0 > hi) {
        p0 = std::clamp(p0, lo, hi);
        ++out.clamped.p0;
      }
      out.logit_p0(i, j) = logit(p0);
      double e = m.mean(i, j);
      if (e < clamp.moment_floor) {
        e = clamp.moment_floor;
        ++out.clamped.mean;
      }
      out.log_mean(i, j) = std::log(e);
      double v = m.variance(i, j);
      if (v < clamp.moment_floor) {
        v = clamp.moment_floor;
        ++out.clamped.variance;
      }
      out.log_variance(i, j) = std::log(v);
    }
  }
  return out;
}

SpilloverSummary spillover_summary(const Eigen::MatrixXd& probabilities, const SpatialGrid& grid,
                                   const KernelSpec& spec, const ClampPolicy& clamp) {
  return spillover_summary(probabilities, grid.distances(), spec, clamp);
}

std::vector<Eigen::MatrixXd> simulate_spillover_distribution(const Eigen::VectorXd& probabilities,
                                                             const SpatialGrid& grid,
                                                             const std::vector<double>& taus,
                                                             int draws, Rng& rng,
                                                             KernelFamily family) {
  if (draws < 1) throw InvalidSpec("simulate_spillover_distribution: draws must be >= 1");
  if (probabilities.size() != grid.size())
    throw ShapeError("simulate_spillover_distribution: probabilities do not match grid");
  const Eigen::Index n = grid.size();
  Eigen::MatrixXd fields(n, draws);
  for (int d = 0; d < draws; ++d)
    for (Eigen::Index s = 0; s < n; ++s) fields(s, d) = rng.bernoulli(probabilities(s)) ? 1.0 : 0.0;
  std::vector<Eigen::MatrixXd> out;
  out.reserve(taus.size());
  for (double tau : taus)
    out.push_back(spillover_field(fields, grid, KernelSpec{family, tau}).transpose());
  return out;
}

Eigen::MatrixXd propensity_design(const Eigen::MatrixXd& covariates, const PropensityDesignSpec& spec) {
  const Eigen::Index n = covariates.rows();
  if (spec.kind == PropensityDesign::affine) {
    Eigen::MatrixXd d(n, covariates.cols() + 1);
    d.col(0).setOnes();
    d.rightCols(covariates.cols()) = covariates;
    return d;
  }
  std::vector<Eigen::MatrixXd> blocks;
  Eigen::Index cols = 1;
  for (Eigen::Index j = 0; j < covariates.cols(); ++j) {
    const auto basis = BSplineBasis<>::fit(covariates.col(j), spec.basis_count, spec.degree);
    if (basis.degenerate()) continue;
    blocks.push_back(basis.evaluate(covariates.col(j)).rightCols(spec.basis_count - 1));
    cols += blocks.back().cols();
  }
  Eigen::MatrixXd d(n, cols);
  d.col(0).setOnes();
  Eigen::Index at = 1;
  for (const auto& b : blocks) {
    d.middleCols(at, b.cols()) = b;
    at += b.cols();
  }
  return d;
}

std::vector<double> PropensitySummary::taus() const {
  std::vector<double> t;
  for (const auto& s : spill) t.push_back(s.tau);
  return t;
}

PropensitySummary summarize_propensity(const Eigen::MatrixXd& probabilities, const SpatialGrid& grid,
                                       const std::vector<double>& taus, KernelFamily family,
                                       DirectScale scale, const ClampPolicy& clamp) {
  PropensitySummary out;
  out.probabilities = probabilities;
  out.direct_scale = scale;
  if (scale == DirectScale::raw) {
    out.direct = probabilities;
  } else {
    out.direct = probabilities.unaryExpr([](double p) { return std::log(std::max(p, 1e-300)); });
  }
  for (double tau : taus) {
    out.spill.push_back(spillover_summary(probabilities, grid, KernelSpec{family, tau}, clamp));
    out.clamped += out.spill.back().clamped;
  }
  return out;
}

void write_propensity_csv(const std::filesystem::path& path, const PropensitySummary& summary) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << "location_id,replicate_id,tau,z1,z2,z3,z4\n";
  for (const auto& sp : summary.spill) {
    for (Eigen::Index r = 0; r < summary.direct.cols(); ++r) {
      for (Eigen::Index s = 0; s < summary.direct.rows(); ++s) {
        out << s << ',' << r << ',' << csv::format(sp.tau) << ',' << csv::format(summary.direct(s, r))
            << ',' << csv::format(sp.logit_p0(s, r)) << ',' << csv::format(sp.log_mean(s, r)) << ','
            << csv::format(sp.log_variance(s, r)) << '\n';
      }
    }
  }
}

}  // namespace sgps
