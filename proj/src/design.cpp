#include "sgps/design.hpp"

#include <cmath>

namespace sgps {

Eigen::VectorXd RegressionDesign::shell_weights(double tau) const {
  const KernelSpec spec{family, tau};
  spec.validate();
  Eigen::VectorXd w(shell_radii.size());
  for (Eigen::Index k = 0; k < w.size(); ++k) w(k) = kernel_weight(shell_radii(k), spec);
  return w;
}

std::vector<std::string> RegressionDesign::labels() const {
  std::vector<std::string> out;
  out.reserve(static_cast<std::size_t>(coefficient_count()));
  out.push_back(fixed_labels.at(0));
  out.push_back(fixed_labels.at(1));
  out.push_back("delta2");
  for (std::size_t j = 2; j < fixed_labels.size(); ++j) out.push_back(fixed_labels[j]);
  return out;
}

Eigen::MatrixXd RegressionDesign::matrix(double tau) const {
  Eigen::MatrixXd m(observation_count(), coefficient_count());
  m.leftCols(2) = fixed.leftCols(2);
  m.col(2) = spillover(tau);
  m.rightCols(fixed.cols() - 2) = fixed.rightCols(fixed.cols() - 2);
  return m;
}

RegressionDesign build_design(const Eigen::VectorXd& response, const Eigen::VectorXd& treatment,
                              const Eigen::MatrixXd& shell_sums, const Eigen::VectorXd& shell_radii,
                              KernelFamily family, const std::vector<ConditioningTerm>& linear_terms,
                              const std::vector<ConditioningTerm>& spline_terms,
                              const SplineSpec& spline) {
  const Eigen::Index n = response.size();
  if (treatment.size() != n || shell_sums.rows() != n)
    throw ShapeError("build_design: response, treatment and shell sums must share a row count");
  if (shell_sums.cols() != shell_radii.size())
    throw ShapeError("build_design: shell sums and radii disagree");
  if (!response.allFinite() || !treatment.allFinite() || !shell_sums.allFinite())
    throw DomainError("build_design: non-finite inputs");

  RegressionDesign d;
  d.response = response;
  d.shell_sums = shell_sums;
  d.shell_radii = shell_radii;
  d.family = family;

  std::vector<Eigen::VectorXd> cols{Eigen::VectorXd::Ones(n), treatment};
  d.fixed_labels = {"beta0", "delta1"};

  for (const auto& term : linear_terms) {
    if (term.values.size() != n) throw ShapeError("build_design: term '" + term.name + "' misaligned");
    if (!term.values.allFinite()) throw DomainError("build_design: term '" + term.name + "' non-finite");
    cols.push_back(term.values);
    d.fixed_labels.push_back(term.name);
  }

  std::vector<const ConditioningTerm*> seen;
  for (const auto& term : spline_terms) {
    if (term.values.size() != n) throw ShapeError("build_design: term '" + term.name + "' misaligned");
    if (!term.values.allFinite()) throw DomainError("build_design: term '" + term.name + "' non-finite");
    const ConditioningTerm* duplicate = nullptr;
    for (const auto* s : seen)
      if (s->values == term.values) duplicate = s;
    if (duplicate) {
      d.notes.push_back("term '" + term.name + "' identical to '" + duplicate->name + "'; skipped");
      continue;
    }
    seen.push_back(&term);

    SplineBlock block;
    block.name = term.name;
    Eigen::VectorXd x = term.values;
    if (spline.standardize) {
      block.center = x.mean();
      const double var = n > 1 ? (x.array() - block.center).square().sum() / double(n - 1) : 0.0;
      block.scale = var > 0.0 ? std::sqrt(var) : 1.0;
      x = (x.array() - block.center) / block.scale;
    }
    block.basis = BSplineBasis<double>::fit(x, spline.basis_count, spline.degree);
    if (block.basis.degenerate()) {
      d.notes.push_back("term '" + term.name + "' is constant; skipped");
      continue;
    }
    const Eigen::MatrixXd b = block.basis.evaluate(x);
    block.first_column = Eigen::Index(cols.size());
    block.columns = b.cols() - 1;
    for (Eigen::Index j = 1; j < b.cols(); ++j) {
      cols.push_back(b.col(j));
      d.fixed_labels.push_back("spl[" + term.name + "]." + std::to_string(j + 1));
    }
    d.blocks.push_back(std::move(block));
  }

  d.fixed.resize(n, Eigen::Index(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) d.fixed.col(Eigen::Index(j)) = cols[j];
  return d;
}

}  // namespace sgps
