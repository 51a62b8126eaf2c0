#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "sgps/bspline.hpp"
#include "sgps/spatial.hpp"

namespace sgps {

struct SplineSpec {
  int basis_count = 5;
  int degree = 3;
  bool standardize = true;
};

/// A named covariate evaluated at every observation. Conditioning terms are inputs to
/// the outcome model and are never modified by it.
struct ConditioningTerm {
  std::string name;
  Eigen::VectorXd values;
};

/// Record of one spline-expanded term inside a design.
struct SplineBlock {
  std::string name;
  double center = 0.0;
  double scale = 1.0;
  BSplineBasis<double> basis{0.0, 1.0};
  Eigen::Index first_column = 0;  // within the fixed-column matrix
  Eigen::Index columns = 0;
};

/// Outcome regression Y = F b + delta2 * spill(tau) + e.
///
/// F holds every column that does not depend on tau: the intercept, the own
/// treatment, linear covariates and spline blocks. The spill-over column is kept in
/// factored form, spill(tau) = shell_sums * w(tau), so that changing tau never touches
/// an observation-length vector. Each spline block drops its first basis function;
/// the intercept absorbs it.
///
/// Coefficients are reported in the order beta0, delta1, delta2, then the remaining
/// columns of F.
struct RegressionDesign {
  Eigen::VectorXd response;
  Eigen::MatrixXd fixed;
  Eigen::MatrixXd shell_sums;
  Eigen::VectorXd shell_radii;
  KernelFamily family = KernelFamily::gaussian;
  std::vector<std::string> fixed_labels;
  std::vector<SplineBlock> blocks;
  std::vector<std::string> notes;

  Eigen::Index observation_count() const { return response.size(); }
  /// Number of coefficients, spill-over column included.
  Eigen::Index coefficient_count() const { return fixed.cols() + 1; }

  Eigen::VectorXd shell_weights(double tau) const;
  Eigen::VectorXd spillover(double tau) const { return shell_sums * shell_weights(tau); }

  /// Coefficient labels in reporting order.
  std::vector<std::string> labels() const;

  /// Dense design matrix in reporting order, evaluated at tau.
  Eigen::MatrixXd matrix(double tau) const;
};

/// Assemble a design. `linear_terms` enter as single columns, `spline_terms` as
/// B-spline blocks. A spline term whose values are identical to an earlier one, or
/// that is constant, is skipped and noted.
RegressionDesign build_design(const Eigen::VectorXd& response, const Eigen::VectorXd& treatment,
                              const Eigen::MatrixXd& shell_sums, const Eigen::VectorXd& shell_radii,
                              KernelFamily family, const std::vector<ConditioningTerm>& linear_terms,
                              const std::vector<ConditioningTerm>& spline_terms,
                              const SplineSpec& spline = {});

}  // namespace sgps
