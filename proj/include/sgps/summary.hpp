#pragma once

#include <string>

#include <Eigen/Core>

namespace sgps {

struct ParameterSummary {
  std::string name;
  double mean = 0.0;
  double sd = 0.0;
  double q025 = 0.0;
  double q975 = 0.0;
};

/// Sample quantile with linear interpolation between order statistics (R type 7).
double quantile(Eigen::VectorXd values, double prob);

ParameterSummary summarize_draws(const std::string& name, const Eigen::VectorXd& draws);

/// Standard error of the mean by non-overlapping batch means.
double batch_means_se(const Eigen::VectorXd& draws, Eigen::Index batches = 50);

}  // namespace sgps
