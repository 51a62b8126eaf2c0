#include "sgps/summary.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace sgps {

double quantile(Eigen::VectorXd values, double prob) {
  const Eigen::Index n = values.size();
  if (n == 0) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.data(), values.data() + n);
  const double h = (n - 1) * prob;
  const auto lo = static_cast<Eigen::Index>(std::floor(h));
  const auto hi = std::min<Eigen::Index>(lo + 1, n - 1);
  return values(lo) + (h - double(lo)) * (values(hi) - values(lo));
}

ParameterSummary summarize_draws(const std::string& name, const Eigen::VectorXd& draws) {
  ParameterSummary s;
  s.name = name;
  const Eigen::Index n = draws.size();
  if (n == 0) {
    s.mean = s.sd = s.q025 = s.q975 = std::numeric_limits<double>::quiet_NaN();
    return s;
  }
  s.mean = draws.mean();
  s.sd = n > 1 ? std::sqrt((draws.array() - s.mean).square().sum() / double(n - 1)) : 0.0;
  s.q025 = quantile(draws, 0.025);
  s.q975 = quantile(draws, 0.975);
  return s;
}

double batch_means_se(const Eigen::VectorXd& draws, Eigen::Index batches) {
  const Eigen::Index size = draws.size() / batches;
  if (size < 1) return std::numeric_limits<double>::quiet_NaN();
  Eigen::VectorXd means(batches);
  for (Eigen::Index b = 0; b < batches; ++b) means(b) = draws.segment(b * size, size).mean();
  const double m = means.mean();
  const double var = (means.array() - m).square().sum() / double(batches - 1);
  return std::sqrt(var / double(batches));
}

}  // namespace sgps
