#include "sgps/spatial.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <string>

namespace sgps {

SpatialGrid::SpatialGrid(int side_count, double spacing, Eigen::Vector2d origin)
    : side_count_(side_count), spacing_(spacing) {
  if (side_count < 1) throw InvalidSpec("grid side_count must be positive");
  if (!(spacing > 0.0) || !std::isfinite(spacing)) throw InvalidSpec("grid spacing must be positive");
  const Eigen::Index n = Eigen::Index(side_count) * side_count;
  coords_.resize(n, 2);
  for (int r = 0; r < side_count; ++r) {
    for (int c = 0; c < side_count; ++c) {
      coords_(index(r, c), 0) = origin.x() + c * spacing;
      coords_(index(r, c), 1) = origin.y() + r * spacing;
    }
  }
  distances_.resize(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      distances_(i, j) = (coords_.row(i) - coords_.row(j)).norm();
    }
  }
}

SpatialGrid SpatialGrid::unit_square(int side_count) {
  if (side_count < 2) throw InvalidSpec("unit-square grid needs at least 2 cells per axis");
  return SpatialGrid(side_count, 1.0 / (side_count - 1));
}

const char* to_string(KernelFamily family) {
  return family == KernelFamily::gaussian ? "gaussian" : "indicator";
}

KernelFamily kernel_family_from_string(const std::string& name) {
  if (name == "gaussian") return KernelFamily::gaussian;
  if (name == "indicator") return KernelFamily::indicator;
  throw InvalidSpec("unknown kernel family '" + name + "'");
}

Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& distances, const KernelSpec& spec) {
  spec.validate();
  if ((distances.array() < 0.0).any()) throw DomainError("kernel_matrix: negative distance");
  if (spec.family == KernelFamily::indicator)
    return (distances.array() < spec.bandwidth).cast<double>().matrix();
  return (-(distances.array() / spec.bandwidth).square()).exp().matrix();
}

Field spillover_field(const Field& treatment, const Eigen::MatrixXd& distances,
                      const KernelSpec& spec) {
  if (distances.rows() != distances.cols() || treatment.rows() != distances.rows())
    throw ShapeError("spillover_field: treatment rows (" + std::to_string(treatment.rows()) +
                     ") do not match location count (" + std::to_string(distances.rows()) + ")");
  Eigen::MatrixXd k = kernel_matrix(distances, spec);
  k.diagonal().setZero();
  return k * treatment;
}

Field spillover_field(const Field& treatment, const SpatialGrid& grid, const KernelSpec& spec) {
  return spillover_field(treatment, grid.distances(), spec);
}

MaskedField MaskedField::complete(Field values) {
  Mask observed = Mask::Constant(values.rows(), values.cols(), true);
  return MaskedField{std::move(values), std::move(observed)};
}

Field kernel_smooth_impute(const MaskedField& field, const SpatialGrid& grid, double bandwidth) {
  if (!(bandwidth > 0.0)) throw InvalidSpec("imputation bandwidth must be positive");
  if (field.values.rows() != grid.size() || field.observed.rows() != field.values.rows() ||
      field.observed.cols() != field.values.cols())
    throw ShapeError("kernel_smooth_impute: field/mask/grid sizes disagree");
  const Eigen::MatrixXd& D = grid.distances();
  Field out = field.values;
  std::vector<double> logw;
  for (Eigen::Index r = 0; r < out.cols(); ++r) {
    const auto seen = field.observed.col(r);
    if (seen.all()) continue;
    if (!seen.any())
      throw Unimputable("kernel_smooth_impute: replicate " + std::to_string(r) +
                        " has no observed cells");
    for (Eigen::Index s = 0; s < out.rows(); ++s) {
      if (seen(s)) continue;
      // Log weights shifted by their maximum, so distant observations never underflow to 0/0.
      logw.clear();
      double top = -std::numeric_limits<double>::infinity();
      for (Eigen::Index t = 0; t < out.rows(); ++t) {
        if (!seen(t)) continue;
        const double z = D(s, t) / bandwidth;
        logw.push_back(-z * z);
        top = std::max(top, logw.back());
      }
      double num = 0.0, den = 0.0;
      std::size_t k = 0;
      for (Eigen::Index t = 0; t < out.rows(); ++t) {
        if (!seen(t)) continue;
        const double w = std::exp(logw[k++] - top);
        num += w * field.values(t, r);
        den += w;
      }
      out(s, r) = num / den;
    }
  }
  return out;
}

DistanceShells::DistanceShells(const Eigen::MatrixXd& distances, double relative_tolerance)
    : n_(distances.rows()) {
  if (distances.rows() != distances.cols()) throw ShapeError("DistanceShells: distances not square");
  std::vector<double> off;
  off.reserve(static_cast<std::size_t>(n_ * n_));
  for (Eigen::Index j = 0; j < n_; ++j)
    for (Eigen::Index i = 0; i < n_; ++i)
      if (i != j) off.push_back(distances(i, j));
  std::sort(off.begin(), off.end());
  std::vector<double> radii;
  for (double d : off) {
    if (radii.empty() || d - radii.back() > relative_tolerance * std::max(1.0, d)) radii.push_back(d);
  }
  radii_ = Eigen::Map<Eigen::VectorXd>(radii.data(), Eigen::Index(radii.size()));
  shell_of_pair_.assign(static_cast<std::size_t>(n_ * n_), -1);
  for (Eigen::Index j = 0; j < n_; ++j) {
    for (Eigen::Index i = 0; i < n_; ++i) {
      if (i == j) continue;
      const double d = distances(i, j);
      // the owning shell is the last radius <= d
      auto it = std::upper_bound(radii.begin(), radii.end(), d);
      shell_of_pair_[static_cast<std::size_t>(j * n_ + i)] =
          static_cast<int>(std::distance(radii.begin(), it)) - 1;
    }
  }
}

Eigen::VectorXd DistanceShells::weights(const KernelSpec& spec) const {
  spec.validate();
  Eigen::VectorXd w(radii_.size());
  for (Eigen::Index k = 0; k < radii_.size(); ++k) w(k) = kernel_weight(radii_(k), spec);
  return w;
}

Eigen::MatrixXd DistanceShells::sums(const Field& treatment) const {
  if (treatment.rows() != n_) throw ShapeError("DistanceShells::sums: treatment rows mismatch");
  const Eigen::Index reps = treatment.cols();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n_ * reps, radii_.size());
  for (Eigen::Index r = 0; r < reps; ++r) {
    for (Eigen::Index j = 0; j < n_; ++j) {
      const double a = treatment(j, r);
      if (a == 0.0) continue;
      for (Eigen::Index i = 0; i < n_; ++i) {
        const int k = shell_of_pair_[static_cast<std::size_t>(j * n_ + i)];
        if (k >= 0) out(r * n_ + i, k) += a;
      }
    }
  }
  return out;
}

Eigen::MatrixXd DistanceShells::sums_at(Eigen::Index location, const Field& treatment) const {
  if (treatment.rows() != n_) throw ShapeError("DistanceShells::sums_at: treatment rows mismatch");
  if (location < 0 || location >= n_) throw ShapeError("DistanceShells::sums_at: bad location");
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(treatment.cols(), radii_.size());
  for (Eigen::Index j = 0; j < n_; ++j) {
    const int k = shell_of_pair_[static_cast<std::size_t>(j * n_ + location)];
    if (k < 0) continue;
    out.col(k) += treatment.row(j).transpose();
  }
  return out;
}

Eigen::MatrixXd DistanceShells::sums_for(const Field& treatment,
                                         const std::vector<Eigen::Index>& cells) const {
  if (treatment.rows() != n_) throw ShapeError("DistanceShells::sums_for: treatment rows mismatch");
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(Eigen::Index(cells.size()), radii_.size());
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const Eigen::Index s = cells[c] % n_;
    const Eigen::Index r = cells[c] / n_;
    if (r >= treatment.cols()) throw ShapeError("DistanceShells::sums_for: cell out of range");
    for (Eigen::Index j = 0; j < n_; ++j) {
      const double a = treatment(j, r);
      if (a == 0.0 || j == s) continue;
      out(Eigen::Index(c), shell_of_pair_[static_cast<std::size_t>(s * n_ + j)]) += a;
    }
  }
  return out;
}

}  // namespace sgps
