#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "sgps/errors.hpp"

namespace sgps {

/// A field holds one value per location (rows, in grid row-major order) and
/// per replicate (columns).
using Field = Eigen::MatrixXd;
using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Square lattice of `side_count`² locations with spacing `spacing`.
///
/// Location (row, col) sits at (origin.x + col*spacing, origin.y + row*spacing)
/// and has index row*side_count + col. The pairwise distance matrix is built
/// once at construction.
class SpatialGrid {
 public:
  SpatialGrid(int side_count, double spacing, Eigen::Vector2d origin = Eigen::Vector2d::Zero());

  /// side_count points per axis spanning [0,1] inclusive (spacing 1/(side_count-1)).
  static SpatialGrid unit_square(int side_count);

  int side_count() const { return side_count_; }
  Eigen::Index size() const { return coords_.rows(); }
  double spacing() const { return spacing_; }
  const Eigen::MatrixX2d& coords() const { return coords_; }
  const Eigen::MatrixXd& distances() const { return distances_; }

  Eigen::Index index(int row, int col) const { return Eigen::Index(row) * side_count_ + col; }
  int row_of(Eigen::Index i) const { return static_cast<int>(i / side_count_); }
  int col_of(Eigen::Index i) const { return static_cast<int>(i % side_count_); }

 private:
  int side_count_;
  double spacing_;
  Eigen::MatrixX2d coords_;
  Eigen::MatrixXd distances_;
};

enum class KernelFamily { gaussian, indicator };

struct KernelSpec {
  KernelFamily family = KernelFamily::gaussian;
  double bandwidth = 0.3;

  void validate() const {
    if (!(bandwidth > 0.0) || !std::isfinite(bandwidth))
      throw InvalidSpec("kernel bandwidth must be positive and finite");
  }
};

const char* to_string(KernelFamily family);
KernelFamily kernel_family_from_string(const std::string& name);

/// Interference weight at distance d: exp{-(d/tau)^2} or 1{d < tau}.
template <typename Scalar>
Scalar kernel_weight(Scalar d, const KernelSpec& spec) {
  spec.validate();
  if (d < Scalar(0)) throw DomainError("kernel_weight: negative distance");
  const Scalar tau = static_cast<Scalar>(spec.bandwidth);
  if (spec.family == KernelFamily::indicator) return d < tau ? Scalar(1) : Scalar(0);
  const Scalar r = d / tau;
  return std::exp(-r * r);
}

/// Elementwise kernel weights for a distance matrix. Diagonal included as-is.
Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& distances, const KernelSpec& spec);

/// Spill-over treatment: at each location, the kernel-weighted sum of treatments at
/// all other locations. `treatment` is locations x replicates.
Field spillover_field(const Field& treatment, const Eigen::MatrixXd& distances,
                      const KernelSpec& spec);
Field spillover_field(const Field& treatment, const SpatialGrid& grid, const KernelSpec& spec);

/// A field with an observed-cell mask (true = observed).
struct MaskedField {
  Field values;
  Mask observed;

  static MaskedField complete(Field values);
  Eigen::Index missing_count() const { return observed.size() - observed.count(); }
};

/// Fill missing cells with the Gaussian-kernel weighted mean of observed cells in
/// the same replicate. Observed cells are returned unchanged.
Field kernel_smooth_impute(const MaskedField& field, const SpatialGrid& grid, double bandwidth);

/// Location pairs grouped by distinct distance.
///
/// Any isotropic kernel is constant on a group, so the spill-over sum factors as
/// `shell_sums(A) * shell_weights(spec)`: the sums depend only on the treatment
/// field and the weights only on the bandwidth. On a d x d lattice there are
/// O(d^2) groups instead of O(d^4) pairs.
class DistanceShells {
 public:
  explicit DistanceShells(const Eigen::MatrixXd& distances, double relative_tolerance = 1e-12);
  explicit DistanceShells(const SpatialGrid& grid) : DistanceShells(grid.distances()) {}

  Eigen::Index shell_count() const { return radii_.size(); }
  Eigen::Index location_count() const { return n_; }
  const Eigen::VectorXd& radii() const { return radii_; }

  /// Kernel weight per shell.
  Eigen::VectorXd weights(const KernelSpec& spec) const;

  /// Treatment summed per shell, for every (location, replicate). Rows follow the
  /// column-major vectorization of `treatment` (location fastest).
  Eigen::MatrixXd sums(const Field& treatment) const;

  /// Per-shell sums centred on a single location, one row per replicate.
  Eigen::MatrixXd sums_at(Eigen::Index location, const Field& treatment) const;

  /// Per-shell sums for selected cells, given as flat indices location + n * replicate.
  Eigen::MatrixXd sums_for(const Field& treatment, const std::vector<Eigen::Index>& cells) const;

 private:
  Eigen::Index n_;
  Eigen::VectorXd radii_;
  // shell id of pair (i, j) stored column-major; -1 on the diagonal
  std::vector<int> shell_of_pair_;
};

}  // namespace sgps
