#pragma once

#include <algorithm>
#include <cmath>

#include <Eigen/Core>

#include "sgps/errors.hpp"

namespace sgps {

/// Clamped B-spline basis with equally spaced interior knots over [lo, hi].
///
/// basis_count = interior_knots + degree + 1. The boundary knots are repeated
/// degree+1 times, so the basis is a partition of unity on [lo, hi] and the first
/// (last) function equals 1 at lo (hi). Inputs outside [lo, hi] are clamped to the
/// range before evaluation.
///
/// A basis built from constant data is flagged `degenerate()`; it evaluates to a
/// single column of ones followed by zeros.
template <typename Scalar = double>
class BSplineBasis {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  BSplineBasis(Scalar lo, Scalar hi, int basis_count = 5, int degree = 3)
      : lo_(lo), hi_(hi), basis_count_(basis_count), degree_(degree) {
    if (degree < 0) throw InvalidSpec("B-spline degree must be nonnegative");
    if (basis_count < degree + 1) throw InvalidSpec("B-spline basis_count must be >= degree + 1");
    if (!std::isfinite(static_cast<double>(lo)) || !std::isfinite(static_cast<double>(hi)) || hi < lo)
      throw InvalidSpec("B-spline range must be finite with lo <= hi");
    degenerate_ = !(hi > lo);
    const int interior = basis_count - degree - 1;
    knots_.resize(basis_count + degree + 1);
    for (int i = 0; i <= degree; ++i) {
      knots_(i) = lo;
      knots_(basis_count + i) = hi;
    }
    for (int i = 1; i <= interior; ++i)
      knots_(degree + i) = lo + (hi - lo) * Scalar(i) / Scalar(interior + 1);
  }

  /// Knots at fixed intervals over the observed range of `values`.
  static BSplineBasis fit(const Eigen::Ref<const Vector>& values, int basis_count = 5,
                          int degree = 3) {
    if (values.size() == 0) throw InvalidSpec("B-spline fit: no values");
    if (!values.allFinite()) throw InvalidSpec("B-spline fit: non-finite values");
    return BSplineBasis(values.minCoeff(), values.maxCoeff(), basis_count, degree);
  }

  int degree() const { return degree_; }
  int basis_count() const { return basis_count_; }
  Scalar lo() const { return lo_; }
  Scalar hi() const { return hi_; }
  bool degenerate() const { return degenerate_; }
  const Vector& knots() const { return knots_; }

  /// One row per input, one column per basis function.
  Matrix evaluate(const Eigen::Ref<const Vector>& x) const {
    Matrix out = Matrix::Zero(x.size(), basis_count_);
    Vector values(degree_ + 1);
    for (Eigen::Index r = 0; r < x.size(); ++r) {
      if (degenerate_) {
        out(r, 0) = Scalar(1);
        continue;
      }
      const Scalar xc = std::clamp(x(r), lo_, hi_);
      const int span = find_span(xc);
      basis_functions(span, xc, values);
      for (int k = 0; k <= degree_; ++k) out(r, span - degree_ + k) = values(k);
    }
    return out;
  }

 private:
  // Index i with knots[i] <= x < knots[i+1], restricted to [degree, basis_count-1].
  int find_span(Scalar x) const {
    if (x >= knots_(basis_count_)) return basis_count_ - 1;
    const Scalar* first = knots_.data() + degree_ + 1;
    const Scalar* last = knots_.data() + basis_count_ + 1;
    const Scalar* it = std::upper_bound(first, last, x);
    return static_cast<int>(it - knots_.data()) - 1;
  }

  // Nonzero basis values on `span` via the triangular (de Boor) scheme.
  void basis_functions(int span, Scalar x, Vector& n) const {
    Vector left(degree_ + 1), right(degree_ + 1);
    n(0) = Scalar(1);
    for (int j = 1; j <= degree_; ++j) {
      left(j) = x - knots_(span + 1 - j);
      right(j) = knots_(span + j) - x;
      Scalar saved = Scalar(0);
      for (int r = 0; r < j; ++r) {
        const Scalar temp = n(r) / (right(r + 1) + left(j - r));
        n(r) = saved + right(r + 1) * temp;
        saved = left(j - r) * temp;
      }
      n(j) = saved;
    }
  }

  Scalar lo_, hi_;
  int basis_count_, degree_;
  bool degenerate_ = false;
  Vector knots_;
};

}  // namespace sgps
