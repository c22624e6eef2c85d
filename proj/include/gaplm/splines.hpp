#pragma once

#include <vector>

#include "gaplm/types.hpp"

namespace gaplm {

/// Interior knot count N_n = floor(n^{1/(2p+3)}), at least 1.
int knot_count(long n, int p);

/// Raw clamped B-spline basis of degree p on [0,1] with the given
/// equally-spaced-or-not interior knots. Returns N_n + p + 1 values that
/// are nonnegative and sum to one.
Vector eval_raw_basis(double x, const Vector& interior_knots, int p);

/// Exact integrals over [0,1] of each raw basis function:
/// (t_{j+p+1} - t_j)/(p+1) on the clamped knot vector. They sum to one.
Vector raw_basis_integrals(const Vector& interior_knots, int p);

/// Drops the first raw column and subtracts each remaining column's exact
/// integral over [0,1], so every spline in the span integrates to zero.
/// This keeps constants out of the spline space (identifiability against
/// the intercept) without shifting covariate-distribution means into the
/// linear part. Returns the centered design (J_n = N_n + p columns);
/// `offsets` receives the subtracted integrals.
Matrix center_basis(const Matrix& raw, const Vector& interior_knots, int p, Vector& offsets);

/// Per-covariate knot sequences, centered B-spline bases and the Gram
/// matrices K_l driving the group penalty. Immutable after build().
class SplineSystem {
 public:
  /// Builds knots, centering offsets and K_l from the training sample.
  static SplineSystem build(const ClusterDataset& ds, int p);

  int degree() const { return p_; }
  int n_interior() const { return n_interior_; }
  int basis_dim() const { return n_interior_ + p_; }  // J_n
  int n_covariates() const { return static_cast<int>(offsets_.size()); }

  /// Centered basis row for covariate l at x in [0,1]. Prediction points
  /// reuse the training centering offsets.
  Vector basis_row(int l, double x) const;

  const Matrix& gram(int l) const { return gram_[l]; }

  /// Empirical norm ||gamma_l||_{K_l} = ||s_l||_n of the spline function.
  double group_norm(int l, const Vector& gamma_l) const;

  /// alpha_l on a grid: the centered-basis expansion, which integrates to
  /// zero over [0,1] by construction.
  Vector eval_alpha(int l, const Vector& gamma_l, const Vector& x_grid) const;

 private:
  int p_ = 1;
  int n_interior_ = 1;
  std::vector<Vector> knots_;       // interior knots per covariate
  std::vector<Vector> offsets_;     // centering offsets (exact integrals), length J_n
  std::vector<Matrix> gram_;        // K_l, J_n x J_n
};

}  // namespace gaplm
