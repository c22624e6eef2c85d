#include "gaplm/splines.hpp"

#include <cmath>
#include <stdexcept>

namespace gaplm {

int knot_count(long n, int p) {
  if (n < 1 || p < 1) throw std::invalid_argument("knot_count: need n >= 1 and p >= 1");
  const int nn = static_cast<int>(std::floor(std::pow(static_cast<double>(n), 1.0 / (2.0 * p + 3.0))));
  return std::max(nn, 1);
}

Vector eval_raw_basis(double x, const Vector& interior_knots, int p) {
  if (x < 0.0 || x > 1.0) throw std::domain_error("eval_raw_basis: x outside [0,1]");
  const int n_interior = static_cast<int>(interior_knots.size());
  const int n_basis = n_interior + p + 1;

  // clamped knot vector: p+1 copies of 0 and 1 around the interior knots
  const int n_knots = n_basis + p + 1;
  Vector knots(n_knots);
  for (int i = 0; i <= p; ++i) knots[i] = 0.0;
  for (int i = 0; i < n_interior; ++i) knots[p + 1 + i] = interior_knots[i];
  for (int i = 0; i <= p; ++i) knots[n_knots - 1 - i] = 1.0;

  // locate the knot span, treating x == 1 as the last interval
  int span = p;
  while (span < n_basis - 1 && x >= knots[span + 1]) ++span;

  // Cox-de Boor recursion over the p+1 active functions
  Vector active = Vector::Zero(p + 1);
  active[0] = 1.0;
  Vector left(p + 1), right(p + 1);
  for (int j = 1; j <= p; ++j) {
    left[j] = x - knots[span + 1 - j];
    right[j] = knots[span + j] - x;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double denom = right[r + 1] + left[j - r];
      const double tmp = denom > 0.0 ? active[r] / denom : 0.0;
      active[r] = saved + right[r + 1] * tmp;
      saved = left[j - r] * tmp;
    }
    active[j] = saved;
  }

  Vector out = Vector::Zero(n_basis);
  out.segment(span - p, p + 1) = active;
  return out;
}

Vector raw_basis_integrals(const Vector& interior_knots, int p) {
  const int n_interior = static_cast<int>(interior_knots.size());
  const int n_basis = n_interior + p + 1;
  const int n_knots = n_basis + p + 1;
  Vector knots(n_knots);
  for (int i = 0; i <= p; ++i) knots[i] = 0.0;
  for (int i = 0; i < n_interior; ++i) knots[p + 1 + i] = interior_knots[i];
  for (int i = 0; i <= p; ++i) knots[n_knots - 1 - i] = 1.0;
  Vector integrals(n_basis);
  for (int j = 0; j < n_basis; ++j) integrals[j] = (knots[j + p + 1] - knots[j]) / (p + 1.0);
  return integrals;
}

Matrix center_basis(const Matrix& raw, const Vector& interior_knots, int p, Vector& offsets) {
  if (raw.cols() < 2) throw std::invalid_argument("center_basis: raw design too narrow");
  // the raw basis sums to one, so the first column is redundant with the
  // intercept; drop it, then subtract exact integrals so the span holds
  // only zero-integral splines
  const Vector integrals = raw_basis_integrals(interior_knots, p);
  Matrix centered = raw.rightCols(raw.cols() - 1);
  offsets = integrals.tail(raw.cols() - 1);
  centered.rowwise() -= offsets.transpose();
  return centered;
}

SplineSystem SplineSystem::build(const ClusterDataset& ds, int p) {
  if (p < 1) throw std::invalid_argument("SplineSystem: spline degree must be >= 1");
  SplineSystem sys;
  sys.p_ = p;
  sys.n_interior_ = knot_count(ds.n_clusters(), p);

  Vector interior(sys.n_interior_);
  for (int i = 0; i < sys.n_interior_; ++i)
    interior[i] = static_cast<double>(i + 1) / (sys.n_interior_ + 1);

  const long n_obs = ds.n_obs();
  const int j_n = sys.basis_dim();
  sys.knots_.assign(ds.d_x, interior);
  sys.offsets_.resize(ds.d_x);
  sys.gram_.resize(ds.d_x);

  for (int l = 0; l < ds.d_x; ++l) {
    Matrix raw(n_obs, sys.n_interior_ + p + 1);
    long row = 0;
    for (const Cluster& c : ds.clusters)
      for (Eigen::Index t = 0; t < c.size(); ++t)
        raw.row(row++) = eval_raw_basis(c.x(t, l), interior, p).transpose();

    Matrix centered = center_basis(raw, interior, p, sys.offsets_[l]);

    // K_l = (1/n) sum_i (1/T_i) sum_t b b'
    Matrix k = Matrix::Zero(j_n, j_n);
    row = 0;
    for (const Cluster& c : ds.clusters) {
      Matrix block = centered.middleRows(row, c.size());
      k.noalias() += block.transpose() * block / static_cast<double>(c.size());
      row += c.size();
    }
    k /= static_cast<double>(ds.n_clusters());
    sys.gram_[l] = 0.5 * (k + k.transpose());
  }
  return sys;
}

Vector SplineSystem::basis_row(int l, double x) const {
  const Vector raw = eval_raw_basis(x, knots_[l], p_);
  return raw.tail(basis_dim()) - offsets_[l];
}

double SplineSystem::group_norm(int l, const Vector& gamma_l) const {
  const double q = gamma_l.dot(gram_[l] * gamma_l);
  return std::sqrt(std::max(q, 0.0));
}

Vector SplineSystem::eval_alpha(int l, const Vector& gamma_l, const Vector& x_grid) const {
  Vector out(x_grid.size());
  for (Eigen::Index i = 0; i < x_grid.size(); ++i)
    out[i] = basis_row(l, x_grid[i]).dot(gamma_l);
  return out;
}

}  // namespace gaplm
