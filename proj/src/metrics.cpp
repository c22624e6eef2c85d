#include "gaplm/metrics.hpp"

#include <cmath>

#include "gaplm/family.hpp"

namespace gaplm {

double TrueModel::eta(const Vector& x_row, const Vector& z_row) const {
  double e = z_row.dot(beta);
  for (size_t l = 0; l < alpha.size(); ++l) e += alpha[l](x_row[static_cast<Eigen::Index>(l)]);
  return e;
}

namespace {

double fitted_eta(const SplineSystem& splines, const Theta& theta, const Vector& x_row,
                  const Vector& z_row) {
  double e = z_row.dot(theta.beta);
  for (int l = 0; l < theta.d_x(); ++l) e += splines.basis_row(l, x_row[l]).dot(theta.gamma[l]);
  return e;
}

}  // namespace

double model_error(const SplineSystem& splines, const Theta& theta, const TrueModel& truth,
                   const ClusterDataset& test) {
  const Family family(truth.family);
  double total = 0.0;
  long count = 0;
  for (const Cluster& c : test.clusters) {
    for (Eigen::Index t = 0; t < c.size(); ++t) {
      const Vector x_row = c.x.row(t);
      const Vector z_row = c.z.row(t);
      const double fit_mu = family.mu(fitted_eta(splines, theta, x_row, z_row));
      const double true_mu = family.mu(truth.eta(x_row, z_row));
      const double diff = fit_mu - true_mu;
      total += diff * diff;
      ++count;
    }
  }
  return count > 0 ? total / count : 0.0;
}

double msee(const SplineSystem& splines, const Theta& theta, const ClusterDataset& ds,
            FamilyKind family_kind) {
  const Family family(family_kind);
  double total = 0.0;
  long count = 0;
  for (const Cluster& c : ds.clusters) {
    for (Eigen::Index t = 0; t < c.size(); ++t) {
      const double y_hat = family.mu(fitted_eta(splines, theta, c.x.row(t), c.z.row(t)));
      const double diff = c.y[t] - y_hat;
      total += diff * diff;
      ++count;
    }
  }
  return count > 0 ? total / count : 0.0;
}

}  // namespace gaplm
