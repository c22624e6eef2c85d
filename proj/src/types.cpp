#include "gaplm/types.hpp"

#include <stdexcept>

namespace gaplm {

ValidationReport validate_dataset(const ClusterDataset& ds) {
  ValidationReport report;
  if (ds.clusters.empty()) {
    report.violations.push_back("dataset has no clusters");
    return report;
  }
  for (size_t i = 0; i < ds.clusters.size(); ++i) {
    const Cluster& c = ds.clusters[i];
    const std::string tag = "cluster " + std::to_string(i) + ": ";
    const Eigen::Index t = c.y.size();
    if (t < 1) {
      report.violations.push_back(tag + "empty cluster");
      continue;
    }
    if (c.x.rows() != t || c.z.rows() != t) {
      report.violations.push_back(tag + "dimension mismatch between Y, X, Z");
      continue;
    }
    if (c.x.cols() != ds.d_x || c.z.cols() != ds.d_z) {
      report.violations.push_back(tag + "covariate column count differs from dataset");
      continue;
    }
    if ((c.x.array() < 0.0).any() || (c.x.array() > 1.0).any())
      report.violations.push_back(tag + "X out of range [0,1]");
    if (ds.d_z > 0 && (c.z.col(0).array() != 1.0).any())
      report.violations.push_back(tag + "missing intercept (first Z column must be 1)");
  }
  return report;
}

ClusterDataset subset_columns(const ClusterDataset& ds, const std::vector<int>& x_cols,
                              const std::vector<int>& z_cols) {
  ClusterDataset out;
  out.d_x = static_cast<int>(x_cols.size());
  out.d_z = static_cast<int>(z_cols.size());
  out.clusters.reserve(ds.clusters.size());
  for (const Cluster& c : ds.clusters) {
    Cluster r;
    r.y = c.y;
    r.x.resize(c.size(), out.d_x);
    r.z.resize(c.size(), out.d_z);
    for (size_t j = 0; j < x_cols.size(); ++j) r.x.col(j) = c.x.col(x_cols[j]);
    for (size_t j = 0; j < z_cols.size(); ++j) r.z.col(j) = c.z.col(z_cols[j]);
    out.clusters.push_back(std::move(r));
  }
  return out;
}

Vector Theta::pack() const {
  Vector v(packed_dim());
  v.head(d_z()) = beta;
  Eigen::Index offset = d_z();
  for (const Vector& g : gamma) {
    v.segment(offset, g.size()) = g;
    offset += g.size();
  }
  return v;
}

Theta Theta::unpack(const Vector& v, int d_z, int d_x, int j_n) {
  if (d_z < 0 || d_x < 0 || j_n < 0 || v.size() != d_z + static_cast<long>(d_x) * j_n)
    throw std::invalid_argument("Theta::unpack: vector length does not match (d_z, d_x, J_n)");
  Theta theta;
  theta.beta = v.head(d_z);
  theta.gamma.reserve(d_x);
  for (int l = 0; l < d_x; ++l)
    theta.gamma.push_back(v.segment(d_z + static_cast<long>(l) * j_n, j_n));
  return theta;
}

}  // namespace gaplm
