#pragma once

#include <cstdint>
#include <vector>

#include "gaplm/family.hpp"
#include "gaplm/rng.hpp"
#include "gaplm/splines.hpp"
#include "gaplm/types.hpp"

namespace testutil {

using gaplm::ClusterDataset;
using gaplm::Cluster;
using gaplm::Matrix;
using gaplm::Vector;

/// Random well-formed dataset: X uniform in [0,1], Z intercept plus
/// standard normals, Y from a linear-in-covariates gaussian model (or
/// logit-Bernoulli) with independent noise.
inline ClusterDataset random_dataset(int n, int t, int d_x, int d_z, uint64_t seed,
                                     gaplm::FamilyKind family =
                                         gaplm::FamilyKind::GaussianIdentity) {
  gaplm::Rng rng(seed);
  ClusterDataset ds;
  ds.d_x = d_x;
  ds.d_z = d_z;
  ds.clusters.resize(n);
  const gaplm::Family fam(family);
  for (auto& c : ds.clusters) {
    c.x.resize(t, d_x);
    c.z.resize(t, d_z);
    c.y.resize(t);
    for (int r = 0; r < t; ++r) {
      for (int l = 0; l < d_x; ++l) c.x(r, l) = rng.uniform();
      c.z(r, 0) = 1.0;
      for (int l = 1; l < d_z; ++l) c.z(r, l) = rng.normal();
      double eta = 0.5 * c.z.row(r).sum() / d_z;
      for (int l = 0; l < d_x; ++l) eta += 0.3 * (c.x(r, l) - 0.5);
      if (family == gaplm::FamilyKind::GaussianIdentity)
        c.y[r] = eta + 0.5 * rng.normal();
      else
        c.y[r] = rng.uniform() < fam.mu(eta) ? 1.0 : 0.0;
    }
  }
  return ds;
}

/// Scalar dataset: T = 1 per cluster, intercept-only Z, no X columns.
/// With gaussian identity and theta = 0, the extended score of cluster i
/// is just y_i.
inline ClusterDataset scalar_dataset(const std::vector<double>& y) {
  ClusterDataset ds;
  ds.d_x = 0;
  ds.d_z = 1;
  ds.clusters.resize(y.size());
  for (size_t i = 0; i < y.size(); ++i) {
    auto& c = ds.clusters[i];
    c.y = Vector::Constant(1, y[i]);
    c.x.resize(1, 0);
    c.z = Matrix::Constant(1, 1, 1.0);
  }
  return ds;
}

}  // namespace testutil
