#pragma once

#include <functional>
#include <vector>

#include "gaplm/splines.hpp"
#include "gaplm/types.hpp"

namespace gaplm {

/// Data-generating truth for simulation designs.
struct TrueModel {
  std::vector<std::function<double(double)>> alpha;  // d_x component functions
  Vector beta;                                       // d_z
  FamilyKind family = FamilyKind::GaussianIdentity;
  std::vector<int> active_linear;         // indices of nonzero beta (incl. intercept)
  std::vector<int> active_nonparametric;  // indices of nonzero alpha

  double eta(const Vector& x_row, const Vector& z_row) const;
};

/// Mean squared difference of fitted vs true mean responses on the mu
/// scale over an independent test set.
double model_error(const SplineSystem& splines, const Theta& theta, const TrueModel& truth,
                   const ClusterDataset& test);

/// In-sample / holdout mean squared error of Y-hat (identity-link scale
/// for Gaussian, probability scale for the logit).
double msee(const SplineSystem& splines, const Theta& theta, const ClusterDataset& ds,
            FamilyKind family);

}  // namespace gaplm
