#pragma once

#include <cmath>
#include <stdexcept>

#include "gaplm/types.hpp"

namespace gaplm {

/// Link/variance machinery for the marginal mean model. The scale
/// parameter is fixed at 1; it cancels in the QIF objective.
class Family {
 public:
  explicit Family(FamilyKind kind) : kind_(kind) {}

  FamilyKind kind() const { return kind_; }

  // inverse link g^{-1}(eta)
  double mu(double eta) const {
    check(eta);
    if (kind_ == FamilyKind::GaussianIdentity) return eta;
    return 1.0 / (1.0 + std::exp(-eta));
  }

  // d mu / d eta
  double mu_dot(double eta) const {
    check(eta);
    if (kind_ == FamilyKind::GaussianIdentity) return 1.0;
    const double m = mu(eta);
    return m * (1.0 - m);
  }

  // d^2 mu / d eta^2, needed by the analytic score Jacobian
  double mu_ddot(double eta) const {
    check(eta);
    if (kind_ == FamilyKind::GaussianIdentity) return 0.0;
    const double m = mu(eta);
    return m * (1.0 - m) * (1.0 - 2.0 * m);
  }

  // V(mu); the logit variance is clamped away from 0 so A^{-1/2} stays finite
  double variance(double mu_value) const {
    if (kind_ == FamilyKind::GaussianIdentity) return 1.0;
    const double clamped = std::min(std::max(mu_value, kClamp), 1.0 - kClamp);
    return clamped * (1.0 - clamped);
  }

  // dV/dmu, used when differentiating the extended scores
  double variance_dmu(double mu_value) const {
    if (kind_ == FamilyKind::GaussianIdentity) return 0.0;
    const double clamped = std::min(std::max(mu_value, kClamp), 1.0 - kClamp);
    return 1.0 - 2.0 * clamped;
  }

  static constexpr double kClamp = 1e-10;

 private:
  void check(double eta) const {
    if (!std::isfinite(eta)) throw std::domain_error("Family: non-finite linear predictor");
  }

  FamilyKind kind_;
};

}  // namespace gaplm
