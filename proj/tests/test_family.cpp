#include <doctest.h>

#include <cmath>

#include "gaplm/family.hpp"
#include "gaplm/rng.hpp"

using namespace gaplm;

TEST_CASE("gaussian identity family") {
  const Family fam(FamilyKind::GaussianIdentity);
  CHECK(fam.mu(3.7) == 3.7);
  CHECK(fam.mu_dot(3.7) == 1.0);
  CHECK(fam.variance(fam.mu(3.7)) == 1.0);
  CHECK(fam.mu_ddot(-2.0) == 0.0);
  CHECK(fam.variance_dmu(5.0) == 0.0);
}

TEST_CASE("logit family at the symmetry point") {
  const Family fam(FamilyKind::BinomialLogit);
  CHECK(fam.mu(0.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(fam.mu_dot(0.0) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(fam.variance(0.5) == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("logit family at eta = ln 3") {
  const Family fam(FamilyKind::BinomialLogit);
  const double eta = std::log(3.0);
  CHECK(fam.mu(eta) == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(fam.mu_dot(eta) == doctest::Approx(0.1875).epsilon(1e-12));
}

TEST_CASE("logit symmetry: mu(-eta) = 1 - mu(eta), mu_dot even") {
  const Family fam(FamilyKind::BinomialLogit);
  Rng rng(31);
  for (int i = 0; i < 100; ++i) {
    const double eta = rng.uniform(-8.0, 8.0);
    CHECK(std::abs(fam.mu(-eta) - (1.0 - fam.mu(eta))) <= 1e-14);
    CHECK(std::abs(fam.mu_dot(eta) - fam.mu_dot(-eta)) <= 1e-14);
  }
}

TEST_CASE("mu_dot and mu_ddot match finite differences") {
  Rng rng(37);
  for (const FamilyKind kind : {FamilyKind::GaussianIdentity, FamilyKind::BinomialLogit}) {
    const Family fam(kind);
    for (int i = 0; i < 100; ++i) {
      const double eta = rng.uniform(-4.0, 4.0);
      const double h = 1e-6;
      const double fd1 = (fam.mu(eta + h) - fam.mu(eta - h)) / (2.0 * h);
      const double fd2 = (fam.mu_dot(eta + h) - fam.mu_dot(eta - h)) / (2.0 * h);
      CHECK(std::abs(fam.mu_dot(eta) - fd1) <= 1e-6 * (std::abs(fd1) + 1.0));
      CHECK(std::abs(fam.mu_ddot(eta) - fd2) <= 1e-5 * (std::abs(fd2) + 1.0));
    }
  }
}

TEST_CASE("logit variance is clamped away from zero") {
  const Family fam(FamilyKind::BinomialLogit);
  CHECK(fam.variance(0.0) > 0.0);
  CHECK(fam.variance(1.0) > 0.0);
  CHECK(fam.variance(0.0) == doctest::Approx(Family::kClamp).epsilon(1e-6));
}

TEST_CASE("non-finite linear predictor is rejected") {
  const Family fam(FamilyKind::BinomialLogit);
  CHECK_THROWS_AS(fam.mu(std::numeric_limits<double>::quiet_NaN()), std::domain_error);
  CHECK_THROWS_AS(fam.mu_dot(std::numeric_limits<double>::infinity()), std::domain_error);
}
