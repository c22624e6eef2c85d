#include <doctest.h>

#include <cmath>

#include "gaplm/sim.hpp"
#include "helpers.hpp"

using namespace gaplm;

TEST_CASE("example 1 dimensions follow round(2 n^(1/4))") {
  CHECK(gen_example1(100, 1).data.d_x == 6);
  CHECK(gen_example1(100, 1).data.d_z == 6);
  CHECK(gen_example1(500, 1).data.d_x == 9);  // 2 * 500^(1/4) = 9.457
  const SimulatedData sim = gen_example1(200, 1);
  CHECK(sim.data.d_x == 8);
  CHECK(sim.data.n_clusters() == 200);
  CHECK(sim.data.clusters[0].size() == 5);
}

TEST_CASE("generators are deterministic in the seed") {
  const SimulatedData a = gen_example1(50, 42);
  const SimulatedData b = gen_example1(50, 42);
  const SimulatedData c = gen_example1(50, 43);
  CHECK((a.data.clusters[7].y - b.data.clusters[7].y).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.data.clusters[7].x - b.data.clusters[7].x).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.data.clusters[7].y - c.data.clusters[7].y).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("generated datasets pass validation") {
  CHECK(validate_dataset(gen_example1(60, 3).data).ok());
  CHECK(validate_dataset(gen_example2(60, 3).data).ok());
  CHECK(validate_dataset(gen_example3(5, 40, 8).data).ok());
}

TEST_CASE("true component functions integrate to zero on [0,1]") {
  const auto check_zero_integral = [](const std::function<double(double)>& f) {
    const int m = 200000;
    double integral = 0.0;
    for (int i = 0; i < m; ++i) integral += f((i + 0.5) / m) / m;
    CHECK(std::abs(integral) <= 1e-10);
  };
  const SimulatedData e1 = gen_example1(50, 1, true);
  check_zero_integral(e1.truth.alpha[0]);  // sin(2 pi x)
  check_zero_integral(e1.truth.alpha[1]);  // 8x(1-x) - 4/3
  const SimulatedData e3 = gen_example3(1, 10, 4, true);
  check_zero_integral(e3.truth.alpha[0]);  // cos(2 pi x)/4
}

TEST_CASE("example 1 truth marks the first two variables of each block") {
  const SimulatedData sim = gen_example1(100, 9, true);
  CHECK(sim.truth.active_linear == std::vector<int>{0, 1});
  CHECK(sim.truth.active_nonparametric == std::vector<int>{0, 1});
  CHECK(sim.truth.beta[0] == 1.0);
  CHECK(sim.truth.beta[1] == 2.0);
  for (int l = 2; l < sim.data.d_z; ++l) CHECK(sim.truth.beta[l] == 0.0);
}

TEST_CASE("example 3 defaults and truth") {
  const SimulatedData sim = gen_example3(2, 30, 6);
  CHECK(sim.data.d_x == 5);
  CHECK(sim.data.d_z == 10);
  CHECK(sim.data.clusters[0].size() == 6);
  CHECK(sim.truth.family == FamilyKind::BinomialLogit);
  CHECK(sim.truth.active_linear == std::vector<int>{0});
  CHECK(sim.truth.beta[0] == 1.0);
  for (const Cluster& c : sim.data.clusters)
    for (Eigen::Index t = 0; t < c.size(); ++t)
      CHECK((c.y[t] == 0.0 || c.y[t] == 1.0));
}

TEST_CASE("random correlation matrices: unit diagonal, symmetric, PD") {
  for (uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(seed);
    const Matrix g = gen_random_correlation(5, rng);
    CHECK((g.diagonal() - Vector::Ones(5)).cwiseAbs().maxCoeff() == 0.0);
    CHECK((g - g.transpose()).cwiseAbs().maxCoeff() <= 1e-14);
    Eigen::SelfAdjointEigenSolver<Matrix> es(g);
    CHECK(es.eigenvalues().minCoeff() > 0.0);
  }
  Rng rng(1);
  CHECK_THROWS(gen_random_correlation(1, rng));
}

TEST_CASE("calibrate_latent_rho hits the binary-scale target") {
  const Vector p = Vector::Constant(6, 0.4);
  const double latent = calibrate_latent_rho(p, 0.3);
  CHECK(latent > 0.3);  // latent correlation exceeds the binary-scale one
  CHECK(latent < 1.0);
  // Monte-Carlo check of the realized pairwise correlation
  Rng rng(77);
  const int reps = 20000;
  Vector mean = Vector::Zero(6);
  Matrix cross = Matrix::Zero(6, 6);
  for (int r = 0; r < reps; ++r) {
    const Vector y = draw_binary_cluster(p, latent, rng);
    mean += y / reps;
    cross += y * y.transpose() / reps;
  }
  double corr_sum = 0.0;
  int pairs = 0;
  for (int s = 0; s < 6; ++s)
    for (int u = s + 1; u < 6; ++u) {
      const double cov = cross(s, u) - mean[s] * mean[u];
      corr_sum += cov / std::sqrt(mean[s] * (1 - mean[s]) * mean[u] * (1 - mean[u]));
      ++pairs;
    }
  CHECK(corr_sum / pairs == doctest::Approx(0.3).epsilon(0.05));
  // degenerate marginals are rejected
  Vector bad = p;
  bad[0] = 0.0;
  CHECK_THROWS(calibrate_latent_rho(bad, 0.3));
}

TEST_CASE("zero latent correlation gives near-independent binaries") {
  const Vector p = Vector::Constant(4, 0.5);
  Rng rng(88);
  const int reps = 20000;
  double cross01 = 0.0, mean0 = 0.0, mean1 = 0.0;
  for (int r = 0; r < reps; ++r) {
    const Vector y = draw_binary_cluster(p, 0.0, rng);
    cross01 += y[0] * y[1] / reps;
    mean0 += y[0] / reps;
    mean1 += y[1] / reps;
  }
  CHECK(std::abs(cross01 - mean0 * mean1) <= 0.01);
}

TEST_CASE("run_study: single replication yields 0/1 proportions") {
  StudyConfig cfg;
  cfg.design = StudyDesign::Example1;
  cfg.variant = StudyVariant::Oracle;
  cfg.n = 40;
  cfg.replications = 1;
  cfg.seed = 5;
  cfg.test_clusters = 100;
  const StudySummary s = run_study(cfg);
  CHECK(s.replications == 1);
  CHECK(s.prop_correct + s.prop_over + s.prop_under == doctest::Approx(1.0));
  for (const double v : {s.prop_correct, s.prop_over, s.prop_under})
    CHECK((v == 0.0 || v == 1.0));
  CHECK(s.mean_model_error > 0.0);
}

TEST_CASE("run_study aggregates its own records") {
  StudyConfig cfg;
  cfg.design = StudyDesign::Example1;
  cfg.variant = StudyVariant::Full;
  cfg.n = 40;
  cfg.replications = 4;
  cfg.seed = 11;
  cfg.test_clusters = 100;
  const StudySummary s = run_study(cfg);
  REQUIRE(s.records.size() == 4);
  double me = 0.0, beta = 0.0;
  for (const auto& r : s.records) {
    me += r.model_error / 4.0;
    beta += r.tracked_beta / 4.0;
  }
  CHECK(s.mean_model_error == doctest::Approx(me).epsilon(1e-12));
  CHECK(s.mean_tracked_beta == doctest::Approx(beta).epsilon(1e-12));
}

TEST_CASE("run_study results do not depend on the worker count") {
  StudyConfig cfg;
  cfg.design = StudyDesign::Example1;
  cfg.variant = StudyVariant::Oracle;
  cfg.n = 40;
  cfg.replications = 6;
  cfg.seed = 21;
  cfg.test_clusters = 100;
  cfg.threads = 1;
  const StudySummary s1 = run_study(cfg);
  cfg.threads = 3;
  const StudySummary s3 = run_study(cfg);
  REQUIRE(s1.records.size() == s3.records.size());
  for (size_t i = 0; i < s1.records.size(); ++i) {
    CHECK(s1.records[i].model_error == s3.records[i].model_error);
    CHECK(s1.records[i].tracked_beta == s3.records[i].tracked_beta);
  }
  CHECK(s1.mean_model_error == s3.mean_model_error);
}
