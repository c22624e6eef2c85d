#pragma once

#include <cstdint>

#include "gaplm/metrics.hpp"
#include "gaplm/penalty.hpp"
#include "gaplm/rng.hpp"
#include "gaplm/types.hpp"

namespace gaplm {

struct SimulatedData {
  ClusterDataset data;
  TrueModel truth;
};

/// Continuous response, d_x = d_z = round(2 n^{1/4}), T = 5, exchangeable
/// Gaussian errors (rho 0.7, variance 1.5). covariates_only skips the
/// response draw (test sets for model error need only X and Z).
SimulatedData gen_example1(int n, uint64_t seed, bool covariates_only = false);

/// Continuous response, d_x = 9, d_z = 5, T = 3, a fresh random error
/// correlation per call.
SimulatedData gen_example2(int n, uint64_t seed, bool covariates_only = false);

/// Binary response from a marginal logit model, d_x = 5, d_z = 10,
/// dichotomized-Gaussian within-cluster correlation calibrated to 0.3 on
/// the binary scale.
SimulatedData gen_example3(uint64_t seed, int n = 250, int t = 20, bool covariates_only = false,
                           double target_corr = 0.3);

/// Gamma_r = Delta (Sigma_1 + Q Lambda Q') Delta rescaled to unit
/// diagonal; Sigma_1 has 0.5 off-diagonal, Lambda ~ U[0.2, 2]^T, Q a
/// random orthogonal matrix.
Matrix gen_random_correlation(int t, Rng& rng);

/// Latent exchangeable correlation such that the average pairwise
/// correlation of the thresholded binary vector with marginal
/// probabilities p equals target. Bisection; throws when infeasible.
double calibrate_latent_rho(const Vector& p, double target);

/// One correlated binary draw by thresholding an exchangeable Gaussian.
Vector draw_binary_cluster(const Vector& p, double latent_rho, Rng& rng);

enum class StudyDesign { Example1, Example2, Example3 };
enum class StudyVariant { Scad, Full, Oracle };

struct StudyConfig {
  StudyDesign design = StudyDesign::Example1;
  StudyVariant variant = StudyVariant::Scad;
  FitConfig fit;
  int n = 200;
  int cluster_size = 0;  // 0 -> design default (example3 only)
  int replications = 100;
  uint64_t seed = 1;
  int threads = 1;
  int test_clusters = 1000;  // n* for the model error
};

struct ReplicationRecord {
  int rep = 0;
  bool failed = false;
  SelectionOutcome outcome = SelectionOutcome::Correct;
  double model_error = 0.0;
  double tracked_beta = 0.0;  // estimate of the first true nonzero beta
  double lambda = 0.0;
};

struct StudySummary {
  double prop_correct = 0.0;
  double prop_over = 0.0;
  double prop_under = 0.0;
  double mean_model_error = 0.0;
  double mean_tracked_beta = 0.0;
  double sd_tracked_beta = 0.0;
  int failures = 0;
  int replications = 0;
  std::vector<ReplicationRecord> records;
};

SimulatedData generate(const StudyConfig& cfg, uint64_t seed, bool covariates_only = false);

/// Runs replications (optionally on several workers; results do not
/// depend on the worker count) and aggregates selection and model error.
StudySummary run_study(const StudyConfig& cfg);

}  // namespace gaplm
