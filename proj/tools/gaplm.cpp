#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "gaplm/io.hpp"
#include "gaplm/qif.hpp"
#include "gaplm/sim.hpp"
#include "gaplm/splines.hpp"
#include "gaplm/tuning.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitConvergence = 3;

using gaplm::FitConfig;

uint64_t default_seed() {
  if (const char* env = std::getenv("GAPLM_SEED")) return std::strtoull(env, nullptr, 10);
  return 1;
}

gaplm::WorkingStructure parse_structure(const std::string& s) {
  if (s == "IND") return gaplm::WorkingStructure::Independence;
  if (s == "EC") return gaplm::WorkingStructure::Exchangeable;
  if (s == "AR1") return gaplm::WorkingStructure::Ar1;
  throw CLI::ValidationError("structure must be IND, EC or AR1");
}

gaplm::FamilyKind parse_family(const std::string& s) {
  if (s == "gaussian") return gaplm::FamilyKind::GaussianIdentity;
  if (s == "binomial") return gaplm::FamilyKind::BinomialLogit;
  throw CLI::ValidationError("family must be gaussian or binomial");
}

gaplm::PenaltyKind parse_penalty(const std::string& s) {
  if (s == "SCAD") return gaplm::PenaltyKind::Scad;
  if (s == "LASSO") return gaplm::PenaltyKind::Lasso;
  if (s == "none") return gaplm::PenaltyKind::None;
  throw CLI::ValidationError("penalty must be SCAD, LASSO or none");
}

struct CommonOpts {
  std::string config_path;
  std::string structure = "EC";
  std::string family = "gaussian";
  std::string penalty = "SCAD";
  int degree = 1;
  double scad_a = 3.7;
  double tol = 1e-6;
  double eps = 1e-6;
  int max_iterations = 200;
  std::vector<double> lambda_grid;
};

// config file supplies defaults; command-line flags win
void apply_config_file(CommonOpts& opts, const CLI::App& cmd) {
  if (opts.config_path.empty()) return;
  std::ifstream in(opts.config_path);
  if (!in) throw std::runtime_error("cannot open config " + opts.config_path);
  nlohmann::json j;
  in >> j;
  auto unset = [&](const std::string& flag) { return cmd.get_option(flag)->count() == 0; };
  if (j.contains("structure") && unset("--structure")) opts.structure = j["structure"];
  if (j.contains("family") && unset("--family")) opts.family = j["family"];
  if (j.contains("penalty") && unset("--penalty")) opts.penalty = j["penalty"];
  if (j.contains("degree") && unset("--degree")) opts.degree = j["degree"];
  if (j.contains("scad_a") && unset("--scad-a")) opts.scad_a = j["scad_a"];
  if (j.contains("tol") && unset("--tol")) opts.tol = j["tol"];
  if (j.contains("threshold") && unset("--threshold")) opts.eps = j["threshold"];
  if (j.contains("max_iterations") && unset("--max-iterations"))
    opts.max_iterations = j["max_iterations"];
  if (j.contains("lambda_grid") && unset("--lambda"))
    opts.lambda_grid = j["lambda_grid"].get<std::vector<double>>();
}

FitConfig to_fit_config(const CommonOpts& opts) {
  FitConfig cfg;
  cfg.spline_degree = opts.degree;
  cfg.structure = parse_structure(opts.structure);
  cfg.family = parse_family(opts.family);
  cfg.penalty = parse_penalty(opts.penalty);
  cfg.scad_a = opts.scad_a;
  cfg.tol = opts.tol;
  cfg.threshold_eps = opts.eps;
  cfg.max_iterations = opts.max_iterations;
  cfg.lambda_grid = opts.lambda_grid;
  return cfg;
}

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "JSON config file (flags override)");
  cmd->add_option("--structure", opts.structure, "working correlation: IND, EC, AR1");
  cmd->add_option("--family", opts.family, "gaussian or binomial");
  cmd->add_option("--penalty", opts.penalty, "SCAD, LASSO or none");
  cmd->add_option("--degree", opts.degree, "spline degree p");
  cmd->add_option("--scad-a", opts.scad_a, "SCAD constant a");
  cmd->add_option("--tol", opts.tol, "convergence tolerance");
  cmd->add_option("--threshold", opts.eps, "zeroing threshold epsilon");
  cmd->add_option("--max-iterations", opts.max_iterations, "iteration cap");
  cmd->add_option("--lambda", opts.lambda_grid, "lambda grid (repeatable)");
}

gaplm::ClusterDataset load_validated(const std::string& path) {
  gaplm::ClusterDataset ds = gaplm::read_dataset_csv(path);
  const auto report = gaplm::validate_dataset(ds);
  if (!report.ok()) {
    std::string msg = "dataset validation failed:";
    for (const auto& v : report.violations) msg += "\n  " + v;
    throw std::runtime_error(msg);
  }
  return ds;
}

int run_fit(const std::string& data_path, const std::string& out_path, const CommonOpts& opts,
            bool with_covariance, bool select) {
  const gaplm::ClusterDataset ds = load_validated(data_path);
  const FitConfig cfg = to_fit_config(opts);
  const gaplm::SplineSystem splines = gaplm::SplineSystem::build(ds, cfg.spline_degree);
  const gaplm::QifEngine engine(ds, splines, cfg);

  gaplm::FitReport fit;
  std::vector<gaplm::EbicRecord> records;
  if (select) {
    const gaplm::UnpenalizedFit base = engine.fit();
    if (!base.trace.converged) return kExitConvergence;
    const std::vector<double> grid = cfg.lambda_grid.empty()
                                         ? gaplm::default_lambda_grid(engine, base.theta.pack())
                                         : cfg.lambda_grid;
    gaplm::SelectionResult sel = gaplm::select_lambda(engine, grid);
    fit = std::move(sel.best);
    records = std::move(sel.records);
  } else {
    const double lambda = cfg.lambda_grid.empty() ? 0.0 : cfg.lambda_grid.front();
    fit = gaplm::fit_penalized(engine, lambda);
    fit.ebic = gaplm::ebic_record(engine, fit).ebic;
  }
  if (!fit.trace.converged) {
    gaplm::write_text_file(out_path, gaplm::fit_report_json(fit, splines, records));
    std::cerr << "fit did not converge; trace written to " << out_path << "\n";
    return kExitConvergence;
  }
  gaplm::Matrix cov;
  const gaplm::Matrix* cov_ptr = nullptr;
  if (with_covariance) {
    cov = engine.beta_covariance(fit.theta.pack());
    cov_ptr = &cov;
  }
  gaplm::write_text_file(out_path, gaplm::fit_report_json(fit, splines, records, cov_ptr));
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GAPLM estimation and variable selection for clustered data"};
  app.require_subcommand(1);

  // fit / select
  CommonOpts fit_opts;
  std::string data_path, out_path = "fit.json";
  bool with_covariance = false;
  auto* fit_cmd = app.add_subcommand("fit", "fit a model (single lambda; default unpenalized)");
  fit_cmd->add_option("--data", data_path, "input CSV")->required();
  fit_cmd->add_option("--out", out_path, "output JSON");
  fit_cmd->add_flag("--beta-covariance", with_covariance, "include the sandwich covariance");
  add_common(fit_cmd, fit_opts);

  CommonOpts sel_opts;
  std::string sel_data, sel_out = "fit.json";
  bool sel_cov = false;
  auto* sel_cmd = app.add_subcommand("select", "lambda path with EBIC selection");
  sel_cmd->add_option("--data", sel_data, "input CSV")->required();
  sel_cmd->add_option("--out", sel_out, "output JSON");
  sel_cmd->add_flag("--beta-covariance", sel_cov, "include the sandwich covariance");
  add_common(sel_cmd, sel_opts);

  // study
  CommonOpts study_opts;
  std::string design = "example1", variant = "SCAD", study_out = "summary.csv";
  std::string study_format = "csv";
  int study_n = 200, study_r = 100, study_threads = 1, study_t = 0, test_clusters = 1000;
  uint64_t study_seed = default_seed();
  auto* study_cmd = app.add_subcommand("study", "replication study over a simulation design");
  study_cmd->add_option("--design", design, "example1, example2 or example3");
  study_cmd->add_option("--variant", variant, "SCAD, FULL or ORACLE");
  study_cmd->add_option("--n", study_n, "number of clusters");
  study_cmd->add_option("--cluster-size", study_t, "cluster size (example3 only)");
  study_cmd->add_option("--replications", study_r, "number of replications");
  study_cmd->add_option("--seed", study_seed, "master seed");
  study_cmd->add_option("--threads", study_threads, "worker threads");
  study_cmd->add_option("--test-clusters", test_clusters, "test-set clusters for model error");
  study_cmd->add_option("--out", study_out, "output path");
  study_cmd->add_option("--format", study_format, "csv or json");
  add_common(study_cmd, study_opts);

  // simulate
  std::string sim_design = "example1", sim_out = "data.csv", truth_out;
  int sim_n = 200, sim_t = 0;
  uint64_t sim_seed = default_seed();
  auto* sim_cmd = app.add_subcommand("simulate", "emit a simulated dataset as CSV");
  sim_cmd->add_option("--design", sim_design, "example1, example2 or example3");
  sim_cmd->add_option("--n", sim_n, "number of clusters");
  sim_cmd->add_option("--cluster-size", sim_t, "cluster size (example3 only)");
  sim_cmd->add_option("--seed", sim_seed, "seed");
  sim_cmd->add_option("--out", sim_out, "output CSV");

  CLI11_PARSE(app, argc, argv);

  auto parse_design = [](const std::string& s) {
    if (s == "example1") return gaplm::StudyDesign::Example1;
    if (s == "example2") return gaplm::StudyDesign::Example2;
    if (s == "example3") return gaplm::StudyDesign::Example3;
    throw std::runtime_error("unknown design " + s);
  };

  try {
    if (fit_cmd->parsed()) {
      apply_config_file(fit_opts, *fit_cmd);
      return run_fit(data_path, out_path, fit_opts, with_covariance, /*select=*/false);
    }
    if (sel_cmd->parsed()) {
      apply_config_file(sel_opts, *sel_cmd);
      return run_fit(sel_data, sel_out, sel_opts, sel_cov, /*select=*/true);
    }
    if (study_cmd->parsed()) {
      apply_config_file(study_opts, *study_cmd);
      gaplm::StudyConfig cfg;
      cfg.design = parse_design(design);
      if (variant == "SCAD")
        cfg.variant = gaplm::StudyVariant::Scad;
      else if (variant == "FULL")
        cfg.variant = gaplm::StudyVariant::Full;
      else if (variant == "ORACLE")
        cfg.variant = gaplm::StudyVariant::Oracle;
      else
        throw std::runtime_error("unknown variant " + variant);
      cfg.fit = to_fit_config(study_opts);
      cfg.n = study_n;
      cfg.cluster_size = study_t;
      cfg.replications = study_r;
      cfg.seed = study_seed;
      cfg.threads = study_threads;
      cfg.test_clusters = test_clusters;
      const gaplm::StudySummary summary = gaplm::run_study(cfg);
      gaplm::write_text_file(study_out, study_format == "json"
                                            ? gaplm::study_summary_json(cfg, summary)
                                            : gaplm::study_summary_csv(cfg, summary));
      return kExitOk;
    }
    if (sim_cmd->parsed()) {
      gaplm::StudyConfig cfg;
      cfg.design = parse_design(sim_design);
      cfg.n = sim_n;
      cfg.cluster_size = sim_t;
      const gaplm::SimulatedData sim = gaplm::generate(cfg, sim_seed);
      gaplm::write_dataset_csv(sim_out, sim.data);
      return kExitOk;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitOk;
}
