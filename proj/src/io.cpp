#include "gaplm/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace gaplm {

namespace {

using nlohmann::json;

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

const char* structure_name(WorkingStructure s) {
  switch (s) {
    case WorkingStructure::Independence: return "IND";
    case WorkingStructure::Exchangeable: return "EC";
    case WorkingStructure::Ar1: return "AR1";
  }
  return "?";
}

const char* variant_name(StudyVariant v) {
  switch (v) {
    case StudyVariant::Scad: return "SCAD";
    case StudyVariant::Full: return "FULL";
    case StudyVariant::Oracle: return "ORACLE";
  }
  return "?";
}

const char* design_name(StudyDesign d) {
  switch (d) {
    case StudyDesign::Example1: return "example1";
    case StudyDesign::Example2: return "example2";
    case StudyDesign::Example3: return "example3";
  }
  return "?";
}

}  // namespace

ClusterDataset read_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_csv_line(line);
  if (header.size() < 4 || header[0] != "cluster" || header[1] != "t" || header[2] != "y")
    throw std::runtime_error(path + ": header must start with cluster,t,y");
  int d_x = 0, d_z = 0;
  for (size_t i = 3; i < header.size(); ++i) {
    if (header[i].rfind('x', 0) == 0 && d_z == 0)
      ++d_x;
    else if (header[i].rfind('z', 0) == 0)
      ++d_z;
    else
      throw std::runtime_error(path + ": unexpected column '" + header[i] + "'");
  }
  if (d_z == 0) throw std::runtime_error(path + ": no z columns (intercept required)");

  struct Row {
    long cluster;
    Vector x, z;
    double y;
  };
  std::vector<Row> rows;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size())
      throw std::runtime_error(path + ": wrong field count at line " + std::to_string(line_no));
    Row row;
    row.cluster = std::stol(fields[0]);
    row.y = std::stod(fields[2]);
    row.x.resize(d_x);
    row.z.resize(d_z);
    for (int j = 0; j < d_x; ++j) row.x[j] = std::stod(fields[3 + j]);
    for (int j = 0; j < d_z; ++j) row.z[j] = std::stod(fields[3 + d_x + j]);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error(path + ": no data rows");

  ClusterDataset ds;
  ds.d_x = d_x;
  ds.d_z = d_z;
  size_t start = 0;
  for (size_t i = 1; i <= rows.size(); ++i) {
    if (i == rows.size() || rows[i].cluster != rows[start].cluster) {
      const int t = static_cast<int>(i - start);
      Cluster c;
      c.y.resize(t);
      c.x.resize(t, d_x);
      c.z.resize(t, d_z);
      for (int r = 0; r < t; ++r) {
        c.y[r] = rows[start + r].y;
        c.x.row(r) = rows[start + r].x.transpose();
        c.z.row(r) = rows[start + r].z.transpose();
      }
      ds.clusters.push_back(std::move(c));
      start = i;
    }
  }
  return ds;
}

void write_dataset_csv(const std::string& path, const ClusterDataset& ds) {
  std::ostringstream out;
  out << "cluster,t";
  out << ",y";
  for (int j = 1; j <= ds.d_x; ++j) out << ",x" << j;
  for (int j = 1; j <= ds.d_z; ++j) out << ",z" << j;
  out << "\n";
  for (size_t i = 0; i < ds.clusters.size(); ++i) {
    const Cluster& c = ds.clusters[i];
    for (Eigen::Index t = 0; t < c.size(); ++t) {
      out << (i + 1) << ',' << (t + 1) << ',' << format_double(c.y[t]);
      for (int j = 0; j < ds.d_x; ++j) out << ',' << format_double(c.x(t, j));
      for (int j = 0; j < ds.d_z; ++j) out << ',' << format_double(c.z(t, j));
      out << "\n";
    }
  }
  write_text_file(path, out.str());
}

std::string fit_report_json(const FitReport& fit, const SplineSystem& splines,
                            const std::vector<EbicRecord>& records, const Matrix* beta_cov) {
  json j;
  j["beta"] = std::vector<double>(fit.theta.beta.data(), fit.theta.beta.data() + fit.theta.d_z());
  j["gamma"] = json::array();
  for (const Vector& g : fit.theta.gamma)
    j["gamma"].push_back(std::vector<double>(g.data(), g.data() + g.size()));
  j["active_linear"] = fit.active_linear;
  j["active_nonparametric"] = fit.active_nonparametric;
  j["lambda"] = fit.lambda;
  j["q_n"] = fit.q_n;
  j["penalized_objective"] = fit.penalized_objective;
  if (std::isfinite(fit.ebic)) j["ebic"] = fit.ebic;
  j["converged"] = fit.trace.converged;
  j["iterations"] = fit.trace.iterations;
  j["trace"] = fit.trace.q_values;

  Vector grid(101);
  for (int i = 0; i <= 100; ++i) grid[i] = i / 100.0;
  j["alpha_grid"] = std::vector<double>(grid.data(), grid.data() + grid.size());
  j["alpha"] = json::array();
  for (int l = 0; l < fit.theta.d_x(); ++l) {
    const Vector a = splines.eval_alpha(l, fit.theta.gamma[l], grid);
    j["alpha"].push_back(std::vector<double>(a.data(), a.data() + a.size()));
  }

  if (!records.empty()) {
    j["ebic_path"] = json::array();
    for (const auto& r : records)
      j["ebic_path"].push_back({{"lambda", r.lambda},
                                {"fit_term", r.fit_term},
                                {"d_hat_z", r.d_hat_z},
                                {"d_hat_x", r.d_hat_x},
                                {"log_nu_z", r.log_nu_z},
                                {"log_nu_x", r.log_nu_x},
                                {"n_knots", r.n_knots},
                                {"ebic", r.ebic}});
  }
  if (beta_cov) {
    json cov = json::array();
    for (Eigen::Index r = 0; r < beta_cov->rows(); ++r)
      cov.push_back(std::vector<double>(beta_cov->row(r).data(),
                                        beta_cov->row(r).data() + beta_cov->cols()));
    j["beta_covariance"] = cov;
  }
  return j.dump(2) + "\n";
}

std::string study_summary_csv(const StudyConfig& cfg, const StudySummary& summary) {
  std::ostringstream out;
  out << "design,variant,structure,n,replications,seed,C,O,U,MME,mean_beta,sd_beta,failures\n";
  out << design_name(cfg.design) << ',' << variant_name(cfg.variant) << ','
      << structure_name(cfg.fit.structure) << ',' << cfg.n << ',' << cfg.replications << ','
      << cfg.seed << ',' << format_double(summary.prop_correct) << ','
      << format_double(summary.prop_over) << ',' << format_double(summary.prop_under) << ','
      << format_double(summary.mean_model_error) << ','
      << format_double(summary.mean_tracked_beta) << ',' << format_double(summary.sd_tracked_beta)
      << ',' << summary.failures << "\n";
  return out.str();
}

std::string study_summary_json(const StudyConfig& cfg, const StudySummary& summary) {
  json j;
  j["design"] = design_name(cfg.design);
  j["variant"] = variant_name(cfg.variant);
  j["structure"] = structure_name(cfg.fit.structure);
  j["n"] = cfg.n;
  j["replications"] = cfg.replications;
  j["seed"] = cfg.seed;
  j["C"] = summary.prop_correct;
  j["O"] = summary.prop_over;
  j["U"] = summary.prop_under;
  j["MME"] = summary.mean_model_error;
  j["mean_beta"] = summary.mean_tracked_beta;
  j["sd_beta"] = summary.sd_tracked_beta;
  j["failures"] = summary.failures;
  j["records"] = json::array();
  for (const auto& r : summary.records) {
    json rec;
    rec["rep"] = r.rep;
    rec["failed"] = r.failed;
    if (!r.failed) {
      rec["outcome"] = r.outcome == SelectionOutcome::Correct
                           ? "correct"
                           : (r.outcome == SelectionOutcome::Over ? "over" : "under");
      rec["model_error"] = r.model_error;
      rec["beta"] = r.tracked_beta;
      rec["lambda"] = r.lambda;
    }
    j["records"].push_back(rec);
  }
  return j.dump(2) + "\n";
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
}

}  // namespace gaplm
