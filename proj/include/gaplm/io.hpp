#pragma once

#include <string>

#include "gaplm/penalty.hpp"
#include "gaplm/sim.hpp"
#include "gaplm/tuning.hpp"
#include "gaplm/types.hpp"

namespace gaplm {

/// CSV schema: header `cluster,t,y,x1..x{d_x},z1..z{d_z}`, rows sorted by
/// (cluster, t), '.' decimal separator. z1 must be the intercept.
ClusterDataset read_dataset_csv(const std::string& path);
void write_dataset_csv(const std::string& path, const ClusterDataset& ds);

/// Fit report as JSON: coefficients, alpha on a 101-point grid, active
/// sets, objective values and convergence trace.
std::string fit_report_json(const FitReport& fit, const SplineSystem& splines,
                            const std::vector<EbicRecord>& records,
                            const Matrix* beta_cov = nullptr);

std::string study_summary_csv(const StudyConfig& cfg, const StudySummary& summary);
std::string study_summary_json(const StudyConfig& cfg, const StudySummary& summary);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace gaplm
