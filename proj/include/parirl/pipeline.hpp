#pragma once

#include "parirl/config.hpp"
#include "parirl/distill.hpp"
#include "parirl/metrics.hpp"
#include "parirl/report.hpp"

namespace parirl {

// Run-directory layout, shared by all stages:
//   config.txt                      effective configuration
//   experts/expert_<i>.jsonl        expert demonstrations
//   experts/experts.csv             expert true return vectors
//   branches/<id>/{policy,value,disc_g,disc_h}.ckpt, meta.json, dataset.jsonl
//   pareto_front.csv  diagnostics.csv  distances.csv
//   baseline_front.csv  distill.ckpt  distill.json  du_front.csv
//   metrics.csv  scatter.svg

std::vector<Dataset> gen_experts(const RunConfig& cfg, const std::string& out_dir);
std::vector<Dataset> load_experts(const RunConfig& cfg, const std::string& out_dir);

struct TrainResult {
  std::vector<FrontPoint> front;  // annotated returns of the learned policy set
  std::vector<StepDiagnostics> diagnostics;
};
TrainResult run_train(const RunConfig& cfg, const std::string& out_dir);

std::vector<FrontPoint> run_baseline(const RunConfig& cfg, const std::string& out_dir);

void run_distill(const RunConfig& cfg, const std::string& out_dir);

struct DistilledModel {
  DiffusionPolicy dp;
  GuidanceConfig gc;
};
DistilledModel load_distilled(const std::string& out_dir);

FrontPoint eval_distilled_once(const RunConfig& cfg, const std::string& out_dir,
                               const std::vector<double>& omega);
std::vector<FrontPoint> eval_distilled_grid(const RunConfig& cfg, const std::string& out_dir);

struct ReportResult {
  std::vector<MetricRow> rows;
  std::vector<double> r0;
};
ReportResult run_report(const RunConfig& cfg, const std::string& out_dir);

// gen_experts (when missing), train, distill, grid eval, baseline (when
// enabled), report. Partial artifacts stay on disk if a later stage throws.
ReportResult run_pipeline(const RunConfig& cfg, const std::string& out_dir);

}  // namespace parirl
