#pragma once

#include <string>
#include <vector>

#include "parirl/metrics.hpp"
#include "parirl/parirl.hpp"

namespace parirl {

struct MetricRow {
  std::string run_id;
  uint64_t seed = 0;
  std::string metric;  // hv | sp | cr
  double value = 0.0;
  std::vector<double> r0;  // empty for metrics that take no reference point
  int n_points = 0;
  int n_excluded = 0;
};

std::string metrics_csv(const std::vector<MetricRow>& rows);

// One row per policy: id, annotation, mean return vector.
std::string front_csv(const std::vector<FrontPoint>& front);
std::vector<FrontPoint> parse_front_csv(const std::string& text, const std::string& origin);

// Square matrix labelled by reward ids in both dimensions.
std::string distance_matrix_csv(const std::vector<std::string>& ids,
                                const std::vector<std::vector<double>>& d);

std::string diagnostics_csv(const std::vector<StepDiagnostics>& diags);

struct ScatterSeries {
  std::string name;
  std::vector<FrontPoint> points;
};

// 2-D scatter of the first two objectives; fill encodes omega[0] when the
// point carries an annotation, marker shape encodes the series.
std::string scatter_svg(const std::vector<ScatterSeries>& series);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace parirl
