// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <string>
#include <vector>

#include "sentinel/attrib.hpp"

namespace sentinel::ranking {

// Mean absolute attribution per feature over all datapoints of all sensors.
struct GlobalRanking {
  std::vector<double> importance;
  std::vector<std::string> feature_names;
  std::size_t n_samples = 0;
};

// Same mean restricted to one sensor, plus feature-group sums (R/SL/AMP/
// PA/THD across arrays).
struct SensorRanking {
  int sensor_id = 0;
  std::vector<double> importance;
  std::vector<std::string> feature_names;
  std::size_t n_samples = 0;
  std::map<std::string, double> group_rollup;
};

GlobalRanking global_importance(const attrib::AttributionSet& attr);

SensorRanking sensor_ranking(const attrib::AttributionSet& attr, int sensor_id);

std::vector<SensorRanking> all_sensor_rankings(const attrib::AttributionSet& attr);

/// Feature indices by importance descending; ties broken by lower index.
std::vector<int> rank_order(const std::vector<double>& importance);

void export_rankings(const std::vector<SensorRanking>& rankings, const std::string& path);

std::vector<SensorRanking> import_rankings(const std::string& path);

}  // namespace sentinel::ranking
