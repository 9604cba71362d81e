// SPDX-License-Identifier: Apache-2.0
#include "sentinel/ranking.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace sentinel::ranking {

namespace {

std::string group_of_name(const std::string& feature) {
  const std::size_t us = feature.find_last_of('_');
  return (us == std::string::npos) ? feature : feature.substr(us + 1);
}

// Per-feature sum of |phi_avg| over one sensor's cycles, row order fixed.
std::vector<double> sensor_sums(const Matrix& phi_avg) {
  std::vector<double> sums(phi_avg.cols, 0.0);
  for (int i = 0; i < phi_avg.rows; ++i)
    for (int j = 0; j < phi_avg.cols; ++j) sums[j] += std::abs(phi_avg(i, j));
  return sums;
}

}  // namespace

GlobalRanking global_importance(const attrib::AttributionSet& attr) {
  if (attr.sensor_ids.empty()) throw std::invalid_argument("global_importance: empty attribution set");
  GlobalRanking g;
  g.feature_names = attr.feature_names;
  const int nf = attr.phi_avg[0].cols;
  g.importance.assign(nf, 0.0);
  for (const auto& phi : attr.phi_avg) {
    if (phi.cols != nf) throw std::invalid_argument("global_importance: feature count mismatch");
    const auto sums = sensor_sums(phi);
    for (int j = 0; j < nf; ++j) g.importance[j] += sums[j];
    g.n_samples += static_cast<std::size_t>(phi.rows);
  }
  if (g.n_samples == 0) throw std::invalid_argument("global_importance: no datapoints");
  for (double& v : g.importance) v /= static_cast<double>(g.n_samples);
  return g;
}

SensorRanking sensor_ranking(const attrib::AttributionSet& attr, int sensor_id) {
  const int idx = attr.index_of(sensor_id);
  if (idx < 0)
    throw std::invalid_argument("sensor_ranking: unknown sensor " + std::to_string(sensor_id));
  const Matrix& phi = attr.phi_avg[idx];
  if (phi.rows == 0) throw std::invalid_argument("sensor_ranking: sensor has no datapoints");

  SensorRanking r;
  r.sensor_id = sensor_id;
  r.feature_names = attr.feature_names;
  r.n_samples = static_cast<std::size_t>(phi.rows);
  r.importance = sensor_sums(phi);
  for (double& v : r.importance) v /= static_cast<double>(r.n_samples);
  for (int j = 0; j < phi.cols; ++j) r.group_rollup[group_of_name(attr.feature_names[j])] += r.importance[j];
  return r;
}

std::vector<SensorRanking> all_sensor_rankings(const attrib::AttributionSet& attr) {
  std::vector<SensorRanking> out;
  out.reserve(attr.sensor_ids.size());
  for (int id : attr.sensor_ids) out.push_back(sensor_ranking(attr, id));
  return out;
}

std::vector<int> rank_order(const std::vector<double>& importance) {
  std::vector<int> order(importance.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (importance[a] != importance[b]) return importance[a] > importance[b];
    return a < b;
  });
  return order;
}

void export_rankings(const std::vector<SensorRanking>& rankings, const std::string& path) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& r : rankings) {
    nlohmann::json features = nlohmann::json::object();
    for (std::size_t i = 0; i < r.feature_names.size(); ++i)
      features[r.feature_names[i]] = r.importance[i];
    j.push_back({{"sensor_id", r.sensor_id},
                 {"n_samples", r.n_samples},
                 {"feature_names", r.feature_names},
                 {"importance", r.importance},
                 {"features", features},
                 {"group_rollup", r.group_rollup}});
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("export_rankings: cannot open " + path);
  out << j.dump(2) << '\n';
}

std::vector<SensorRanking> import_rankings(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("import_rankings: cannot open " + path);
  nlohmann::json j = nlohmann::json::parse(in);
  std::vector<SensorRanking> out;
  for (const auto& e : j) {
    SensorRanking r;
    r.sensor_id = e.at("sensor_id").get<int>();
    r.n_samples = e.at("n_samples").get<std::size_t>();
    r.feature_names = e.at("feature_names").get<std::vector<std::string>>();
    r.importance = e.at("importance").get<std::vector<double>>();
    r.group_rollup = e.at("group_rollup").get<std::map<std::string, double>>();
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace sentinel::ranking
