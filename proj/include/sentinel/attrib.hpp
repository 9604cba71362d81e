// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sentinel/grunet.hpp"
#include "sentinel/matrix.hpp"

namespace sentinel::attrib {

// Additive explanation of one window's final-step prediction:
// prediction ~= base_value + sum of phi. The residual records how closely
// the path integration achieved that.
struct AttributionWindow {
  Matrix phi;  // L x F, signed
  double base_value = 0.0;             // mean model output over the baselines
  double prediction = 0.0;             // model output on the window itself
  double completeness_residual = 0.0;  // sum(phi) - (prediction - base_value)
  int series = 0;
  int start = 0;
};

// Per-datapoint averages of absolute window attributions: each cycle of each
// sensor is covered by m stride-1 windows, and phi_avg is the mean |phi|
// over those m windows.
struct AttributionSet {
  std::vector<int> sensor_ids;
  std::vector<Matrix> phi_avg;                          // per sensor: cycles x F, >= 0
  std::vector<std::vector<int>> counts;                 // per sensor: m per cycle
  std::vector<std::vector<double>> window_base_values;  // per sensor, per window
  std::vector<std::string> feature_names;
  int window_len = 0;

  int index_of(int sensor_id) const;  // -1 when absent
};

// Candidate baseline windows, drawn from the training split only.
struct WindowPool {
  std::vector<Matrix> features;  // per series: cycles x F
  std::vector<grunet::WindowRef> refs;
  int window_len = 0;
};

WindowPool make_pool(std::vector<Matrix> features, int window_len);

/// Uniform sample (with replacement) of whole windows from the pool.
std::vector<Matrix> sample_baselines(const WindowPool& pool, int n_baselines,
                                     std::uint64_t seed);

/// Expected gradients: for each baseline b and path step s, the model
/// gradient at x_b + alpha_s (x - x_b) with alpha_s = (s + 1/2) / S
/// (midpoint rule), weighted by the displacement (x - x_b):
///   phi = (1 / (B S)) sum_{b,s} (x - x_b) . grad f(x_b + alpha_s (x - x_b))
/// f is the final-step prediction. base_value = mean_b f(x_b).
AttributionWindow expected_gradients(const grunet::GruParams& model, const Matrix& window,
                                     const std::vector<Matrix>& baselines, int n_path_steps);

/// Attributes every stride-1 window of every series and averages |phi| per
/// covered cycle. Baselines are sampled once per call with `seed` and shared
/// across windows. Parallel over windows; accumulation runs in ascending
/// window order, so the result is identical for any thread count.
AttributionSet local_attributions(const grunet::GruParams& model,
                                  const std::vector<Matrix>& series,
                                  const std::vector<int>& sensor_ids,
                                  const std::vector<std::string>& feature_names, int window_len,
                                  const WindowPool& baseline_pool, int n_baselines,
                                  int n_path_steps, std::uint64_t seed, int threads = 0);

/// cycles x F matrix of phi_avg for one sensor. Throws on unknown sensor.
Matrix heatmap(const AttributionSet& attr, int sensor_id);

/// CSV export: header `cycle,<feature names...>`.
void heatmap_export(const AttributionSet& attr, int sensor_id, const std::string& path);

/// Persists the whole set into `dir`: meta.json plus one phi CSV per sensor.
void export_attributions(const AttributionSet& attr, const std::string& dir);
AttributionSet import_attributions(const std::string& dir);

}  // namespace sentinel::attrib
