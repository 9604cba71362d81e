// SPDX-License-Identifier: Apache-2.0
#include "sentinel/attrib.hpp"

#include <omp.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "json.hpp"
#include "sentinel/csv.hpp"
#include "sentinel/rng.hpp"

namespace sentinel::attrib {

namespace {

constexpr int kMaxEvalsPerPass = 256;  // path points per batched gradient call

}  // namespace

int AttributionSet::index_of(int sensor_id) const {
  for (std::size_t i = 0; i < sensor_ids.size(); ++i)
    if (sensor_ids[i] == sensor_id) return static_cast<int>(i);
  return -1;
}

WindowPool make_pool(std::vector<Matrix> features, int window_len) {
  if (window_len < 1) throw std::invalid_argument("make_pool: window_len must be >= 1");
  WindowPool pool;
  pool.window_len = window_len;
  for (std::size_t s = 0; s < features.size(); ++s) {
    if (!features.empty() && features[s].cols != features[0].cols)
      throw std::invalid_argument("make_pool: feature count differs between series");
    for (int start = 0; start + window_len <= features[s].rows; ++start)
      pool.refs.push_back({static_cast<int>(s), start});
  }
  pool.features = std::move(features);
  return pool;
}

std::vector<Matrix> sample_baselines(const WindowPool& pool, int n_baselines,
                                     std::uint64_t seed) {
  if (n_baselines < 1) throw std::invalid_argument("sample_baselines: need at least 1 baseline");
  if (pool.refs.empty()) throw std::invalid_argument("sample_baselines: empty baseline pool");
  const int L = pool.window_len;
  Rng rng(seed);
  std::vector<Matrix> out;
  out.reserve(n_baselines);
  for (int b = 0; b < n_baselines; ++b) {
    const auto& ref = pool.refs[rng.uniform_index(pool.refs.size())];
    const Matrix& feat = pool.features[ref.series];
    Matrix w(L, feat.cols);
    for (int t = 0; t < L; ++t)
      for (int f = 0; f < feat.cols; ++f) w(t, f) = feat(ref.start + t, f);
    out.push_back(std::move(w));
  }
  return out;
}

AttributionWindow expected_gradients(const grunet::GruParams& model, const Matrix& window,
                                     const std::vector<Matrix>& baselines, int n_path_steps) {
  if (baselines.empty()) throw std::invalid_argument("expected_gradients: empty baseline pool");
  if (n_path_steps < 1) throw std::invalid_argument("expected_gradients: need at least 1 path step");
  const int L = window.rows;
  const int F = window.cols;
  for (const auto& b : baselines)
    if (b.rows != L || b.cols != F)
      throw std::invalid_argument("expected_gradients: baseline shape mismatch");
  const int B = static_cast<int>(baselines.size());
  const int S = n_path_steps;

  AttributionWindow out;
  out.phi = Matrix(L, F);

  // base_value = mean_b f(x_b); baselines evaluated in one batched pass.
  {
    Matrix binputs(L * B, F);
    for (int b = 0; b < B; ++b)
      for (int t = 0; t < L; ++t)
        for (int f = 0; f < F; ++f) binputs(t * B + b, f) = baselines[b](t, f);
    std::vector<double> preds;
    grunet::forward_multi(model, binputs, L, B, L - 1, preds);
    double acc = 0.0;
    for (int b = 0; b < B; ++b) acc += preds[b];
    out.base_value = acc / B;
  }
  {
    std::vector<double> pred;
    grunet::forward_multi(model, window, L, 1, L - 1, pred);
    out.prediction = pred[0];
  }

  // Path points, flattened (b, s) pairs in b-major order, processed in
  // chunks but accumulated strictly in that order.
  Matrix diff(L, F);
  Matrix inputs;
  Matrix grads;
  const long total = static_cast<long>(B) * S;
  long idx = 0;
  while (idx < total) {
    const int E = static_cast<int>(std::min<long>(kMaxEvalsPerPass, total - idx));
    inputs = Matrix(L * E, F);
    for (int e = 0; e < E; ++e) {
      const long flat = idx + e;
      const int b = static_cast<int>(flat / S);
      const int s = static_cast<int>(flat % S);
      const double alpha = (s + 0.5) / S;
      const Matrix& xb = baselines[b];
      for (int t = 0; t < L; ++t)
        for (int f = 0; f < F; ++f)
          inputs(t * E + e, f) = xb(t, f) + alpha * (window(t, f) - xb(t, f));
    }
    grunet::grad_input_multi(model, inputs, L, E, L - 1, grads, nullptr);
    for (int e = 0; e < E; ++e) {
      const int b = static_cast<int>((idx + e) / S);
      const Matrix& xb = baselines[b];
      for (int t = 0; t < L; ++t)
        for (int f = 0; f < F; ++f)
          out.phi(t, f) += (window(t, f) - xb(t, f)) * grads(t * E + e, f);
    }
    idx += E;
  }
  const double norm = 1.0 / (static_cast<double>(B) * S);
  for (double& v : out.phi.data) v *= norm;

  double total_phi = 0.0;
  for (double v : out.phi.data) total_phi += v;
  out.completeness_residual = total_phi - (out.prediction - out.base_value);
  return out;
}

AttributionSet local_attributions(const grunet::GruParams& model,
                                  const std::vector<Matrix>& series,
                                  const std::vector<int>& sensor_ids,
                                  const std::vector<std::string>& feature_names, int window_len,
                                  const WindowPool& baseline_pool, int n_baselines,
                                  int n_path_steps, std::uint64_t seed, int threads) {
  if (series.size() != sensor_ids.size())
    throw std::invalid_argument("local_attributions: series/sensor_id count mismatch");
  if (series.empty()) throw std::invalid_argument("local_attributions: no series");
  if (baseline_pool.window_len != window_len)
    throw std::invalid_argument("local_attributions: baseline pool window length mismatch");

  const auto baselines = sample_baselines(baseline_pool, n_baselines, seed);
  if (threads <= 0) threads = omp_get_max_threads();

  AttributionSet set;
  set.sensor_ids = sensor_ids;
  set.feature_names = feature_names;
  set.window_len = window_len;
  set.phi_avg.resize(series.size());
  set.counts.resize(series.size());
  set.window_base_values.resize(series.size());

  for (std::size_t si = 0; si < series.size(); ++si) {
    const Matrix& feat = series[si];
    const int cycles = feat.rows;
    const int F = feat.cols;
    if (cycles < window_len)
      throw std::invalid_argument("local_attributions: sensor " + std::to_string(sensor_ids[si]) +
                                  " has fewer cycles than the window length");
    const int n_win = cycles - window_len + 1;

    std::vector<AttributionWindow> per_window(n_win);
#pragma omp parallel for schedule(dynamic) num_threads(threads)
    for (int w = 0; w < n_win; ++w) {
      Matrix window(window_len, F);
      for (int t = 0; t < window_len; ++t)
        for (int f = 0; f < F; ++f) window(t, f) = feat(w + t, f);
      per_window[w] = expected_gradients(model, window, baselines, n_path_steps);
      per_window[w].series = static_cast<int>(si);
      per_window[w].start = w;
    }

    Matrix sums(cycles, F);
    std::vector<int> counts(cycles, 0);
    std::vector<double> bases(n_win, 0.0);
    for (int w = 0; w < n_win; ++w) {
      const Matrix& phi = per_window[w].phi;
      for (int t = 0; t < window_len; ++t)
        for (int f = 0; f < F; ++f) sums(w + t, f) += std::abs(phi(t, f));
      for (int t = 0; t < window_len; ++t) counts[w + t] += 1;
      bases[w] = per_window[w].base_value;
    }
    for (int i = 0; i < cycles; ++i)
      for (int f = 0; f < F; ++f) sums(i, f) /= counts[i];

    set.phi_avg[si] = std::move(sums);
    set.counts[si] = std::move(counts);
    set.window_base_values[si] = std::move(bases);
  }
  return set;
}

Matrix heatmap(const AttributionSet& attr, int sensor_id) {
  const int idx = attr.index_of(sensor_id);
  if (idx < 0)
    throw std::invalid_argument("heatmap: unknown sensor " + std::to_string(sensor_id));
  return attr.phi_avg[idx];
}

void heatmap_export(const AttributionSet& attr, int sensor_id, const std::string& path) {
  const Matrix m = heatmap(attr, sensor_id);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("heatmap_export: cannot open " + path);
  out << "cycle";
  for (const auto& name : attr.feature_names) out << ',' << name;
  out << '\n';
  for (int i = 0; i < m.rows; ++i) {
    out << i;
    for (int j = 0; j < m.cols; ++j) out << ',' << csv::format_double(m(i, j));
    out << '\n';
  }
}

void export_attributions(const AttributionSet& attr, const std::string& dir) {
  std::filesystem::create_directories(dir);
  nlohmann::json meta;
  meta["sensor_ids"] = attr.sensor_ids;
  meta["feature_names"] = attr.feature_names;
  meta["window_len"] = attr.window_len;
  meta["counts"] = attr.counts;
  meta["window_base_values"] = attr.window_base_values;
  std::ofstream out(dir + "/meta.json");
  if (!out) throw std::runtime_error("export_attributions: cannot open " + dir + "/meta.json");
  out << meta.dump(2) << '\n';
  for (int id : attr.sensor_ids)
    heatmap_export(attr, id, dir + "/phi_s" + std::to_string(id) + ".csv");
}

AttributionSet import_attributions(const std::string& dir) {
  std::ifstream in(dir + "/meta.json");
  if (!in) throw std::runtime_error("import_attributions: cannot open " + dir + "/meta.json");
  const auto meta = nlohmann::json::parse(in);
  AttributionSet set;
  set.sensor_ids = meta.at("sensor_ids").get<std::vector<int>>();
  set.feature_names = meta.at("feature_names").get<std::vector<std::string>>();
  set.window_len = meta.at("window_len").get<int>();
  set.counts = meta.at("counts").get<std::vector<std::vector<int>>>();
  set.window_base_values = meta.at("window_base_values").get<std::vector<std::vector<double>>>();

  const int F = static_cast<int>(set.feature_names.size());
  for (int id : set.sensor_ids) {
    const std::string path = dir + "/phi_s" + std::to_string(id) + ".csv";
    std::ifstream fin(path);
    if (!fin) throw std::runtime_error("import_attributions: cannot open " + path);
    std::string line;
    if (!std::getline(fin, line)) throw std::runtime_error("import_attributions: empty " + path);
    std::vector<std::vector<double>> rows;
    while (std::getline(fin, line)) {
      if (line.empty()) continue;
      const auto fields = csv::split(line);
      if (static_cast<int>(fields.size()) != F + 1)
        throw std::runtime_error("import_attributions: bad field count in " + path);
      std::vector<double> row(F);
      for (int f = 0; f < F; ++f)
        row[f] = csv::parse_double(fields[f + 1], path);
      rows.push_back(std::move(row));
    }
    Matrix m(static_cast<int>(rows.size()), F);
    for (int i = 0; i < m.rows; ++i)
      for (int f = 0; f < F; ++f) m(i, f) = rows[i][f];
    set.phi_avg.push_back(std::move(m));
  }
  return set;
}

}  // namespace sentinel::attrib
