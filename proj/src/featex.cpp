// SPDX-License-Identifier: Apache-2.0
#include "sentinel/featex.hpp"

#include <omp.h>

#include <cmath>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include "sentinel/csv.hpp"

namespace sentinel::featex {

const char* group_name(FeatureGroup g) {
  switch (g) {
    case FeatureGroup::R: return "R";
    case FeatureGroup::SL: return "SL";
    case FeatureGroup::AMP: return "AMP";
    case FeatureGroup::PA: return "PA";
    case FeatureGroup::THD: return "THD";
  }
  return "?";
}

Spectrum cycle_spectrum(const double* window, int length, int n_harmonics) {
  if (n_harmonics < 1) throw std::invalid_argument("cycle_spectrum: need at least 1 harmonic");
  if (length < 2 * n_harmonics + 2)
    throw std::invalid_argument("cycle_spectrum: window length " + std::to_string(length) +
                                " too short for " + std::to_string(n_harmonics) + " harmonics");

  double mean = 0.0;
  for (int i = 0; i < length; ++i) mean += window[i];
  mean /= length;

  Spectrum spec;
  spec.amplitude.resize(n_harmonics);
  const double step = 2.0 * std::numbers::pi / length;
  for (int k = 1; k <= n_harmonics; ++k) {
    double a = 0.0, b = 0.0;  // sine and cosine projections
    for (int i = 0; i < length; ++i) {
      double x = window[i] - mean;
      a += x * std::sin(step * k * i);
      b += x * std::cos(step * k * i);
    }
    a *= 2.0 / length;
    b *= 2.0 / length;
    spec.amplitude[k - 1] = std::sqrt(a * a + b * b);
    // x ~ A sin(k w t + phi): a = A cos(phi), b = A sin(phi)
    if (k == 1) spec.phase1 = std::atan2(b, a);
  }
  return spec;
}

double thd(const std::vector<double>& amplitudes) {
  if (amplitudes.empty()) throw std::invalid_argument("thd: no amplitudes");
  if (amplitudes[0] == 0.0) throw std::domain_error("thd: zero fundamental (dead array)");
  double sum = 0.0;
  for (std::size_t k = 1; k < amplitudes.size(); ++k) sum += amplitudes[k] * amplitudes[k];
  return std::sqrt(sum) / amplitudes[0];
}

FeatureSeries extract_features(const sensorsim::SensorResponse& response, int n_harmonics) {
  const Matrix& r = response.resistance;
  double tpc_f = response.heater_period_s * response.raw_rate_hz;
  int tpc = static_cast<int>(std::round(tpc_f));
  if (tpc < 2 || std::abs(tpc_f - tpc) > 1e-9)
    throw std::invalid_argument("extract_features: heater period is not a whole tick count");
  if (r.rows % tpc != 0)
    throw std::invalid_argument("extract_features: response length " + std::to_string(r.rows) +
                                " not divisible by cycle length " + std::to_string(tpc));
  const int n_cycles = r.rows / tpc;
  const int na = r.cols;

  FeatureSeries fs;
  fs.sensor_id = response.sensor_id;
  fs.cycle_seconds = response.heater_period_s;
  fs.values = Matrix(n_cycles, na * kGroupsPerArray);
  for (int a = 0; a < na; ++a) {
    std::string prefix = "A" + std::to_string(a) + "_";
    for (FeatureGroup g : {FeatureGroup::R, FeatureGroup::SL, FeatureGroup::AMP,
                           FeatureGroup::PA, FeatureGroup::THD}) {
      fs.feature_names.push_back(prefix + group_name(g));
      fs.group_of.push_back(g);
    }
  }

  std::vector<double> window(tpc);
  std::vector<double> baseline(na, 0.0);
  std::vector<double> prev_r(na, 0.0);
  for (int i = 0; i < n_cycles; ++i) {
    for (int a = 0; a < na; ++a) {
      for (int j = 0; j < tpc; ++j) window[j] = r(i * tpc + j, a);
      double mean = 0.0;
      for (double v : window) mean += v;
      mean /= tpc;
      if (i == 0) baseline[a] = mean;

      Spectrum spec = cycle_spectrum(window.data(), tpc, n_harmonics);
      if (spec.amplitude[0] <= 0.0)
        throw std::domain_error("extract_features: dead array " + std::to_string(a) +
                                " at cycle " + std::to_string(i));
      double rel = mean / baseline[a] - 1.0;
      int base = a * kGroupsPerArray;
      fs.values(i, base + 0) = rel;
      fs.values(i, base + 1) = (i == 0) ? 0.0 : rel - prev_r[a];
      fs.values(i, base + 2) = spec.amplitude[0];
      fs.values(i, base + 3) = spec.phase1;
      fs.values(i, base + 4) = thd(spec.amplitude);
      prev_r[a] = rel;
    }
  }
  return fs;
}

std::vector<FeatureSeries> extract_all(const sensorsim::MultiSensorDataset& dataset,
                                       int n_harmonics, int threads) {
  std::vector<FeatureSeries> out(dataset.responses.size());
  if (threads <= 0) threads = omp_get_max_threads();
#pragma omp parallel for schedule(dynamic) num_threads(threads)
  for (std::size_t i = 0; i < dataset.responses.size(); ++i)
    out[i] = extract_features(dataset.responses[i], n_harmonics);
  return out;
}

NormStats fit_normalizer(const std::vector<FeatureSeries>& train) {
  if (train.empty()) throw std::invalid_argument("fit_normalizer: no series");
  const int nf = train[0].values.cols;
  for (const auto& s : train)
    if (s.values.cols != nf) throw std::invalid_argument("fit_normalizer: feature count mismatch");

  NormStats stats;
  stats.feature_names = train[0].feature_names;
  stats.mean.assign(nf, 0.0);
  stats.stddev.assign(nf, 0.0);

  std::size_t n = 0;
  for (const auto& s : train) {
    for (int i = 0; i < s.values.rows; ++i)
      for (int j = 0; j < nf; ++j) stats.mean[j] += s.values(i, j);
    n += static_cast<std::size_t>(s.values.rows);
  }
  if (n == 0) throw std::invalid_argument("fit_normalizer: empty series");
  for (int j = 0; j < nf; ++j) stats.mean[j] /= static_cast<double>(n);

  for (const auto& s : train)
    for (int i = 0; i < s.values.rows; ++i)
      for (int j = 0; j < nf; ++j) {
        double d = s.values(i, j) - stats.mean[j];
        stats.stddev[j] += d * d;
      }
  for (int j = 0; j < nf; ++j) {
    stats.stddev[j] = std::sqrt(stats.stddev[j] / static_cast<double>(n));
    if (stats.stddev[j] <= 0.0)
      throw std::invalid_argument("fit_normalizer: constant feature " + stats.feature_names[j]);
  }
  return stats;
}

FeatureSeries apply_normalizer(const FeatureSeries& series, const NormStats& stats) {
  if (series.values.cols != static_cast<int>(stats.mean.size()))
    throw std::invalid_argument("apply_normalizer: feature count mismatch");
  FeatureSeries out = series;
  for (int i = 0; i < out.values.rows; ++i)
    for (int j = 0; j < out.values.cols; ++j)
      out.values(i, j) = (out.values(i, j) - stats.mean[j]) / stats.stddev[j];
  return out;
}

FeatureSeries invert_normalizer(const FeatureSeries& series, const NormStats& stats) {
  if (series.values.cols != static_cast<int>(stats.mean.size()))
    throw std::invalid_argument("invert_normalizer: feature count mismatch");
  FeatureSeries out = series;
  for (int i = 0; i < out.values.rows; ++i)
    for (int j = 0; j < out.values.cols; ++j)
      out.values(i, j) = out.values(i, j) * stats.stddev[j] + stats.mean[j];
  return out;
}

void export_features(const FeatureSeries& series, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("export_features: cannot open " + path);
  out << "cycle";
  for (const auto& name : series.feature_names) out << ',' << name;
  out << '\n';
  for (int i = 0; i < series.values.rows; ++i) {
    out << i;
    for (int j = 0; j < series.values.cols; ++j) out << ',' << csv::format_double(series.values(i, j));
    out << '\n';
  }
}

FeatureSeries import_features(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("import_features: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("import_features: empty file " + path);
  auto header = csv::split(csv::strip(line));
  if (header.size() < 2 || header[0] != "cycle")
    throw std::runtime_error("import_features: bad header in " + path);

  FeatureSeries fs;
  fs.feature_names.assign(header.begin() + 1, header.end());
  for (const auto& name : fs.feature_names) {
    std::size_t us = name.find_last_of('_');
    std::string suffix = (us == std::string::npos) ? name : name.substr(us + 1);
    FeatureGroup g;
    if (suffix == "R") g = FeatureGroup::R;
    else if (suffix == "SL") g = FeatureGroup::SL;
    else if (suffix == "AMP") g = FeatureGroup::AMP;
    else if (suffix == "PA") g = FeatureGroup::PA;
    else if (suffix == "THD") g = FeatureGroup::THD;
    else throw std::runtime_error("import_features: unknown feature group in '" + name + "'");
    fs.group_of.push_back(g);
  }

  std::vector<double> values;
  int rows = 0;
  const int nf = static_cast<int>(fs.feature_names.size());
  while (std::getline(in, line)) {
    if (csv::strip(line).empty()) continue;
    auto fields = csv::split(line);
    if (static_cast<int>(fields.size()) != nf + 1)
      throw std::runtime_error("import_features: ragged row " + std::to_string(rows + 2) + " in " + path);
    for (int j = 0; j < nf; ++j) values.push_back(csv::parse_double(fields[j + 1], path));
    ++rows;
  }
  fs.values = Matrix(rows, nf);
  fs.values.data = std::move(values);
  return fs;
}

}  // namespace sentinel::featex
