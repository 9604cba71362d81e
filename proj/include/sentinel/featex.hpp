// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "sentinel/matrix.hpp"
#include "sentinel/sensorsim.hpp"

namespace sentinel::featex {

enum class FeatureGroup { R, SL, AMP, PA, THD };

constexpr int kGroupsPerArray = 5;

const char* group_name(FeatureGroup g);

// Per-cycle features of one sensor: each heater cycle of each array yields
// relative resistance (R), its first difference (SL), first-harmonic
// amplitude (AMP) and phase angle (PA), and total harmonic distortion (THD).
struct FeatureSeries {
  Matrix values;  // cycles x (n_arrays * 5)
  std::vector<std::string> feature_names;  // "A0_R", "A0_SL", ...
  std::vector<FeatureGroup> group_of;      // per feature column
  double cycle_seconds = 0.0;
  int sensor_id = 0;
};

// Per-feature z-score statistics, fit on training data only.
struct NormStats {
  std::vector<double> mean;
  std::vector<double> stddev;  // population std, > 0 for every feature
  std::vector<std::string> feature_names;
};

struct Spectrum {
  std::vector<double> amplitude;  // A_1..A_K
  double phase1 = 0.0;            // fundamental phase, sine-referenced, (-pi, pi]
};

/// Harmonic content of one heater cycle: the window mean is removed, then
/// A_k and the fundamental phase come from discrete Fourier projections onto
/// sin/cos of the k-th harmonic. Window length must be >= 2K+2 ticks.
Spectrum cycle_spectrum(const double* window, int length, int n_harmonics);

/// sqrt(A_2^2 + ... + A_K^2) / A_1. Throws on A_1 = 0 (dead array).
double thd(const std::vector<double>& amplitudes);

/// Features per cycle and array. R uses each array's own cycle 0 as
/// baseline: R_i = mean_i / mean_0 - 1. SL_i = R_i - R_{i-1} with SL_0 = 0.
/// Response length must be a whole number of heater cycles.
FeatureSeries extract_features(const sensorsim::SensorResponse& response, int n_harmonics = 5);

/// Extracts every sensor of a dataset, in parallel, ordered by sensor_id.
std::vector<FeatureSeries> extract_all(const sensorsim::MultiSensorDataset& dataset,
                                       int n_harmonics = 5, int threads = 0);

/// Exact two-pass mean/std over all rows of all series. Throws on a
/// zero-variance feature, naming it.
NormStats fit_normalizer(const std::vector<FeatureSeries>& train);

FeatureSeries apply_normalizer(const FeatureSeries& series, const NormStats& stats);

FeatureSeries invert_normalizer(const FeatureSeries& series, const NormStats& stats);

/// CSV with header `cycle,<feature names...>`.
void export_features(const FeatureSeries& series, const std::string& path);

FeatureSeries import_features(const std::string& path);

}  // namespace sentinel::featex
