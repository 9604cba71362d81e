// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "sentinel/attrib.hpp"
#include "sentinel/detect.hpp"
#include "sentinel/featex.hpp"
#include "sentinel/grunet.hpp"
#include "sentinel/profiles.hpp"
#include "sentinel/ranking.hpp"
#include "sentinel/sensorsim.hpp"

namespace sentinel::pipeline {

inline constexpr const char* kToolVersion = "1.0.0";

struct ProfileSpec {
  enum class Kind { Artificial, Realistic, Csv };
  Kind kind = Kind::Artificial;
  std::string segments;  // artificial: "720:20,480:80,240:0-100"
  int peak_hour = 14;    // realistic bump parameters
  double base_ppb = 10.0;
  double peak_ppb = 60.0;
  double width_hours = 3.0;
  double jitter_sigma_ppb = 0.0;
  std::string path;  // csv import
};

// Everything one end-to-end run needs; a fixed seed makes the whole run,
// including simulation noise, training, and baseline sampling, reproducible.
struct RunConfig {
  std::string label = "run";
  std::uint64_t seed = 1;
  int repetitions = 6;
  double raw_rate_hz = 1.0;
  int threads = 0;

  ProfileSpec train_profile;
  ProfileSpec val_profile;
  ProfileSpec test_profile;

  int n_sensors = 20;
  int train_sensors = -1;  // clean-training chamber size; -1 = n_sensors
  std::vector<std::pair<int, double>> deviations;
  sensorsim::SensorConfig nominal;

  grunet::Hyper hyper;
  int attrib_baselines = 8;
  int attrib_path_steps = 64;
  detect::Policy policy;

  std::string output_dir = "run-out";
};

RunConfig load_config(const std::string& path);

void save_config(const RunConfig& config, const std::string& path);

/// FNV-1a hash of the canonical config serialization, hex string.
std::string config_hash(const RunConfig& config);

profiles::ConcentrationProfile make_profile(const ProfileSpec& spec, std::uint64_t seed);

/// Ground-truth concentration per heater cycle: mean of the dense profile
/// over the cycle's ticks.
std::vector<double> cycle_targets(const profiles::DenseProfile& dense, double heater_period_s);

std::vector<Matrix> normalized_features(const std::vector<featex::FeatureSeries>& feats,
                                        const featex::NormStats& stats);

// One table row: the three error metrics on train and test plus the
// training wall time.
struct MetricsRow {
  grunet::Metrics train;
  grunet::Metrics test;
  double duration_s = 0.0;
};

struct PruneRun {
  int run_index = 0;
  std::vector<int> flagged;  // sensors detection removed
  std::vector<int> truth;    // sensors with injected deviations
  MetricsRow with_outliers;
  MetricsRow without_outliers;
  detect::OutlierFlags flags;
};

struct PruningReport {
  std::vector<PruneRun> runs;
  MetricsRow avg_with;     // means of the per-run rows
  MetricsRow avg_without;
};

struct GradeOutcome {
  int sensor_id = 0;
  double factor = 1.0;
  double deviation_pct = 0.0;  // |1 - factor| * 100
  bool flagged = false;
  bool primary = false;  // summed distance above the MAD threshold
  double summed_euclidean = 0.0;
  int rank_by_sum = 0;  // 1 = largest summed distance of all sensors
};

struct DetectionReport {
  detect::OutlierFlags flags;
  std::map<int, double> truth;
  std::vector<GradeOutcome> grades;     // one per injected deviation
  std::vector<int> false_positives;    // flagged but clean
  std::vector<ranking::SensorRanking> rankings;
  attrib::AttributionSet attributions;
  detect::SimilarityMatrix cosine_m, correlation_m, euclidean_m;
  grunet::TrainReport train_report;
};

/// Application A: simulate a chamber with deviating sensors, train on all of
/// it, detect and prune the outliers, retrain, and compare both models on a
/// clean test chamber. Repeats `repetitions` times with derived seeds.
PruningReport run_train_pruning(const RunConfig& config);

/// Application B: train on a clean chamber, then run attribution, ranking,
/// and outlier detection on a deviation-injected test chamber.
DetectionReport run_test_detection(const RunConfig& config);

/// Writes report.json, table.csv (7 columns; rows: with outliers, without),
/// per-run flag files, timings.json, and manifest.json into `dir`.
/// Wall-clock durations appear only in table.csv and timings.json; all
/// other emitted files are byte-reproducible given the same config.
void emit_reports(const PruningReport& report, const RunConfig& config, const std::string& dir);

/// Writes report.json, flags.json, rankings.json, similarity CSVs, heatmap
/// CSVs, timings.json, and manifest.json into `dir`.
void emit_reports(const DetectionReport& report, const RunConfig& config, const std::string& dir);

}  // namespace sentinel::pipeline
