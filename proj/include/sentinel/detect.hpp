// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "sentinel/matrix.hpp"
#include "sentinel/ranking.hpp"

namespace sentinel::detect {

enum class Metric { Cosine, Correlation, Euclidean };

const char* metric_name(Metric m);

struct SimilarityMatrix {
  Metric metric = Metric::Euclidean;
  Matrix values;  // N x N, symmetric
  std::vector<int> sensor_ids;
};

double cosine(const std::vector<double>& x, const std::vector<double>& y);

double correlation(const std::vector<double>& x, const std::vector<double>& y);

double euclidean(const std::vector<double>& x, const std::vector<double>& y);

/// All unordered pairs of per-sensor importance vectors. Metric errors name
/// the offending sensor pair.
SimilarityMatrix pairwise(const std::vector<ranking::SensorRanking>& rankings, Metric metric);

/// Per-sensor row sums of a Euclidean distance matrix. The paper-style
/// refinement: a deviating sensor is far from everyone, so its row sum
/// stands out even when individual distances are noisy.
std::vector<double> summed_distance(const SimilarityMatrix& m);

// Flagging policy. A sensor is an outlier when its summed Euclidean distance
// clears median + k_mad * MAD of all sums AND at least one secondary metric
// corroborates (mean cosine below cosine_floor, or mean correlation below
// corr_floor). Sensors above the median but inside the MAD band are
// borderline: they are flagged only when BOTH secondary metrics corroborate,
// which keeps mild statistical stragglers unflagged unless all three
// measures agree something is off.
struct Policy {
  double k_mad = 3.0;
  double cosine_floor = 0.999;
  double corr_floor = 0.995;
};

struct SensorFlag {
  int sensor_id = 0;
  double summed_euclidean = 0.0;
  double mean_cosine = 0.0;
  double min_cosine = 0.0;
  double mean_correlation = 0.0;
  double min_correlation = 0.0;
  bool flagged = false;
  bool borderline = false;  // above median but within the MAD band
  std::vector<Metric> corroborated_by;
};

struct OutlierFlags {
  std::vector<SensorFlag> sensors;
  Policy policy;
  double median_sum = 0.0;
  double mad_sum = 0.0;
  double threshold = 0.0;  // median_sum + k_mad * mad_sum

  std::vector<int> flagged_ids() const;
};

/// Requires all three matrices over the same sensors and >= 4 sensors
/// (robust statistics are meaningless below that).
OutlierFlags flag_outliers(const SimilarityMatrix& cosine_m, const SimilarityMatrix& correlation_m,
                           const SimilarityMatrix& euclidean_m, const Policy& policy);

void export_similarity_csv(const SimilarityMatrix& m, const std::string& path);

void export_flags_json(const OutlierFlags& flags, const std::string& path);

}  // namespace sentinel::detect
