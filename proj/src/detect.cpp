// SPDX-License-Identifier: Apache-2.0
#include "sentinel/detect.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "json.hpp"
#include "sentinel/csv.hpp"

namespace sentinel::detect {

namespace {

void check_lengths(const std::vector<double>& x, const std::vector<double>& y, const char* op) {
  if (x.size() != y.size())
    throw std::invalid_argument(std::string(op) + ": vector length mismatch");
  if (x.empty()) throw std::invalid_argument(std::string(op) + ": empty vectors");
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return (n % 2 == 1) ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

const char* metric_name(Metric m) {
  switch (m) {
    case Metric::Cosine: return "cosine";
    case Metric::Correlation: return "correlation";
    case Metric::Euclidean: return "euclidean";
  }
  return "?";
}

double cosine(const std::vector<double>& x, const std::vector<double>& y) {
  check_lengths(x, y, "cosine");
  double dot = 0.0, nx = 0.0, ny = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    dot += x[i] * y[i];
    nx += x[i] * x[i];
    ny += y[i] * y[i];
  }
  if (nx == 0.0 || ny == 0.0) throw std::domain_error("cosine: zero vector");
  return dot / (std::sqrt(nx) * std::sqrt(ny));
}

double correlation(const std::vector<double>& x, const std::vector<double>& y) {
  check_lengths(x, y, "correlation");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw std::domain_error("correlation: constant vector");
  return sxy / (std::sqrt(sxx) * std::sqrt(syy));
}

double euclidean(const std::vector<double>& x, const std::vector<double>& y) {
  check_lengths(x, y, "euclidean");
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - y[i];
    acc += d * d;
  }
  return std::sqrt(acc);
}

SimilarityMatrix pairwise(const std::vector<ranking::SensorRanking>& rankings, Metric metric) {
  const int n = static_cast<int>(rankings.size());
  if (n < 2) throw std::invalid_argument("pairwise: need at least 2 sensors");
  for (const auto& r : rankings)
    if (r.importance.size() != rankings[0].importance.size())
      throw std::invalid_argument("pairwise: feature count mismatch across sensors");

  SimilarityMatrix m;
  m.metric = metric;
  m.values = Matrix(n, n);
  for (const auto& r : rankings) m.sensor_ids.push_back(r.sensor_id);

  const double diag = (metric == Metric::Euclidean) ? 0.0 : 1.0;
  for (int i = 0; i < n; ++i) m.values(i, i) = diag;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      double v = 0.0;
      try {
        switch (metric) {
          case Metric::Cosine: v = cosine(rankings[i].importance, rankings[j].importance); break;
          case Metric::Correlation:
            v = correlation(rankings[i].importance, rankings[j].importance);
            break;
          case Metric::Euclidean:
            v = euclidean(rankings[i].importance, rankings[j].importance);
            break;
        }
      } catch (const std::exception& e) {
        throw std::domain_error("pairwise: sensors " + std::to_string(m.sensor_ids[i]) + "," +
                                std::to_string(m.sensor_ids[j]) + ": " + e.what());
      }
      m.values(i, j) = v;
      m.values(j, i) = v;
    }
  return m;
}

std::vector<double> summed_distance(const SimilarityMatrix& m) {
  if (m.metric != Metric::Euclidean)
    throw std::invalid_argument("summed_distance: requires a euclidean matrix");
  std::vector<double> sums(m.values.rows, 0.0);
  for (int i = 0; i < m.values.rows; ++i)
    for (int j = 0; j < m.values.cols; ++j) sums[i] += m.values(i, j);
  return sums;
}

std::vector<int> OutlierFlags::flagged_ids() const {
  std::vector<int> ids;
  for (const auto& s : sensors)
    if (s.flagged) ids.push_back(s.sensor_id);
  return ids;
}

OutlierFlags flag_outliers(const SimilarityMatrix& cosine_m, const SimilarityMatrix& correlation_m,
                           const SimilarityMatrix& euclidean_m, const Policy& policy) {
  if (policy.k_mad <= 0.0 || policy.cosine_floor <= 0.0 || policy.corr_floor <= 0.0)
    throw std::invalid_argument("flag_outliers: policy parameters must be positive");
  const int n = euclidean_m.values.rows;
  if (n < 4) throw std::invalid_argument("flag_outliers: need at least 4 sensors");
  if (cosine_m.metric != Metric::Cosine || correlation_m.metric != Metric::Correlation ||
      euclidean_m.metric != Metric::Euclidean)
    throw std::invalid_argument("flag_outliers: matrices in wrong metric order");
  if (cosine_m.sensor_ids != euclidean_m.sensor_ids ||
      correlation_m.sensor_ids != euclidean_m.sensor_ids)
    throw std::invalid_argument("flag_outliers: matrices cover different sensors");

  const auto sums = summed_distance(euclidean_m);
  const double med = median_of(sums);
  std::vector<double> devs(sums.size());
  for (std::size_t i = 0; i < sums.size(); ++i) devs[i] = std::abs(sums[i] - med);
  const double mad = median_of(devs);

  OutlierFlags out;
  out.policy = policy;
  out.median_sum = med;
  out.mad_sum = mad;
  out.threshold = med + policy.k_mad * mad;

  for (int i = 0; i < n; ++i) {
    SensorFlag f;
    f.sensor_id = euclidean_m.sensor_ids[i];
    f.summed_euclidean = sums[i];
    f.min_cosine = 2.0;
    f.min_correlation = 2.0;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      f.mean_cosine += cosine_m.values(i, j);
      f.mean_correlation += correlation_m.values(i, j);
      f.min_cosine = std::min(f.min_cosine, cosine_m.values(i, j));
      f.min_correlation = std::min(f.min_correlation, correlation_m.values(i, j));
    }
    f.mean_cosine /= (n - 1);
    f.mean_correlation /= (n - 1);

    const bool cos_hit = f.mean_cosine < policy.cosine_floor;
    const bool corr_hit = f.mean_correlation < policy.corr_floor;
    if (cos_hit) f.corroborated_by.push_back(Metric::Cosine);
    if (corr_hit) f.corroborated_by.push_back(Metric::Correlation);

    if (f.summed_euclidean > out.threshold) {
      f.flagged = cos_hit || corr_hit;
    } else if (f.summed_euclidean > med) {
      f.borderline = true;
      f.flagged = cos_hit && corr_hit;
    }
    out.sensors.push_back(std::move(f));
  }
  return out;
}

void export_similarity_csv(const SimilarityMatrix& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("export_similarity_csv: cannot open " + path);
  out << "sensor";
  for (int id : m.sensor_ids) out << ",s" << id;
  out << '\n';
  for (int i = 0; i < m.values.rows; ++i) {
    out << 's' << m.sensor_ids[i];
    for (int j = 0; j < m.values.cols; ++j) out << ',' << csv::format_double(m.values(i, j));
    out << '\n';
  }
}

void export_flags_json(const OutlierFlags& flags, const std::string& path) {
  nlohmann::json j;
  j["policy"] = {{"k_mad", flags.policy.k_mad},
                 {"cosine_floor", flags.policy.cosine_floor},
                 {"corr_floor", flags.policy.corr_floor}};
  j["median_sum"] = flags.median_sum;
  j["mad_sum"] = flags.mad_sum;
  j["threshold"] = flags.threshold;
  j["sensors"] = nlohmann::json::array();
  for (const auto& s : flags.sensors) {
    nlohmann::json cor = nlohmann::json::array();
    for (Metric m : s.corroborated_by) cor.push_back(metric_name(m));
    j["sensors"].push_back({{"sensor_id", s.sensor_id},
                            {"summed_euclidean", s.summed_euclidean},
                            {"mean_cosine", s.mean_cosine},
                            {"min_cosine", s.min_cosine},
                            {"mean_correlation", s.mean_correlation},
                            {"min_correlation", s.min_correlation},
                            {"flagged", s.flagged},
                            {"borderline", s.borderline},
                            {"corroborated_by", cor}});
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("export_flags_json: cannot open " + path);
  out << j.dump(2) << '\n';
}

}  // namespace sentinel::detect
