// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "sentinel/detect.hpp"

using namespace sentinel;

namespace {

ranking::SensorRanking make_ranking(int id, std::vector<double> importance) {
  ranking::SensorRanking r;
  r.sensor_id = id;
  for (std::size_t i = 0; i < importance.size(); ++i)
    r.feature_names.push_back("A0_F" + std::to_string(i));
  r.importance = std::move(importance);
  r.n_samples = 10;
  return r;
}

}  // namespace

TEST_CASE("metric hand values") {
  CHECK(detect::cosine({1.0, 0.0}, {0.0, 1.0}) == doctest::Approx(0.0));
  CHECK(detect::cosine({1.0, 2.0}, {2.0, 4.0}) == doctest::Approx(1.0));
  CHECK(detect::cosine({1.0, 0.0}, {1.0, 1.0}) == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK_THROWS_AS(detect::cosine({0.0, 0.0}, {1.0, 1.0}), std::domain_error);

  CHECK(detect::correlation({1.0, 2.0, 3.0}, {2.0, 4.0, 6.0}) == doctest::Approx(1.0));
  CHECK(detect::correlation({1.0, 2.0, 3.0}, {6.0, 4.0, 2.0}) == doctest::Approx(-1.0));
  CHECK(detect::correlation({1.0, 2.0, 1.0, 2.0}, {2.0, 1.0, 2.0, 1.0}) == doctest::Approx(-1.0));
  CHECK_THROWS_AS(detect::correlation({1.0, 1.0}, {1.0, 2.0}), std::domain_error);

  CHECK(detect::euclidean({0.0, 3.0}, {4.0, 0.0}) == doctest::Approx(5.0));
  CHECK(detect::euclidean({1.0, 1.0}, {1.0, 1.0}) == 0.0);

  CHECK_THROWS_AS(detect::cosine({1.0}, {1.0, 2.0}), std::invalid_argument);
}

TEST_CASE("metric properties on random vectors") {
  Rng rng(19);
  for (int rep = 0; rep < 200; ++rep) {
    const int n = 2 + static_cast<int>(rng.uniform_index(8));
    auto x = testutil::random_vector(n, rng, 2.0);
    auto y = testutil::random_vector(n, rng, 2.0);
    auto z = testutil::random_vector(n, rng, 2.0);
    x[0] += 2.5;  // keep away from the zero vector
    y[0] -= 2.5;

    // Cosine: invariant under positive scaling.
    const double s = rng.uniform(0.1, 10.0);
    auto xs = x;
    for (double& v : xs) v *= s;
    CHECK(detect::cosine(xs, y) == doctest::Approx(detect::cosine(x, y)).epsilon(1e-12));

    // Correlation: invariant under positive affine maps (needs variance).
    const double a = rng.uniform(0.5, 3.0), b = rng.uniform(-5.0, 5.0);
    auto xa = x;
    for (double& v : xa) v = a * v + b;
    CHECK(detect::correlation(xa, y) ==
          doctest::Approx(detect::correlation(x, y)).epsilon(1e-10));

    // Euclidean: symmetry and triangle inequality.
    CHECK(detect::euclidean(x, y) == detect::euclidean(y, x));
    CHECK(detect::euclidean(x, z) <=
          detect::euclidean(x, y) + detect::euclidean(y, z) + 1e-12);
  }
}

TEST_CASE("pairwise matrices: shape, symmetry, diagonal, error naming") {
  std::vector<ranking::SensorRanking> rankings = {make_ranking(0, {1.0, 2.0, 3.0}),
                                                  make_ranking(1, {1.1, 2.1, 2.9}),
                                                  make_ranking(5, {0.9, 1.8, 3.2})};
  const auto cos_m = detect::pairwise(rankings, detect::Metric::Cosine);
  const auto euc_m = detect::pairwise(rankings, detect::Metric::Euclidean);
  REQUIRE(cos_m.values.rows == 3);
  CHECK(cos_m.sensor_ids == std::vector<int>{0, 1, 5});
  for (int i = 0; i < 3; ++i) {
    CHECK(cos_m.values(i, i) == 1.0);
    CHECK(euc_m.values(i, i) == 0.0);
    for (int j = 0; j < 3; ++j) CHECK(cos_m.values(i, j) == cos_m.values(j, i));
  }
  CHECK(euc_m.values(0, 1) ==
        doctest::Approx(detect::euclidean(rankings[0].importance, rankings[1].importance)));

  // Summed distances are row sums of the Euclidean matrix.
  const auto sums = detect::summed_distance(euc_m);
  REQUIRE(sums.size() == 3);
  for (int i = 0; i < 3; ++i) {
    double want = 0.0;
    for (int j = 0; j < 3; ++j) want += euc_m.values(i, j);
    CHECK(sums[i] == doctest::Approx(want));
  }
  CHECK_THROWS_AS(detect::summed_distance(cos_m), std::invalid_argument);

  CHECK_THROWS_AS(detect::pairwise({rankings[0]}, detect::Metric::Cosine),
                  std::invalid_argument);  // need >= 2
  auto bad = rankings;
  bad[1].importance = {0.0, 0.0, 0.0};
  CHECK_THROWS_WITH_AS(detect::pairwise(bad, detect::Metric::Cosine),
                       doctest::Contains("sensors"), std::domain_error);
}

TEST_CASE("flag_outliers: clear outlier flagged, zero false positives") {
  // Nine near-identical sensors plus one rotated within the plane orthogonal
  // to the shared profile: far in distance, yet mild enough that it does not
  // drag the healthy sensors' mean cosine/correlation below the floors.
  Rng rng(23);
  std::vector<ranking::SensorRanking> rankings;
  const std::vector<double> base = {4.0, 3.0, 2.0, 1.0, 0.5};
  for (int s = 0; s < 9; ++s) {
    auto v = base;
    for (double& x : v) x *= 1.0 + rng.uniform(-1e-4, 1e-4);  // tiny estimation noise
    rankings.push_back(make_ranking(s, std::move(v)));
  }
  // base + 0.085 * {3,-4,0,0,0} (orthogonal direction): cosine to base 0.997,
  // correlation 0.990, euclidean 0.425 versus ~1e-3 within the cluster.
  rankings.push_back(make_ranking(9, {4.255, 2.66, 2.0, 1.0, 0.5}));

  const auto cos_m = detect::pairwise(rankings, detect::Metric::Cosine);
  const auto corr_m = detect::pairwise(rankings, detect::Metric::Correlation);
  const auto euc_m = detect::pairwise(rankings, detect::Metric::Euclidean);
  const auto flags = detect::flag_outliers(cos_m, corr_m, euc_m, detect::Policy{});

  CHECK(flags.flagged_ids() == std::vector<int>{9});
  CHECK(flags.threshold == doctest::Approx(flags.median_sum + 3.0 * flags.mad_sum));
  const auto& out = flags.sensors[9];
  CHECK(out.flagged);
  CHECK_FALSE(out.borderline);
  CHECK(out.summed_euclidean > flags.threshold);
  CHECK_FALSE(out.corroborated_by.empty());
  // The well-behaved sensors sit below the primary threshold.
  for (int s = 0; s < 9; ++s) CHECK_FALSE(flags.sensors[s].flagged);
}

TEST_CASE("flag_outliers: identical sensors produce no flags") {
  std::vector<ranking::SensorRanking> rankings;
  for (int s = 0; s < 6; ++s) rankings.push_back(make_ranking(s, {2.0, 1.0, 3.0}));
  // Identical vectors: correlation is defined (non-constant), cosine = 1,
  // distances 0, MAD 0, threshold = median = 0; nobody exceeds it strictly.
  const auto flags = detect::flag_outliers(detect::pairwise(rankings, detect::Metric::Cosine),
                                           detect::pairwise(rankings, detect::Metric::Correlation),
                                           detect::pairwise(rankings, detect::Metric::Euclidean),
                                           detect::Policy{});
  CHECK(flags.flagged_ids().empty());
}

TEST_CASE("flag_outliers: borderline tier needs both corroborations") {
  // Hand-built matrices for four sensors: sensor 3 is above the median sum
  // but inside the MAD band (borderline).
  detect::SimilarityMatrix cos_m, corr_m, euc_m;
  cos_m.metric = detect::Metric::Cosine;
  corr_m.metric = detect::Metric::Correlation;
  euc_m.metric = detect::Metric::Euclidean;
  const std::vector<int> ids = {0, 1, 2, 3};
  cos_m.sensor_ids = corr_m.sensor_ids = euc_m.sensor_ids = ids;
  cos_m.values = Matrix(4, 4, 1.0);
  corr_m.values = Matrix(4, 4, 1.0);
  euc_m.values = Matrix(4, 4, 0.0);
  // Distances: sensor 3 a bit farther from everyone, but within the band.
  auto set_euc = [&](int i, int j, double v) {
    euc_m.values(i, j) = v;
    euc_m.values(j, i) = v;
  };
  set_euc(0, 1, 1.0);
  set_euc(0, 2, 1.3);
  set_euc(1, 2, 0.7);
  set_euc(0, 3, 1.1);
  set_euc(1, 3, 1.1);
  set_euc(2, 3, 1.1);
  // Sums {3.4, 2.8, 3.1, 3.3}: median 3.2, MAD 0.15, threshold 3.65.
  // Sensor 3 (sum 3.3) sits above the median but inside the MAD band.

  detect::Policy policy;
  policy.k_mad = 3.0;

  SUBCASE("both secondary metrics low: borderline sensor is flagged") {
    for (int j = 0; j < 3; ++j) {
      cos_m.values(3, j) = cos_m.values(j, 3) = 0.99;    // below 0.999
      corr_m.values(3, j) = corr_m.values(j, 3) = 0.99;  // below 0.995
    }
    const auto flags = detect::flag_outliers(cos_m, corr_m, euc_m, policy);
    REQUIRE(flags.sensors.size() == 4);
    CHECK(flags.sensors[3].borderline);
    CHECK(flags.sensors[3].flagged);
    CHECK(flags.sensors[3].corroborated_by.size() == 2);
    CHECK(flags.flagged_ids() == std::vector<int>{3});
  }

  SUBCASE("only one secondary metric low: borderline sensor stays unflagged") {
    for (int j = 0; j < 3; ++j) cos_m.values(3, j) = cos_m.values(j, 3) = 0.99;
    const auto flags = detect::flag_outliers(cos_m, corr_m, euc_m, policy);
    CHECK(flags.sensors[3].borderline);
    CHECK_FALSE(flags.sensors[3].flagged);
    CHECK(flags.flagged_ids().empty());
  }
}

TEST_CASE("flag_outliers input validation") {
  std::vector<ranking::SensorRanking> three = {make_ranking(0, {1.0, 2.0}),
                                               make_ranking(1, {1.0, 2.1}),
                                               make_ranking(2, {1.0, 1.9})};
  const auto cos_m = detect::pairwise(three, detect::Metric::Cosine);
  const auto corr_m = detect::pairwise(three, detect::Metric::Correlation);
  const auto euc_m = detect::pairwise(three, detect::Metric::Euclidean);
  CHECK_THROWS_AS(detect::flag_outliers(cos_m, corr_m, euc_m, detect::Policy{}),
                  std::invalid_argument);  // < 4 sensors
  // Metric order is enforced.
  CHECK_THROWS_AS(detect::flag_outliers(euc_m, corr_m, cos_m, detect::Policy{}),
                  std::invalid_argument);
  detect::Policy bad;
  bad.k_mad = -1.0;
  CHECK_THROWS_AS(detect::flag_outliers(cos_m, corr_m, euc_m, bad), std::invalid_argument);
}

TEST_CASE("similarity CSV and flags JSON exports") {
  testutil::TempDir tmp("detect");
  std::vector<ranking::SensorRanking> rankings;
  for (int s = 0; s < 4; ++s)
    rankings.push_back(make_ranking(s, {1.0 + 0.01 * s, 2.0, 3.0 - 0.01 * s}));
  const auto euc_m = detect::pairwise(rankings, detect::Metric::Euclidean);
  detect::export_similarity_csv(euc_m, tmp.file("euc.csv"));
  const std::string text = testutil::read_file(tmp.file("euc.csv"));
  CHECK(text.find("sensor,s0,s1,s2,s3") == 0);
  CHECK(text.find("\ns0,0,") != std::string::npos);

  const auto flags =
      detect::flag_outliers(detect::pairwise(rankings, detect::Metric::Cosine),
                            detect::pairwise(rankings, detect::Metric::Correlation), euc_m,
                            detect::Policy{});
  detect::export_flags_json(flags, tmp.file("flags.json"));
  const std::string fj = testutil::read_file(tmp.file("flags.json"));
  CHECK(fj.find("\"threshold\"") != std::string::npos);
  CHECK(fj.find("\"sensors\"") != std::string::npos);
}
