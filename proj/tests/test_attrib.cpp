// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "sentinel/attrib.hpp"
#include "sentinel/reference.hpp"

using namespace sentinel;

namespace {

std::vector<Matrix> random_windows(int count, int rows, int cols, Rng& rng) {
  std::vector<Matrix> out;
  for (int i = 0; i < count; ++i) out.push_back(testutil::random_matrix(rows, cols, rng));
  return out;
}

}  // namespace

TEST_CASE("expected_gradients is bit-identical to the serial reference") {
  Rng rng(8);
  const auto p = testutil::random_params(4, 6, 11);
  const auto window = testutil::random_matrix(10, 4, rng);
  const auto baselines = random_windows(3, 10, 4, rng);
  for (int steps : {1, 4, 17}) {
    const auto got = attrib::expected_gradients(p, window, baselines, steps);
    const auto want = ref::expected_gradients(p, window, baselines, steps);
    CHECK(got.base_value == want.base_value);
    CHECK(got.prediction == want.prediction);
    CHECK(got.phi.data == want.phi.data);
  }
  // More (baseline, step) pairs than one batched pass holds: chunking must
  // not change anything.
  const auto many = random_windows(24, 10, 4, rng);
  const auto got = attrib::expected_gradients(p, window, many, 40);  // 960 evals
  const auto want = ref::expected_gradients(p, window, many, 40);
  CHECK(got.phi.data == want.phi.data);
  CHECK(got.base_value == want.base_value);
}

TEST_CASE("attributions on an exactly linear model equal w * (x - mean baseline)") {
  std::vector<double> w_eff;
  const auto p = testutil::linear_params(5, 4, 31, w_eff);
  Rng rng(9);
  const int L = 6;
  const auto window = testutil::random_matrix(L, 5, rng);
  const auto baselines = random_windows(4, L, 5, rng);
  for (int steps : {1, 2, 33}) {
    const auto out = attrib::expected_gradients(p, window, baselines, steps);
    // Only the final step carries weight; earlier rows are exactly zero.
    for (int t = 0; t < L - 1; ++t)
      for (int f = 0; f < 5; ++f) CHECK(out.phi(t, f) == 0.0);
    for (int f = 0; f < 5; ++f) {
      double mean_base = 0.0;
      for (const auto& b : baselines) mean_base += b(L - 1, f);
      mean_base /= static_cast<double>(baselines.size());
      const double want = w_eff[f] * (window(L - 1, f) - mean_base);
      CHECK(std::abs(out.phi(L - 1, f) - want) < 1e-10);
    }
    CHECK(std::abs(out.completeness_residual) < 1e-10);
  }
}

TEST_CASE("completeness: attributions sum to prediction minus base value") {
  Rng rng(14);
  const auto p = testutil::random_params(4, 8, 77);
  const auto window = testutil::random_matrix(8, 4, rng);
  const auto baselines = random_windows(6, 8, 4, rng);
  const auto out = attrib::expected_gradients(p, window, baselines, 512);
  double total = 0.0;
  for (double v : out.phi.data) total += v;
  const double gap = out.prediction - out.base_value;
  CHECK(std::abs(total - gap) <= 1e-3 * std::max(1.0, std::abs(gap)));
  CHECK(out.completeness_residual == doctest::Approx(total - gap).epsilon(1e-12));
}

TEST_CASE("window pool and baseline sampling") {
  Rng rng(4);
  std::vector<Matrix> series;
  series.push_back(testutil::random_matrix(6, 3, rng));
  series.push_back(testutil::random_matrix(4, 3, rng));
  const auto pool = attrib::make_pool(series, 4);
  REQUIRE(pool.refs.size() == 3 + 1);

  const auto a = attrib::sample_baselines(pool, 5, 2);
  const auto b = attrib::sample_baselines(pool, 5, 2);
  const auto c = attrib::sample_baselines(pool, 5, 3);
  REQUIRE(a.size() == 5);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].rows == 4);
    CHECK(a[i].data == b[i].data);
  }
  bool any_diff = false;
  for (std::size_t i = 0; i < a.size(); ++i) any_diff |= (a[i].data != c[i].data);
  CHECK(any_diff);
  // Every sampled baseline is a contiguous slice of a pool series.
  for (const auto& w : a) {
    bool found = false;
    for (const auto& s : series)
      for (int start = 0; start + 4 <= s.rows && !found; ++start) {
        bool eq = true;
        for (int t = 0; t < 4 && eq; ++t)
          for (int f = 0; f < 3 && eq; ++f) eq = (w(t, f) == s(start + t, f));
        found = eq;
      }
    CHECK(found);
  }
  CHECK_THROWS_AS(attrib::sample_baselines(attrib::WindowPool{}, 2, 1), std::invalid_argument);
}

TEST_CASE("local_attributions: per-cycle averaging, counts, thread independence") {
  Rng rng(6);
  const int L = 4, F = 3, cycles = 9;
  const auto p = testutil::random_params(F, 5, 21);
  std::vector<Matrix> series = {testutil::random_matrix(cycles, F, rng),
                                testutil::random_matrix(cycles, F, rng)};
  const auto pool = attrib::make_pool(series, L);

  const auto set1 = attrib::local_attributions(p, series, {10, 11}, {"a", "b", "c"}, L, pool,
                                               3, 5, 99, 1);
  const auto set3 = attrib::local_attributions(p, series, {10, 11}, {"a", "b", "c"}, L, pool,
                                               3, 5, 99, 3);
  REQUIRE(set1.phi_avg.size() == 2);
  CHECK(set1.sensor_ids == std::vector<int>{10, 11});
  CHECK(set1.index_of(11) == 1);
  CHECK(set1.index_of(99) == -1);
  for (int s = 0; s < 2; ++s) CHECK(set1.phi_avg[s].data == set3.phi_avg[s].data);

  // Coverage counts: cycle i is covered by min(i, n_win-1, L-1, cycles-1-i)+1
  // stride-1 windows; with cycles=9, L=4 that is 1,2,3,4,4,4,3,2,1.
  const std::vector<int> want_counts = {1, 2, 3, 4, 4, 4, 3, 2, 1};
  CHECK(set1.counts[0] == want_counts);

  // Brute-force check of phi_avg against direct expected_gradients calls,
  // using the same baselines (sampled with the same seed).
  const auto baselines = attrib::sample_baselines(pool, 3, 99);
  const int n_win = cycles - L + 1;
  Matrix sums(cycles, F);
  for (int w = 0; w < n_win; ++w) {
    Matrix window(L, F);
    for (int t = 0; t < L; ++t)
      for (int f = 0; f < F; ++f) window(t, f) = series[0](w + t, f);
    const auto out = attrib::expected_gradients(p, window, baselines, 5);
    for (int t = 0; t < L; ++t)
      for (int f = 0; f < F; ++f) sums(w + t, f) += std::abs(out.phi(t, f));
  }
  for (int i = 0; i < cycles; ++i)
    for (int f = 0; f < F; ++f)
      CHECK(set1.phi_avg[0](i, f) ==
            doctest::Approx(sums(i, f) / want_counts[i]).epsilon(1e-12));

  // Window base values: one per window, equal to the shared baseline mean.
  REQUIRE(set1.window_base_values[0].size() == static_cast<std::size_t>(n_win));

  CHECK_THROWS_AS(attrib::local_attributions(p, series, {10}, {"a", "b", "c"}, L, pool, 3, 5,
                                             99, 1),
                  std::invalid_argument);  // id/series count mismatch
  const auto pool5 = attrib::make_pool(series, 5);
  CHECK_THROWS_AS(attrib::local_attributions(p, series, {10, 11}, {"a", "b", "c"}, L, pool5, 3,
                                             5, 99, 1),
                  std::invalid_argument);  // pool window length mismatch
}

TEST_CASE("heatmap access and attribution bundle round trip") {
  testutil::TempDir tmp("attrib");
  Rng rng(13);
  const auto p = testutil::random_params(2, 4, 3);
  std::vector<Matrix> series = {testutil::random_matrix(7, 2, rng),
                                testutil::random_matrix(6, 2, rng)};
  const auto pool = attrib::make_pool(series, 3);
  const auto set = attrib::local_attributions(p, series, {4, 9}, {"A0_R", "A0_SL"}, 3, pool, 2,
                                              4, 17, 1);

  const auto hm = attrib::heatmap(set, 9);
  CHECK(hm.rows == 6);
  CHECK(hm.data == set.phi_avg[1].data);
  CHECK_THROWS_AS(attrib::heatmap(set, 123), std::invalid_argument);

  attrib::export_attributions(set, tmp.str());
  const auto back = attrib::import_attributions(tmp.str());
  CHECK(back.sensor_ids == set.sensor_ids);
  CHECK(back.feature_names == set.feature_names);
  CHECK(back.window_len == set.window_len);
  CHECK(back.counts == set.counts);
  CHECK(back.window_base_values == set.window_base_values);
  for (int s = 0; s < 2; ++s) CHECK(back.phi_avg[s].data == set.phi_avg[s].data);
}
