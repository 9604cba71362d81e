// SPDX-License-Identifier: Apache-2.0
// Times the batched recurrent kernels against the plain serial reference and
// verifies that both produce bit-identical results while doing so.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <vector>

#include "sentinel/attrib.hpp"
#include "sentinel/grunet.hpp"
#include "sentinel/matrix.hpp"
#include "sentinel/reference.hpp"
#include "sentinel/rng.hpp"

namespace {

using namespace sentinel;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

Matrix random_matrix(int rows, int cols, Rng& rng) {
  Matrix m(rows, cols);
  for (double& v : m.data) v = rng.uniform(-1.0, 1.0);
  return m;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

struct BenchResult {
  double serial_s = 0.0;
  double batched_s = 0.0;
  double max_diff = 0.0;
};

void print_row(const char* name, const BenchResult& r) {
  std::printf("%-22s serial %8.1f ms   batched %8.1f ms   speedup %5.2fx   max|diff| %g\n", name,
              r.serial_s * 1e3, r.batched_s * 1e3, r.serial_s / r.batched_s, r.max_diff);
}

}  // namespace

int main() {
  constexpr int kHidden = 40;
  constexpr int kFeatures = 100;
  constexpr int kWindowLen = 32;
  constexpr int kWindows = 192;
  constexpr int kRepeats = 3;

  auto params = grunet::init_params(kFeatures, kHidden, 7);
  params.target_mean = 30.0;
  params.target_std = 12.0;

  Rng rng(11);
  std::vector<Matrix> windows;
  for (int w = 0; w < kWindows; ++w) windows.push_back(random_matrix(kWindowLen, kFeatures, rng));

  // Interleaved layout: row (t * kWindows + w) holds step t of window w.
  Matrix batched(kWindowLen * kWindows, kFeatures);
  for (int w = 0; w < kWindows; ++w)
    for (int t = 0; t < kWindowLen; ++t)
      for (int f = 0; f < kFeatures; ++f) batched(t * kWindows + w, f) = windows[w](t, f);

  int failures = 0;

  {
    BenchResult r;
    std::vector<double> serial_pred(kWindows), batched_pred;
    auto t0 = Clock::now();
    for (int rep = 0; rep < kRepeats; ++rep)
      for (int w = 0; w < kWindows; ++w)
        serial_pred[w] = ref::forward(params, windows[w]).predictions[kWindowLen - 1];
    r.serial_s = seconds_since(t0) / kRepeats;
    t0 = Clock::now();
    for (int rep = 0; rep < kRepeats; ++rep)
      grunet::forward_multi(params, batched, kWindowLen, kWindows, kWindowLen - 1, batched_pred);
    r.batched_s = seconds_since(t0) / kRepeats;
    r.max_diff = max_abs_diff(serial_pred, batched_pred);
    print_row("forward", r);
    if (r.max_diff != 0.0) ++failures;
  }

  {
    BenchResult r;
    std::vector<Matrix> serial_grads(kWindows);
    Matrix batched_grads;
    auto t0 = Clock::now();
    for (int rep = 0; rep < kRepeats; ++rep)
      for (int w = 0; w < kWindows; ++w)
        serial_grads[w] = ref::grad_input(params, windows[w], kWindowLen - 1);
    r.serial_s = seconds_since(t0) / kRepeats;
    t0 = Clock::now();
    for (int rep = 0; rep < kRepeats; ++rep)
      grunet::grad_input_multi(params, batched, kWindowLen, kWindows, kWindowLen - 1,
                               batched_grads, nullptr);
    r.batched_s = seconds_since(t0) / kRepeats;
    for (int w = 0; w < kWindows; ++w)
      for (int t = 0; t < kWindowLen; ++t)
        for (int f = 0; f < kFeatures; ++f)
          r.max_diff = std::max(r.max_diff, std::abs(serial_grads[w](t, f) -
                                                     batched_grads(t * kWindows + w, f)));
    print_row("grad_input", r);
    if (r.max_diff != 0.0) ++failures;
  }

  {
    constexpr int kAttribWindows = 8;
    constexpr int kBaselines = 4;
    constexpr int kPathSteps = 16;
    std::vector<Matrix> baselines;
    for (int b = 0; b < kBaselines; ++b)
      baselines.push_back(random_matrix(kWindowLen, kFeatures, rng));

    BenchResult r;
    std::vector<attrib::AttributionWindow> serial_out(kAttribWindows), batched_out(kAttribWindows);
    auto t0 = Clock::now();
    for (int w = 0; w < kAttribWindows; ++w)
      serial_out[w] = ref::expected_gradients(params, windows[w], baselines, kPathSteps);
    r.serial_s = seconds_since(t0);
    t0 = Clock::now();
    for (int w = 0; w < kAttribWindows; ++w)
      batched_out[w] = attrib::expected_gradients(params, windows[w], baselines, kPathSteps);
    r.batched_s = seconds_since(t0);
    for (int w = 0; w < kAttribWindows; ++w) {
      r.max_diff = std::max(r.max_diff, std::abs(serial_out[w].base_value - batched_out[w].base_value));
      r.max_diff = std::max(r.max_diff, std::abs(serial_out[w].prediction - batched_out[w].prediction));
      for (int i = 0; i < kWindowLen * kFeatures; ++i)
        r.max_diff =
            std::max(r.max_diff, std::abs(serial_out[w].phi.data[i] - batched_out[w].phi.data[i]));
    }
    print_row("expected_gradients", r);
    if (r.max_diff != 0.0) ++failures;
  }

  if (failures != 0) {
    std::printf("FAIL: %d kernel(s) diverged from the serial reference\n", failures);
    return 1;
  }
  std::printf("all batched kernels bit-identical to the serial reference\n");
  return 0;
}
