// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "sentinel/attrib.hpp"
#include "sentinel/grunet.hpp"
#include "sentinel/matrix.hpp"

// Serial reference implementations of the numeric kernels: one window at a
// time, textbook loops, no batching, no threads. They accumulate every dot
// product in the same element order as the batched kernels, so tests compare
// the two paths for bit-identical output and the benchmark measures the
// speedup honestly.
namespace sentinel::ref {

grunet::ForwardResult forward(const grunet::GruParams& params, const Matrix& window);

Matrix grad_input(const grunet::GruParams& params, const Matrix& window, int out_index);

/// One path point at a time, flattened (baseline, step) pairs in the same
/// order as the batched implementation.
attrib::AttributionWindow expected_gradients(const grunet::GruParams& model,
                                             const Matrix& window,
                                             const std::vector<Matrix>& baselines,
                                             int n_path_steps);

}  // namespace sentinel::ref
