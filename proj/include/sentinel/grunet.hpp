// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sentinel/featex.hpp"
#include "sentinel/matrix.hpp"

namespace sentinel::grunet {

// Gated recurrent unit with one hidden layer and a linear head:
//   z_t = sigmoid(x_t Wz + h_{t-1} Uz + bz)
//   r_t = sigmoid(x_t Wr + h_{t-1} Ur + br)
//   g_t = tanh(x_t Wh + (r_t . h_{t-1}) Uh + bh)
//   h_t = (1 - z_t) . h_{t-1} + z_t . g_t
//   y_t = target_mean + target_std * (h_t . head_w + head_b)
// Targets are z-scored inside train(), so the head works on unit scale and
// the affine (target_mean, target_std) restores ppb on output.
struct GruParams {
  int input_dim = 0;   // F
  int hidden_dim = 0;  // H
  Matrix w_z, w_r, w_h;  // F x H
  Matrix u_z, u_r, u_h;  // H x H
  std::vector<double> b_z, b_r, b_h;  // H
  std::vector<double> head_w;         // H
  double head_b = 0.0;
  double target_mean = 0.0;
  double target_std = 1.0;
};

/// All weights and biases drawn uniform(-1/sqrt(H), 1/sqrt(H)) from one
/// seeded stream, in a fixed documented order.
GruParams init_params(int input_dim, int hidden_dim, std::uint64_t seed);

struct ForwardResult {
  std::vector<double> predictions;  // per step, ppb
  Matrix hidden;                    // L x H
};

/// Runs one window (L x F). h_0 = 0. Throws on non-finite input.
ForwardResult forward(const GruParams& params, const Matrix& window);

/// Exact reverse-mode gradient of the step-`out_index` prediction w.r.t.
/// every input entry. Rows after out_index are exactly zero (causality).
Matrix grad_input(const GruParams& params, const Matrix& window, int out_index);

/// Batched evaluation: n_eval independent length-n_steps sequences, stored
/// interleaved so row (t * n_eval + e) of `inputs` is step t of sequence e.
/// Predictions are the step-`out_index` outputs per sequence. The batched
/// path accumulates every dot product in the same element order as the
/// plain per-window code, so results are bit-identical to it.
void forward_multi(const GruParams& params, const Matrix& inputs, int n_steps, int n_eval,
                   int out_index, std::vector<double>& predictions);

/// Per-sequence gradient of the step-`out_index` prediction w.r.t. that
/// sequence's inputs; `grads` uses the same interleaved layout as `inputs`.
/// Optionally also returns the step-`out_index` predictions.
void grad_input_multi(const GruParams& params, const Matrix& inputs, int n_steps, int n_eval,
                      int out_index, Matrix& grads, std::vector<double>* predictions = nullptr);

struct Hyper {
  int hidden = 40;
  int window_len = 32;
  double learning_rate = 1e-3;
  int max_epochs = 200;
  int batch_size = 32;
  int patience = 10;  // early-stopping epochs without val improvement
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
};

struct WindowRef {
  int series;  // index into WindowSet::features
  int start;   // first cycle of the window
};

// Stride-1 windows over per-sensor feature series plus aligned targets.
// Windows never span series boundaries.
struct WindowSet {
  std::vector<Matrix> features;              // per series: cycles x F
  std::vector<std::vector<double>> targets;  // per series: cycles, ppb
  std::vector<WindowRef> windows;
  int window_len = 0;

  int input_dim() const { return features.empty() ? 0 : features[0].cols; }
  bool empty() const { return windows.empty(); }
};

/// Enumerates all stride-1 windows. Series shorter than window_len
/// contribute none. Throws on non-finite values or shape mismatch.
WindowSet build_windows(std::vector<Matrix> features, std::vector<std::vector<double>> targets,
                        int window_len);

struct Metrics {
  double rmse = 0.0;  // ppb
  double mae = 0.0;   // ppb
  double mape = 0.0;  // percent, over truth > 1 ppb only
};

/// Throws on empty or mismatched input. MAPE skips truth <= 1 ppb; if no
/// qualifying points exist it is reported as 0.
Metrics metrics(const std::vector<double>& pred, const std::vector<double>& truth);

struct TrainReport {
  std::vector<double> loss_history;  // per-epoch train MSE, ppb^2
  double wall_time_s = 0.0;
  Metrics train_metrics;
  Metrics val_metrics;
  std::uint64_t seed = 0;
  Hyper hyper;
  int best_epoch = 0;  // epoch of the restored parameters
};

struct TrainResult {
  GruParams params;
  TrainReport report;
};

/// Adam on the MSE of all per-step predictions. Deterministic given seed
/// (init and shuffling draw from derived streams). Early-stops on val RMSE
/// when val is non-empty and restores the best parameters. Throws when the
/// loss turns non-finite, naming the last finite epoch.
TrainResult train(const WindowSet& train_set, const WindowSet& val_set, const Hyper& hyper,
                  std::uint64_t seed);

/// Per-cycle estimate = mean over all stride-1 windows covering the cycle of
/// their prediction at that cycle's in-window step. Output length equals the
/// series length. Throws if the series is shorter than window_len.
std::vector<double> predict_series(const GruParams& params, const Matrix& features,
                                   int window_len);

struct ModelArtifact {
  GruParams params;
  featex::NormStats stats;
  Hyper hyper;
  std::uint64_t seed = 0;
};

/// JSON model blob: parameters, normalization stats, hyperparameters, seed.
void save_model(const ModelArtifact& artifact, const std::string& path);

ModelArtifact load_model(const std::string& path);

}  // namespace sentinel::grunet
