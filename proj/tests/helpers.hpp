// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "sentinel/grunet.hpp"
#include "sentinel/matrix.hpp"
#include "sentinel/rng.hpp"

namespace testutil {

inline sentinel::Matrix random_matrix(int rows, int cols, sentinel::Rng& rng, double scale = 1.0) {
  sentinel::Matrix m(rows, cols);
  for (double& v : m.data) v = rng.uniform(-scale, scale);
  return m;
}

inline std::vector<double> random_vector(int n, sentinel::Rng& rng, double scale = 1.0) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(-scale, scale);
  return v;
}

inline sentinel::grunet::GruParams random_params(int input_dim, int hidden_dim,
                                                 std::uint64_t seed) {
  auto p = sentinel::grunet::init_params(input_dim, hidden_dim, seed);
  sentinel::Rng rng(seed ^ 0x5eedULL);
  p.target_mean = rng.uniform(-5.0, 5.0);
  p.target_std = rng.uniform(0.5, 3.0);
  return p;
}

/// Central finite-difference gradient of the step-`out_index` prediction.
inline sentinel::Matrix fd_gradient(const sentinel::grunet::GruParams& params,
                                    const sentinel::Matrix& window, int out_index,
                                    double step = 1e-5) {
  sentinel::Matrix grad(window.rows, window.cols);
  sentinel::Matrix probe = window;
  for (int t = 0; t < window.rows; ++t)
    for (int f = 0; f < window.cols; ++f) {
      const double saved = probe(t, f);
      probe(t, f) = saved + step;
      const double hi = sentinel::grunet::forward(params, probe).predictions[out_index];
      probe(t, f) = saved - step;
      const double lo = sentinel::grunet::forward(params, probe).predictions[out_index];
      probe(t, f) = saved;
      grad(t, f) = (hi - lo) / (2.0 * step);
    }
  return grad;
}

/// |a - b| / max(|a|, |b|, floor)
inline double rel_err(double a, double b, double floor = 1e-5) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

/// GRU parameters that realize an exactly linear map in double arithmetic:
/// the update gate saturates to exactly 1.0, recurrent weights are zero, and
/// candidate pre-activations stay inside the region where tanh(u) rounds to
/// u. target_std re-scales the effective weights back to O(1). The effective
/// linear weight on input (t = L-1, f) is returned in `w_eff`.
inline sentinel::grunet::GruParams linear_params(int input_dim, int hidden_dim,
                                                 std::uint64_t seed,
                                                 std::vector<double>& w_eff) {
  using sentinel::Matrix;
  sentinel::grunet::GruParams p;
  const double kScale = 1e-12;
  p.input_dim = input_dim;
  p.hidden_dim = hidden_dim;
  sentinel::Rng rng(seed);
  p.w_z = Matrix(input_dim, hidden_dim);
  p.w_r = Matrix(input_dim, hidden_dim);
  p.w_h = random_matrix(input_dim, hidden_dim, rng);
  for (double& v : p.w_h.data) v *= kScale;
  p.u_z = Matrix(hidden_dim, hidden_dim);
  p.u_r = Matrix(hidden_dim, hidden_dim);
  p.u_h = Matrix(hidden_dim, hidden_dim);
  p.b_z.assign(hidden_dim, 45.0);  // sigmoid(45) == 1.0 in double
  p.b_r.assign(hidden_dim, 0.0);
  p.b_h.assign(hidden_dim, 0.0);
  p.head_w = random_vector(hidden_dim, rng);
  // Keep the de-normalized intercept O(1): a raw O(1) head_b would blow up
  // to ~1/kScale after output scaling and drown the completeness sum in
  // cancellation error.
  p.head_b = rng.uniform(-1.0, 1.0) * kScale;
  p.target_mean = rng.uniform(-2.0, 2.0);
  p.target_std = 1.0 / kScale;
  w_eff.assign(input_dim, 0.0);
  for (int f = 0; f < input_dim; ++f)
    for (int j = 0; j < hidden_dim; ++j)
      w_eff[f] += p.target_std * p.w_h(f, j) * p.head_w[j];
  return p;
}

/// Unique scratch directory under the system temp dir, removed on scope exit.
struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    path = std::filesystem::temp_directory_path() /
           (tag + "-" + std::to_string(sentinel::derive_seed(
                            static_cast<std::uint64_t>(
                                std::chrono::steady_clock::now().time_since_epoch().count()),
                            0) %
                        1000000));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::string str() const { return path.string(); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return text;
}

}  // namespace testutil
