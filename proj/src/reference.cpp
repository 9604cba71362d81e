// SPDX-License-Identifier: Apache-2.0
#include "sentinel/reference.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace sentinel::ref {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Per-step state kept for the backward pass.
struct StepState {
  std::vector<double> z, r, g, q, h;
};

std::vector<StepState> run_forward(const grunet::GruParams& p, const Matrix& window) {
  const int F = p.input_dim;
  const int H = p.hidden_dim;
  if (window.cols != F) throw std::invalid_argument("ref::forward: feature count mismatch");
  if (window.rows < 1) throw std::invalid_argument("ref::forward: empty window");

  std::vector<StepState> steps(window.rows);
  std::vector<double> hprev(H, 0.0);
  for (int t = 0; t < window.rows; ++t) {
    StepState& st = steps[t];
    st.z.resize(H);
    st.r.resize(H);
    st.g.resize(H);
    st.q.resize(H);
    st.h.resize(H);
    const double* x = window.row_ptr(t);

    for (int j = 0; j < H; ++j) {
      double acc = 0.0;
      for (int f = 0; f < F; ++f) acc += x[f] * p.w_z(f, j);
      for (int k = 0; k < H; ++k) acc += hprev[k] * p.u_z(k, j);
      st.z[j] = sigmoid(acc + p.b_z[j]);
    }
    for (int j = 0; j < H; ++j) {
      double acc = 0.0;
      for (int f = 0; f < F; ++f) acc += x[f] * p.w_r(f, j);
      for (int k = 0; k < H; ++k) acc += hprev[k] * p.u_r(k, j);
      st.r[j] = sigmoid(acc + p.b_r[j]);
    }
    for (int k = 0; k < H; ++k) st.q[k] = st.r[k] * hprev[k];
    for (int j = 0; j < H; ++j) {
      double acc = 0.0;
      for (int f = 0; f < F; ++f) acc += x[f] * p.w_h(f, j);
      for (int k = 0; k < H; ++k) acc += st.q[k] * p.u_h(k, j);
      st.g[j] = std::tanh(acc + p.b_h[j]);
    }
    for (int j = 0; j < H; ++j) st.h[j] = (1.0 - st.z[j]) * hprev[j] + st.z[j] * st.g[j];
    hprev = st.h;
  }
  return steps;
}

double head(const grunet::GruParams& p, const std::vector<double>& h) {
  double acc = 0.0;
  for (int j = 0; j < p.hidden_dim; ++j) acc += h[j] * p.head_w[j];
  return p.target_mean + p.target_std * (acc + p.head_b);
}

}  // namespace

grunet::ForwardResult forward(const grunet::GruParams& params, const Matrix& window) {
  const auto steps = run_forward(params, window);
  grunet::ForwardResult res;
  res.hidden = Matrix(window.rows, params.hidden_dim);
  res.predictions.resize(window.rows);
  for (int t = 0; t < window.rows; ++t) {
    for (int j = 0; j < params.hidden_dim; ++j) res.hidden(t, j) = steps[t].h[j];
    res.predictions[t] = head(params, steps[t].h);
  }
  return res;
}

Matrix grad_input(const grunet::GruParams& params, const Matrix& window, int out_index) {
  const int F = params.input_dim;
  const int H = params.hidden_dim;
  if (out_index < 0 || out_index >= window.rows)
    throw std::invalid_argument("ref::grad_input: out_index out of range");
  const auto steps = run_forward(params, window);

  Matrix grads(window.rows, F);
  std::vector<double> dh(H), dpz(H), dpr(H), dpg(H), dq(H), dh_next(H);
  const std::vector<double> zero(H, 0.0);

  for (int j = 0; j < H; ++j) dh[j] = params.target_std * params.head_w[j];
  for (int t = out_index; t >= 0; --t) {
    const StepState& st = steps[t];
    const std::vector<double>& hp = (t == 0) ? zero : steps[t - 1].h;

    for (int j = 0; j < H; ++j) {
      dpg[j] = dh[j] * st.z[j] * (1.0 - st.g[j] * st.g[j]);
      dpz[j] = dh[j] * (st.g[j] - hp[j]) * st.z[j] * (1.0 - st.z[j]);
    }
    for (int k = 0; k < H; ++k) {
      double acc = 0.0;
      for (int j = 0; j < H; ++j) acc += dpg[j] * params.u_h(k, j);
      dq[k] = acc;
    }
    for (int k = 0; k < H; ++k) dpr[k] = dq[k] * hp[k] * st.r[k] * (1.0 - st.r[k]);

    for (int f = 0; f < F; ++f) {
      double acc = 0.0;
      for (int j = 0; j < H; ++j) acc += dpz[j] * params.w_z(f, j);
      for (int j = 0; j < H; ++j) acc += dpr[j] * params.w_r(f, j);
      for (int j = 0; j < H; ++j) acc += dpg[j] * params.w_h(f, j);
      grads(t, f) += acc;
    }
    for (int k = 0; k < H; ++k) {
      double acc = dh[k] * (1.0 - st.z[k]) + dq[k] * st.r[k];
      for (int j = 0; j < H; ++j) acc += dpz[j] * params.u_z(k, j);
      for (int j = 0; j < H; ++j) acc += dpr[j] * params.u_r(k, j);
      dh_next[k] = acc;
    }
    dh = dh_next;
  }
  return grads;
}

attrib::AttributionWindow expected_gradients(const grunet::GruParams& model,
                                             const Matrix& window,
                                             const std::vector<Matrix>& baselines,
                                             int n_path_steps) {
  if (baselines.empty())
    throw std::invalid_argument("ref::expected_gradients: empty baseline pool");
  if (n_path_steps < 1)
    throw std::invalid_argument("ref::expected_gradients: need at least 1 path step");
  const int L = window.rows;
  const int F = window.cols;
  const int B = static_cast<int>(baselines.size());
  const int S = n_path_steps;

  attrib::AttributionWindow out;
  out.phi = Matrix(L, F);

  double acc = 0.0;
  for (int b = 0; b < B; ++b) acc += ref::forward(model, baselines[b]).predictions[L - 1];
  out.base_value = acc / B;
  out.prediction = ref::forward(model, window).predictions[L - 1];

  Matrix point(L, F);
  for (int b = 0; b < B; ++b) {
    const Matrix& xb = baselines[b];
    for (int s = 0; s < S; ++s) {
      const double alpha = (s + 0.5) / S;
      for (int t = 0; t < L; ++t)
        for (int f = 0; f < F; ++f) point(t, f) = xb(t, f) + alpha * (window(t, f) - xb(t, f));
      const Matrix grads = ref::grad_input(model, point, L - 1);
      for (int t = 0; t < L; ++t)
        for (int f = 0; f < F; ++f)
          out.phi(t, f) += (window(t, f) - xb(t, f)) * grads(t, f);
    }
  }
  const double norm = 1.0 / (static_cast<double>(B) * S);
  for (double& v : out.phi.data) v *= norm;

  double total_phi = 0.0;
  for (double v : out.phi.data) total_phi += v;
  out.completeness_residual = total_phi - (out.prediction - out.base_value);
  return out;
}

}  // namespace sentinel::ref
