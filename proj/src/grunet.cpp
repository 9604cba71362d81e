// SPDX-License-Identifier: Apache-2.0
#include "sentinel/grunet.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <span>
#include <stdexcept>

#include "json.hpp"
#include "sentinel/rng.hpp"

namespace sentinel::grunet {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void check_finite(const Matrix& m, const char* what) {
  for (double v : m.data)
    if (!std::isfinite(v)) throw std::invalid_argument(std::string(what) + ": non-finite value");
}

void check_params(const GruParams& p) {
  if (p.input_dim < 1 || p.hidden_dim < 1)
    throw std::invalid_argument("gru: uninitialized parameters");
}

// Forward caches for one batched pass. Row t*E+e of each matrix holds the
// step-t state of sequence e.
struct Caches {
  int L = 0, E = 0;
  Matrix z, r, g, q, h;
};

// One GRU step over E sequences. The accumulation order per output element
// is fixed: input term (ascending f), recurrent term (ascending k), bias,
// activation. The serial reference uses the identical order, which makes the
// two paths bit-comparable.
void cell_step(const GruParams& p, const double* xt, const double* hprev, int E, double* z_out,
               double* r_out, double* g_out, double* q_out, double* h_out, double* pre_z,
               double* pre_r, double* pre_g) {
  const int F = p.input_dim;
  const int H = p.hidden_dim;
  for (int e = 0; e < E; ++e) {
    const double* x = xt + static_cast<std::size_t>(e) * F;
    const double* hp = hprev ? hprev + static_cast<std::size_t>(e) * H : nullptr;
    double* pz = pre_z;
    double* pr = pre_r;
    double* pg = pre_g;
    double* zr = z_out + static_cast<std::size_t>(e) * H;
    double* rr = r_out + static_cast<std::size_t>(e) * H;
    double* gr = g_out + static_cast<std::size_t>(e) * H;
    double* qr = q_out + static_cast<std::size_t>(e) * H;
    double* hr = h_out + static_cast<std::size_t>(e) * H;

    for (int j = 0; j < H; ++j) pz[j] = 0.0;
    for (int j = 0; j < H; ++j) pr[j] = 0.0;
    for (int j = 0; j < H; ++j) pg[j] = 0.0;
    for (int f = 0; f < F; ++f) {
      const double xv = x[f];
      const double* wz = p.w_z.row_ptr(f);
      const double* wr = p.w_r.row_ptr(f);
      const double* wh = p.w_h.row_ptr(f);
      for (int j = 0; j < H; ++j) pz[j] += xv * wz[j];
      for (int j = 0; j < H; ++j) pr[j] += xv * wr[j];
      for (int j = 0; j < H; ++j) pg[j] += xv * wh[j];
    }
    if (hp) {
      for (int k = 0; k < H; ++k) {
        const double hv = hp[k];
        const double* uz = p.u_z.row_ptr(k);
        const double* ur = p.u_r.row_ptr(k);
        for (int j = 0; j < H; ++j) pz[j] += hv * uz[j];
        for (int j = 0; j < H; ++j) pr[j] += hv * ur[j];
      }
    }
    for (int j = 0; j < H; ++j) zr[j] = sigmoid(pz[j] + p.b_z[j]);
    for (int j = 0; j < H; ++j) rr[j] = sigmoid(pr[j] + p.b_r[j]);
    for (int j = 0; j < H; ++j) qr[j] = hp ? rr[j] * hp[j] : 0.0;
    for (int k = 0; k < H; ++k) {
      const double qv = qr[k];
      const double* uh = p.u_h.row_ptr(k);
      for (int j = 0; j < H; ++j) pg[j] += qv * uh[j];
    }
    for (int j = 0; j < H; ++j) gr[j] = std::tanh(pg[j] + p.b_h[j]);
    for (int j = 0; j < H; ++j) hr[j] = (1.0 - zr[j]) * (hp ? hp[j] : 0.0) + zr[j] * gr[j];
  }
}

void forward_pass(const GruParams& p, const Matrix& inputs, int L, int E, Caches& c) {
  const int H = p.hidden_dim;
  c.L = L;
  c.E = E;
  c.z = Matrix(L * E, H);
  c.r = Matrix(L * E, H);
  c.g = Matrix(L * E, H);
  c.q = Matrix(L * E, H);
  c.h = Matrix(L * E, H);
  std::vector<double> pre_z(H), pre_r(H), pre_g(H);
  for (int t = 0; t < L; ++t) {
    const double* hprev = (t == 0) ? nullptr : c.h.row_ptr((t - 1) * E);
    cell_step(p, inputs.row_ptr(t * E), hprev, E, c.z.row_ptr(t * E), c.r.row_ptr(t * E),
              c.g.row_ptr(t * E), c.q.row_ptr(t * E), c.h.row_ptr(t * E), pre_z.data(),
              pre_r.data(), pre_g.data());
  }
}

// Raw head output (unit target scale), one step.
double head_raw(const GruParams& p, const double* h) {
  double acc = 0.0;
  for (int j = 0; j < p.hidden_dim; ++j) acc += h[j] * p.head_w[j];
  return acc + p.head_b;
}

// Reverse pass. d_y holds dL/dy (raw head scale) per step and sequence, or
// null entries beyond `top_step` are ignored. Accumulates input gradients
// into d_x (same layout as inputs) and/or parameter gradients into d_p.
void backward_pass(const GruParams& p, const Matrix& inputs, const Caches& c,
                   const std::vector<double>& d_y, int top_step, Matrix* d_x, GruParams* d_p) {
  const int F = p.input_dim;
  const int H = p.hidden_dim;
  const int E = c.E;
  Matrix dh(E, H), dh_next(E, H);
  std::vector<double> dpz(H), dpr(H), dpg(H), dq(H);

  for (int t = top_step; t >= 0; --t) {
    const double* xt = inputs.row_ptr(t * E);
    const double* hprev = (t == 0) ? nullptr : c.h.row_ptr((t - 1) * E);
    for (int e = 0; e < E; ++e) {
      double* dhe = dh.row_ptr(e);
      const double dyv = d_y[static_cast<std::size_t>(t) * E + e];
      const double* hrow = c.h.row_ptr(t * E + e);
      if (dyv != 0.0) {
        for (int j = 0; j < H; ++j) dhe[j] += dyv * p.head_w[j];
        if (d_p) {
          for (int j = 0; j < H; ++j) d_p->head_w[j] += dyv * hrow[j];
          d_p->head_b += dyv;
        }
      }

      const double* z = c.z.row_ptr(t * E + e);
      const double* r = c.r.row_ptr(t * E + e);
      const double* g = c.g.row_ptr(t * E + e);
      const double* q = c.q.row_ptr(t * E + e);
      const double* hp = hprev ? hprev + static_cast<std::size_t>(e) * H : nullptr;

      for (int j = 0; j < H; ++j) {
        const double hpj = hp ? hp[j] : 0.0;
        dpg[j] = dhe[j] * z[j] * (1.0 - g[j] * g[j]);
        dpz[j] = dhe[j] * (g[j] - hpj) * z[j] * (1.0 - z[j]);
      }
      for (int k = 0; k < H; ++k) {
        const double* uh = p.u_h.row_ptr(k);
        double acc = 0.0;
        for (int j = 0; j < H; ++j) acc += dpg[j] * uh[j];
        dq[k] = acc;
      }
      for (int k = 0; k < H; ++k) {
        const double hpk = hp ? hp[k] : 0.0;
        dpr[k] = dq[k] * hpk * r[k] * (1.0 - r[k]);
      }

      if (d_x) {
        double* dx = d_x->row_ptr(t * E + e);
        for (int f = 0; f < F; ++f) {
          const double* wz = p.w_z.row_ptr(f);
          const double* wr = p.w_r.row_ptr(f);
          const double* wh = p.w_h.row_ptr(f);
          double acc = 0.0;
          for (int j = 0; j < H; ++j) acc += dpz[j] * wz[j];
          for (int j = 0; j < H; ++j) acc += dpr[j] * wr[j];
          for (int j = 0; j < H; ++j) acc += dpg[j] * wh[j];
          dx[f] += acc;
        }
      }

      double* dhn = dh_next.row_ptr(e);
      for (int k = 0; k < H; ++k) {
        const double* uz = p.u_z.row_ptr(k);
        const double* ur = p.u_r.row_ptr(k);
        double acc = dhe[k] * (1.0 - z[k]) + dq[k] * r[k];
        for (int j = 0; j < H; ++j) acc += dpz[j] * uz[j];
        for (int j = 0; j < H; ++j) acc += dpr[j] * ur[j];
        dhn[k] = acc;
      }

      if (d_p) {
        for (int f = 0; f < F; ++f) {
          const double xv = xt[static_cast<std::size_t>(e) * F + f];
          double* gwz = d_p->w_z.row_ptr(f);
          double* gwr = d_p->w_r.row_ptr(f);
          double* gwh = d_p->w_h.row_ptr(f);
          for (int j = 0; j < H; ++j) gwz[j] += xv * dpz[j];
          for (int j = 0; j < H; ++j) gwr[j] += xv * dpr[j];
          for (int j = 0; j < H; ++j) gwh[j] += xv * dpg[j];
        }
        for (int k = 0; k < H; ++k) {
          const double hpk = hp ? hp[k] : 0.0;
          const double qk = q[k];
          double* guz = d_p->u_z.row_ptr(k);
          double* gur = d_p->u_r.row_ptr(k);
          double* guh = d_p->u_h.row_ptr(k);
          for (int j = 0; j < H; ++j) guz[j] += hpk * dpz[j];
          for (int j = 0; j < H; ++j) gur[j] += hpk * dpr[j];
          for (int j = 0; j < H; ++j) guh[j] += qk * dpg[j];
        }
        for (int j = 0; j < H; ++j) d_p->b_z[j] += dpz[j];
        for (int j = 0; j < H; ++j) d_p->b_r[j] += dpr[j];
        for (int j = 0; j < H; ++j) d_p->b_h[j] += dpg[j];
      }
    }
    std::swap(dh.data, dh_next.data);
    dh_next.fill(0.0);
  }
}

GruParams zero_like(int F, int H) {
  GruParams p;
  p.input_dim = F;
  p.hidden_dim = H;
  p.w_z = Matrix(F, H);
  p.w_r = Matrix(F, H);
  p.w_h = Matrix(F, H);
  p.u_z = Matrix(H, H);
  p.u_r = Matrix(H, H);
  p.u_h = Matrix(H, H);
  p.b_z.assign(H, 0.0);
  p.b_r.assign(H, 0.0);
  p.b_h.assign(H, 0.0);
  p.head_w.assign(H, 0.0);
  p.head_b = 0.0;
  return p;
}

std::vector<std::span<double>> param_spans(GruParams& p) {
  return {std::span<double>(p.w_z.data), std::span<double>(p.w_r.data),
          std::span<double>(p.w_h.data), std::span<double>(p.u_z.data),
          std::span<double>(p.u_r.data), std::span<double>(p.u_h.data),
          std::span<double>(p.b_z),      std::span<double>(p.b_r),
          std::span<double>(p.b_h),      std::span<double>(p.head_w),
          std::span<double>(&p.head_b, 1)};
}

struct MetricAccum {
  double sse = 0.0, sae = 0.0, sape = 0.0;
  std::size_t n = 0, n_mape = 0;

  void add(double pred, double truth) {
    const double d = pred - truth;
    sse += d * d;
    sae += std::abs(d);
    if (truth > 1.0) {
      sape += std::abs(d) / truth;
      ++n_mape;
    }
    ++n;
  }
  Metrics finish() const {
    if (n == 0) throw std::invalid_argument("metrics: empty input");
    Metrics m;
    m.rmse = std::sqrt(sse / static_cast<double>(n));
    m.mae = sae / static_cast<double>(n);
    m.mape = n_mape ? 100.0 * sape / static_cast<double>(n_mape) : 0.0;
    return m;
  }
};

constexpr int kEvalChunk = 512;  // windows per batched evaluation pass

// Gathers windows [first, first+count) of the set into the interleaved
// batched layout; normalized targets go to tgt (step-major, like preds).
void gather_batch(const WindowSet& set, const std::vector<int>& order, int first, int count,
                  double t_mean, double t_std, Matrix& inputs, std::vector<double>& tgt) {
  const int L = set.window_len;
  const int F = set.input_dim();
  inputs = Matrix(L * count, F);
  tgt.assign(static_cast<std::size_t>(L) * count, 0.0);
  for (int e = 0; e < count; ++e) {
    const WindowRef& w = set.windows[order[first + e]];
    const Matrix& feat = set.features[w.series];
    const auto& targ = set.targets[w.series];
    for (int t = 0; t < L; ++t) {
      const double* src = feat.row_ptr(w.start + t);
      double* dst = inputs.row_ptr(t * count + e);
      for (int f = 0; f < F; ++f) dst[f] = src[f];
      tgt[static_cast<std::size_t>(t) * count + e] = (targ[w.start + t] - t_mean) / t_std;
    }
  }
}

// Accumulates per-step prediction errors over a whole window set, in window
// order, on the normalized target scale. Used for val RMSE and final metrics.
void eval_windows(const GruParams& p, const WindowSet& set, double t_mean, double t_std,
                  MetricAccum& acc_ppb, double* sse_norm) {
  const int L = set.window_len;
  std::vector<int> order(set.windows.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  Matrix inputs;
  std::vector<double> tgt;
  Caches c;
  double sse = 0.0;
  for (int first = 0; first < static_cast<int>(order.size()); first += kEvalChunk) {
    const int count = std::min<int>(kEvalChunk, static_cast<int>(order.size()) - first);
    gather_batch(set, order, first, count, t_mean, t_std, inputs, tgt);
    forward_pass(p, inputs, L, count, c);
    for (int t = 0; t < L; ++t)
      for (int e = 0; e < count; ++e) {
        const double y = head_raw(p, c.h.row_ptr(t * count + e));
        const double tn = tgt[static_cast<std::size_t>(t) * count + e];
        const double d = y - tn;
        sse += d * d;
        acc_ppb.add(t_mean + t_std * y, t_mean + t_std * tn);
      }
  }
  if (sse_norm) *sse_norm = sse;
}

}  // namespace

GruParams init_params(int input_dim, int hidden_dim, std::uint64_t seed) {
  if (input_dim < 1 || hidden_dim < 1)
    throw std::invalid_argument("init_params: dimensions must be >= 1");
  GruParams p = zero_like(input_dim, hidden_dim);
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden_dim));
  Rng rng(seed);
  // Draw order: w_z, w_r, w_h, u_z, u_r, u_h, b_z, b_r, b_h, head_w, head_b,
  // each row-major. Changing this order changes every seeded run.
  for (auto span : param_spans(p))
    for (double& v : span) v = rng.uniform(-bound, bound);
  return p;
}

ForwardResult forward(const GruParams& params, const Matrix& window) {
  check_params(params);
  if (window.cols != params.input_dim)
    throw std::invalid_argument("forward: window has " + std::to_string(window.cols) +
                                " features, model expects " + std::to_string(params.input_dim));
  if (window.rows < 1) throw std::invalid_argument("forward: empty window");
  check_finite(window, "forward");

  Caches c;
  forward_pass(params, window, window.rows, 1, c);
  ForwardResult res;
  res.hidden = c.h;
  res.predictions.resize(window.rows);
  for (int t = 0; t < window.rows; ++t)
    res.predictions[t] = params.target_mean + params.target_std * head_raw(params, c.h.row_ptr(t));
  return res;
}

Matrix grad_input(const GruParams& params, const Matrix& window, int out_index) {
  Matrix grads;
  grad_input_multi(params, window, window.rows, 1, out_index, grads, nullptr);
  return grads;
}

void forward_multi(const GruParams& params, const Matrix& inputs, int n_steps, int n_eval,
                   int out_index, std::vector<double>& predictions) {
  check_params(params);
  if (n_steps < 1 || n_eval < 1 || inputs.rows != n_steps * n_eval ||
      inputs.cols != params.input_dim)
    throw std::invalid_argument("forward_multi: shape mismatch");
  if (out_index < 0 || out_index >= n_steps)
    throw std::invalid_argument("forward_multi: out_index out of range");
  check_finite(inputs, "forward_multi");

  Caches c;
  forward_pass(params, inputs, n_steps, n_eval, c);
  predictions.resize(n_eval);
  for (int e = 0; e < n_eval; ++e)
    predictions[e] =
        params.target_mean + params.target_std * head_raw(params, c.h.row_ptr(out_index * n_eval + e));
}

void grad_input_multi(const GruParams& params, const Matrix& inputs, int n_steps, int n_eval,
                      int out_index, Matrix& grads, std::vector<double>* predictions) {
  check_params(params);
  if (n_steps < 1 || n_eval < 1 || inputs.rows != n_steps * n_eval ||
      inputs.cols != params.input_dim)
    throw std::invalid_argument("grad_input_multi: shape mismatch");
  if (out_index < 0 || out_index >= n_steps)
    throw std::invalid_argument("grad_input_multi: out_index out of range");
  check_finite(inputs, "grad_input_multi");

  Caches c;
  forward_pass(params, inputs, n_steps, n_eval, c);
  if (predictions) {
    predictions->resize(n_eval);
    for (int e = 0; e < n_eval; ++e)
      (*predictions)[e] = params.target_mean +
                          params.target_std * head_raw(params, c.h.row_ptr(out_index * n_eval + e));
  }

  // d(prediction)/d(raw head) = target_std; steps after out_index stay zero.
  std::vector<double> d_y(static_cast<std::size_t>(n_steps) * n_eval, 0.0);
  for (int e = 0; e < n_eval; ++e)
    d_y[static_cast<std::size_t>(out_index) * n_eval + e] = params.target_std;
  grads = Matrix(n_steps * n_eval, params.input_dim);
  backward_pass(params, inputs, c, d_y, out_index, &grads, nullptr);
}

WindowSet build_windows(std::vector<Matrix> features, std::vector<std::vector<double>> targets,
                        int window_len) {
  if (window_len < 1) throw std::invalid_argument("build_windows: window_len must be >= 1");
  if (features.size() != targets.size())
    throw std::invalid_argument("build_windows: series/target count mismatch");
  WindowSet set;
  set.window_len = window_len;
  for (std::size_t s = 0; s < features.size(); ++s) {
    if (static_cast<std::size_t>(features[s].rows) != targets[s].size())
      throw std::invalid_argument("build_windows: series " + std::to_string(s) +
                                  " feature/target length mismatch");
    if (!features.empty() && features[s].cols != features[0].cols)
      throw std::invalid_argument("build_windows: feature count differs between series");
    check_finite(features[s], "build_windows");
    for (double v : targets[s])
      if (!std::isfinite(v)) throw std::invalid_argument("build_windows: non-finite target");
    for (int start = 0; start + window_len <= features[s].rows; ++start)
      set.windows.push_back({static_cast<int>(s), start});
  }
  set.features = std::move(features);
  set.targets = std::move(targets);
  return set;
}

Metrics metrics(const std::vector<double>& pred, const std::vector<double>& truth) {
  if (pred.size() != truth.size()) throw std::invalid_argument("metrics: length mismatch");
  MetricAccum acc;
  for (std::size_t i = 0; i < pred.size(); ++i) acc.add(pred[i], truth[i]);
  return acc.finish();
}

TrainResult train(const WindowSet& train_set, const WindowSet& val_set, const Hyper& hyper,
                  std::uint64_t seed) {
  const auto t_start = std::chrono::steady_clock::now();
  if (train_set.empty()) throw std::invalid_argument("train: empty window set");
  if (train_set.window_len != hyper.window_len)
    throw std::invalid_argument("train: window set built with a different window length");
  if (!val_set.empty() && val_set.window_len != hyper.window_len)
    throw std::invalid_argument("train: val window length mismatch");
  const int F = train_set.input_dim();
  const int L = hyper.window_len;
  const int n_windows = static_cast<int>(train_set.windows.size());

  // Target scale, from the training series only. Keeps Adam's unit step size
  // appropriate for ppb targets of any magnitude.
  double t_mean = 0.0, t_var = 0.0;
  std::size_t t_n = 0;
  for (const auto& series : train_set.targets) {
    for (double v : series) t_mean += v;
    t_n += series.size();
  }
  t_mean /= static_cast<double>(t_n);
  for (const auto& series : train_set.targets)
    for (double v : series) t_var += (v - t_mean) * (v - t_mean);
  double t_std = std::sqrt(t_var / static_cast<double>(t_n));
  if (t_std <= 0.0) t_std = 1.0;

  GruParams params = init_params(F, hyper.hidden, derive_seed(seed, 0));
  GruParams m = zero_like(F, hyper.hidden);
  GruParams v = zero_like(F, hyper.hidden);
  GruParams grads = zero_like(F, hyper.hidden);
  long adam_step = 0;

  Rng shuffle_rng(derive_seed(seed, 1));
  std::vector<int> order(n_windows);
  for (int i = 0; i < n_windows; ++i) order[i] = i;

  TrainResult result;
  TrainReport& report = result.report;
  report.seed = seed;
  report.hyper = hyper;

  GruParams best_params = params;
  double best_val = std::numeric_limits<double>::infinity();
  int since_best = 0;
  int best_epoch = 0;

  Matrix inputs;
  std::vector<double> tgt;
  Caches c;
  std::vector<double> d_y;

  for (int epoch = 0; epoch < hyper.max_epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double sse = 0.0;
    for (int first = 0; first < n_windows; first += hyper.batch_size) {
      const int E = std::min(hyper.batch_size, n_windows - first);
      gather_batch(train_set, order, first, E, t_mean, t_std, inputs, tgt);
      forward_pass(params, inputs, L, E, c);

      const double scale = 2.0 / (static_cast<double>(E) * L);
      d_y.assign(static_cast<std::size_t>(L) * E, 0.0);
      for (int t = 0; t < L; ++t)
        for (int e = 0; e < E; ++e) {
          const std::size_t i = static_cast<std::size_t>(t) * E + e;
          const double diff = head_raw(params, c.h.row_ptr(t * E + e)) - tgt[i];
          d_y[i] = scale * diff;
          sse += diff * diff;
        }

      for (auto span : param_spans(grads))
        for (double& g : span) g = 0.0;
      backward_pass(params, inputs, c, d_y, L - 1, nullptr, &grads);

      ++adam_step;
      const double bc1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(adam_step));
      const double bc2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(adam_step));
      auto ps = param_spans(params);
      auto ms = param_spans(m);
      auto vs = param_spans(v);
      auto gs = param_spans(grads);
      for (std::size_t b = 0; b < ps.size(); ++b)
        for (std::size_t i = 0; i < ps[b].size(); ++i) {
          const double g = gs[b][i];
          ms[b][i] = hyper.beta1 * ms[b][i] + (1.0 - hyper.beta1) * g;
          vs[b][i] = hyper.beta2 * vs[b][i] + (1.0 - hyper.beta2) * g * g;
          ps[b][i] -= hyper.learning_rate * (ms[b][i] / bc1) /
                      (std::sqrt(vs[b][i] / bc2) + hyper.adam_eps);
        }
    }

    const double epoch_mse = sse / (static_cast<double>(n_windows) * L);
    if (!std::isfinite(epoch_mse))
      throw std::runtime_error("train: loss diverged at epoch " + std::to_string(epoch) +
                               "; last finite epoch " + std::to_string(epoch - 1));
    report.loss_history.push_back(epoch_mse * t_std * t_std);

    if (!val_set.empty()) {
      MetricAccum unused;
      double val_sse = 0.0;
      eval_windows(params, val_set, t_mean, t_std, unused, &val_sse);
      const double val_rmse =
          std::sqrt(val_sse / (static_cast<double>(val_set.windows.size()) * L));
      if (val_rmse < best_val) {
        best_val = val_rmse;
        best_params = params;
        best_epoch = epoch;
        since_best = 0;
      } else if (++since_best >= hyper.patience) {
        break;
      }
    } else {
      best_epoch = epoch;
    }
  }

  if (!val_set.empty()) params = best_params;
  params.target_mean = t_mean;
  params.target_std = t_std;
  report.best_epoch = best_epoch;

  MetricAccum train_acc;
  eval_windows(params, train_set, t_mean, t_std, train_acc, nullptr);
  report.train_metrics = train_acc.finish();
  if (!val_set.empty()) {
    MetricAccum val_acc;
    eval_windows(params, val_set, t_mean, t_std, val_acc, nullptr);
    report.val_metrics = val_acc.finish();
  }

  report.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  result.params = params;
  return result;
}

std::vector<double> predict_series(const GruParams& params, const Matrix& features,
                                   int window_len) {
  check_params(params);
  const int S = features.rows;
  const int L = window_len;
  if (L < 1) throw std::invalid_argument("predict_series: window_len must be >= 1");
  if (S < L)
    throw std::invalid_argument("predict_series: series length " + std::to_string(S) +
                                " shorter than window " + std::to_string(L));
  check_finite(features, "predict_series");
  const int F = features.cols;
  const int n_win = S - L + 1;

  // All per-step predictions of all windows, then the per-cycle mean over
  // the windows covering each cycle.
  std::vector<double> sums(S, 0.0);
  std::vector<int> counts(S, 0);
  Caches c;
  for (int first = 0; first < n_win; first += kEvalChunk) {
    const int E = std::min(kEvalChunk, n_win - first);
    Matrix inputs(L * E, F);
    for (int e = 0; e < E; ++e)
      for (int t = 0; t < L; ++t) {
        const double* src = features.row_ptr(first + e + t);
        double* dst = inputs.row_ptr(t * E + e);
        for (int f = 0; f < F; ++f) dst[f] = src[f];
      }
    forward_pass(params, inputs, L, E, c);
    for (int e = 0; e < E; ++e)
      for (int t = 0; t < L; ++t) {
        const double y =
            params.target_mean + params.target_std * head_raw(params, c.h.row_ptr(t * E + e));
        sums[first + e + t] += y;
        counts[first + e + t] += 1;
      }
  }
  std::vector<double> est(S);
  for (int i = 0; i < S; ++i) est[i] = sums[i] / counts[i];
  return est;
}

namespace {

nlohmann::json matrix_to_json(const Matrix& m) {
  return {{"rows", m.rows}, {"cols", m.cols}, {"data", m.data}};
}

Matrix matrix_from_json(const nlohmann::json& j) {
  Matrix m(j.at("rows").get<int>(), j.at("cols").get<int>());
  m.data = j.at("data").get<std::vector<double>>();
  if (m.data.size() != static_cast<std::size_t>(m.rows) * m.cols)
    throw std::runtime_error("model artifact: matrix size mismatch");
  return m;
}

}  // namespace

void save_model(const ModelArtifact& artifact, const std::string& path) {
  const GruParams& p = artifact.params;
  nlohmann::json j;
  j["format"] = "sentinel-gru";
  j["version"] = 1;
  j["seed"] = artifact.seed;
  j["hyper"] = {{"hidden", artifact.hyper.hidden},
                {"window_len", artifact.hyper.window_len},
                {"learning_rate", artifact.hyper.learning_rate},
                {"max_epochs", artifact.hyper.max_epochs},
                {"batch_size", artifact.hyper.batch_size},
                {"patience", artifact.hyper.patience},
                {"beta1", artifact.hyper.beta1},
                {"beta2", artifact.hyper.beta2},
                {"adam_eps", artifact.hyper.adam_eps}};
  j["norm_stats"] = {{"mean", artifact.stats.mean},
                     {"stddev", artifact.stats.stddev},
                     {"feature_names", artifact.stats.feature_names}};
  j["params"] = {{"input_dim", p.input_dim},
                 {"hidden_dim", p.hidden_dim},
                 {"w_z", matrix_to_json(p.w_z)},
                 {"w_r", matrix_to_json(p.w_r)},
                 {"w_h", matrix_to_json(p.w_h)},
                 {"u_z", matrix_to_json(p.u_z)},
                 {"u_r", matrix_to_json(p.u_r)},
                 {"u_h", matrix_to_json(p.u_h)},
                 {"b_z", p.b_z},
                 {"b_r", p.b_r},
                 {"b_h", p.b_h},
                 {"head_w", p.head_w},
                 {"head_b", p.head_b},
                 {"target_mean", p.target_mean},
                 {"target_std", p.target_std}};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_model: cannot open " + path);
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("save_model: write failed for " + path);
}

ModelArtifact load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_model: cannot open " + path);
  nlohmann::json j = nlohmann::json::parse(in);
  if (j.at("format").get<std::string>() != "sentinel-gru")
    throw std::runtime_error("load_model: unrecognized format in " + path);

  ModelArtifact a;
  a.seed = j.at("seed").get<std::uint64_t>();
  const auto& h = j.at("hyper");
  a.hyper.hidden = h.at("hidden").get<int>();
  a.hyper.window_len = h.at("window_len").get<int>();
  a.hyper.learning_rate = h.at("learning_rate").get<double>();
  a.hyper.max_epochs = h.at("max_epochs").get<int>();
  a.hyper.batch_size = h.at("batch_size").get<int>();
  a.hyper.patience = h.at("patience").get<int>();
  a.hyper.beta1 = h.at("beta1").get<double>();
  a.hyper.beta2 = h.at("beta2").get<double>();
  a.hyper.adam_eps = h.at("adam_eps").get<double>();

  const auto& s = j.at("norm_stats");
  a.stats.mean = s.at("mean").get<std::vector<double>>();
  a.stats.stddev = s.at("stddev").get<std::vector<double>>();
  a.stats.feature_names = s.at("feature_names").get<std::vector<std::string>>();

  const auto& pj = j.at("params");
  GruParams& p = a.params;
  p.input_dim = pj.at("input_dim").get<int>();
  p.hidden_dim = pj.at("hidden_dim").get<int>();
  p.w_z = matrix_from_json(pj.at("w_z"));
  p.w_r = matrix_from_json(pj.at("w_r"));
  p.w_h = matrix_from_json(pj.at("w_h"));
  p.u_z = matrix_from_json(pj.at("u_z"));
  p.u_r = matrix_from_json(pj.at("u_r"));
  p.u_h = matrix_from_json(pj.at("u_h"));
  p.b_z = pj.at("b_z").get<std::vector<double>>();
  p.b_r = pj.at("b_r").get<std::vector<double>>();
  p.b_h = pj.at("b_h").get<std::vector<double>>();
  p.head_w = pj.at("head_w").get<std::vector<double>>();
  p.head_b = pj.at("head_b").get<double>();
  p.target_mean = pj.at("target_mean").get<double>();
  p.target_std = pj.at("target_std").get<double>();
  if (p.w_z.rows != p.input_dim || p.u_z.rows != p.hidden_dim ||
      static_cast<int>(p.head_w.size()) != p.hidden_dim)
    throw std::runtime_error("load_model: inconsistent dimensions in " + path);
  return a;
}

}  // namespace sentinel::grunet
