#include "routefed/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "routefed/error.hpp"
#include "routefed/rng.hpp"

namespace routefed {
namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

[[noreturn]] void shape_error(const std::string& what) {
  throw Error(ErrorCode::kShapeMismatch, what);
}

// One LSTM step. `a` receives the post-activation gates (i, f, g, o);
// c and h are updated in place.
void lstm_step(const LstmWeights& lw, const double* x, std::vector<double>& h,
               std::vector<double>& c, double* a) {
  const std::size_t H = lw.hidden;
  const std::size_t D = lw.input;
  for (std::size_t r = 0; r < 4 * H; ++r) {
    double s = lw.b[r];
    const double* wr = lw.w.data() + r * D;
    for (std::size_t i = 0; i < D; ++i) s += wr[i] * x[i];
    const double* ur = lw.u.data() + r * H;
    for (std::size_t j = 0; j < H; ++j) s += ur[j] * h[j];
    a[r] = s;
  }
  for (std::size_t j = 0; j < H; ++j) {
    const double ig = sigmoid(a[j]);
    const double fg = sigmoid(a[H + j]);
    const double gg = std::tanh(a[2 * H + j]);
    const double og = sigmoid(a[3 * H + j]);
    a[j] = ig;
    a[H + j] = fg;
    a[2 * H + j] = gg;
    a[3 * H + j] = og;
    c[j] = fg * c[j] + ig * gg;
    h[j] = og * std::tanh(c[j]);
  }
}

}  // namespace

// ---------------------------------------------------------------- config

std::size_t ModelConfig::lstm_input() const {
  std::size_t d = 0;
  for (const auto& g : groups) d += g.convolve ? 1 : g.n_features;
  return d;
}

void ModelConfig::validate() const {
  if (segments == 0) throw Error(ErrorCode::kInvalidConfig, "model needs at least one segment");
  if (groups.empty()) throw Error(ErrorCode::kInvalidConfig, "model needs at least one group");
  if (pooled_len == 0) throw Error(ErrorCode::kInvalidConfig, "pooled length must be > 0");
  if (conv_kernel_time <= 0 || conv_kernel_time % 2 == 0) {
    throw Error(ErrorCode::kInvalidConfig, "conv kernel must be a positive odd number");
  }
  if (conv_out_channels != 1) {
    throw Error(ErrorCode::kInvalidConfig, "conv_out_channels is fixed at 1");
  }
  if (lstm_hidden == 0 || output_size == 0) {
    throw Error(ErrorCode::kInvalidConfig, "hidden and output sizes must be > 0");
  }
  for (const auto& g : groups) {
    if (g.n_features == 0) throw Error(ErrorCode::kInvalidConfig, "group without features");
    if (g.name == GroupName::kStatic) continue;
    if (g.ratio <= 0) throw Error(ErrorCode::kInvalidConfig, "pooling ratio must be > 0");
    if (g.time_len < static_cast<std::size_t>(g.ratio)) {
      throw Error(ErrorCode::kRTooLarge, std::string(to_string(g.name)) +
                                             ": time length shorter than R");
    }
    if (g.time_len / static_cast<std::size_t>(g.ratio) != pooled_len) {
      throw Error(ErrorCode::kShapeMismatch,
                  std::string(to_string(g.name)) + " does not pool to the common length");
    }
  }
}

ModelConfig make_model_config(const Dataset& dataset, const WindowSpec& window,
                              const FeatureSelection& selection, std::size_t lstm_hidden,
                              int conv_kernel_time) {
  window.validate();
  const std::int64_t span = static_cast<std::int64_t>(window.input_size) * dataset.input_step;
  if (span % dataset.output_step != 0) {
    shape_error("input span is not a whole number of output buckets");
  }
  ModelConfig cfg;
  cfg.segments = dataset.segments();
  cfg.pooled_len = static_cast<std::size_t>(span / dataset.output_step);
  cfg.conv_kernel_time = conv_kernel_time;
  cfg.lstm_hidden = lstm_hidden;
  cfg.output_size = static_cast<std::size_t>(window.output_size);
  for (const auto name : selection.groups()) {
    const auto& g = dataset.group(name);
    GroupSpec spec;
    spec.name = name;
    spec.n_features = g.data.features;
    if (g.is_static()) {
      spec.time_len = 1;
      spec.ratio = 1;
      spec.convolve = false;
    } else {
      spec.time_len = static_cast<std::size_t>(span / g.step_minutes);
      spec.ratio = pooling_ratio(g.step_minutes, dataset.output_step);
      spec.convolve = name != GroupName::kCalendar;
    }
    cfg.groups.push_back(spec);
  }
  cfg.validate();
  return cfg;
}

// ---------------------------------------------------------------- layers

Tensor3 conv_forward(const Tensor3& x, std::span<const double> weights, double bias) {
  const std::size_t F = x.features;
  if (F == 0 || weights.size() % F != 0 || (weights.size() / F) % 2 == 0) {
    shape_error("conv weights must be features x odd kernel");
  }
  const std::size_t kt = weights.size() / F;
  const std::ptrdiff_t half = static_cast<std::ptrdiff_t>(kt / 2);
  const std::ptrdiff_t T = static_cast<std::ptrdiff_t>(x.time);
  Tensor3 out(x.segments, x.time, 1);
  for (std::size_t k = 0; k < x.segments; ++k) {
    for (std::ptrdiff_t t = 0; t < T; ++t) {
      double s = bias;
      for (std::size_t j = 0; j < kt; ++j) {
        const std::ptrdiff_t src = t + static_cast<std::ptrdiff_t>(j) - half;
        if (src < 0 || src >= T) continue;
        const double* row = &x.data[(k * x.time + static_cast<std::size_t>(src)) * F];
        for (std::size_t f = 0; f < F; ++f) s += weights[f * kt + j] * row[f];
      }
      out.at(k, static_cast<std::size_t>(t), 0) = s;
    }
  }
  return out;
}

Tensor3 maxpool_time(const Tensor3& x, int ratio) {
  if (ratio <= 0) throw Error(ErrorCode::kInvalidArgument, "pooling ratio must be > 0");
  const std::size_t R = static_cast<std::size_t>(ratio);
  if (x.time < R) {
    throw Error(ErrorCode::kRTooLarge, "time length " + std::to_string(x.time) +
                                           " shorter than R = " + std::to_string(R));
  }
  const std::size_t T = x.time / R;
  Tensor3 out(x.segments, T, x.features);
  for (std::size_t k = 0; k < x.segments; ++k) {
    for (std::size_t b = 0; b < T; ++b) {
      for (std::size_t f = 0; f < x.features; ++f) {
        double m = x.at(k, b * R, f);
        for (std::size_t j = 1; j < R; ++j) m = std::max(m, x.at(k, b * R + j, f));
        out.at(k, b, f) = m;
      }
    }
  }
  return out;
}

LstmOutput lstm_forward(std::span<const double> sequence, std::size_t steps,
                        const LstmWeights& weights) {
  const std::size_t H = weights.hidden;
  const std::size_t D = weights.input;
  if (sequence.size() != steps * D || weights.w.size() != 4 * H * D ||
      weights.u.size() != 4 * H * H || weights.b.size() != 4 * H) {
    shape_error("lstm_forward: inconsistent shapes");
  }
  LstmOutput out;
  out.hidden_seq.reserve(steps * H);
  std::vector<double> h(H, 0.0), c(H, 0.0), a(4 * H);
  for (std::size_t t = 0; t < steps; ++t) {
    lstm_step(weights, sequence.data() + t * D, h, c, a.data());
    out.hidden_seq.insert(out.hidden_seq.end(), h.begin(), h.end());
  }
  out.final_hidden = h;
  return out;
}

// ---------------------------------------------------------------- model

ParamLayout::ParamLayout(const ModelConfig& config) {
  std::size_t off = 0;
  const std::size_t kt = static_cast<std::size_t>(config.conv_kernel_time);
  for (const auto& g : config.groups) {
    Conv c;
    if (g.convolve) {
      c.weights = off;
      off += g.n_features * kt;
      c.bias = off;
      off += 1;
    }
    conv.push_back(c);
  }
  const std::size_t H = config.lstm_hidden;
  const std::size_t D = config.lstm_input();
  lstm_w = off;
  off += 4 * H * D;
  lstm_u = off;
  off += 4 * H * H;
  lstm_b = off;
  off += 4 * H;
  head_w = off;
  off += config.output_size * H;
  head_b = off;
  off += config.output_size;
  total = off;
}

ForecastModel::ForecastModel(ModelConfig config, std::uint64_t seed)
    : config_(std::move(config)) {
  config_.validate();
  layout_ = ParamLayout(config_);
  params_.assign(layout_.total, 0.0);
  Rng rng(seed);
  auto fill = [&](std::size_t off, std::size_t n, std::size_t fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (std::size_t i = 0; i < n; ++i) params_[off + i] = rng.uniform(-bound, bound);
  };
  const std::size_t kt = static_cast<std::size_t>(config_.conv_kernel_time);
  for (std::size_t gi = 0; gi < config_.groups.size(); ++gi) {
    const auto& g = config_.groups[gi];
    if (!g.convolve) continue;
    fill(layout_.conv[gi].weights, g.n_features * kt, g.n_features * kt);
    fill(layout_.conv[gi].bias, 1, g.n_features * kt);
  }
  const std::size_t H = config_.lstm_hidden;
  const std::size_t D = config_.lstm_input();
  fill(layout_.lstm_w, 4 * H * D, D + H);
  fill(layout_.lstm_u, 4 * H * H, D + H);
  fill(layout_.lstm_b, 4 * H, D + H);
  fill(layout_.head_w, config_.output_size * H, H);
  fill(layout_.head_b, config_.output_size, H);
}

ForecastModel::ForecastModel(ModelConfig config, std::vector<double> params)
    : config_(std::move(config)), params_(std::move(params)) {
  config_.validate();
  layout_ = ParamLayout(config_);
  if (params_.size() != layout_.total) {
    shape_error("parameter vector has " + std::to_string(params_.size()) + " entries, expected " +
                std::to_string(layout_.total));
  }
}

void ForecastModel::check_sample(const Sample& sample) const {
  if (sample.inputs.size() != config_.groups.size()) {
    shape_error("sample has " + std::to_string(sample.inputs.size()) + " groups, model expects " +
                std::to_string(config_.groups.size()));
  }
  for (std::size_t gi = 0; gi < config_.groups.size(); ++gi) {
    const auto& g = config_.groups[gi];
    const auto& x = sample.inputs[gi];
    if (gi < sample.group_names.size() && sample.group_names[gi] != g.name) {
      shape_error("sample group order differs from model");
    }
    if (x.segments != config_.segments || x.time != g.time_len || x.features != g.n_features) {
      shape_error(std::string(to_string(g.name)) + " input has shape (" +
                  std::to_string(x.segments) + "," + std::to_string(x.time) + "," +
                  std::to_string(x.features) + ")");
    }
  }
}

struct ForecastModel::Cache {
  std::vector<Tensor3> conv_out;               // per group, empty if not convolved
  std::vector<std::vector<std::size_t>> argmax;  // per group, K x T' source index
  std::vector<double> z;                        // K x T' x D
  std::vector<double> gates;                    // K x T' x 4H
  std::vector<double> cell;                     // K x T' x H
  std::vector<double> hid;                      // K x T' x H
};

std::vector<double> ForecastModel::forward(const Sample& sample) const {
  return forward_cached(sample, nullptr);
}

std::vector<double> ForecastModel::forward_cached(const Sample& sample, Cache* cache) const {
  check_sample(sample);
  const std::size_t K = config_.segments;
  const std::size_t T = config_.pooled_len;
  const std::size_t D = config_.lstm_input();
  const std::size_t H = config_.lstm_hidden;
  const std::size_t kt = static_cast<std::size_t>(config_.conv_kernel_time);

  Cache local;
  Cache& c = cache ? *cache : local;
  c.conv_out.assign(config_.groups.size(), Tensor3{});
  c.argmax.assign(config_.groups.size(), {});
  c.z.assign(K * T * D, 0.0);

  std::size_t channel = 0;
  for (std::size_t gi = 0; gi < config_.groups.size(); ++gi) {
    const auto& g = config_.groups[gi];
    const auto& x = sample.inputs[gi];
    if (g.name == GroupName::kStatic) {
      for (std::size_t k = 0; k < K; ++k) {
        for (std::size_t t = 0; t < T; ++t) {
          for (std::size_t f = 0; f < g.n_features; ++f) {
            c.z[(k * T + t) * D + channel + f] = x.at(k, 0, f);
          }
        }
      }
      channel += g.n_features;
      continue;
    }
    const std::size_t R = static_cast<std::size_t>(g.ratio);
    if (!g.convolve) {
      const Tensor3 pooled = maxpool_time(x, g.ratio);
      for (std::size_t k = 0; k < K; ++k) {
        for (std::size_t t = 0; t < T; ++t) {
          for (std::size_t f = 0; f < g.n_features; ++f) {
            c.z[(k * T + t) * D + channel + f] = pooled.at(k, t, f);
          }
        }
      }
      channel += g.n_features;
      continue;
    }
    const auto& pl = layout_.conv[gi];
    c.conv_out[gi] = conv_forward(
        x, std::span<const double>(params_.data() + pl.weights, g.n_features * kt),
        params_[pl.bias]);
    const Tensor3& co = c.conv_out[gi];
    auto& am = c.argmax[gi];
    am.assign(K * T, 0);
    for (std::size_t k = 0; k < K; ++k) {
      for (std::size_t t = 0; t < T; ++t) {
        std::size_t best = t * R;
        for (std::size_t j = 1; j < R; ++j) {
          if (co.at(k, t * R + j, 0) > co.at(k, best, 0)) best = t * R + j;
        }
        am[k * T + t] = best;
        c.z[(k * T + t) * D + channel] = co.at(k, best, 0);
      }
    }
    channel += 1;
  }

  const LstmWeights lw{D, H,
                       std::span<const double>(params_.data() + layout_.lstm_w, 4 * H * D),
                       std::span<const double>(params_.data() + layout_.lstm_u, 4 * H * H),
                       std::span<const double>(params_.data() + layout_.lstm_b, 4 * H)};
  c.gates.assign(K * T * 4 * H, 0.0);
  c.cell.assign(K * T * H, 0.0);
  c.hid.assign(K * T * H, 0.0);

  const std::size_t O = config_.output_size;
  std::vector<double> y(K * O, 0.0);
  std::vector<double> h(H), cs(H);
  const double* vw = params_.data() + layout_.head_w;
  const double* vb = params_.data() + layout_.head_b;
  for (std::size_t k = 0; k < K; ++k) {
    std::fill(h.begin(), h.end(), 0.0);
    std::fill(cs.begin(), cs.end(), 0.0);
    for (std::size_t t = 0; t < T; ++t) {
      lstm_step(lw, c.z.data() + (k * T + t) * D, h, cs, c.gates.data() + (k * T + t) * 4 * H);
      std::copy(cs.begin(), cs.end(), c.cell.begin() + static_cast<std::ptrdiff_t>((k * T + t) * H));
      std::copy(h.begin(), h.end(), c.hid.begin() + static_cast<std::ptrdiff_t>((k * T + t) * H));
    }
    for (std::size_t o = 0; o < O; ++o) {
      double s = vb[o];
      for (std::size_t j = 0; j < H; ++j) s += vw[o * H + j] * h[j];
      y[k * O + o] = s;
    }
  }
  return y;
}

void ForecastModel::backward(const Sample& sample, const Cache& c, std::span<const double> dy,
                             std::vector<double>& grad) const {
  const std::size_t K = config_.segments;
  const std::size_t T = config_.pooled_len;
  const std::size_t D = config_.lstm_input();
  const std::size_t H = config_.lstm_hidden;
  const std::size_t O = config_.output_size;
  const std::size_t kt = static_cast<std::size_t>(config_.conv_kernel_time);

  const double* W = params_.data() + layout_.lstm_w;
  const double* U = params_.data() + layout_.lstm_u;
  const double* V = params_.data() + layout_.head_w;
  double* gW = grad.data() + layout_.lstm_w;
  double* gU = grad.data() + layout_.lstm_u;
  double* gB = grad.data() + layout_.lstm_b;
  double* gV = grad.data() + layout_.head_w;
  double* gVb = grad.data() + layout_.head_b;

  std::vector<double> dz(K * T * D, 0.0);
  std::vector<double> dh(H), dc(H), da(4 * H), dh_prev(H);
  const std::vector<double> zeros(H, 0.0);

  for (std::size_t k = 0; k < K; ++k) {
    const double* h_last = c.hid.data() + (k * T + T - 1) * H;
    std::fill(dh.begin(), dh.end(), 0.0);
    std::fill(dc.begin(), dc.end(), 0.0);
    for (std::size_t o = 0; o < O; ++o) {
      const double g = dy[k * O + o];
      gVb[o] += g;
      for (std::size_t j = 0; j < H; ++j) {
        gV[o * H + j] += g * h_last[j];
        dh[j] += g * V[o * H + j];
      }
    }
    for (std::size_t tt = T; tt-- > 0;) {
      const double* a = c.gates.data() + (k * T + tt) * 4 * H;
      const double* cell = c.cell.data() + (k * T + tt) * H;
      const double* c_prev = tt > 0 ? c.cell.data() + (k * T + tt - 1) * H : zeros.data();
      const double* h_prev = tt > 0 ? c.hid.data() + (k * T + tt - 1) * H : zeros.data();
      for (std::size_t j = 0; j < H; ++j) {
        const double ig = a[j], fg = a[H + j], gg = a[2 * H + j], og = a[3 * H + j];
        const double tc = std::tanh(cell[j]);
        const double d_o = dh[j] * tc;
        const double d_c = dc[j] + dh[j] * og * (1.0 - tc * tc);
        da[j] = d_c * gg * ig * (1.0 - ig);
        da[H + j] = d_c * c_prev[j] * fg * (1.0 - fg);
        da[2 * H + j] = d_c * ig * (1.0 - gg * gg);
        da[3 * H + j] = d_o * og * (1.0 - og);
        dc[j] = d_c * fg;
      }
      const double* x = c.z.data() + (k * T + tt) * D;
      double* dx = dz.data() + (k * T + tt) * D;
      std::fill(dh_prev.begin(), dh_prev.end(), 0.0);
      for (std::size_t r = 0; r < 4 * H; ++r) {
        const double g = da[r];
        gB[r] += g;
        double* gwr = gW + r * D;
        const double* wr = W + r * D;
        for (std::size_t i = 0; i < D; ++i) {
          gwr[i] += g * x[i];
          dx[i] += g * wr[i];
        }
        double* gur = gU + r * H;
        const double* ur = U + r * H;
        for (std::size_t j = 0; j < H; ++j) {
          gur[j] += g * h_prev[j];
          dh_prev[j] += g * ur[j];
        }
      }
      dh.swap(dh_prev);
    }
  }

  std::size_t channel = 0;
  for (std::size_t gi = 0; gi < config_.groups.size(); ++gi) {
    const auto& g = config_.groups[gi];
    if (!g.convolve) {
      channel += g.n_features;
      continue;
    }
    const auto& x = sample.inputs[gi];
    const auto& pl = layout_.conv[gi];
    const std::ptrdiff_t half = static_cast<std::ptrdiff_t>(kt / 2);
    const std::ptrdiff_t Tg = static_cast<std::ptrdiff_t>(g.time_len);
    double* gw = grad.data() + pl.weights;
    double& gb = grad[pl.bias];
    for (std::size_t k = 0; k < K; ++k) {
      for (std::size_t t = 0; t < T; ++t) {
        const double d = dz[(k * T + t) * D + channel];
        if (d == 0.0) continue;
        const std::ptrdiff_t src_t = static_cast<std::ptrdiff_t>(c.argmax[gi][k * T + t]);
        gb += d;
        for (std::size_t j = 0; j < kt; ++j) {
          const std::ptrdiff_t src = src_t + static_cast<std::ptrdiff_t>(j) - half;
          if (src < 0 || src >= Tg) continue;
          for (std::size_t f = 0; f < g.n_features; ++f) {
            gw[f * kt + j] += d * x.at(k, static_cast<std::size_t>(src), f);
          }
        }
      }
    }
    channel += 1;
  }
}

double ForecastModel::loss_and_gradient(std::span<const Sample* const> batch,
                                        std::vector<double>& grad) const {
  if (batch.empty()) throw Error(ErrorCode::kEmptyInput, "empty batch");
  grad.assign(params_.size(), 0.0);
  const std::size_t n_out = config_.segments * config_.output_size;
  const double scale = 1.0 / (static_cast<double>(n_out) * static_cast<double>(batch.size()));
  double total = 0.0;
  Cache cache;
  std::vector<double> dy(n_out);
  for (const Sample* s : batch) {
    if (s->target.size() != n_out) shape_error("target size does not match model output");
    const auto y = forward_cached(*s, &cache);
    double sse = 0.0;
    for (std::size_t i = 0; i < n_out; ++i) {
      const double e = y[i] - s->target[i];
      sse += e * e;
      dy[i] = 2.0 * e * scale;
    }
    total += sse * scale;
    backward(*s, cache, dy, grad);
  }
  return total;
}

double ForecastModel::loss(std::span<const Sample* const> batch) const {
  if (batch.empty()) throw Error(ErrorCode::kEmptyInput, "empty batch");
  const std::size_t n_out = config_.segments * config_.output_size;
  double total = 0.0;
  for (const Sample* s : batch) {
    if (s->target.size() != n_out) shape_error("target size does not match model output");
    const auto y = forward(*s);
    double sse = 0.0;
    for (std::size_t i = 0; i < n_out; ++i) {
      const double e = y[i] - s->target[i];
      sse += e * e;
    }
    total += sse / static_cast<double>(n_out);
  }
  return total / static_cast<double>(batch.size());
}

// ---------------------------------------------------------------- optimizer

Adam::Adam(std::size_t n, const TrainConfig& config)
    : lr_(config.learning_rate),
      beta1_(config.beta1),
      beta2_(config.beta2),
      eps_(config.epsilon),
      m_(n, 0.0),
      v_(n, 0.0) {}

void Adam::step(std::vector<double>& params, const std::vector<double>& grad) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
    const double mhat = m_[i] / c1;
    const double vhat = v_[i] / c2;
    params[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
  }
}

// ---------------------------------------------------------------- training

double mae(std::span<const double> y, std::span<const double> y_hat) {
  if (y.empty()) throw Error(ErrorCode::kEmptyInput, "mae of empty input");
  if (y.size() != y_hat.size()) {
    shape_error("mae: lengths " + std::to_string(y.size()) + " and " +
                std::to_string(y_hat.size()) + " differ");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) sum += std::abs(y_hat[i] - y[i]);
  return sum / static_cast<double>(y.size());
}

EvalResult evaluate(const ForecastModel& model, const std::vector<Sample>& samples,
                    const NormalizerState& normalizer) {
  if (samples.empty()) throw Error(ErrorCode::kEmptyInput, "no samples to evaluate");
  const std::size_t K = model.config().segments;
  const std::size_t O = model.config().output_size;
  std::vector<double> truth, pred;
  truth.reserve(samples.size() * K * O);
  pred.reserve(samples.size() * K * O);
  std::vector<double> seg_sum(K, 0.0);
  for (const auto& s : samples) {
    const auto y = model.forward(s);
    for (std::size_t i = 0; i < K * O; ++i) {
      const double t = invert_target(normalizer, s.target[i]);
      const double p = invert_target(normalizer, y[i]);
      truth.push_back(t);
      pred.push_back(p);
      seg_sum[i / O] += std::abs(p - t);
    }
  }
  EvalResult r;
  r.mae = mae(truth, pred);
  r.samples = samples.size();
  for (auto& s : seg_sum) s /= static_cast<double>(samples.size() * O);
  r.segment_mae = std::move(seg_sum);
  return r;
}

TrainResult train(const ModelConfig& config, const std::vector<Sample>& train_samples,
                  const std::vector<Sample>& val_samples, const NormalizerState& normalizer,
                  const TrainConfig& tc) {
  if (train_samples.empty()) throw Error(ErrorCode::kEmptyInput, "no training samples");
  if (tc.epochs <= 0 || tc.batch_size == 0) {
    throw Error(ErrorCode::kInvalidConfig, "epochs and batch_size must be > 0");
  }
  ForecastModel model(config, tc.seed);
  for (const auto& s : train_samples) model.check_sample(s);
  for (const auto& s : val_samples) model.check_sample(s);

  std::vector<const Sample*> all;
  for (const auto& s : train_samples) all.push_back(&s);

  TrainResult result;
  result.initial_loss = model.loss(all);
  Adam adam(model.params().size(), tc);
  Rng shuffle_rng(tc.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order(all.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> grad;
  std::vector<const Sample*> batch;
  double best_val = std::numeric_limits<double>::infinity();
  std::vector<double> best_params = model.params();

  for (int epoch = 0; epoch < tc.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[shuffle_rng.below(i)]);
    }
    double epoch_sum = 0.0;
    std::size_t n_batches = 0;
    for (std::size_t start = 0; start < order.size(); start += tc.batch_size) {
      batch.clear();
      for (std::size_t i = start; i < std::min(order.size(), start + tc.batch_size); ++i) {
        batch.push_back(all[order[i]]);
      }
      const double l = model.loss_and_gradient(batch, grad);
      if (!std::isfinite(l)) {
        throw Error(ErrorCode::kNonFiniteLoss,
                    "non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                        std::to_string(n_batches) + " (lr " + std::to_string(tc.learning_rate) +
                        ")");
      }
      epoch_sum += l;
      ++n_batches;
      adam.step(model.params(), grad);
    }
    for (const double p : model.params()) {
      if (!std::isfinite(p)) {
        throw Error(ErrorCode::kNonFiniteLoss,
                    "non-finite parameter after epoch " + std::to_string(epoch));
      }
    }
    result.epoch_loss.push_back(epoch_sum / static_cast<double>(n_batches));
    if (!val_samples.empty()) {
      const double v = evaluate(model, val_samples, normalizer).mae;
      result.val_mae.push_back(v);
      if (v < best_val) {
        best_val = v;
        best_params = model.params();
        result.best_epoch = epoch;
      }
    }
  }
  result.final_loss = model.loss(all);
  if (val_samples.empty()) {
    result.best_epoch = tc.epochs - 1;
    best_params = model.params();
  }
  result.model = ForecastModel(config, std::move(best_params));
  return result;
}

// ---------------------------------------------------------------- checkpoints

namespace {

constexpr const char* kCheckpointFormat = "routefed-model/1";

nlohmann::ordered_json config_json(const ModelConfig& c) {
  nlohmann::ordered_json j;
  j["segments"] = c.segments;
  j["train_days"] = c.train_days;
  j["pooled_len"] = c.pooled_len;
  j["conv_kernel_time"] = c.conv_kernel_time;
  j["conv_out_channels"] = c.conv_out_channels;
  j["lstm_hidden"] = c.lstm_hidden;
  j["output_size"] = c.output_size;
  auto groups = nlohmann::ordered_json::array();
  for (const auto& g : c.groups) {
    groups.push_back({{"name", to_string(g.name)},
                      {"n_features", g.n_features},
                      {"time_len", g.time_len},
                      {"ratio", g.ratio},
                      {"convolve", g.convolve}});
  }
  j["groups"] = groups;
  return j;
}

ModelConfig config_from(const nlohmann::json& j) {
  ModelConfig c;
  c.segments = j.at("segments").get<std::size_t>();
  c.train_days = j.at("train_days").get<std::size_t>();
  c.pooled_len = j.at("pooled_len").get<std::size_t>();
  c.conv_kernel_time = j.at("conv_kernel_time").get<int>();
  c.conv_out_channels = j.at("conv_out_channels").get<int>();
  c.lstm_hidden = j.at("lstm_hidden").get<std::size_t>();
  c.output_size = j.at("output_size").get<std::size_t>();
  for (const auto& g : j.at("groups")) {
    const auto name = group_from_string(g.at("name").get<std::string>());
    if (!name) throw Error(ErrorCode::kParse, "checkpoint: unknown group");
    c.groups.push_back({*name, g.at("n_features").get<std::size_t>(),
                        g.at("time_len").get<std::size_t>(), g.at("ratio").get<int>(),
                        g.at("convolve").get<bool>()});
  }
  return c;
}

}  // namespace

std::string checkpoint_to_json(const Checkpoint& cp) {
  nlohmann::ordered_json j;
  j["format"] = kCheckpointFormat;
  j["config"] = config_json(cp.model.config());
  const auto& t = cp.train_config;
  j["train"] = {{"seed", t.seed},
                {"epochs", t.epochs},
                {"batch_size", t.batch_size},
                {"learning_rate", t.learning_rate},
                {"beta1", t.beta1},
                {"beta2", t.beta2},
                {"epsilon", t.epsilon}};
  j["window"] = {{"input_size", cp.window.input_size},
                 {"n_day_interval", cp.window.n_day_interval},
                 {"output_size", cp.window.output_size}};
  j["features"] = cp.selection.to_string();
  j["normalizer"] = nlohmann::ordered_json::parse(normalizer_to_json(cp.normalizer));
  j["params"] = cp.model.params();
  return j.dump() + "\n";
}

Checkpoint checkpoint_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.at("format").get<std::string>() != kCheckpointFormat) {
      throw Error(ErrorCode::kParse, "unsupported checkpoint format");
    }
    Checkpoint cp;
    const auto& t = j.at("train");
    cp.train_config.seed = t.at("seed").get<std::uint64_t>();
    cp.train_config.epochs = t.at("epochs").get<int>();
    cp.train_config.batch_size = t.at("batch_size").get<std::size_t>();
    cp.train_config.learning_rate = t.at("learning_rate").get<double>();
    cp.train_config.beta1 = t.at("beta1").get<double>();
    cp.train_config.beta2 = t.at("beta2").get<double>();
    cp.train_config.epsilon = t.at("epsilon").get<double>();
    const auto& w = j.at("window");
    cp.window = {w.at("input_size").get<int>(), w.at("n_day_interval").get<int>(),
                 w.at("output_size").get<int>()};
    cp.selection = FeatureSelection::parse(j.at("features").get<std::string>());
    cp.normalizer = normalizer_from_json(j.at("normalizer").dump());
    cp.model = ForecastModel(config_from(j.at("config")),
                             j.at("params").get<std::vector<double>>());
    return cp;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("checkpoint: ") + e.what());
  }
}

void save_checkpoint(const Checkpoint& checkpoint, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  out << checkpoint_to_json(checkpoint);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return checkpoint_from_json(ss.str());
}

}  // namespace routefed
