#include "catnet/lstm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "catnet/error.hpp"
#include "catnet/rng.hpp"
#include "catnet/simd/kernels.hpp"

namespace catnet {

LstmParams::LstmParams(std::size_t input_size, std::size_t hidden_size, std::size_t lookback)
    : input_(input_size), hidden_(hidden_size), lookback_(lookback) {
  if (input_size == 0 || hidden_size == 0 || lookback == 0) {
    throw InvalidInput("LstmParams: dimensions must be positive");
  }
  const std::size_t g = 4 * hidden_;
  std::size_t off = 0;
  for (std::size_t l = 0; l < kLayers; ++l) {
    w_ih_[l] = off;
    off += g * layer_input(l);
    w_hh_[l] = off;
    off += g * hidden_;
    b_ih_[l] = off;
    off += g;
    b_hh_[l] = off;
    off += g;
  }
  head_ = off;
  off += hidden_ + 1;
  data_.assign(off, 0.0);
}

LstmParams LstmParams::random(std::size_t input_size, std::size_t hidden_size,
                              std::size_t lookback, std::uint64_t seed) {
  LstmParams p(input_size, hidden_size, lookback);
  Rng rng(seed, {key(Purpose::kLstmInit)});
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden_size));
  for (double& v : p.data_) v = rng.uniform(-bound, bound);
  return p;
}

#define CATNET_MAP(kind, type, ptr, rows, cols)                                       \
  Eigen::Map<kind type>(ptr, static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols))

Eigen::Map<RowMatrix> LstmParams::weight_ih(std::size_t l) {
  return CATNET_MAP(, RowMatrix, data_.data() + w_ih_[l], 4 * hidden_, layer_input(l));
}
Eigen::Map<const RowMatrix> LstmParams::weight_ih(std::size_t l) const {
  return CATNET_MAP(const, RowMatrix, data_.data() + w_ih_[l], 4 * hidden_, layer_input(l));
}
Eigen::Map<RowMatrix> LstmParams::weight_hh(std::size_t l) {
  return CATNET_MAP(, RowMatrix, data_.data() + w_hh_[l], 4 * hidden_, hidden_);
}
Eigen::Map<const RowMatrix> LstmParams::weight_hh(std::size_t l) const {
  return CATNET_MAP(const, RowMatrix, data_.data() + w_hh_[l], 4 * hidden_, hidden_);
}
#undef CATNET_MAP

Eigen::Map<Eigen::VectorXd> LstmParams::bias_ih(std::size_t l) {
  return {data_.data() + b_ih_[l], static_cast<Eigen::Index>(4 * hidden_)};
}
Eigen::Map<const Eigen::VectorXd> LstmParams::bias_ih(std::size_t l) const {
  return {data_.data() + b_ih_[l], static_cast<Eigen::Index>(4 * hidden_)};
}
Eigen::Map<Eigen::VectorXd> LstmParams::bias_hh(std::size_t l) {
  return {data_.data() + b_hh_[l], static_cast<Eigen::Index>(4 * hidden_)};
}
Eigen::Map<const Eigen::VectorXd> LstmParams::bias_hh(std::size_t l) const {
  return {data_.data() + b_hh_[l], static_cast<Eigen::Index>(4 * hidden_)};
}
Eigen::Map<Eigen::VectorXd> LstmParams::head_weight() {
  return {data_.data() + head_, static_cast<Eigen::Index>(hidden_)};
}
Eigen::Map<const Eigen::VectorXd> LstmParams::head_weight() const {
  return {data_.data() + head_, static_cast<Eigen::Index>(hidden_)};
}

namespace {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Per-step activations in flat buffers, reused across calls.
struct Cache {
  std::size_t T = 0, H = 0;
  std::array<std::vector<double>, LstmParams::kLayers> act;  // T x 4H: i f g o
  std::array<std::vector<double>, LstmParams::kLayers> c;    // T x H
  std::array<std::vector<double>, LstmParams::kLayers> h;    // T x H
  std::array<std::vector<double>, LstmParams::kLayers> tc;   // T x H, tanh(c)

  void resize(std::size_t steps, std::size_t hidden) {
    T = steps;
    H = hidden;
    for (std::size_t l = 0; l < LstmParams::kLayers; ++l) {
      act[l].resize(T * 4 * H);
      c[l].resize(T * H);
      h[l].resize(T * H);
      tc[l].resize(T * H);
    }
  }
};

// window: T rows of `input` values, row-major and contiguous.
double forward_cached(const LstmParams& p, const double* window, std::size_t T, Cache& cache) {
  const auto& K = simd::active();
  const std::size_t H = p.hidden_size();
  const std::size_t G = 4 * H;
  cache.resize(T, H);
  for (std::size_t l = 0; l < LstmParams::kLayers; ++l) {
    const std::size_t in = p.layer_input(l);
    const double* w_ih = p.weight_ih(l).data();
    const double* w_hh = p.weight_hh(l).data();
    const double* b_ih = p.bias_ih(l).data();
    const double* b_hh = p.bias_hh(l).data();
    for (std::size_t t = 0; t < T; ++t) {
      double* a = cache.act[l].data() + t * G;
      for (std::size_t r = 0; r < G; ++r) a[r] = b_ih[r] + b_hh[r];
      const double* x = l == 0 ? window + t * in : cache.h[0].data() + t * H;
      K.gemv(w_ih, G, in, x, a);
      if (t > 0) K.gemv(w_hh, G, H, cache.h[l].data() + (t - 1) * H, a);
      double* c = cache.c[l].data() + t * H;
      double* h = cache.h[l].data() + t * H;
      double* tc = cache.tc[l].data() + t * H;
      const double* c_prev = t > 0 ? cache.c[l].data() + (t - 1) * H : nullptr;
      for (std::size_t u = 0; u < H; ++u) {
        const double ig = sigmoid(a[u]);
        const double fg = sigmoid(a[H + u]);
        const double gg = std::tanh(a[2 * H + u]);
        const double og = sigmoid(a[3 * H + u]);
        a[u] = ig;
        a[H + u] = fg;
        a[2 * H + u] = gg;
        a[3 * H + u] = og;
        c[u] = (c_prev ? fg * c_prev[u] : 0.0) + ig * gg;
        tc[u] = std::tanh(c[u]);
        h[u] = og * tc[u];
      }
    }
  }
  const double* h_last = cache.h[LstmParams::kLayers - 1].data() + (T - 1) * H;
  return p.head_bias() + K.dot(p.head_weight().data(), h_last, H);
}

// Offsets of each block inside the flat gradient buffer, matching LstmParams.
struct Blocks {
  std::array<double*, LstmParams::kLayers> w_ih, w_hh, b_ih, b_hh;
  double* head_w;
  double* head_b;
};

Blocks gradient_blocks(const LstmParams& p, std::span<double> grad) {
  Blocks b{};
  const double* base = p.values().data();
  auto at = [&](const double* ptr) { return grad.data() + (ptr - base); };
  for (std::size_t l = 0; l < LstmParams::kLayers; ++l) {
    b.w_ih[l] = at(p.weight_ih(l).data());
    b.w_hh[l] = at(p.weight_hh(l).data());
    b.b_ih[l] = at(p.bias_ih(l).data());
    b.b_hh[l] = at(p.bias_hh(l).data());
  }
  b.head_w = at(p.head_weight().data());
  b.head_b = grad.data() + grad.size() - 1;
  return b;
}

// Accumulates d(loss)/d(params) given d(loss)/d(prediction).
void backward_cached(const LstmParams& p, const double* window, const Cache& cache, double dpred,
                     std::span<double> grad) {
  const auto& K = simd::active();
  const std::size_t T = cache.T;
  const std::size_t H = cache.H;
  const std::size_t G = 4 * H;
  const Blocks gb = gradient_blocks(p, grad);
  constexpr std::size_t top = LstmParams::kLayers - 1;

  *gb.head_b += dpred;
  K.axpy(dpred, cache.h[top].data() + (T - 1) * H, gb.head_w, H);

  // dh_up[t]: gradient arriving at layer l's h_t from above.
  std::vector<double> dh_up(T * H, 0.0);
  K.axpy(dpred, p.head_weight().data(), dh_up.data() + (T - 1) * H, H);
  std::vector<double> dx_below(T * H, 0.0);
  std::vector<double> dh_rec(H), dc_rec(H), da(G);

  for (std::size_t li = LstmParams::kLayers; li-- > 0;) {
    const std::size_t in = p.layer_input(li);
    const double* w_ih = p.weight_ih(li).data();
    const double* w_hh = p.weight_hh(li).data();
    std::fill(dh_rec.begin(), dh_rec.end(), 0.0);
    std::fill(dc_rec.begin(), dc_rec.end(), 0.0);
    if (li > 0) std::fill(dx_below.begin(), dx_below.end(), 0.0);
    for (std::size_t t = T; t-- > 0;) {
      const double* a = cache.act[li].data() + t * G;
      const double* tc = cache.tc[li].data() + t * H;
      const double* c_prev = t > 0 ? cache.c[li].data() + (t - 1) * H : nullptr;
      for (std::size_t u = 0; u < H; ++u) {
        const double ig = a[u], fg = a[H + u], gg = a[2 * H + u], og = a[3 * H + u];
        const double dh = dh_up[t * H + u] + dh_rec[u];
        const double dc = dc_rec[u] + dh * og * (1.0 - tc[u] * tc[u]);
        const double cp = c_prev ? c_prev[u] : 0.0;
        da[u] = dc * gg * ig * (1.0 - ig);
        da[H + u] = dc * cp * fg * (1.0 - fg);
        da[2 * H + u] = dc * ig * (1.0 - gg * gg);
        da[3 * H + u] = dh * tc[u] * og * (1.0 - og);
        dc_rec[u] = dc * fg;
      }
      const double* x = li == 0 ? window + t * in : cache.h[li - 1].data() + t * H;
      for (std::size_t r = 0; r < G; ++r) {
        if (da[r] == 0.0) continue;
        K.axpy(da[r], x, gb.w_ih[li] + r * in, in);
        if (t > 0) K.axpy(da[r], cache.h[li].data() + (t - 1) * H, gb.w_hh[li] + r * H, H);
        gb.b_ih[li][r] += da[r];
        gb.b_hh[li][r] += da[r];
      }
      std::fill(dh_rec.begin(), dh_rec.end(), 0.0);
      if (t > 0) K.gemv_t(w_hh, H, G, da.data(), dh_rec.data());
      if (li > 0) K.gemv_t(w_ih, in, G, da.data(), dx_below.data() + t * H);
    }
    if (li > 0) dh_up.swap(dx_below);
  }
}

RowMatrix to_row_major(const Eigen::Ref<const Eigen::MatrixXd>& window, const LstmParams& p) {
  if (static_cast<std::size_t>(window.rows()) != p.lookback() ||
      static_cast<std::size_t>(window.cols()) != p.input_size()) {
    throw DimensionError("lstm: window is " + std::to_string(window.rows()) + "x" +
                       std::to_string(window.cols()) + ", expected " +
                       std::to_string(p.lookback()) + "x" + std::to_string(p.input_size()));
  }
  return window;
}

}  // namespace

ForwardResult lstm_forward(const LstmParams& params, const Eigen::Ref<const Eigen::MatrixXd>& window) {
  const RowMatrix w = to_row_major(window, params);
  Cache cache;
  ForwardResult out;
  out.prediction = forward_cached(params, w.data(), params.lookback(), cache);
  const auto H = static_cast<Eigen::Index>(cache.H);
  for (std::size_t l = 0; l < LstmParams::kLayers; ++l) {
    out.states[l].resize(cache.T);
    for (std::size_t t = 0; t < cache.T; ++t) {
      const double* a = cache.act[l].data() + t * 4 * cache.H;
      StepState& s = out.states[l][t];
      s.i = Eigen::Map<const Eigen::VectorXd>(a, H);
      s.f = Eigen::Map<const Eigen::VectorXd>(a + H, H);
      s.g = Eigen::Map<const Eigen::VectorXd>(a + 2 * H, H);
      s.o = Eigen::Map<const Eigen::VectorXd>(a + 3 * H, H);
      s.c = Eigen::Map<const Eigen::VectorXd>(cache.c[l].data() + t * cache.H, H);
      s.h = Eigen::Map<const Eigen::VectorXd>(cache.h[l].data() + t * cache.H, H);
    }
  }
  return out;
}

double lstm_predict(const LstmParams& params, const Eigen::Ref<const Eigen::MatrixXd>& window) {
  const RowMatrix w = to_row_major(window, params);
  thread_local Cache cache;
  return forward_cached(params, w.data(), params.lookback(), cache);
}

double lstm_loss_gradient(const LstmParams& params, const Eigen::Ref<const Eigen::MatrixXd>& window,
                          double target, std::span<double> grad, double loss_scale) {
  if (grad.size() != params.size()) throw InvalidInput("lstm_loss_gradient: gradient size mismatch");
  const RowMatrix w = to_row_major(window, params);
  Cache cache;
  const double pred = forward_cached(params, w.data(), params.lookback(), cache);
  std::fill(grad.begin(), grad.end(), 0.0);
  const double err = pred - target;
  backward_cached(params, w.data(), cache, 2.0 * loss_scale * err, grad);
  return loss_scale * err * err;
}

double lstm_gradcheck(const LstmParams& params, const Eigen::Ref<const Eigen::MatrixXd>& window,
                      double target) {
  std::vector<double> analytic(params.size());
  lstm_loss_gradient(params, window, target, analytic);
  LstmParams probe = params;
  constexpr double step = 1e-5;
  double worst = 0.0;
  auto values = probe.values();
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double saved = values[i];
    values[i] = saved + step;
    const double up = lstm_predict(probe, window);
    values[i] = saved - step;
    const double down = lstm_predict(probe, window);
    values[i] = saved;
    // (up - t)^2 - (down - t)^2, factored to avoid cancellation.
    const double numeric = (up - down) * (up + down - 2.0 * target) / (2.0 * step);
    const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-6});
    worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
  }
  return worst;
}

void TrainConfig::validate() const {
  if (batch_size == 0 || lookback == 0 || patience == 0) {
    throw InvalidInput("TrainConfig: batch size, lookback and patience must be positive");
  }
  if (!(learning_rate > 0.0)) throw InvalidInput("TrainConfig: learning rate must be positive");
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) {
    throw InvalidInput("TrainConfig: validation fraction must lie in [0, 1)");
  }
}

std::size_t default_hidden_size(std::size_t p) {
  const double raw = std::round(20.0 * std::log10(static_cast<double>(std::max<std::size_t>(p, 1))));
  return std::max<std::size_t>(8, static_cast<std::size_t>(raw));
}

TrainedLstm::TrainedLstm(LstmParams params, Eigen::VectorXd x_mean, Eigen::VectorXd x_scale,
                         double y_mean, double y_scale)
    : params_(std::move(params)),
      x_mean_(std::move(x_mean)),
      x_scale_(std::move(x_scale)),
      y_mean_(y_mean),
      y_scale_(y_scale) {}

double TrainedLstm::predict(const Eigen::Ref<const Eigen::MatrixXd>& window) const {
  const std::size_t T = params_.lookback();
  const std::size_t d = params_.input_size();
  if (static_cast<std::size_t>(window.rows()) != T || static_cast<std::size_t>(window.cols()) != d) {
    throw DimensionError("TrainedLstm: window shape mismatch");
  }
  thread_local std::vector<double> buf;
  thread_local Cache cache;
  buf.resize(T * d);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t j = 0; j < d; ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      buf[t * d + j] = (window(static_cast<Eigen::Index>(t), jj) - x_mean_[jj]) / x_scale_[jj];
    }
  }
  return y_mean_ + y_scale_ * forward_cached(params_, buf.data(), T, cache);
}

Eigen::MatrixXd window_at(const Eigen::MatrixXd& X, std::size_t t, std::size_t lookback) {
  if (t + 1 < lookback || t >= static_cast<std::size_t>(X.rows())) {
    throw InvalidInput("window_at: window out of range");
  }
  return X.middleRows(static_cast<Eigen::Index>(t + 1 - lookback), static_cast<Eigen::Index>(lookback));
}

namespace {

struct Adam {
  std::vector<double> m, v;
  std::size_t step = 0;
  double lr;
  static constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;

  Adam(std::size_t n, double rate) : m(n, 0.0), v(n, 0.0), lr(rate) {}

  void update(std::span<double> params, std::span<const double> grad) {
    ++step;
    const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(step));
    const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(step));
    for (std::size_t i = 0; i < params.size(); ++i) {
      m[i] = kBeta1 * m[i] + (1.0 - kBeta1) * grad[i];
      v[i] = kBeta2 * v[i] + (1.0 - kBeta2) * grad[i] * grad[i];
      params[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + kEps);
    }
  }
};

}  // namespace

TrainedLstm lstm_train(const Dataset& data, const TrainConfig& cfg) {
  cfg.validate();
  data.validate();
  const std::size_t n = data.n();
  const std::size_t d = data.p();
  const std::size_t k = cfg.lookback;
  if (n <= k) throw InvalidInput("lstm_train: need n > lookback");

  const auto rows = static_cast<Eigen::Index>(n);
  Eigen::VectorXd x_mean = data.X.colwise().mean().transpose();
  Eigen::VectorXd x_scale(static_cast<Eigen::Index>(d));
  RowMatrix Xs(rows, static_cast<Eigen::Index>(d));
  for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(d); ++j) {
    const double sd = std::sqrt((data.X.col(j).array() - x_mean[j]).square().mean());
    x_scale[j] = sd > 1e-12 ? sd : 1.0;
    Xs.col(j) = (data.X.col(j).array() - x_mean[j]) / x_scale[j];
  }
  const double y_mean = data.y.mean();
  const double y_sd = std::sqrt((data.y.array() - y_mean).square().mean());
  const double y_scale = y_sd > 1e-12 ? y_sd : 1.0;
  const Eigen::VectorXd ys = (data.y.array() - y_mean) / y_scale;

  const std::size_t hidden = cfg.hidden > 0 ? cfg.hidden : default_hidden_size(d);
  LstmParams params = LstmParams::random(d, hidden, k, cfg.seed);

  // Window w covers rows w..w+k-1 and targets y[w+k-1].
  const std::size_t windows = n - k + 1;
  std::size_t n_val = static_cast<std::size_t>(std::floor(cfg.validation_fraction * static_cast<double>(windows)));
  if (windows - n_val < 1) n_val = 0;
  const std::size_t n_train = windows - n_val;

  Cache cache;
  auto mse = [&](const LstmParams& p, std::size_t from, std::size_t to) {
    double s = 0.0;
    for (std::size_t w = from; w < to; ++w) {
      const double e = forward_cached(p, Xs.row(static_cast<Eigen::Index>(w)).data(), k, cache) -
                       ys[static_cast<Eigen::Index>(w + k - 1)];
      s += e * e;
    }
    return to > from ? s / static_cast<double>(to - from) : 0.0;
  };

  TrainedLstm model;
  std::vector<LossRecord> trace;
  LstmParams best = params;
  double best_val = std::numeric_limits<double>::infinity();
  std::size_t best_epoch = 0;
  std::size_t stale = 0;

  Adam adam(params.size(), cfg.learning_rate);
  std::vector<double> grad(params.size());
  std::vector<std::size_t> order(n_train);
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    Rng shuffle_rng(cfg.seed, {key(Purpose::kLstmShuffle), epoch});
    shuffle_rng.shuffle(order);
    for (std::size_t start = 0; start < n_train; start += cfg.batch_size) {
      const std::size_t stop = std::min(n_train, start + cfg.batch_size);
      const double scale = 1.0 / static_cast<double>(stop - start);
      std::fill(grad.begin(), grad.end(), 0.0);
      for (std::size_t b = start; b < stop; ++b) {
        const std::size_t w = order[b];
        const double* win = Xs.row(static_cast<Eigen::Index>(w)).data();
        const double err = forward_cached(params, win, k, cache) - ys[static_cast<Eigen::Index>(w + k - 1)];
        backward_cached(params, win, cache, 2.0 * scale * err, grad);
      }
      adam.update(params.values(), grad);
    }

    LossRecord rec{epoch, mse(params, 0, n_train), n_val > 0 ? mse(params, n_train, windows) : 0.0};
    if (!std::isfinite(rec.train_mse) || !std::isfinite(rec.val_mse)) {
      throw DivergenceError(epoch, "lstm_train: non-finite loss at epoch " + std::to_string(epoch));
    }
    trace.push_back(rec);
    const double monitor = n_val > 0 ? rec.val_mse : rec.train_mse;
    if (monitor < best_val) {
      best_val = monitor;
      best = params;
      best_epoch = epoch;
      stale = 0;
    } else if (++stale >= cfg.patience) {
      break;
    }
  }
  if (!trace.empty()) params = std::move(best);

  model = TrainedLstm(std::move(params), std::move(x_mean), std::move(x_scale), y_mean, y_scale);
  model.loss_trace = std::move(trace);
  model.best_epoch = best_epoch;
  return model;
}

}  // namespace catnet
