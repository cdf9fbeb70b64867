#include <cmath>

#include "catnet/datagen.hpp"
#include "catnet/error.hpp"
#include "catnet/lstm.hpp"
#include "catnet/rng.hpp"
#include "doctest.h"

using namespace catnet;

namespace {

Eigen::MatrixXd random_window(std::size_t k, std::size_t p, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd w(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(p));
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = rng.normal();
  return w;
}

double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

}  // namespace

TEST_CASE("parameter layout sizes") {
  const LstmParams p(3, 4, 5);
  const std::size_t layer0 = 16 * 3 + 16 * 4 + 16 + 16;
  const std::size_t layer1 = 16 * 4 + 16 * 4 + 16 + 16;
  CHECK(p.size() == layer0 + layer1 + 4 + 1);
  CHECK(p.weight_ih(0).rows() == 16);
  CHECK(p.weight_ih(0).cols() == 3);
  CHECK(p.weight_ih(1).cols() == 4);
  CHECK(p.head_weight().size() == 4);
}

TEST_CASE("random init is bounded by one over sqrt hidden") {
  const LstmParams p = LstmParams::random(3, 9, 2, 1);
  for (const double v : p.values()) CHECK(std::abs(v) <= 1.0 / 3.0);
  CHECK(p == LstmParams::random(3, 9, 2, 1));
  CHECK_FALSE(p == LstmParams::random(3, 9, 2, 2));
}

TEST_CASE("zero parameters predict the head bias") {
  LstmParams p(2, 3, 4);
  p.head_bias() = 0.75;
  const ForwardResult r = lstm_forward(p, random_window(4, 2, 3));
  CHECK(r.prediction == 0.75);
  for (const auto& layer : r.states) {
    for (const auto& s : layer) {
      CHECK(s.h.isZero(0.0));
      CHECK(s.c.isZero(0.0));
    }
  }
}

TEST_CASE("single unit cell evaluated by hand") {
  LstmParams p(1, 1, 1);
  p.gate_ih(0, Gate::Cell)(0, 0) = 1.0;
  Eigen::MatrixXd w(1, 1);
  w << 0.8;
  const ForwardResult r = lstm_forward(p, w);
  const double want = sigmoid(0.0) * std::tanh(sigmoid(0.0) * std::tanh(0.8));
  CHECK(r.states[0][0].h[0] == doctest::Approx(want).epsilon(1e-15));
  CHECK(r.states[0][0].c[0] == doctest::Approx(0.5 * std::tanh(0.8)).epsilon(1e-15));
}

TEST_CASE("predictions are deterministic and match the full forward pass") {
  const LstmParams p = LstmParams::random(3, 5, 4, 7);
  const Eigen::MatrixXd w = random_window(4, 3, 8);
  CHECK(lstm_predict(p, w) == lstm_predict(p, w));
  CHECK(lstm_predict(p, w) == doctest::Approx(lstm_forward(p, w).prediction).epsilon(1e-14));
}

TEST_CASE("gate activations stay in range") {
  LstmParams p = LstmParams::random(4, 6, 5, 9);
  for (double& v : p.values()) v *= 6.0;
  const ForwardResult r = lstm_forward(p, 4.0 * random_window(5, 4, 10));
  for (const auto& layer : r.states) {
    for (const auto& s : layer) {
      CHECK(s.i.minCoeff() > 0.0);
      CHECK(s.i.maxCoeff() < 1.0);
      CHECK(s.f.minCoeff() > 0.0);
      CHECK(s.f.maxCoeff() < 1.0);
      CHECK(s.o.minCoeff() > 0.0);
      CHECK(s.o.maxCoeff() < 1.0);
      // tanh saturates to exactly +-1 in double precision.
      CHECK(s.g.minCoeff() >= -1.0);
      CHECK(s.g.maxCoeff() <= 1.0);
    }
  }
}

TEST_CASE("window shape is checked") {
  const LstmParams p = LstmParams::random(3, 4, 5, 1);
  CHECK_THROWS_AS(lstm_predict(p, random_window(4, 3, 2)), DimensionError);
  CHECK_THROWS_AS(lstm_predict(p, random_window(5, 2, 2)), DimensionError);
}

TEST_CASE("gradient check on small random networks") {
  Rng rng(11);
  for (int t = 0; t < 10; ++t) {
    const std::size_t in = 1 + rng.index(3), hidden = 1 + rng.index(8), k = 1 + rng.index(5);
    const LstmParams p = LstmParams::random(in, hidden, k, derive_seed(12, {static_cast<std::uint64_t>(t)}));
    CHECK(lstm_gradcheck(p, random_window(k, in, 100 + t), rng.normal()) <= 1e-4);
  }
}

TEST_CASE("gradient at the origin vanishes for the head bias") {
  const LstmParams p(2, 3, 2);
  std::vector<double> g(p.size());
  const double loss = lstm_loss_gradient(p, Eigen::MatrixXd::Zero(2, 2), 0.0, g);
  CHECK(loss == 0.0);
  CHECK(g.back() == 0.0);
}

TEST_CASE("scaling the loss scales the gradient") {
  const LstmParams p = LstmParams::random(2, 4, 3, 13);
  const Eigen::MatrixXd w = random_window(3, 2, 14);
  std::vector<double> g1(p.size()), g2(p.size());
  const double l1 = lstm_loss_gradient(p, w, 0.3, g1, 1.0);
  const double l2 = lstm_loss_gradient(p, w, 0.3, g2, 2.0);
  CHECK(l2 == doctest::Approx(2.0 * l1));
  for (std::size_t i = 0; i < g1.size(); ++i) CHECK(g2[i] == doctest::Approx(2.0 * g1[i]).epsilon(1e-12));
}

TEST_CASE("hidden size rule") {
  CHECK(default_hidden_size(1) == 8);
  CHECK(default_hidden_size(3) == 10);
  CHECK(default_hidden_size(20) == 26);
  CHECK(default_hidden_size(500) == 54);
}

TEST_CASE("windows end at the requested row") {
  Eigen::MatrixXd X(6, 2);
  for (Eigen::Index i = 0; i < 6; ++i) X.row(i) << static_cast<double>(i), -static_cast<double>(i);
  const Eigen::MatrixXd w = window_at(X, 4, 3);
  CHECK(w.rows() == 3);
  CHECK(w(0, 0) == 2.0);
  CHECK(w(2, 1) == -4.0);
}

namespace {

Dataset copy_task(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  Dataset d;
  d.X.resize(static_cast<Eigen::Index>(n), 3);
  for (Eigen::Index i = 0; i < d.X.size(); ++i) d.X.data()[i] = rng.normal();
  d.y = d.X.col(0);
  return d;
}

}  // namespace

TEST_CASE("the network learns a copy task") {
  const Dataset d = copy_task(500, 15);
  TrainConfig cfg;
  cfg.seed = 3;
  const TrainedLstm m = lstm_train(d, cfg);
  REQUIRE_FALSE(m.loss_trace.empty());
  double sse = 0.0;
  std::size_t count = 0;
  for (std::size_t t = cfg.lookback - 1; t < d.n(); ++t) {
    const double e = m.predict(window_at(d.X, t, cfg.lookback)) - d.y[static_cast<Eigen::Index>(t)];
    sse += e * e;
    ++count;
  }
  const double var = (d.y.array() - d.y.mean()).square().mean();
  CHECK(sse / static_cast<double>(count) < 0.1 * var);
  for (const auto& r : m.loss_trace) {
    CHECK(std::isfinite(r.train_mse));
    CHECK(std::isfinite(r.val_mse));
  }
}

TEST_CASE("zero epochs return the initial network") {
  const Dataset d = copy_task(60, 16);
  TrainConfig cfg;
  cfg.epochs = 0;
  cfg.seed = 4;
  const TrainedLstm m = lstm_train(d, cfg);
  CHECK(m.loss_trace.empty());
  CHECK(m.params() == LstmParams::random(3, default_hidden_size(3), cfg.lookback, cfg.seed));
}

TEST_CASE("training is reproducible") {
  const Dataset d = copy_task(120, 17);
  TrainConfig cfg;
  cfg.epochs = 5;
  cfg.seed = 5;
  CHECK(lstm_train(d, cfg).params() == lstm_train(d, cfg).params());
}

TEST_CASE("training config validation") {
  TrainConfig cfg;
  cfg.batch_size = 0;
  CHECK_THROWS_AS(cfg.validate(), InvalidInput);
  cfg = TrainConfig{};
  cfg.learning_rate = -1.0;
  CHECK_THROWS_AS(cfg.validate(), InvalidInput);
  const Dataset d = copy_task(4, 18);
  CHECK_THROWS_AS(lstm_train(d, TrainConfig{}), InvalidInput);
}

TEST_CASE("divergence names the epoch") {
  Dataset d = copy_task(80, 19);
  TrainConfig cfg;
  cfg.learning_rate = 1e300;
  cfg.epochs = 20;
  try {
    lstm_train(d, cfg);
    FAIL("expected divergence");
  } catch (const DivergenceError& e) {
    CHECK(e.epoch() < 20);
  }
}
