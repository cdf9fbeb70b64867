#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "catnet/datagen.hpp"
#include "catnet/predictor.hpp"

namespace catnet {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Gate blocks inside each stacked 4H weight matrix, in this order.
enum class Gate : std::size_t { Input = 0, Forget = 1, Cell = 2, Output = 3 };

/// Parameters of a two-layer LSTM with a linear regression head, stored in
/// one flat buffer. Per layer the buffer holds W_ih (4H x in, row-major),
/// W_hh (4H x H), b_ih (4H), b_hh (4H); the head W_fc (H) and b_fc follow.
class LstmParams {
 public:
  static constexpr std::size_t kLayers = 2;

  LstmParams() = default;
  LstmParams(std::size_t input_size, std::size_t hidden_size, std::size_t lookback);

  /// Uniform in +-1/sqrt(hidden).
  static LstmParams random(std::size_t input_size, std::size_t hidden_size, std::size_t lookback,
                           std::uint64_t seed);

  std::size_t input_size() const { return input_; }
  std::size_t hidden_size() const { return hidden_; }
  std::size_t lookback() const { return lookback_; }
  std::size_t layer_input(std::size_t layer) const { return layer == 0 ? input_ : hidden_; }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  std::size_t size() const { return data_.size(); }

  Eigen::Map<RowMatrix> weight_ih(std::size_t layer);
  Eigen::Map<const RowMatrix> weight_ih(std::size_t layer) const;
  Eigen::Map<RowMatrix> weight_hh(std::size_t layer);
  Eigen::Map<const RowMatrix> weight_hh(std::size_t layer) const;
  Eigen::Map<Eigen::VectorXd> bias_ih(std::size_t layer);
  Eigen::Map<const Eigen::VectorXd> bias_ih(std::size_t layer) const;
  Eigen::Map<Eigen::VectorXd> bias_hh(std::size_t layer);
  Eigen::Map<const Eigen::VectorXd> bias_hh(std::size_t layer) const;
  Eigen::Map<Eigen::VectorXd> head_weight();
  Eigen::Map<const Eigen::VectorXd> head_weight() const;
  double& head_bias() { return data_.back(); }
  double head_bias() const { return data_.back(); }

  /// Rows of W_ih belonging to one gate (H x in).
  auto gate_ih(std::size_t layer, Gate g) {
    return weight_ih(layer).middleRows(static_cast<Eigen::Index>(gate_offset(g)),
                                       static_cast<Eigen::Index>(hidden_));
  }
  auto gate_hh(std::size_t layer, Gate g) {
    return weight_hh(layer).middleRows(static_cast<Eigen::Index>(gate_offset(g)),
                                       static_cast<Eigen::Index>(hidden_));
  }

  bool operator==(const LstmParams&) const = default;

 private:
  std::size_t gate_offset(Gate g) const { return static_cast<std::size_t>(g) * hidden_; }

  std::size_t input_ = 0;
  std::size_t hidden_ = 0;
  std::size_t lookback_ = 0;
  std::array<std::size_t, kLayers> w_ih_{}, w_hh_{}, b_ih_{}, b_hh_{};
  std::size_t head_ = 0;
  std::vector<double> data_;
};

struct StepState {
  Eigen::VectorXd i, f, g, o, c, h;
};

struct ForwardResult {
  double prediction = 0.0;
  /// states[layer][t], t over the window rows.
  std::array<std::vector<StepState>, LstmParams::kLayers> states;
};

/// Full forward pass over a lookback x input window, h0 = c0 = 0.
ForwardResult lstm_forward(const LstmParams& params, const Eigen::Ref<const Eigen::MatrixXd>& window);

/// Prediction only; no per-step states are retained.
double lstm_predict(const LstmParams& params, const Eigen::Ref<const Eigen::MatrixXd>& window);

/// Gradient of loss_scale * (prediction - target)^2 in the flat parameter
/// layout. Returns the loss.
double lstm_loss_gradient(const LstmParams& params, const Eigen::Ref<const Eigen::MatrixXd>& window,
                          double target, std::span<double> grad, double loss_scale = 1.0);

/// Max relative error between the BPTT gradient and central differences
/// (step 1e-5) over every parameter. The relative error of one component is
/// |a - f| / max(|a|, |f|, 1e-6).
double lstm_gradcheck(const LstmParams& params, const Eigen::Ref<const Eigen::MatrixXd>& window,
                      double target);

struct TrainConfig {
  std::size_t epochs = 200;
  double learning_rate = 1e-3;
  std::size_t batch_size = 32;
  std::size_t lookback = 5;
  /// 0 selects default_hidden_size(input features).
  std::size_t hidden = 0;
  std::uint64_t seed = 0;
  std::size_t patience = 10;
  double validation_fraction = 0.1;

  void validate() const;
};

/// round(20 * log10(p)), at least 8.
std::size_t default_hidden_size(std::size_t p);

struct LossRecord {
  std::size_t epoch = 0;
  double train_mse = 0.0;
  double val_mse = 0.0;
};

/// A trained network plus the column scalers applied to raw inputs. As a
/// Predictor it maps a raw lookback x p window to a prediction on the raw
/// response scale.
class TrainedLstm final : public Predictor {
 public:
  TrainedLstm() = default;
  TrainedLstm(LstmParams params, Eigen::VectorXd x_mean, Eigen::VectorXd x_scale, double y_mean,
              double y_scale);

  std::size_t num_features() const override { return params_.input_size(); }
  std::size_t sample_rows() const override { return params_.lookback(); }
  double predict(const Eigen::Ref<const Eigen::MatrixXd>& window) const override;

  const LstmParams& params() const { return params_; }
  const Eigen::VectorXd& x_mean() const { return x_mean_; }
  const Eigen::VectorXd& x_scale() const { return x_scale_; }
  double y_mean() const { return y_mean_; }
  double y_scale() const { return y_scale_; }

  std::vector<LossRecord> loss_trace;
  std::size_t best_epoch = 0;

 private:
  LstmParams params_;
  Eigen::VectorXd x_mean_, x_scale_;
  double y_mean_ = 0.0;
  double y_scale_ = 1.0;
};

/// Window ending at row t: rows t-k+1..t of X.
Eigen::MatrixXd window_at(const Eigen::MatrixXd& X, std::size_t t, std::size_t lookback);

/// Fits the network by Adam on sliding windows (t-k+1..t) -> y_t with an
/// early-stopping split on the last windows. Inputs and response are
/// standardized internally.
TrainedLstm lstm_train(const Dataset& data, const TrainConfig& cfg);

}  // namespace catnet
