#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <functional>

namespace catnet {

/// A model the attribution code can query. A sample is a rows x p matrix
/// (rows = 1 for tabular models, the lookback for sequence models); a
/// feature is one column of it. Implementations must be safe to call
/// concurrently.
class Predictor {
 public:
  virtual ~Predictor() = default;
  virtual std::size_t num_features() const = 0;
  virtual std::size_t sample_rows() const { return 1; }
  virtual double predict(const Eigen::Ref<const Eigen::MatrixXd>& sample) const = 0;
  /// Non-null when the model is b + coef' x on tabular samples.
  virtual const Eigen::VectorXd* linear_coefficients() const { return nullptr; }
};

class LinearPredictor final : public Predictor {
 public:
  LinearPredictor(Eigen::VectorXd coef, double intercept)
      : coef_(std::move(coef)), intercept_(intercept) {}

  std::size_t num_features() const override { return static_cast<std::size_t>(coef_.size()); }
  double predict(const Eigen::Ref<const Eigen::MatrixXd>& sample) const override {
    return intercept_ + sample.row(0).dot(coef_);
  }
  const Eigen::VectorXd* linear_coefficients() const override { return &coef_; }
  double intercept() const { return intercept_; }

 private:
  Eigen::VectorXd coef_;
  double intercept_;
};

/// Wraps a callable over a tabular feature vector.
class FunctionPredictor final : public Predictor {
 public:
  using Fn = std::function<double(const Eigen::VectorXd&)>;
  FunctionPredictor(std::size_t p, Fn fn) : p_(p), fn_(std::move(fn)) {}

  std::size_t num_features() const override { return p_; }
  double predict(const Eigen::Ref<const Eigen::MatrixXd>& sample) const override {
    return fn_(sample.row(0).transpose());
  }

 private:
  std::size_t p_;
  Fn fn_;
};

}  // namespace catnet
