#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <optional>
#include <vector>

#include "catnet/error.hpp"

namespace catnet {

struct LinearFit {
  Eigen::VectorXd coef;
  double intercept = 0.0;
  Eigen::VectorXd residuals;
};

/// Least squares with an intercept. Requires n > p and a full-rank
/// augmented design.
LinearFit ols_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

/// Closed-form mirror scale for feature j:
///   c = sqrt( x_j' P x_j / z' P z ),  P = I - X_{-j} (X_{-j}' X_{-j})^{-1} X_{-j}'
/// which makes the projected mirrors P(x_j + c z) and P(x_j - c z) orthogonal.
double analytic_cj(const Eigen::MatrixXd& X, std::size_t j, const Eigen::VectorXd& z);

struct LassoOptions {
  std::size_t max_sweeps = 10000;
  double tolerance = 1e-7;
  /// Warm start on the standardized scale; empty means zeros.
  Eigen::VectorXd warm_start;
};

struct LassoFit : LinearFit {
  std::size_t sweeps = 0;
  /// Objective after each sweep, on the standardized problem.
  std::vector<double> objective_trace;
  /// Coefficients on the standardized scale (for warm starts along a path).
  Eigen::VectorXd standardized_coef;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, LassoFit iterate)
      : Error(what), iterate_(std::move(iterate)) {}
  const LassoFit& iterate() const noexcept { return iterate_; }

 private:
  LassoFit iterate_;
};

/// Coordinate descent for (1/2n)||y - Xb||^2 + lambda ||b||_1 on internally
/// standardized columns (population variance) and centered y. Coefficients
/// are reported on the original scale.
LassoFit lasso_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda,
                   const LassoOptions& options = {});

/// Smallest lambda at which every standardized coefficient is zero.
double lasso_lambda_max(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

struct PreselectOptions {
  std::size_t folds = 5;
  std::size_t grid_points = 50;
  /// lambda_min = ratio * lambda_max.
  double min_ratio = 0.01;
  /// Skip cross-validation and use this lambda.
  std::optional<double> fixed_lambda;
};

struct PreselectResult {
  std::vector<std::size_t> selected;
  double lambda = 0.0;
};

/// Support of the LASSO fit at the cross-validated lambda (contiguous
/// time-ordered folds, minimum mean validation MSE over a log grid).
PreselectResult lasso_preselect(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                const PreselectOptions& options = {});

}  // namespace catnet
