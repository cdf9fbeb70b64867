#pragma once

#include <Eigen/Dense>
#include <cstddef>

namespace catnet {

enum class MirrorSign { Plain, Plus, Minus };

/// Per-sample derivative importance of one feature column: values[i] is the
/// slope of the smoothed SHAP curve at that sample's feature value.
struct ImportanceVector {
  Eigen::VectorXd values;
  std::size_t feature = 0;
  MirrorSign sign = MirrorSign::Plain;
};

struct LowessOptions {
  double frac = 0.3;
  std::size_t iters = 2;
};

/// Locally weighted linear regression with tricube weights over the nearest
/// ceil(frac * n) neighbours, followed by `iters` bisquare robustifying
/// passes. Output is aligned with the input order.
Eigen::VectorXd lowess_smooth(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                              const LowessOptions& options = {});

/// Sorts by x, smooths phi with LOWESS, averages smoothed values at tied x,
/// differentiates (central differences, one-sided at the ends) and maps the
/// slopes back to sample order.
ImportanceVector importance_vector(const Eigen::VectorXd& x, const Eigen::VectorXd& phi,
                                   const LowessOptions& options = {}, std::size_t feature = 0,
                                   MirrorSign sign = MirrorSign::Plain);

}  // namespace catnet
