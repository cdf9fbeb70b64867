#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <string_view>
#include <vector>

namespace catnet {

enum class KernelKind { Linear, Rbf };

KernelKind parse_kernel(std::string_view name);
std::string_view kernel_name(KernelKind kind);

/// Weighted sum of lagged HSIC values, lags 0..max_lag.
struct DependenceMeasure {
  KernelKind kernel = KernelKind::Rbf;
  std::size_t max_lag = 5;
  std::vector<double> weights;

  /// Weights from lag_weights(max_lag).
  static DependenceMeasure make(KernelKind kernel, std::size_t max_lag);
};

/// Median pairwise distance of a series, floored at 1e-6.
double median_bandwidth(const Eigen::VectorXd& x);

/// HSIC between x_t and y_{t - tau} on the m = n - tau aligned pairs:
/// tr(HKH HLH) / (m - 1)^2. RBF kernels use the median-heuristic bandwidth
/// of each aligned series.
double hsic_lagged(const Eigen::VectorXd& x, const Eigen::VectorXd& y, std::size_t tau,
                   KernelKind kernel);

/// w_tau = exp(-tau / 10) / sum_s exp(-s / 10), tau = 0..k.
std::vector<double> lag_weights(std::size_t k);

/// I(c) = sum_tau w_tau HSIC_tau(x + c z, x - c z).
double mirror_dependence(const Eigen::VectorXd& x, const Eigen::VectorXd& z, double c,
                         const DependenceMeasure& measure);

struct CjProfile {
  std::vector<double> grid;
  std::vector<double> values;
  double c = 0.0;
};

/// Minimizes I(c): evaluates it on a logarithmic grid over
/// [0.1, 10] * std(x)/std(z), interpolates with a cubic spline in log c,
/// and refines by golden-section search on the spline around the best grid
/// point.
CjProfile solve_cj_profile(const Eigen::VectorXd& x, const Eigen::VectorXd& z,
                           const DependenceMeasure& measure, std::size_t grid_size = 15);

double solve_cj(const Eigen::VectorXd& x, const Eigen::VectorXd& z, const DependenceMeasure& measure,
                std::size_t grid_size = 15);

}  // namespace catnet
