#include "catnet/dependence.hpp"

#include <algorithm>
#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>
#include <cmath>
#include <string>

#include "catnet/error.hpp"
#include "catnet/simd/kernels.hpp"

namespace catnet {

KernelKind parse_kernel(std::string_view name) {
  if (name == "linear") return KernelKind::Linear;
  if (name == "rbf") return KernelKind::Rbf;
  throw InvalidInput("unknown kernel '" + std::string(name) + "' (expected linear, rbf)");
}

std::string_view kernel_name(KernelKind kind) {
  return kind == KernelKind::Linear ? "linear" : "rbf";
}

DependenceMeasure DependenceMeasure::make(KernelKind kernel, std::size_t max_lag) {
  return {kernel, max_lag, lag_weights(max_lag)};
}

std::vector<double> lag_weights(std::size_t k) {
  std::vector<double> w(k + 1);
  double total = 0.0;
  for (std::size_t tau = 0; tau <= k; ++tau) {
    w[tau] = std::exp(-static_cast<double>(tau) / 10.0);
    total += w[tau];
  }
  for (double& v : w) v /= total;
  return w;
}

double median_bandwidth(const Eigen::VectorXd& x) {
  const auto m = static_cast<std::size_t>(x.size());
  if (m < 2) return 1e-6;
  std::vector<double> d;
  d.reserve(m * (m - 1) / 2);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      d.push_back(std::abs(x[static_cast<Eigen::Index>(i)] - x[static_cast<Eigen::Index>(j)]));
    }
  }
  const std::size_t mid = d.size() / 2;
  std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(mid), d.end());
  double med = d[mid];
  if (d.size() % 2 == 0) {
    med = 0.5 * (med + *std::max_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(mid)));
  }
  return std::max(med, 1e-6);
}

namespace {

// Symmetric m x m Gram matrix, row-major in `out`.
void gram(const Eigen::VectorXd& v, KernelKind kernel, std::vector<double>& out) {
  const auto m = static_cast<std::size_t>(v.size());
  out.resize(m * m);
  if (kernel == KernelKind::Linear) {
    for (std::size_t i = 0; i < m; ++i) {
      const double vi = v[static_cast<Eigen::Index>(i)];
      for (std::size_t j = 0; j < m; ++j) out[i * m + j] = vi * v[static_cast<Eigen::Index>(j)];
    }
    return;
  }
  const double sigma = median_bandwidth(v);
  const double scale = -1.0 / (2.0 * sigma * sigma);
  const auto& K = simd::active();
  for (std::size_t i = 0; i < m; ++i) {
    double* row = out.data() + i * m;
    K.sq_diff(v.data(), v[static_cast<Eigen::Index>(i)], row, m);
    for (std::size_t j = 0; j < m; ++j) row[j] = std::exp(scale * row[j]);
  }
}

// In-place double centering: L - row means - column means + grand mean.
void center(std::vector<double>& L, std::size_t m) {
  std::vector<double> row_mean(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < m; ++j) s += L[i * m + j];
    row_mean[i] = s / static_cast<double>(m);
  }
  double grand = 0.0;
  for (double r : row_mean) grand += r;
  grand /= static_cast<double>(m);
  // Symmetric input: column means equal row means.
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) L[i * m + j] = L[i * m + j] - row_mean[i] - row_mean[j] + grand;
  }
}

}  // namespace

double hsic_lagged(const Eigen::VectorXd& x, const Eigen::VectorXd& y, std::size_t tau,
                   KernelKind kernel) {
  if (x.size() != y.size()) throw InvalidInput("hsic_lagged: series lengths differ");
  const auto n = static_cast<std::size_t>(x.size());
  if (n <= tau + 2) {
    throw InvalidInput("hsic_lagged: series of length " + std::to_string(n) + " too short for lag " +
                       std::to_string(tau));
  }
  const std::size_t m = n - tau;
  const Eigen::VectorXd xa = x.segment(static_cast<Eigen::Index>(tau), static_cast<Eigen::Index>(m));
  const Eigen::VectorXd ya = y.head(static_cast<Eigen::Index>(m));

  // tr(HKH HLH) = tr(K HLH) because H is idempotent.
  std::vector<double> K, L;
  gram(xa, kernel, K);
  gram(ya, kernel, L);
  center(L, m);
  const double tr = simd::active().dot(K.data(), L.data(), m * m);
  const double denom = static_cast<double>(m - 1) * static_cast<double>(m - 1);
  return tr / denom;
}

double mirror_dependence(const Eigen::VectorXd& x, const Eigen::VectorXd& z, double c,
                         const DependenceMeasure& measure) {
  if (!(c >= 0.0)) throw InvalidInput("mirror_dependence: c must be nonnegative");
  if (x.size() != z.size()) throw InvalidInput("mirror_dependence: length mismatch");
  if (measure.weights.size() != measure.max_lag + 1) {
    throw InvalidInput("mirror_dependence: weight vector does not match max lag");
  }
  const Eigen::VectorXd plus = x + c * z;
  const Eigen::VectorXd minus = x - c * z;
  double total = 0.0;
  for (std::size_t tau = 0; tau <= measure.max_lag; ++tau) {
    total += measure.weights[tau] * hsic_lagged(plus, minus, tau, measure.kernel);
  }
  return total;
}

namespace {

double sample_sd(const Eigen::VectorXd& v) {
  const double mean = v.mean();
  return std::sqrt((v.array() - mean).square().sum() / static_cast<double>(v.size() - 1));
}

template <typename F>
double golden_section(F&& f, double lo, double hi) {
  const double ratio = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = lo, b = hi;
  double c = b - ratio * (b - a);
  double d = a + ratio * (b - a);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < 200 && b - a > 1e-10; ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - ratio * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + ratio * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace

CjProfile solve_cj_profile(const Eigen::VectorXd& x, const Eigen::VectorXd& z,
                           const DependenceMeasure& measure, std::size_t grid_size) {
  if (x.size() != z.size()) throw InvalidInput("solve_cj: length mismatch");
  if (x.size() < 3) throw InvalidInput("solve_cj: series too short");
  if (grid_size < 5) throw InvalidInput("solve_cj: grid needs at least 5 points");
  const double sx = sample_sd(x);
  const double sz = sample_sd(z);
  if (!(sx > 0.0) || !(sz > 0.0)) throw InvalidInput("solve_cj: x and z must be non-constant");

  const double u0 = std::log(0.1 * sx / sz);
  const double step = std::log(100.0) / static_cast<double>(grid_size - 1);
  CjProfile prof;
  prof.grid.resize(grid_size);
  prof.values.resize(grid_size);
  for (std::size_t i = 0; i < grid_size; ++i) {
    prof.grid[i] = std::exp(u0 + step * static_cast<double>(i));
    prof.values[i] = mirror_dependence(x, z, prof.grid[i], measure);
  }
  const auto [lo_it, hi_it] = std::minmax_element(prof.values.begin(), prof.values.end());
  if (*hi_it - *lo_it < 1e-12) throw DegenerateProfile("solve_cj: dependence profile is flat");

  const auto best = static_cast<std::size_t>(lo_it - prof.values.begin());
  boost::math::interpolators::cardinal_cubic_b_spline<double> spline(prof.values.begin(),
                                                                     prof.values.end(), u0, step);
  const double a = u0 + step * static_cast<double>(best == 0 ? 0 : best - 1);
  const double b = u0 + step * static_cast<double>(std::min(best + 1, grid_size - 1));
  prof.c = std::exp(golden_section(spline, a, b));
  return prof;
}

double solve_cj(const Eigen::VectorXd& x, const Eigen::VectorXd& z, const DependenceMeasure& measure,
                std::size_t grid_size) {
  return solve_cj_profile(x, z, measure, grid_size).c;
}

}  // namespace catnet
