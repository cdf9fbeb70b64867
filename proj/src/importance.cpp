#include "catnet/importance.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "catnet/error.hpp"

namespace catnet {

namespace {

std::vector<std::size_t> argsort(const Eigen::VectorXd& x) {
  std::vector<std::size_t> idx(static_cast<std::size_t>(x.size()));
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return x[static_cast<Eigen::Index>(a)] < x[static_cast<Eigen::Index>(b)];
  });
  return idx;
}

double median(std::vector<double> v) {
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  double m = v[mid];
  if (v.size() % 2 == 0) {
    m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
  }
  return m;
}

// One LOWESS pass over sorted data with per-point robustness weights.
void local_fits(const std::vector<double>& xs, const std::vector<double>& ys,
                const std::vector<double>& robust, std::size_t r, std::vector<double>& fit) {
  const std::size_t n = xs.size();
  std::size_t lo = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double xi = xs[i];
    while (lo + r < n && xi - xs[lo] > xs[lo + r] - xi) ++lo;
    const std::size_t hi = lo + r;  // exclusive
    const double h = std::max(xi - xs[lo], xs[hi - 1] - xi);

    double sw = 0.0, sx = 0.0, sy = 0.0;
    if (h <= 0.0) {
      // Every neighbour sits at xi: weighted mean of all tied points.
      for (std::size_t j = 0; j < n; ++j) {
        if (xs[j] == xi) {
          sw += robust[j];
          sy += robust[j] * ys[j];
        }
      }
      fit[i] = sw > 0.0 ? sy / sw : ys[i];
      continue;
    }
    // Points beyond the window that tie with its edge are at distance h and
    // would get zero weight, so the window range is sufficient.
    double swxx = 0.0, swxy = 0.0;
    for (std::size_t j = lo; j < hi; ++j) {
      const double u = std::abs(xs[j] - xi) / h;
      if (u >= 1.0) continue;
      const double t = 1.0 - u * u * u;
      const double wj = t * t * t * robust[j];
      sw += wj;
      sx += wj * xs[j];
      sy += wj * ys[j];
    }
    if (sw <= 0.0) {
      fit[i] = ys[i];
      continue;
    }
    const double mx = sx / sw;
    const double my = sy / sw;
    for (std::size_t j = lo; j < hi; ++j) {
      const double u = std::abs(xs[j] - xi) / h;
      if (u >= 1.0) continue;
      const double t = 1.0 - u * u * u;
      const double wj = t * t * t * robust[j];
      swxx += wj * (xs[j] - mx) * (xs[j] - mx);
      swxy += wj * (xs[j] - mx) * (ys[j] - my);
    }
    if (swxx > 1e-12 * h * h * sw) {
      fit[i] = my + swxy / swxx * (xi - mx);
    } else {
      fit[i] = my;
    }
  }
}

}  // namespace

Eigen::VectorXd lowess_smooth(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                              const LowessOptions& options) {
  const auto n = static_cast<std::size_t>(x.size());
  if (static_cast<std::size_t>(y.size()) != n) throw InvalidInput("lowess: length mismatch");
  if (n < 3) throw InvalidInput("lowess: need at least 3 points");
  if (!(options.frac > 0.0 && options.frac <= 1.0)) throw InvalidInput("lowess: frac must lie in (0, 1]");
  if (x.maxCoeff() == x.minCoeff()) throw DegenerateAbscissa("lowess: all abscissae are identical");

  const std::vector<std::size_t> order = argsort(x);
  std::vector<double> xs(n), ys(n);
  for (std::size_t i = 0; i < n; ++i) {
    xs[i] = x[static_cast<Eigen::Index>(order[i])];
    ys[i] = y[static_cast<Eigen::Index>(order[i])];
  }
  const auto r = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::ceil(options.frac * static_cast<double>(n))), 2, n);

  std::vector<double> robust(n, 1.0), fit(n), resid(n);
  local_fits(xs, ys, robust, r, fit);
  const double yscale = std::max(1.0, y.cwiseAbs().maxCoeff());
  for (std::size_t it = 0; it < options.iters; ++it) {
    for (std::size_t i = 0; i < n; ++i) resid[i] = std::abs(ys[i] - fit[i]);
    const double s = median(resid);
    if (s <= 1e-12 * yscale) break;
    for (std::size_t i = 0; i < n; ++i) {
      const double u = resid[i] / (6.0 * s);
      robust[i] = u < 1.0 ? (1.0 - u * u) * (1.0 - u * u) : 0.0;
    }
    local_fits(xs, ys, robust, r, fit);
  }

  Eigen::VectorXd out(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) out[static_cast<Eigen::Index>(order[i])] = fit[i];
  return out;
}

ImportanceVector importance_vector(const Eigen::VectorXd& x, const Eigen::VectorXd& phi,
                                   const LowessOptions& options, std::size_t feature,
                                   MirrorSign sign) {
  const Eigen::VectorXd smooth = lowess_smooth(x, phi, options);
  const auto n = static_cast<std::size_t>(x.size());
  const std::vector<std::size_t> order = argsort(x);

  // Distinct abscissae with the mean smoothed value of their ties.
  std::vector<double> ux, uv;
  std::vector<std::size_t> group(n);
  for (std::size_t i = 0; i < n;) {
    const double xv = x[static_cast<Eigen::Index>(order[i])];
    std::size_t j = i;
    double sum = 0.0;
    while (j < n && x[static_cast<Eigen::Index>(order[j])] == xv) {
      sum += smooth[static_cast<Eigen::Index>(order[j])];
      group[order[j]] = ux.size();
      ++j;
    }
    ux.push_back(xv);
    uv.push_back(sum / static_cast<double>(j - i));
    i = j;
  }

  const std::size_t m = ux.size();
  std::vector<double> slope(m);
  for (std::size_t g = 0; g < m; ++g) {
    const std::size_t a = g == 0 ? 0 : g - 1;
    const std::size_t b = g + 1 == m ? m - 1 : g + 1;
    slope[g] = (uv[b] - uv[a]) / (ux[b] - ux[a]);
  }

  ImportanceVector out;
  out.feature = feature;
  out.sign = sign;
  out.values.resize(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) out.values[static_cast<Eigen::Index>(i)] = slope[group[i]];
  return out;
}

}  // namespace catnet
