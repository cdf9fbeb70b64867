#include "catnet/linmod.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace catnet {

LinearFit ols_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  const Eigen::Index n = X.rows();
  const Eigen::Index p = X.cols();
  if (y.size() != n) throw InvalidInput("ols_fit: y length does not match X rows");
  if (p >= n) {
    throw DimensionError("ols_fit: p = " + std::to_string(p) + " >= n = " + std::to_string(n));
  }
  Eigen::MatrixXd A(n, p + 1);
  A.leftCols(p) = X;
  A.col(p).setOnes();
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
  if (qr.rank() < p + 1) throw SingularDesign("ols_fit: design is rank deficient");
  const Eigen::VectorXd b = qr.solve(y);

  LinearFit fit;
  fit.coef = b.head(p);
  fit.intercept = b[p];
  fit.residuals = y - A * b;
  return fit;
}

double analytic_cj(const Eigen::MatrixXd& X, std::size_t j, const Eigen::VectorXd& z) {
  const Eigen::Index n = X.rows();
  const Eigen::Index p = X.cols();
  const auto jj = static_cast<Eigen::Index>(j);
  if (jj >= p) throw InvalidInput("analytic_cj: feature index out of range");
  if (z.size() != n) throw InvalidInput("analytic_cj: z length does not match X rows");
  if (p > n) throw DimensionError("analytic_cj: requires n > p");

  Eigen::MatrixXd targets(n, 2);
  targets.col(0) = X.col(jj);
  targets.col(1) = z;
  if (p > 1) {
    Eigen::MatrixXd rest(n, p - 1);
    rest.leftCols(jj) = X.leftCols(jj);
    rest.rightCols(p - 1 - jj) = X.rightCols(p - 1 - jj);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(rest);
    if (qr.rank() < p - 1) throw SingularDesign("analytic_cj: X_{-j} is rank deficient");
    targets -= rest * qr.solve(targets);
  }
  const double num = targets.col(0).squaredNorm();
  const double den = targets.col(1).squaredNorm();
  if (!(den > 1e-12 * std::max(1.0, z.squaredNorm()))) {
    throw DegenerateNoise("analytic_cj: projected noise energy is zero");
  }
  return std::sqrt(num / den);
}

namespace {

struct Standardized {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;  // 0 for constant columns
  double y_mean = 0.0;
};

Standardized standardize(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  Standardized s;
  const double n = static_cast<double>(X.rows());
  s.mean = X.colwise().mean().transpose();
  s.X = X.rowwise() - s.mean.transpose();
  s.scale.resize(X.cols());
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    const double sd = std::sqrt(s.X.col(j).squaredNorm() / n);
    s.scale[j] = sd > 1e-12 ? sd : 0.0;
    if (s.scale[j] > 0.0) {
      s.X.col(j) /= sd;
    } else {
      s.X.col(j).setZero();
    }
  }
  s.y_mean = y.mean();
  s.y = y.array() - s.y_mean;
  return s;
}

double soft_threshold(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

double objective(const Eigen::VectorXd& r, const Eigen::VectorXd& b, double lambda) {
  const double n = static_cast<double>(r.size());
  return 0.5 * r.squaredNorm() / n + lambda * b.lpNorm<1>();
}

LassoFit finish(const Standardized& s, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                Eigen::VectorXd b, std::size_t sweeps, std::vector<double> trace) {
  LassoFit fit;
  fit.coef = Eigen::VectorXd::Zero(b.size());
  for (Eigen::Index j = 0; j < b.size(); ++j) {
    if (s.scale[j] > 0.0) fit.coef[j] = b[j] / s.scale[j];
  }
  fit.intercept = s.y_mean - s.mean.dot(fit.coef);
  fit.residuals = y - X * fit.coef;
  fit.residuals.array() -= fit.intercept;
  fit.sweeps = sweeps;
  fit.objective_trace = std::move(trace);
  fit.standardized_coef = std::move(b);
  return fit;
}

}  // namespace

double lasso_lambda_max(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  const Standardized s = standardize(X, y);
  // Same arithmetic as the first coordinate sweep from zero, so lambda_max
  // zeroes every coefficient exactly.
  double out = 0.0;
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    if (s.scale[j] == 0.0) continue;
    out = std::max(out, std::abs(s.X.col(j).dot(s.y) / static_cast<double>(X.rows())));
  }
  return out;
}

LassoFit lasso_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda,
                   const LassoOptions& options) {
  if (!(lambda >= 0.0)) throw InvalidInput("lasso_fit: lambda must be nonnegative");
  if (y.size() != X.rows()) throw InvalidInput("lasso_fit: y length does not match X rows");
  if (X.rows() < 2) throw InvalidInput("lasso_fit: need at least two rows");

  const Standardized s = standardize(X, y);
  const Eigen::Index p = X.cols();
  const double n = static_cast<double>(X.rows());

  Eigen::VectorXd b = options.warm_start.size() == p ? options.warm_start : Eigen::VectorXd::Zero(p);
  Eigen::VectorXd r = s.y - s.X * b;
  std::vector<double> trace;

  for (std::size_t sweep = 1; sweep <= options.max_sweeps; ++sweep) {
    double max_change = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) {
      if (s.scale[j] == 0.0) continue;
      const auto xj = s.X.col(j);
      const double old = b[j];
      // Unit variance columns: x_j'x_j / n == 1.
      const double rho = xj.dot(r) / n + old;
      const double updated = soft_threshold(rho, lambda);
      if (updated != old) {
        r.noalias() -= (updated - old) * xj;
        b[j] = updated;
        max_change = std::max(max_change, std::abs(updated - old));
      }
    }
    trace.push_back(objective(r, b, lambda));
    if (max_change < options.tolerance) return finish(s, X, y, std::move(b), sweep, std::move(trace));
  }
  throw ConvergenceError("lasso_fit: no convergence after " + std::to_string(options.max_sweeps) +
                             " sweeps",
                         finish(s, X, y, std::move(b), options.max_sweeps, std::move(trace)));
}

PreselectResult lasso_preselect(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                const PreselectOptions& options) {
  const Eigen::Index n = X.rows();
  const Eigen::Index p = X.cols();
  if (y.size() != n) throw InvalidInput("lasso_preselect: y length does not match X rows");
  if (options.folds < 2 || static_cast<Eigen::Index>(options.folds) > n) {
    throw InvalidInput("lasso_preselect: invalid fold count");
  }

  auto support_at = [&](double lambda) {
    PreselectResult res;
    res.lambda = lambda;
    const LassoFit fit = lasso_fit(X, y, lambda);
    for (Eigen::Index j = 0; j < p; ++j) {
      if (fit.coef[j] != 0.0) res.selected.push_back(static_cast<std::size_t>(j));
    }
    return res;
  };
  if (options.fixed_lambda) return support_at(*options.fixed_lambda);

  const double lambda_max = lasso_lambda_max(X, y);
  if (!(lambda_max > 0.0)) return {{}, 0.0};
  const std::size_t g = std::max<std::size_t>(options.grid_points, 2);
  std::vector<double> grid(g);
  for (std::size_t i = 0; i < g; ++i) {
    const double frac = static_cast<double>(i) / static_cast<double>(g - 1);
    grid[i] = lambda_max * std::pow(options.min_ratio, frac);
  }

  std::vector<double> cv_error(g, 0.0);
  const auto folds = static_cast<Eigen::Index>(options.folds);
  for (Eigen::Index f = 0; f < folds; ++f) {
    const Eigen::Index lo = f * n / folds;
    const Eigen::Index hi = (f + 1) * n / folds;
    const Eigen::Index m = hi - lo;
    Eigen::MatrixXd Xtr(n - m, p);
    Eigen::VectorXd ytr(n - m);
    Xtr.topRows(lo) = X.topRows(lo);
    Xtr.bottomRows(n - hi) = X.bottomRows(n - hi);
    ytr.head(lo) = y.head(lo);
    ytr.tail(n - hi) = y.tail(n - hi);
    const Eigen::MatrixXd Xva = X.middleRows(lo, m);
    const Eigen::VectorXd yva = y.segment(lo, m);

    LassoOptions opts;
    for (std::size_t i = 0; i < g; ++i) {
      LassoFit fit = [&] {
        try {
          return lasso_fit(Xtr, ytr, grid[i], opts);
        } catch (const ConvergenceError& e) {
          return e.iterate();
        }
      }();
      Eigen::VectorXd pred = Xva * fit.coef;
      pred.array() += fit.intercept;
      cv_error[i] += (yva - pred).squaredNorm() / static_cast<double>(m);
      opts.warm_start = fit.standardized_coef;
    }
  }
  const auto best = static_cast<std::size_t>(
      std::min_element(cv_error.begin(), cv_error.end()) - cv_error.begin());
  return support_at(grid[best]);
}

}  // namespace catnet
