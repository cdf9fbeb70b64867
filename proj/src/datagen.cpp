#include "catnet/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "catnet/error.hpp"
#include "catnet/rng.hpp"

namespace catnet {

GroundTruth GroundTruth::from_beta(Eigen::VectorXd beta) {
  GroundTruth t;
  for (Eigen::Index j = 0; j < beta.size(); ++j) {
    (beta[j] != 0.0 ? t.support : t.null_set).push_back(static_cast<std::size_t>(j));
  }
  t.beta = std::move(beta);
  return t;
}

void Dataset::validate() const {
  if (y.size() != X.rows()) {
    throw InvalidInput("response length " + std::to_string(y.size()) + " does not match " +
                       std::to_string(X.rows()) + " rows");
  }
  if (!X.allFinite() || !y.allFinite()) throw InvalidInput("dataset contains non-finite values");
  if (truth && truth->beta.size() != X.cols()) {
    throw InvalidInput("ground-truth beta length does not match column count");
  }
}

LinkKind parse_link(std::string_view name) {
  if (name == "linear") return LinkKind::Linear;
  if (name == "sinexp") return LinkKind::SinExp;
  if (name == "arcsin") return LinkKind::Arcsin;
  throw InvalidInput("unknown link '" + std::string(name) + "' (expected linear, sinexp, arcsin)");
}

std::string_view link_name(LinkKind link) {
  switch (link) {
    case LinkKind::Linear: return "linear";
    case LinkKind::SinExp: return "sinexp";
    case LinkKind::Arcsin: return "arcsin";
  }
  return "linear";
}

double beta_scale(std::size_t p, std::size_t n) {
  return 20.0 * std::sqrt(std::log(static_cast<double>(p)) / static_cast<double>(n));
}

namespace {

void check_dims(std::size_t p, std::size_t n, std::size_t k, std::size_t min_n) {
  if (p == 0) throw InvalidInput("p must be positive");
  if (k > p) throw InvalidInput("k = " + std::to_string(k) + " exceeds p = " + std::to_string(p));
  if (n < min_n) throw InvalidInput("n must be at least " + std::to_string(min_n));
}

// Returns beta with k nonzero entries at random positions; relevant is
// filled with those positions sorted.
Eigen::VectorXd draw_beta(std::size_t p, std::size_t n, std::size_t k, std::uint64_t seed,
                          std::vector<std::size_t>& relevant) {
  Rng pos_rng(seed, {key(Purpose::kSupport)});
  relevant = pos_rng.sample_without_replacement(p, k);
  std::sort(relevant.begin(), relevant.end());
  Rng beta_rng(seed, {key(Purpose::kBeta)});
  const double scale = beta_scale(p, n);
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p));
  for (std::size_t j : relevant) beta[static_cast<Eigen::Index>(j)] = scale * beta_rng.normal();
  return beta;
}

Eigen::VectorXd response(const Eigen::MatrixXd& X, const Eigen::VectorXd& beta,
                         std::uint64_t seed) {
  Rng noise(seed, {key(Purpose::kNoise)});
  Eigen::VectorXd y = X * beta;
  for (Eigen::Index i = 0; i < y.size(); ++i) y[i] += noise.normal();
  return y;
}

}  // namespace

Dataset gen_linear_design(std::size_t p, std::size_t n, std::size_t k, double corr,
                          std::uint64_t seed) {
  check_dims(p, n, k, 2);
  if (!(corr >= 0.0 && corr < 1.0)) throw InvalidInput("corr must lie in [0, 1)");

  std::vector<std::size_t> relevant;
  Eigen::VectorXd beta = draw_beta(p, n, k, seed, relevant);
  std::vector<bool> is_relevant(p, false);
  for (std::size_t j : relevant) is_relevant[j] = true;

  const auto rows = static_cast<Eigen::Index>(n);
  Eigen::VectorXd factor(rows);
  Rng factor_rng(seed, {key(Purpose::kFactor)});
  for (Eigen::Index i = 0; i < rows; ++i) factor[i] = factor_rng.normal();

  const double shared = std::sqrt(corr);
  const double own = std::sqrt(1.0 - corr);
  Eigen::MatrixXd X(rows, static_cast<Eigen::Index>(p));
  for (std::size_t j = 0; j < p; ++j) {
    Rng col(seed, {key(Purpose::kColumn), j});
    const auto c = static_cast<Eigen::Index>(j);
    for (Eigen::Index i = 0; i < rows; ++i) {
      const double e = col.normal();
      X(i, c) = is_relevant[j] ? shared * factor[i] + own * e : e;
    }
  }

  Dataset d;
  d.y = response(X, beta, seed);
  d.X = std::move(X);
  d.truth = GroundTruth::from_beta(std::move(beta));
  return d;
}

Dataset gen_brownian_design(std::size_t p, std::size_t n, std::size_t k, std::uint64_t seed) {
  check_dims(p, n, k, 1);
  std::vector<std::size_t> relevant;
  Eigen::VectorXd beta = draw_beta(p, n, k, seed, relevant);
  std::vector<bool> is_relevant(p, false);
  for (std::size_t j : relevant) is_relevant[j] = true;

  const auto rows = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd X(rows, static_cast<Eigen::Index>(p));
  for (std::size_t j = 0; j < p; ++j) {
    Rng col(seed, {key(Purpose::kColumn), j});
    const auto c = static_cast<Eigen::Index>(j);
    if (is_relevant[j]) {
      double level = col.normal();
      X(0, c) = level;
      for (Eigen::Index i = 1; i < rows; ++i) {
        level += col.normal();
        X(i, c) = level;
      }
    } else {
      for (Eigen::Index i = 0; i < rows; ++i) X(i, c) = col.normal();
    }
  }

  Dataset d;
  d.y = response(X, beta, seed);
  d.X = std::move(X);
  d.truth = GroundTruth::from_beta(std::move(beta));
  return d;
}

Eigen::VectorXd apply_link(const Eigen::VectorXd& z, LinkKind link) {
  switch (link) {
    case LinkKind::Linear:
      return z;
    case LinkKind::SinExp:
      return z.unaryExpr([](double v) { return std::sin(v / 100.0) * std::exp((v + 2.0) / 500.0); });
    case LinkKind::Arcsin:
      return z.unaryExpr([](double v) { return 10.0 * std::asin(std::sin(v / 100.0)); });
  }
  return z;
}

}  // namespace catnet
