#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

namespace catnet {

/// Known coefficients of a simulated design. support and null_set partition
/// {0..p-1} and are both sorted.
struct GroundTruth {
  Eigen::VectorXd beta;
  std::vector<std::size_t> support;
  std::vector<std::size_t> null_set;

  static GroundTruth from_beta(Eigen::VectorXd beta);
};

/// n x p feature matrix with rows ordered by time, response y, and the
/// generating coefficients when the data are simulated.
struct Dataset {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  std::optional<GroundTruth> truth;

  std::size_t n() const { return static_cast<std::size_t>(X.rows()); }
  std::size_t p() const { return static_cast<std::size_t>(X.cols()); }
  /// Throws InvalidInput when shapes disagree or an entry is not finite.
  void validate() const;
};

enum class LinkKind { Linear, SinExp, Arcsin };

LinkKind parse_link(std::string_view name);
std::string_view link_name(LinkKind link);

/// Standard deviation of the nonzero coefficients: 20 * sqrt(ln(p) / n).
double beta_scale(std::size_t p, std::size_t n);

/// Gaussian design with unit variances. The k relevant columns share
/// pairwise correlation `corr`; the null columns are independent.
/// y = X beta + eps with eps ~ N(0, 1).
Dataset gen_linear_design(std::size_t p, std::size_t n, std::size_t k, double corr,
                          std::uint64_t seed);

/// Relevant columns are Gaussian random walks started at N(0, 1); null
/// columns are i.i.d. N(0, 1) in time. y holds z = X beta + eps before any
/// link is applied.
Dataset gen_brownian_design(std::size_t p, std::size_t n, std::size_t k, std::uint64_t seed);

Eigen::VectorXd apply_link(const Eigen::VectorXd& z, LinkKind link);

}  // namespace catnet
