#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <optional>
#include <vector>

#include "catnet/datagen.hpp"
#include "catnet/importance.hpp"

namespace catnet {

/// x_plus = x + c z, x_minus = x - c z.
struct MirrorPair {
  std::size_t feature = 0;
  Eigen::VectorXd z;
  double c = 0.0;
  Eigen::VectorXd x_plus;
  Eigen::VectorXd x_minus;

  /// True when z is identically zero, so both mirrors equal x.
  bool degenerate() const { return z.isZero(0.0); }
};

MirrorPair make_mirror(const Eigen::VectorXd& x, const Eigen::VectorXd& z, double c,
                       std::size_t feature = 0);

/// Components of one vector signed-max statistic.
struct MirrorTerms {
  double l1_plus = 0.0;
  double l1_minus = 0.0;
  double cosine = 0.0;
  double m = 0.0;
};

/// M = <L+, L-> (||L+||_1 v ||L-||_1) / (||L+||_2 ||L-||_2), or 0 when either
/// L2 norm is below 1e-12.
MirrorTerms mirror_terms(const Eigen::VectorXd& plus, const Eigen::VectorXd& minus);
double mirror_statistic(const ImportanceVector& plus, const ImportanceVector& minus);

/// Scalar signed-max: sgn(b+ b-) * max(|b+|, |b-|).
double signed_max(double plus, double minus);

struct MirrorStatistics {
  Eigen::VectorXd m;
  std::vector<MirrorTerms> terms;

  static MirrorStatistics from_values(const Eigen::VectorXd& m);
};

/// (#{M <= -t} + 1) / #{M >= t}; nullopt when nothing reaches t.
std::optional<double> fdp_hat(const Eigen::VectorXd& m, double t);

struct Metrics {
  double fdp = 0.0;
  double power = 0.0;
};

struct SelectionResult {
  std::optional<double> threshold;
  std::vector<std::size_t> selected;
  double q = 0.0;
  MirrorStatistics stats;
  std::optional<Metrics> metrics;
  std::size_t warnings = 0;
};

/// tau_q = smallest distinct positive |M_j| with fdp_hat <= q;
/// selected = {j : M_j >= tau_q}, empty when no candidate qualifies.
SelectionResult select_features(const MirrorStatistics& stats, double q);

Metrics evaluate(const SelectionResult& sel, const GroundTruth& truth);

}  // namespace catnet
