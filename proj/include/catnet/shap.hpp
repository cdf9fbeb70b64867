#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "catnet/predictor.hpp"

namespace catnet {

/// Reference samples used to marginalize absent features. Every sample has
/// the shape the predictor expects (sample_rows x p).
struct Background {
  std::vector<Eigen::MatrixXd> samples;

  std::size_t size() const { return samples.size(); }
  /// One 1 x p sample per row of a tabular matrix.
  static Background from_rows(const Eigen::MatrixXd& rows);
  /// Uniform subsample of `count` pool entries without replacement (the
  /// whole pool when it is smaller), kept in pool order.
  static Background subsample(const std::vector<Eigen::MatrixXd>& pool, std::size_t count,
                              std::uint64_t seed);
};

/// Attributions for a set of samples. values(r, i) is the SHAP value of
/// features[r] on sample i.
struct ShapMatrix {
  Eigen::MatrixXd values;
  std::vector<std::size_t> features;
  /// Mean prediction over the background.
  double baseline = 0.0;
};

inline constexpr std::size_t kMaxExactFeatures = 12;

/// Mean prediction over the background rows.
double shap_baseline(const Predictor& model, const Background& bg);

/// Shapley values by enumerating all 2^p coalitions, with
/// v(S) = mean_r f(x_S, bg_r on the rest) - baseline.
Eigen::VectorXd exact_shap(const Predictor& model, const Eigen::Ref<const Eigen::MatrixXd>& x,
                           const Background& bg);

/// Permutation-sampling estimate over K random orderings. Ordering k is
/// paired with background row order[k mod m], where `order` is a seeded
/// shuffle of the background, so each row is used equally often.
Eigen::VectorXd mc_shap(const Predictor& model, const Eigen::Ref<const Eigen::MatrixXd>& x,
                        const Background& bg, std::size_t permutations, std::uint64_t seed);

/// Same estimator restricted to `features`: for each ordering only the
/// marginal contributions of the listed features are evaluated. Entry r of
/// the result belongs to features[r].
Eigen::VectorXd mc_shap(const Predictor& model, const Eigen::Ref<const Eigen::MatrixXd>& x,
                        const Background& bg, std::size_t permutations, std::uint64_t seed,
                        std::span<const std::size_t> features);

/// Closed form for an affine tabular model: coef_j * (x_j - mean_r bg_rj).
Eigen::VectorXd linear_shap(const Eigen::VectorXd& coef, const Eigen::Ref<const Eigen::MatrixXd>& x,
                            const Background& bg);

enum class ShapMethod { Auto, Exact, MonteCarlo };

struct ShapOptions {
  std::size_t permutations = 128;
  std::uint64_t seed = 0;
  ShapMethod method = ShapMethod::Auto;
  /// Restrict attribution to these features; empty means all.
  std::vector<std::size_t> features;
};

/// Attributes every sample. Auto picks the closed form for affine tabular
/// models, exact enumeration when p <= 12, and permutation sampling
/// otherwise. Sample i draws from the substream (seed, i).
ShapMatrix shap_matrix(const Predictor& model, const std::vector<Eigen::MatrixXd>& samples,
                       const Background& bg, const ShapOptions& options = {});

/// Tabular convenience: one sample per row of X.
ShapMatrix shap_matrix(const Predictor& model, const Eigen::MatrixXd& X, const Background& bg,
                       const ShapOptions& options = {});

}  // namespace catnet
