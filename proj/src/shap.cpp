#include "catnet/shap.hpp"

#include <algorithm>
#include <bit>
#include <numeric>
#include <string>

#include "catnet/error.hpp"
#include "catnet/parallel.hpp"
#include "catnet/rng.hpp"

namespace catnet {

Background Background::from_rows(const Eigen::MatrixXd& rows) {
  Background bg;
  bg.samples.reserve(static_cast<std::size_t>(rows.rows()));
  for (Eigen::Index r = 0; r < rows.rows(); ++r) bg.samples.emplace_back(rows.row(r));
  return bg;
}

Background Background::subsample(const std::vector<Eigen::MatrixXd>& pool, std::size_t count,
                                 std::uint64_t seed) {
  Background bg;
  if (pool.size() <= count) {
    bg.samples = pool;
    return bg;
  }
  Rng rng(seed, {key(Purpose::kBackground)});
  std::vector<std::size_t> pick = rng.sample_without_replacement(pool.size(), count);
  std::sort(pick.begin(), pick.end());
  for (std::size_t i : pick) bg.samples.push_back(pool[i]);
  return bg;
}

namespace {

void check_inputs(const Predictor& model, const Eigen::Ref<const Eigen::MatrixXd>& x,
                  const Background& bg) {
  if (bg.size() == 0) throw InvalidInput("shap: background is empty");
  const auto rows = static_cast<Eigen::Index>(model.sample_rows());
  const auto p = static_cast<Eigen::Index>(model.num_features());
  if (x.rows() != rows || x.cols() != p) throw InvalidInput("shap: sample shape does not match model");
  for (const auto& b : bg.samples) {
    if (b.rows() != rows || b.cols() != p) {
      throw InvalidInput("shap: background sample shape does not match model");
    }
  }
}

}  // namespace

double shap_baseline(const Predictor& model, const Background& bg) {
  if (bg.size() == 0) throw InvalidInput("shap: background is empty");
  double s = 0.0;
  for (const auto& b : bg.samples) s += model.predict(b);
  return s / static_cast<double>(bg.size());
}

Eigen::VectorXd exact_shap(const Predictor& model, const Eigen::Ref<const Eigen::MatrixXd>& x,
                           const Background& bg) {
  const std::size_t p = model.num_features();
  if (p > kMaxExactFeatures) {
    throw SizeError("exact_shap: p = " + std::to_string(p) + " exceeds " +
                    std::to_string(kMaxExactFeatures) + "; use mc_shap");
  }
  check_inputs(model, x, bg);

  const std::size_t masks = std::size_t{1} << p;
  // Mean prediction per coalition; the baseline cancels in the differences.
  std::vector<double> value(masks, 0.0);
  Eigen::MatrixXd mixed;
  for (const auto& b : bg.samples) {
    for (std::size_t mask = 0; mask < masks; ++mask) {
      mixed = b;
      for (std::size_t j = 0; j < p; ++j) {
        if (mask >> j & 1U) mixed.col(static_cast<Eigen::Index>(j)) = x.col(static_cast<Eigen::Index>(j));
      }
      value[mask] += model.predict(mixed);
    }
  }
  for (double& v : value) v /= static_cast<double>(bg.size());

  // weight[s] = s! (p - s - 1)! / p!
  std::vector<double> weight(p);
  for (std::size_t s = 0; s < p; ++s) {
    double w = 1.0 / static_cast<double>(p);
    // 1 / (p * C(p-1, s))
    for (std::size_t i = 1; i <= s; ++i) w *= static_cast<double>(i) / static_cast<double>(p - i);
    weight[s] = w;
  }

  Eigen::VectorXd phi = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p));
  for (std::size_t mask = 0; mask < masks; ++mask) {
    const auto s = static_cast<std::size_t>(std::popcount(mask));
    for (std::size_t j = 0; j < p; ++j) {
      if (mask >> j & 1U) continue;
      phi[static_cast<Eigen::Index>(j)] += weight[s] * (value[mask | (std::size_t{1} << j)] - value[mask]);
    }
  }
  return phi;
}

namespace {

std::vector<std::size_t> background_order(std::size_t m, Rng& rng) {
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(order);
  return order;
}

}  // namespace

Eigen::VectorXd mc_shap(const Predictor& model, const Eigen::Ref<const Eigen::MatrixXd>& x,
                        const Background& bg, std::size_t permutations, std::uint64_t seed) {
  if (permutations == 0) throw InvalidInput("mc_shap: need at least one permutation");
  check_inputs(model, x, bg);
  const std::size_t p = model.num_features();
  Rng rng(seed, {key(Purpose::kShap)});
  const std::vector<std::size_t> bg_order = background_order(bg.size(), rng);

  Eigen::VectorXd phi = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p));
  std::vector<std::size_t> perm(p);
  Eigen::MatrixXd mixed;
  for (std::size_t k = 0; k < permutations; ++k) {
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    rng.shuffle(perm);
    mixed = bg.samples[bg_order[k % bg.size()]];
    double prev = model.predict(mixed);
    for (std::size_t j : perm) {
      const auto c = static_cast<Eigen::Index>(j);
      mixed.col(c) = x.col(c);
      const double cur = model.predict(mixed);
      phi[c] += cur - prev;
      prev = cur;
    }
  }
  return phi / static_cast<double>(permutations);
}

Eigen::VectorXd mc_shap(const Predictor& model, const Eigen::Ref<const Eigen::MatrixXd>& x,
                        const Background& bg, std::size_t permutations, std::uint64_t seed,
                        std::span<const std::size_t> features) {
  if (permutations == 0) throw InvalidInput("mc_shap: need at least one permutation");
  check_inputs(model, x, bg);
  const std::size_t p = model.num_features();
  for (std::size_t j : features) {
    if (j >= p) throw InvalidInput("mc_shap: feature index out of range");
  }
  Rng rng(seed, {key(Purpose::kShap)});
  const std::vector<std::size_t> bg_order = background_order(bg.size(), rng);

  Eigen::VectorXd phi = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(features.size()));
  std::vector<std::size_t> perm(p);
  std::vector<std::size_t> rank(p);
  Eigen::MatrixXd mixed;
  for (std::size_t k = 0; k < permutations; ++k) {
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    rng.shuffle(perm);
    for (std::size_t pos = 0; pos < p; ++pos) rank[perm[pos]] = pos;
    const Eigen::MatrixXd& b = bg.samples[bg_order[k % bg.size()]];
    for (std::size_t r = 0; r < features.size(); ++r) {
      const std::size_t j = features[r];
      mixed = b;
      for (std::size_t pos = 0; pos < rank[j]; ++pos) {
        const auto c = static_cast<Eigen::Index>(perm[pos]);
        mixed.col(c) = x.col(c);
      }
      const double without = model.predict(mixed);
      mixed.col(static_cast<Eigen::Index>(j)) = x.col(static_cast<Eigen::Index>(j));
      phi[static_cast<Eigen::Index>(r)] += model.predict(mixed) - without;
    }
  }
  return phi / static_cast<double>(permutations);
}

Eigen::VectorXd linear_shap(const Eigen::VectorXd& coef, const Eigen::Ref<const Eigen::MatrixXd>& x,
                            const Background& bg) {
  if (bg.size() == 0) throw InvalidInput("shap: background is empty");
  if (x.rows() != 1 || x.cols() != coef.size()) throw InvalidInput("linear_shap: sample shape mismatch");
  Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(coef.size());
  for (const auto& b : bg.samples) mean += b.row(0);
  mean /= static_cast<double>(bg.size());
  return coef.cwiseProduct((x.row(0) - mean).transpose());
}

ShapMatrix shap_matrix(const Predictor& model, const std::vector<Eigen::MatrixXd>& samples,
                       const Background& bg, const ShapOptions& options) {
  const std::size_t p = model.num_features();
  ShapMatrix out;
  out.baseline = shap_baseline(model, bg);
  if (options.features.empty()) {
    out.features.resize(p);
    std::iota(out.features.begin(), out.features.end(), std::size_t{0});
  } else {
    out.features = options.features;
  }
  const bool subset = !options.features.empty();
  const Eigen::VectorXd* coef = model.linear_coefficients();

  ShapMethod method = options.method;
  if (method == ShapMethod::Auto) {
    method = (coef == nullptr && p > kMaxExactFeatures) ? ShapMethod::MonteCarlo : ShapMethod::Exact;
  }
  out.values.resize(static_cast<Eigen::Index>(out.features.size()),
                    static_cast<Eigen::Index>(samples.size()));

  auto pick = [&](const Eigen::VectorXd& full) {
    if (!subset) return full;
    Eigen::VectorXd v(static_cast<Eigen::Index>(out.features.size()));
    for (std::size_t r = 0; r < out.features.size(); ++r) {
      v[static_cast<Eigen::Index>(r)] = full[static_cast<Eigen::Index>(out.features[r])];
    }
    return v;
  };

  parallel_for(samples.size(), [&](std::size_t i) {
    const auto& x = samples[i];
    Eigen::VectorXd phi;
    if (method == ShapMethod::Exact && coef != nullptr && options.method == ShapMethod::Auto) {
      phi = pick(linear_shap(*coef, x, bg));
    } else if (method == ShapMethod::Exact) {
      phi = pick(exact_shap(model, x, bg));
    } else {
      const std::uint64_t s = derive_seed(options.seed, {i});
      phi = subset ? mc_shap(model, x, bg, options.permutations, s, out.features)
                   : mc_shap(model, x, bg, options.permutations, s);
    }
    out.values.col(static_cast<Eigen::Index>(i)) = phi;
  });
  return out;
}

ShapMatrix shap_matrix(const Predictor& model, const Eigen::MatrixXd& X, const Background& bg,
                       const ShapOptions& options) {
  std::vector<Eigen::MatrixXd> samples;
  samples.reserve(static_cast<std::size_t>(X.rows()));
  for (Eigen::Index r = 0; r < X.rows(); ++r) samples.emplace_back(X.row(r));
  return shap_matrix(model, samples, bg, options);
}

}  // namespace catnet
