#include "catnet/mirror.hpp"

#include <algorithm>
#include <cmath>

#include "catnet/error.hpp"

namespace catnet {

MirrorPair make_mirror(const Eigen::VectorXd& x, const Eigen::VectorXd& z, double c,
                       std::size_t feature) {
  if (x.size() != z.size()) throw InvalidInput("make_mirror: length mismatch");
  if (!(c > 0.0)) throw InvalidInput("make_mirror: c must be positive");
  MirrorPair pair;
  pair.feature = feature;
  pair.z = z;
  pair.c = c;
  pair.x_plus = x + c * z;
  pair.x_minus = x - c * z;
  return pair;
}

MirrorTerms mirror_terms(const Eigen::VectorXd& plus, const Eigen::VectorXd& minus) {
  if (plus.size() != minus.size()) throw InvalidInput("mirror_statistic: length mismatch");
  MirrorTerms t;
  t.l1_plus = plus.lpNorm<1>();
  t.l1_minus = minus.lpNorm<1>();
  const double n_plus = plus.norm();
  const double n_minus = minus.norm();
  if (n_plus < 1e-12 || n_minus < 1e-12) return t;
  t.cosine = plus.dot(minus) / (n_plus * n_minus);
  t.m = t.cosine * std::max(t.l1_plus, t.l1_minus);
  return t;
}

double mirror_statistic(const ImportanceVector& plus, const ImportanceVector& minus) {
  return mirror_terms(plus.values, minus.values).m;
}

double signed_max(double plus, double minus) {
  const double prod = plus * minus;
  const double sign = prod > 0.0 ? 1.0 : (prod < 0.0 ? -1.0 : 0.0);
  return sign * std::max(std::abs(plus), std::abs(minus));
}

MirrorStatistics MirrorStatistics::from_values(const Eigen::VectorXd& m) {
  MirrorStatistics s;
  s.m = m;
  s.terms.resize(static_cast<std::size_t>(m.size()));
  for (Eigen::Index j = 0; j < m.size(); ++j) s.terms[static_cast<std::size_t>(j)].m = m[j];
  return s;
}

std::optional<double> fdp_hat(const Eigen::VectorXd& m, double t) {
  if (!(t > 0.0)) throw InvalidInput("fdp_hat: t must be positive");
  const auto pos = (m.array() >= t).count();
  if (pos == 0) return std::nullopt;
  const auto neg = (m.array() <= -t).count();
  return static_cast<double>(neg + 1) / static_cast<double>(pos);
}

SelectionResult select_features(const MirrorStatistics& stats, double q) {
  if (!(q > 0.0 && q < 1.0)) throw InvalidInput("select_features: q must lie in (0, 1)");
  SelectionResult res;
  res.q = q;
  res.stats = stats;

  std::vector<double> candidates;
  for (Eigen::Index j = 0; j < stats.m.size(); ++j) {
    const double a = std::abs(stats.m[j]);
    if (a > 0.0) candidates.push_back(a);
  }
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  for (double t : candidates) {
    const auto f = fdp_hat(stats.m, t);
    if (f && *f <= q) {
      res.threshold = t;
      break;
    }
  }
  if (res.threshold) {
    for (Eigen::Index j = 0; j < stats.m.size(); ++j) {
      if (stats.m[j] >= *res.threshold) res.selected.push_back(static_cast<std::size_t>(j));
    }
  }
  return res;
}

Metrics evaluate(const SelectionResult& sel, const GroundTruth& truth) {
  std::vector<bool> relevant(static_cast<std::size_t>(truth.beta.size()), false);
  for (std::size_t j : truth.support) relevant[j] = true;
  std::size_t false_hits = 0, true_hits = 0;
  for (std::size_t j : sel.selected) {
    if (j < relevant.size() && relevant[j]) {
      ++true_hits;
    } else {
      ++false_hits;
    }
  }
  Metrics m;
  m.fdp = static_cast<double>(false_hits) / static_cast<double>(std::max<std::size_t>(sel.selected.size(), 1));
  m.power = truth.support.empty()
                ? 1.0
                : static_cast<double>(true_hits) / static_cast<double>(truth.support.size());
  return m;
}

}  // namespace catnet
