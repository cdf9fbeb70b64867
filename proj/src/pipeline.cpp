#include "catnet/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <optional>

#include "catnet/error.hpp"
#include "catnet/linmod.hpp"
#include "catnet/parallel.hpp"
#include "catnet/rng.hpp"
#include "catnet/shap.hpp"

namespace catnet {

void PipelineConfig::validate() const {
  if (!(q > 0.0 && q < 1.0)) throw InvalidInput("pipeline: q must lie in (0, 1)");
  if (permutations == 0) throw InvalidInput("pipeline: permutations must be positive");
  if (background == 0) throw InvalidInput("pipeline: background size must be positive");
  if (grid_size < 5) throw InvalidInput("pipeline: grid size must be at least 5");
  if (backend == Backend::Lstm) lstm.validate();
}

Eigen::VectorXd mirror_noise(std::uint64_t seed, std::size_t j, std::size_t n) {
  Rng rng(seed, {key(Purpose::kMirror), j});
  Eigen::VectorXd z(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
  return z;
}

namespace {

// Shared preparation: screening, mirror noise and scales.
struct Prepared {
  std::vector<std::size_t> active;
  Eigen::MatrixXd X;  // active columns only
  std::vector<MirrorPair> mirrors;
  /// Features whose c_j could not be computed.
  std::vector<std::uint8_t> failed;
};

Eigen::MatrixXd columns(const Eigen::MatrixXd& X, const std::vector<std::size_t>& cols) {
  Eigen::MatrixXd out(X.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t r = 0; r < cols.size(); ++r) {
    out.col(static_cast<Eigen::Index>(r)) = X.col(static_cast<Eigen::Index>(cols[r]));
  }
  return out;
}

// Replaces column r of X with the two mirror columns, placed first.
Eigen::MatrixXd tampered(const Eigen::MatrixXd& X, std::size_t r, const MirrorPair& pair) {
  const Eigen::Index p = X.cols();
  const auto rr = static_cast<Eigen::Index>(r);
  Eigen::MatrixXd D(X.rows(), p + 1);
  D.col(0) = pair.x_plus;
  D.col(1) = pair.x_minus;
  D.middleCols(2, rr) = X.leftCols(rr);
  D.rightCols(p - 1 - rr) = X.rightCols(p - 1 - rr);
  return D;
}

// With tolerate_failures, a feature whose c_j fails is flagged instead of
// aborting the run.
Prepared prepare(const Dataset& data, const PipelineConfig& cfg, RunDiagnostics* diag,
                 bool tolerate_failures) {
  data.validate();
  cfg.validate();
  const std::size_t n = data.n();
  const std::size_t p = data.p();

  Prepared prep;
  const bool screen = cfg.preselect == Preselect::Always ||
                      (cfg.preselect == Preselect::Auto && cfg.backend == Backend::Linear && p >= n);
  if (screen) {
    prep.active = lasso_preselect(data.X, data.y).selected;
  } else {
    prep.active.resize(p);
    std::iota(prep.active.begin(), prep.active.end(), std::size_t{0});
  }
  prep.X = columns(data.X, prep.active);

  const std::size_t a = prep.active.size();
  const bool analytic = cfg.cj_method == CjMethod::Analytic ||
                        (cfg.cj_method == CjMethod::Auto && cfg.backend == Backend::Linear && a < n);
  const DependenceMeasure measure = DependenceMeasure::make(cfg.kernel, cfg.max_lag);

  prep.mirrors.resize(a);
  prep.failed.assign(a, 0);
  std::vector<std::optional<CjProfile>> profiles(a);
  parallel_for(a, [&](std::size_t r) {
    const std::size_t j = prep.active[r];
    const Eigen::VectorXd z = mirror_noise(cfg.seed, j, n);
    const Eigen::VectorXd x = prep.X.col(static_cast<Eigen::Index>(r));
    try {
      double c;
      if (analytic) {
        c = analytic_cj(prep.X, r, z);
      } else {
        CjProfile prof = solve_cj_profile(x, z, measure, cfg.grid_size);
        c = prof.c;
        profiles[r] = std::move(prof);
      }
      prep.mirrors[r] = make_mirror(x, z, c, j);
    } catch (const Error&) {
      if (!tolerate_failures) throw;
      prep.failed[r] = 1;
    }
  });

  if (diag) {
    diag->active = prep.active;
    diag->scales.assign(p, 0.0);
    diag->profiles.clear();
    for (std::size_t r = 0; r < a; ++r) {
      diag->scales[prep.active[r]] = prep.mirrors[r].c;
      if (profiles[r]) diag->profiles.emplace_back(prep.active[r], std::move(*profiles[r]));
    }
  }
  return prep;
}

// Per-column z-scores, used as the LSTM's working coordinates so that
// derivative importances are comparable across features of different spread.
Eigen::MatrixXd standardized(const Eigen::MatrixXd& D) {
  Eigen::MatrixXd out = D;
  const double n = static_cast<double>(D.rows());
  for (Eigen::Index c = 0; c < D.cols(); ++c) {
    const double mean = D.col(c).mean();
    const double var = (D.col(c).array() - mean).square().sum() / n;
    const double sd = var > 0.0 ? std::sqrt(var) : 1.0;
    out.col(c) = (D.col(c).array() - mean) / sd;
  }
  return out;
}

// Backend fit plus the samples/background SHAP needs.
struct Fitted {
  std::unique_ptr<Predictor> model;
  std::vector<Eigen::MatrixXd> samples;
  Background background;
  /// Row of the design that sample i's feature value is read from.
  std::size_t first_row = 0;
};

TrainConfig lstm_config(const PipelineConfig& cfg, std::size_t features, std::uint64_t seed) {
  TrainConfig tc = cfg.lstm;
  if (tc.hidden == 0) tc.hidden = default_hidden_size(features);
  tc.seed = seed;
  return tc;
}

Fitted fit_backend(const Eigen::MatrixXd& D, const Eigen::VectorXd& y, const PipelineConfig& cfg,
                   std::size_t features, std::uint64_t seed) {
  Fitted f;
  if (cfg.backend == Backend::Linear) {
    LinearFit fit = ols_fit(D, y);
    f.model = std::make_unique<LinearPredictor>(std::move(fit.coef), fit.intercept);
    f.samples.reserve(static_cast<std::size_t>(D.rows()));
    for (Eigen::Index i = 0; i < D.rows(); ++i) f.samples.emplace_back(D.row(i));
  } else {
    Dataset train{D, y, std::nullopt};
    auto model = std::make_unique<TrainedLstm>(lstm_train(train, lstm_config(cfg, features, seed)));
    const std::size_t k = model->sample_rows();
    for (std::size_t t = k - 1; t < static_cast<std::size_t>(D.rows()); ++t) {
      f.samples.push_back(window_at(D, t, k));
    }
    f.first_row = k - 1;
    f.model = std::move(model);
  }
  f.background = Background::subsample(f.samples, cfg.background, derive_seed(seed, {key(Purpose::kBackground)}));
  return f;
}

ShapMatrix attribute(const Fitted& f, const PipelineConfig& cfg, std::vector<std::size_t> features,
                     std::uint64_t seed) {
  ShapOptions opts;
  opts.permutations = cfg.permutations;
  opts.seed = derive_seed(seed, {key(Purpose::kShap)});
  opts.features = std::move(features);
  return shap_matrix(*f.model, f.samples, f.background, opts);
}

MirrorTerms pair_statistic(const Eigen::VectorXd& x_plus, const Eigen::VectorXd& x_minus,
                           const Eigen::VectorXd& phi_plus, const Eigen::VectorXd& phi_minus,
                           std::size_t first_row, const PipelineConfig& cfg, std::size_t feature) {
  const auto m = phi_plus.size();
  const Eigen::VectorXd xp = x_plus.segment(static_cast<Eigen::Index>(first_row), m);
  const Eigen::VectorXd xm = x_minus.segment(static_cast<Eigen::Index>(first_row), m);
  const ImportanceVector lp = importance_vector(xp, phi_plus, cfg.lowess, feature, MirrorSign::Plus);
  const ImportanceVector lm = importance_vector(xm, phi_minus, cfg.lowess, feature, MirrorSign::Minus);
  return mirror_terms(lp.values, lm.values);
}

SelectionResult finish(const Dataset& data, const PipelineConfig& cfg, const Prepared& prep,
                       const std::vector<MirrorTerms>& active_terms, std::size_t warnings) {
  MirrorStatistics stats;
  stats.m = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(data.p()));
  stats.terms.assign(data.p(), MirrorTerms{});
  for (std::size_t r = 0; r < prep.active.size(); ++r) {
    stats.m[static_cast<Eigen::Index>(prep.active[r])] = active_terms[r].m;
    stats.terms[prep.active[r]] = active_terms[r];
  }
  SelectionResult res = select_features(stats, cfg.q);
  res.warnings = warnings;
  if (data.truth) res.metrics = evaluate(res, *data.truth);
  return res;
}

}  // namespace

SelectionResult run_catnet(const Dataset& data, const PipelineConfig& cfg, RunDiagnostics* diag) {
  const Prepared prep = prepare(data, cfg, diag, true);
  const std::size_t a = prep.active.size();
  std::vector<MirrorTerms> terms(a);
  std::vector<std::uint8_t> failed = prep.failed;

  parallel_for(a, [&](std::size_t r) {
    if (failed[r]) return;
    const std::size_t j = prep.active[r];
    const std::uint64_t seed = derive_seed(cfg.seed, {key(Purpose::kFeature), j});
    try {
      Eigen::MatrixXd D = tampered(prep.X, r, prep.mirrors[r]);
      if (cfg.backend == Backend::Lstm) D = standardized(D);
      const Fitted f = fit_backend(D, data.y, cfg, a, seed);
      const ShapMatrix shap = attribute(f, cfg, {0, 1}, seed);
      terms[r] = pair_statistic(D.col(0), D.col(1),
                                shap.values.row(0).transpose(), shap.values.row(1).transpose(),
                                f.first_row, cfg, j);
    } catch (const Error&) {
      terms[r] = MirrorTerms{};
      failed[r] = 1;
    }
  });
  const auto warnings = static_cast<std::size_t>(std::count(failed.begin(), failed.end(), 1));
  return finish(data, cfg, prep, terms, warnings);
}

SelectionResult run_scatnet(const Dataset& data, const PipelineConfig& cfg, RunDiagnostics* diag) {
  const Prepared prep = prepare(data, cfg, diag, false);
  const std::size_t a = prep.active.size();
  std::vector<MirrorTerms> terms(a);
  if (a > 0) {
    Eigen::MatrixXd D(static_cast<Eigen::Index>(data.n()), static_cast<Eigen::Index>(2 * a));
    for (std::size_t r = 0; r < a; ++r) {
      D.col(static_cast<Eigen::Index>(2 * r)) = prep.mirrors[r].x_plus;
      D.col(static_cast<Eigen::Index>(2 * r + 1)) = prep.mirrors[r].x_minus;
    }
    if (cfg.backend == Backend::Lstm) D = standardized(D);
    const std::uint64_t seed = derive_seed(cfg.seed, {key(Purpose::kFeature)});
    const Fitted f = fit_backend(D, data.y, cfg, a, seed);
    const ShapMatrix shap = attribute(f, cfg, {}, seed);
    parallel_for(a, [&](std::size_t r) {
      terms[r] = pair_statistic(D.col(static_cast<Eigen::Index>(2 * r)),
                                D.col(static_cast<Eigen::Index>(2 * r + 1)),
                                shap.values.row(static_cast<Eigen::Index>(2 * r)).transpose(),
                                shap.values.row(static_cast<Eigen::Index>(2 * r + 1)).transpose(),
                                f.first_row, cfg, prep.active[r]);
    });
  }
  return finish(data, cfg, prep, terms, 0);
}

SelectionResult run_gm_linear(const Dataset& data, const PipelineConfig& cfg, RunDiagnostics* diag) {
  if (cfg.backend != Backend::Linear) throw InvalidInput("run_gm_linear: requires the linear backend");
  const Prepared prep = prepare(data, cfg, diag, false);
  const std::size_t a = prep.active.size();
  std::vector<MirrorTerms> terms(a);
  parallel_for(a, [&](std::size_t r) {
    const LinearFit fit = ols_fit(tampered(prep.X, r, prep.mirrors[r]), data.y);
    MirrorTerms& t = terms[r];
    t.l1_plus = std::abs(fit.coef[0]);
    t.l1_minus = std::abs(fit.coef[1]);
    t.m = signed_max(fit.coef[0], fit.coef[1]);
    t.cosine = t.m > 0.0 ? 1.0 : (t.m < 0.0 ? -1.0 : 0.0);
  });
  return finish(data, cfg, prep, terms, 0);
}

}  // namespace catnet
