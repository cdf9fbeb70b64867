#include <algorithm>
#include <cmath>
#include <set>

#include "catnet/datagen.hpp"
#include "catnet/error.hpp"
#include "catnet/pipeline.hpp"
#include "doctest.h"

using namespace catnet;

namespace {

double jaccard(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
  std::set<std::size_t> u(a.begin(), a.end()), i;
  u.insert(b.begin(), b.end());
  for (const auto x : a) {
    if (std::find(b.begin(), b.end(), x) != b.end()) i.insert(x);
  }
  return u.empty() ? 1.0 : static_cast<double>(i.size()) / static_cast<double>(u.size());
}

}  // namespace

TEST_CASE("one statistic per original feature") {
  const Dataset d = gen_linear_design(2, 50, 1, 0.0, 1);
  PipelineConfig cfg;
  CHECK(run_catnet(d, cfg).stats.m.size() == 2);
  CHECK(run_scatnet(d, cfg).stats.m.size() == 2);
  CHECK(run_gm_linear(d, cfg).stats.m.size() == 2);
}

TEST_CASE("mirror noise is a per-feature substream") {
  CHECK(mirror_noise(3, 1, 10) == mirror_noise(3, 1, 10));
  CHECK(mirror_noise(3, 1, 10) != mirror_noise(3, 2, 10));
  CHECK(mirror_noise(3, 1, 10) != mirror_noise(4, 1, 10));
}

TEST_CASE("linear CatNet finds a strong support") {
  const Dataset d = gen_linear_design(40, 300, 10, 0.2, 2);
  PipelineConfig cfg;
  cfg.seed = 3;
  RunDiagnostics diag;
  const SelectionResult r = run_catnet(d, cfg, &diag);
  REQUIRE(r.metrics);
  CHECK(r.metrics->power >= 0.8);
  CHECK(r.warnings == 0);
  CHECK(diag.active.size() == 40);
  for (const double c : diag.scales) CHECK(c > 0.0);
}

TEST_CASE("noiseless GM recovers the support") {
  Dataset d = gen_linear_design(30, 120, 12, 0.0, 4);
  d.y = d.X * d.truth->beta;
  PipelineConfig cfg;
  const SelectionResult r = run_gm_linear(d, cfg);
  for (const auto j : d.truth->support) {
    CHECK(std::find(r.selected.begin(), r.selected.end(), j) != r.selected.end());
  }
  // Anything else selected has a statistic at rounding level.
  for (const auto j : r.selected) {
    if (d.truth->beta[static_cast<Eigen::Index>(j)] == 0.0) CHECK(std::abs(r.stats.m[static_cast<Eigen::Index>(j)]) < 1e-9);
  }
}

TEST_CASE("wide linear data is screened first") {
  const Dataset d = gen_linear_design(120, 80, 5, 0.0, 5);
  PipelineConfig cfg;
  RunDiagnostics diag;
  const SelectionResult r = run_catnet(d, cfg, &diag);
  CHECK(diag.active.size() < 80);
  for (std::size_t j = 0; j < 120; ++j) {
    if (std::find(diag.active.begin(), diag.active.end(), j) == diag.active.end()) {
      CHECK(r.stats.m[static_cast<Eigen::Index>(j)] == 0.0);
      CHECK(diag.scales[j] == 0.0);
    }
  }
}

TEST_CASE("CatNet and S-CatNet agree on linear data") {
  const Dataset d = gen_linear_design(30, 300, 8, 0.2, 6);
  PipelineConfig cfg;
  cfg.seed = 7;
  CHECK(jaccard(run_catnet(d, cfg).selected, run_scatnet(d, cfg).selected) >= 0.8);
}

TEST_CASE("linear CatNet and GM agree with the closed-form explainer") {
  const Dataset d = gen_linear_design(20, 200, 5, 0.2, 8);
  PipelineConfig cfg;
  cfg.seed = 9;
  const SelectionResult a = run_catnet(d, cfg), b = run_gm_linear(d, cfg);
  for (Eigen::Index j = 0; j < 20; ++j) CHECK(std::signbit(a.stats.m[j]) == std::signbit(b.stats.m[j]));
}

TEST_CASE("runs are reproducible") {
  const Dataset d = gen_linear_design(15, 100, 3, 0.2, 10);
  PipelineConfig cfg;
  cfg.seed = 11;
  CHECK(run_catnet(d, cfg).stats.m == run_catnet(d, cfg).stats.m);
  cfg.cj_method = CjMethod::Kernel;
  cfg.max_lag = 1;
  RunDiagnostics diag;
  const SelectionResult k = run_catnet(d, cfg, &diag);
  CHECK(k.stats.m == run_catnet(d, cfg).stats.m);
  CHECK(diag.profiles.size() == 15);
}

TEST_CASE("per-feature failures degrade to zero") {
  Dataset d = gen_linear_design(6, 60, 2, 0.0, 12);
  d.X.col(1) = d.X.col(0);
  PipelineConfig cfg;
  const SelectionResult r = run_catnet(d, cfg);
  CHECK(r.warnings == 6);
  CHECK(r.stats.m.isZero(0.0));
  CHECK(r.selected.empty());
  CHECK_THROWS_AS(run_gm_linear(d, cfg), Error);
}

TEST_CASE("tiny LSTM pipelines run end to end") {
  Dataset d = gen_brownian_design(4, 60, 1, 13);
  d.y = apply_link(d.y, LinkKind::Arcsin);
  PipelineConfig cfg;
  cfg.backend = Backend::Lstm;
  cfg.lstm.epochs = 3;
  cfg.permutations = 8;
  cfg.background = 8;
  cfg.q = 0.2;
  const SelectionResult s = run_scatnet(d, cfg);
  CHECK(s.stats.m.size() == 4);
  CHECK(s.stats.m.allFinite());
  const SelectionResult c = run_catnet(d, cfg);
  CHECK(c.stats.m.allFinite());
  CHECK(c.stats.m == run_catnet(d, cfg).stats.m);
  CHECK_THROWS_AS(run_gm_linear(d, cfg), InvalidInput);
}

TEST_CASE("pipeline config validation") {
  PipelineConfig cfg;
  cfg.q = 1.0;
  CHECK_THROWS_AS(cfg.validate(), InvalidInput);
  cfg = PipelineConfig{};
  cfg.grid_size = 2;
  CHECK_THROWS_AS(cfg.validate(), InvalidInput);
}
