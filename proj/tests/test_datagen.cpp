#include <cmath>

#include "catnet/datagen.hpp"
#include "catnet/error.hpp"
#include "doctest.h"

using namespace catnet;

namespace {

double corr(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const Eigen::VectorXd ca = a.array() - a.mean();
  const Eigen::VectorXd cb = b.array() - b.mean();
  return ca.dot(cb) / std::sqrt(ca.squaredNorm() * cb.squaredNorm());
}

double lag1(const Eigen::VectorXd& x) {
  const Eigen::Index n = x.size();
  return corr(x.head(n - 1), x.tail(n - 1));
}

}  // namespace

TEST_CASE("linear design has the requested support size") {
  const Dataset d = gen_linear_design(125, 500, 25, 0.0, 1);
  REQUIRE(d.truth);
  CHECK(d.truth->support.size() == 25);
  CHECK(d.truth->null_set.size() == 100);
  CHECK(d.X.rows() == 500);
  CHECK(d.X.cols() == 125);
  for (const auto j : d.truth->support) CHECK(d.truth->beta[static_cast<Eigen::Index>(j)] != 0.0);
  for (const auto j : d.truth->null_set) CHECK(d.truth->beta[static_cast<Eigen::Index>(j)] == 0.0);
}

TEST_CASE("empty support gives pure noise") {
  const Dataset d = gen_linear_design(4, 10, 0, 0.0, 7);
  CHECK(d.truth->beta.isZero(0.0));
  CHECK(d.truth->support.empty());
}

TEST_CASE("relevant columns share the requested correlation") {
  const Dataset d = gen_linear_design(50, 5000, 10, 0.5, 3);
  const auto& s = d.truth->support;
  const double r = corr(d.X.col(static_cast<Eigen::Index>(s[0])), d.X.col(static_cast<Eigen::Index>(s[1])));
  CHECK(r == doctest::Approx(0.5).epsilon(0.1));
}

TEST_CASE("uncorrelated design has small pairwise correlations") {
  const Eigen::Index n = 2000;
  const Dataset d = gen_linear_design(20, static_cast<std::size_t>(n), 4, 0.0, 8);
  int inside = 0, total = 0;
  for (Eigen::Index a = 0; a < 20; ++a) {
    for (Eigen::Index b = a + 1; b < 20; ++b) {
      ++total;
      if (std::abs(corr(d.X.col(a), d.X.col(b))) < 3.0 / std::sqrt(static_cast<double>(n))) ++inside;
    }
  }
  CHECK(inside >= 0.95 * total);
}

TEST_CASE("coefficient scale and noise") {
  CHECK(beta_scale(100, 400) == doctest::Approx(20.0 * std::sqrt(std::log(100.0) / 400.0)));
  const Dataset d = gen_linear_design(10, 4000, 3, 0.0, 12);
  const Eigen::VectorXd eps = d.y - d.X * d.truth->beta;
  CHECK(eps.mean() == doctest::Approx(0.0).epsilon(0.1).scale(1.0));
  CHECK(std::sqrt(eps.squaredNorm() / 4000.0) == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("Brownian relevant columns are strongly autocorrelated") {
  const Dataset d = gen_brownian_design(9, 500, 9, 2);
  for (Eigen::Index j = 0; j < 9; ++j) CHECK(lag1(d.X.col(j)) > 0.9);
}

TEST_CASE("Brownian null columns are white") {
  const Dataset d = gen_brownian_design(9, 500, 4, 2);
  for (const auto j : d.truth->null_set) CHECK(std::abs(lag1(d.X.col(static_cast<Eigen::Index>(j)))) < 0.15);
  const Dataset tiny = gen_brownian_design(2, 3, 0, 5);
  CHECK(tiny.X.rows() == 3);
  CHECK(tiny.truth->support.empty());
}

TEST_CASE("link functions") {
  Eigen::VectorXd z(1);
  z << 5.0;
  CHECK(apply_link(z, LinkKind::Linear)[0] == 5.0);
  z << 0.0;
  CHECK(apply_link(z, LinkKind::SinExp)[0] == 0.0);
  z << 100.0 * M_PI / 2.0;
  CHECK(apply_link(z, LinkKind::Arcsin)[0] == doctest::Approx(10.0 * M_PI / 2.0));
  Eigen::VectorXd wide = Eigen::VectorXd::LinSpaced(1001, -5000.0, 5000.0);
  CHECK(apply_link(wide, LinkKind::Arcsin).cwiseAbs().maxCoeff() <= 10.0 * M_PI / 2.0 + 1e-12);
  CHECK(parse_link("arcsin") == LinkKind::Arcsin);
  CHECK(link_name(LinkKind::SinExp) == "sinexp");
  CHECK_THROWS_AS(parse_link("cubic"), InvalidInput);
}

TEST_CASE("same seed reproduces the same data") {
  const Dataset a = gen_linear_design(8, 40, 2, 0.3, 99);
  const Dataset b = gen_linear_design(8, 40, 2, 0.3, 99);
  CHECK(a.X == b.X);
  CHECK(a.y == b.y);
  const Dataset c = gen_linear_design(8, 40, 2, 0.3, 100);
  CHECK(a.X != c.X);
}

TEST_CASE("invalid generator arguments are rejected") {
  CHECK_THROWS_AS(gen_linear_design(5, 10, 6, 0.0, 1), InvalidInput);
  CHECK_THROWS_AS(gen_linear_design(5, 10, 1, 1.0, 1), InvalidInput);
  CHECK_THROWS_AS(gen_linear_design(0, 10, 0, 0.0, 1), InvalidInput);
  CHECK_THROWS_AS(gen_brownian_design(5, 10, 6, 1), InvalidInput);
}

TEST_CASE("dataset validation") {
  Dataset d = gen_linear_design(3, 10, 1, 0.0, 4);
  CHECK_NOTHROW(d.validate());
  d.y.resize(9);
  CHECK_THROWS_AS(d.validate(), InvalidInput);
  d = gen_linear_design(3, 10, 1, 0.0, 4);
  d.X(2, 1) = std::nan("");
  CHECK_THROWS_AS(d.validate(), InvalidInput);
}
