// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails. Pass criterion numbers as arguments to run a subset.

#include <boost/math/distributions/binomial.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "catnet/cli.hpp"
#include "catnet/dependence.hpp"
#include "catnet/io.hpp"
#include "catnet/linmod.hpp"
#include "catnet/lstm.hpp"
#include "catnet/pipeline.hpp"
#include "catnet/rng.hpp"
#include "catnet/shap.hpp"

using namespace catnet;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kRoot = 20260101;

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, a);
  return buf;
}

Eigen::VectorXd normals(Rng& rng, Eigen::Index n) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = rng.normal();
  return v;
}

// Random smooth nonlinear model on p inputs.
FunctionPredictor random_model(std::size_t p, Rng& rng) {
  Eigen::VectorXd a = normals(rng, static_cast<Eigen::Index>(p));
  Eigen::MatrixXd b = 0.5 * Eigen::MatrixXd::NullaryExpr(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p),
                                                         [&] { return rng.normal(); });
  const double w = rng.uniform(0.5, 2.0);
  return FunctionPredictor(p, [a, b, w](const Eigen::VectorXd& x) {
    return a.dot(x) + x.dot(b * x) + std::sin(w * x[0]) * std::exp(0.3 * x[x.size() - 1]);
  });
}

Background random_background(std::size_t p, std::size_t m, Rng& rng) {
  Eigen::MatrixXd rows(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(p));
  for (Eigen::Index i = 0; i < rows.size(); ++i) rows.data()[i] = rng.normal();
  return Background::from_rows(rows);
}

// OLS with intercept through the normal equations.
Eigen::VectorXd ols_oracle(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  Eigen::MatrixXd A(X.rows(), X.cols() + 1);
  A.col(0).setOnes();
  A.rightCols(X.cols()) = X;
  const Eigen::VectorXd b = (A.transpose() * A).ldlt().solve(A.transpose() * y);
  return b.tail(X.cols());
}

Outcome c1_hsic_identity() {
  const auto t0 = Clock::now();
  Rng rng(derive_seed(kRoot, {1}));
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto n = static_cast<Eigen::Index>(50 + rng.index(451));
    Eigen::VectorXd x = normals(rng, n);
    Eigen::VectorXd y = rng.uniform(-1.0, 1.0) * x + normals(rng, n);
    x.array() -= x.mean();
    y.array() -= y.mean();
    const double got = hsic_lagged(x, y, 0, KernelKind::Linear);
    const double dm = static_cast<double>(n - 1);
    const double want = std::pow(x.dot(y), 2) / (dm * dm);
    worst = std::max(worst, std::abs(got - want) / std::max(std::abs(want), 1e-300));
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-10 && secs < 5.0, "max rel err " + fmt("%.3g", worst) + ", " + fmt("%.2f", secs) + " s"};
}

Outcome c2_shap_efficiency() {
  const auto t0 = Clock::now();
  Rng rng(derive_seed(kRoot, {2}));
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t p = 1 + rng.index(8);
    const FunctionPredictor f = random_model(p, rng);
    const Background bg = random_background(p, 4 + rng.index(20), rng);
    double base = 0.0;
    for (const auto& s : bg.samples) base += f.predict(s);
    base /= static_cast<double>(bg.size());
    Eigen::MatrixXd x(1, static_cast<Eigen::Index>(p));
    for (Eigen::Index j = 0; j < x.cols(); ++j) x(0, j) = rng.normal();
    const Eigen::VectorXd phi = exact_shap(f, x, bg);
    worst = std::max(worst, std::abs(phi.sum() - (f.predict(x) - base)));
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-8 && secs < 30.0, "max |sum phi - (f(x) - E f)| " + fmt("%.3g", worst) + ", " + fmt("%.2f", secs) + " s"};
}

Outcome c3_theorem_slope() {
  const auto t0 = Clock::now();
  const Eigen::Index p = 5, n = 1000;
  Rng rng(derive_seed(kRoot, {3}));
  Eigen::MatrixXd X(n, p);
  for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = rng.normal();
  const Eigen::VectorXd beta = normals(rng, p) * 2.0;
  const Eigen::VectorXd y = X * beta + normals(rng, n);
  const LinearFit fit = ols_fit(X, y);
  const LinearPredictor model(fit.coef, fit.intercept);
  const Eigen::VectorXd bhat = ols_oracle(X, y);

  std::vector<Eigen::MatrixXd> pool;
  for (Eigen::Index i = 0; i < n; ++i) pool.emplace_back(X.row(i));
  const Background bg = Background::subsample(pool, 64, derive_seed(kRoot, {3, 1}));
  ShapOptions opts;
  opts.method = ShapMethod::Exact;
  const ShapMatrix shap = shap_matrix(model, pool, bg, opts);

  double worst = 0.0;
  for (Eigen::Index j = 0; j < p; ++j) {
    const ImportanceVector iv = importance_vector(X.col(j), shap.values.row(j).transpose());
    worst = std::max(worst, std::abs(iv.values.mean() - bhat[j]));
  }
  const double tol = 0.05 * bhat.cwiseAbs().maxCoeff();
  const double secs = seconds_since(t0);
  return {worst <= tol && secs < 120.0,
          "max |mean slope - beta_ols| " + fmt("%.3g", worst) + " (tol " + fmt("%.3g", tol) + "), " + fmt("%.2f", secs) + " s"};
}

Outcome c4_mc_vs_exact() {
  const auto t0 = Clock::now();
  const std::size_t p = 8;
  Rng rng(derive_seed(kRoot, {4}));
  const FunctionPredictor f = random_model(p, rng);
  const Background bg = random_background(p, 32, rng);
  std::vector<Eigen::VectorXd> exact, mc;
  for (int s = 0; s < 20; ++s) {
    Eigen::MatrixXd x(1, static_cast<Eigen::Index>(p));
    for (Eigen::Index j = 0; j < x.cols(); ++j) x(0, j) = rng.normal();
    exact.push_back(exact_shap(f, x, bg));
    mc.push_back(mc_shap(f, x, bg, 5000, derive_seed(kRoot, {4, static_cast<std::uint64_t>(s)})));
  }
  double lo = 1e300, hi = -1e300, worst = 0.0;
  for (std::size_t s = 0; s < exact.size(); ++s) {
    lo = std::min(lo, exact[s].minCoeff());
    hi = std::max(hi, exact[s].maxCoeff());
    worst = std::max(worst, (exact[s] - mc[s]).cwiseAbs().maxCoeff());
  }
  const double tol = 0.05 * (hi - lo);
  const double secs = seconds_since(t0);
  return {worst <= tol && secs < 300.0,
          "max abs err " + fmt("%.3g", worst) + " (tol " + fmt("%.3g", tol) + "), " + fmt("%.2f", secs) + " s"};
}

Outcome c5_gradcheck() {
  const auto t0 = Clock::now();
  Rng rng(derive_seed(kRoot, {5}));
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t in = 1 + rng.index(4);
    const std::size_t hidden = 1 + rng.index(8);
    const std::size_t k = 1 + rng.index(5);
    const LstmParams params =
        LstmParams::random(in, hidden, k, derive_seed(kRoot, {5, static_cast<std::uint64_t>(trial)}));
    Eigen::MatrixXd window(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(in));
    for (Eigen::Index i = 0; i < window.size(); ++i) window.data()[i] = rng.normal();
    worst = std::max(worst, lstm_gradcheck(params, window, rng.normal()));
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-4 && secs < 120.0, "max rel err " + fmt("%.3g", worst) + ", " + fmt("%.2f", secs) + " s"};
}

struct Campaign {
  double catnet_fdp = 0.0, catnet_power = 0.0;
  double gm_fdp = 0.0, gm_power = 0.0;
  std::vector<double> null_m;
  double seconds = 0.0;
  bool ran = false;
};

RunConfig desk_linear() {
  RunConfig cfg;
  cfg.seed = derive_seed(kRoot, {6});
  cfg.data.p = 60;
  cfg.data.n = 300;
  cfg.data.k = 12;
  cfg.data.corr = 0.2;
  cfg.pipeline.q = 0.1;
  return cfg;
}

Campaign& linear_campaign() {
  static Campaign c;
  if (c.ran) return c;
  const auto t0 = Clock::now();
  const RunConfig cfg = desk_linear();
  const int repeats = 20;
  for (int r = 0; r < repeats; ++r) {
    const Dataset d = simulate_repeat(cfg, static_cast<std::size_t>(r));
    PipelineConfig pc = cfg.pipeline;
    pc.seed = derive_seed(cfg.seed, {key(Purpose::kRepeat), static_cast<std::uint64_t>(r)});
    const SelectionResult cat = run_catnet(d, pc);
    const SelectionResult gm = run_gm_linear(d, pc);
    c.catnet_fdp += cat.metrics->fdp / repeats;
    c.catnet_power += cat.metrics->power / repeats;
    c.gm_fdp += gm.metrics->fdp / repeats;
    c.gm_power += gm.metrics->power / repeats;
    for (const std::size_t j : d.truth->null_set) c.null_m.push_back(cat.stats.m[static_cast<Eigen::Index>(j)]);
  }
  c.seconds = seconds_since(t0);
  c.ran = true;
  return c;
}

Outcome c6_linear_catnet() {
  const Campaign& c = linear_campaign();
  return {c.catnet_fdp <= 0.15 && c.catnet_power >= 0.80 && c.seconds < 900.0,
          "mean FDP " + fmt("%.4f", c.catnet_fdp) + ", mean power " + fmt("%.4f", c.catnet_power) + ", " +
              fmt("%.1f", c.seconds) + " s (CatNet and GM)"};
}

Outcome c7_gm_comparison() {
  const Campaign& c = linear_campaign();
  return {c.catnet_fdp <= c.gm_fdp + 0.05,
          "CatNet FDP " + fmt("%.4f", c.catnet_fdp) + " vs GM FDP " + fmt("%.4f", c.gm_fdp) + " (GM power " +
              fmt("%.4f", c.gm_power) + ")"};
}

Outcome c9_null_symmetry() {
  const Campaign& c = linear_campaign();
  std::size_t pos = 0, nonzero = 0;
  for (const double m : c.null_m) {
    if (m != 0.0) ++nonzero;
    if (m > 0.0) ++pos;
  }
  const boost::math::binomial_distribution<double> b(static_cast<double>(nonzero), 0.5);
  const double lo = boost::math::cdf(b, static_cast<double>(std::min(pos, nonzero - pos)));
  const double pvalue = std::min(1.0, 2.0 * lo);
  return {c.null_m.size() >= 900 && pvalue >= 0.01,
          std::to_string(pos) + " of " + std::to_string(nonzero) + " nonzero null M positive (" +
              std::to_string(c.null_m.size()) + " pooled), sign test p " + fmt("%.4f", pvalue)};
}

Outcome c8_scatnet_lstm() {
  const auto t0 = Clock::now();
  RunConfig cfg;
  cfg.mode = Mode::SCatNet;
  cfg.seed = derive_seed(kRoot, {8});
  cfg.data.design = Design::Brownian;
  cfg.data.link = LinkKind::Arcsin;
  cfg.data.p = 20;
  cfg.data.n = 400;
  cfg.pipeline.backend = Backend::Lstm;
  cfg.pipeline.q = 0.2;
  const int repeats = 10;
  double fdp = 0.0, power = 0.0;
  std::string per;
  for (int r = 0; r < repeats; ++r) {
    const Dataset d = simulate_repeat(cfg, static_cast<std::size_t>(r));
    PipelineConfig pc = cfg.pipeline;
    pc.seed = derive_seed(cfg.seed, {key(Purpose::kRepeat), static_cast<std::uint64_t>(r)});
    const SelectionResult s = run_scatnet(d, pc);
    fdp += s.metrics->fdp / repeats;
    power += s.metrics->power / repeats;
    per += (r ? " " : "") + std::to_string(s.selected.size());
  }
  const double secs = seconds_since(t0);
  return {fdp <= 0.30 && power >= 0.60 && secs < 5400.0,
          "mean FDP " + fmt("%.4f", fdp) + ", mean power " + fmt("%.4f", power) + ", selected sizes [" + per + "], " +
              fmt("%.1f", secs) + " s"};
}

Outcome c10_null_calibration() {
  const auto t0 = Clock::now();
  RunConfig cfg;
  cfg.seed = derive_seed(kRoot, {10});
  cfg.data.p = 40;
  cfg.data.n = 200;
  cfg.data.k = 0;
  cfg.pipeline.q = 0.1;
  const int repeats = 20;
  double mean_size = 0.0;
  for (int r = 0; r < repeats; ++r) {
    const Dataset d = simulate_repeat(cfg, static_cast<std::size_t>(r));
    PipelineConfig pc = cfg.pipeline;
    pc.seed = derive_seed(cfg.seed, {key(Purpose::kRepeat), static_cast<std::uint64_t>(r)});
    mean_size += static_cast<double>(run_catnet(d, pc).selected.size()) / repeats;
  }
  return {mean_size <= 1.0, "mean selected " + fmt("%.3f", mean_size) + ", " + fmt("%.1f", seconds_since(t0)) + " s"};
}

// Runs simulate + select for every repeat of a config into `dir`.
void campaign(const fs::path& config, const fs::path& dir, std::size_t repeats) {
  std::ostringstream err;
  if (cmd_simulate(config, dir / "data", err) != kExitOk) throw std::runtime_error(err.str());
  for (std::size_t r = 0; r < repeats; ++r) {
    const fs::path data = dir / "data" / ("dataset_r" + std::to_string(r) + ".csv");
    if (cmd_select(config, data, dir / "out", err) == kExitError) throw std::runtime_error(err.str());
  }
}

Outcome c11_determinism() {
  const auto t0 = Clock::now();
  const fs::path root = fs::temp_directory_path() / ("catnet_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  fs::create_directories(root);
  const std::vector<std::pair<std::string, std::string>> configs = {
      {"linear_catnet",
       R"({"mode":"catnet","seed":11,"repeats":2,"q":0.1,"data":{"p":30,"n":150,"k":6,"corr":0.2}})"},
      {"gm", R"({"mode":"gm","seed":12,"repeats":2,"q":0.1,"data":{"p":30,"n":150,"k":6}})"},
      {"lstm_scatnet",
       R"({"mode":"scatnet","backend":"lstm","seed":13,"repeats":2,"q":0.2,)"
       R"("data":{"design":"brownian","p":7,"n":80,"link":"sinexp"},"lstm":{"epochs":4},"shap":{"permutations":16}})"},
  };
  std::size_t compared = 0;
  bool same = true;
  std::string first_diff;
  for (const auto& [name, json] : configs) {
    const fs::path cfg = root / (name + ".json");
    std::ofstream(cfg) << json;
    ::setenv("CATNET_WORKERS", "1", 1);
    campaign(cfg, root / name / "a", 2);
    ::setenv("CATNET_WORKERS", "3", 1);
    campaign(cfg, root / name / "b", 2);
    ::unsetenv("CATNET_WORKERS");
    for (const auto& entry : fs::directory_iterator(root / name / "a" / "out")) {
      const fs::path other = root / name / "b" / "out" / entry.path().filename();
      ++compared;
      if (!fs::exists(other) || read_text(entry.path()) != read_text(other)) {
        same = false;
        if (first_diff.empty()) first_diff = " first difference " + entry.path().filename().string();
      }
    }
  }
  fs::remove_all(root);
  return {same && compared == 12,
          std::to_string(compared) + " output files compared across reruns with 1 and 3 workers" + first_diff +
              ", " + fmt("%.1f", seconds_since(t0)) + " s"};
}

}  // namespace

int main(int argc, char** argv) {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> all = {
      {1, "linear-kernel HSIC equals squared covariance", c1_hsic_identity},
      {2, "exact SHAP efficiency", c2_shap_efficiency},
      {3, "derivative importance recovers OLS coefficients", c3_theorem_slope},
      {4, "Monte Carlo SHAP matches exact enumeration", c4_mc_vs_exact},
      {5, "LSTM BPTT gradient check", c5_gradcheck},
      {6, "desk-scale linear CatNet FDP and power", c6_linear_catnet},
      {7, "CatNet FDP not above GM FDP + 0.05", c7_gm_comparison},
      {8, "desk-scale S-CatNet on LSTM FDP and power", c8_scatnet_lstm},
      {9, "null mirror statistics pass a sign test", c9_null_symmetry},
      {10, "null calibration on pure noise", c10_null_calibration},
      {11, "byte-identical campaign reruns", c11_determinism},
  };
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));

  int failures = 0;
  for (const Criterion& c : all) {
    if (!wanted.empty() && !wanted.count(c.id)) continue;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::printf("%s criterion %2d: %s: %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d criterion(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}
