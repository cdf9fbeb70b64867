#pragma once

#include <cstdint>
#include <vector>

#include "catnet/datagen.hpp"
#include "catnet/dependence.hpp"
#include "catnet/importance.hpp"
#include "catnet/lstm.hpp"
#include "catnet/mirror.hpp"

namespace catnet {

enum class Backend { Linear, Lstm };
/// How c_j is obtained. Auto uses the closed form for the linear backend
/// when the (pre-selected) design has fewer columns than rows, and the
/// kernel dependence minimizer otherwise.
enum class CjMethod { Auto, Analytic, Kernel };
/// LASSO screening. Auto screens only for the linear backend with p >= n.
enum class Preselect { Auto, Always, Never };

struct PipelineConfig {
  Backend backend = Backend::Linear;
  double q = 0.1;
  std::uint64_t seed = 0;

  CjMethod cj_method = CjMethod::Auto;
  KernelKind kernel = KernelKind::Rbf;
  std::size_t max_lag = 5;
  std::size_t grid_size = 15;

  std::size_t permutations = 128;
  std::size_t background = 64;
  LowessOptions lowess;
  TrainConfig lstm;
  Preselect preselect = Preselect::Auto;

  void validate() const;
};

/// Per-run detail beyond the selection itself.
struct RunDiagnostics {
  /// Columns kept by pre-selection (all columns when none ran).
  std::vector<std::size_t> active;
  /// c_j per original feature; 0 for screened-out features.
  std::vector<double> scales;
  /// Dependence profiles for features whose c_j came from the kernel path.
  std::vector<std::pair<std::size_t, CjProfile>> profiles;
};

/// Mirrors one feature at a time and refits the backend for each
/// (features that fail get M_j = 0 and count as a warning).
SelectionResult run_catnet(const Dataset& data, const PipelineConfig& cfg,
                           RunDiagnostics* diag = nullptr);

/// Mirrors every feature at once and fits a single backend on the 2p-column
/// design (x1+, x1-, ..., xp+, xp-).
SelectionResult run_scatnet(const Dataset& data, const PipelineConfig& cfg,
                            RunDiagnostics* diag = nullptr);

/// Scalar Gaussian mirror baseline: OLS coefficients of the two mirror
/// columns combined by signed-max. Linear backend only.
SelectionResult run_gm_linear(const Dataset& data, const PipelineConfig& cfg,
                              RunDiagnostics* diag = nullptr);

/// Mirror noise for original feature j: the (seed, mirror, j) substream.
Eigen::VectorXd mirror_noise(std::uint64_t seed, std::size_t j, std::size_t n);

}  // namespace catnet
