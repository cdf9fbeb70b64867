#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace catnet {

/// Purpose tags for substream derivation. Values are part of the on-disk
/// reproducibility contract; append only.
enum class Purpose : std::uint64_t {
  kSupport = 1,
  kBeta = 2,
  kColumn = 3,
  kFactor = 4,
  kNoise = 5,
  kMirror = 6,
  kLstmInit = 7,
  kLstmShuffle = 8,
  kBackground = 9,
  kShap = 10,
  kRepeat = 11,
  kFeature = 12,
  kCrossVal = 13,
};

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Derives an independent seed from a root seed and a key path, e.g.
/// derive_seed(seed, {Purpose::kColumn, j}).
std::uint64_t derive_seed(std::uint64_t root, std::initializer_list<std::uint64_t> keys) noexcept;

inline std::uint64_t key(Purpose p) noexcept { return static_cast<std::uint64_t>(p); }

/// Thin wrapper over a 64-bit Mersenne twister seeded from a derived key.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  Rng(std::uint64_t root, std::initializer_list<std::uint64_t> keys)
      : engine_(derive_seed(root, keys)) {}

  double normal() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform_(engine_); }
  /// Uniform integer in [0, n).
  std::size_t index(std::size_t n);
  /// k distinct indices from [0, n), in draw order.
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);
  void shuffle(std::vector<std::size_t>& v);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace catnet
