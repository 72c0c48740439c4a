#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace abmhedge {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
/// Pure function of (counter, key); no internal state.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key) noexcept;

/// The three standard normals consumed by one simulated day.
struct StepDraws {
  double eps_s = 0.0;  ///< price-noise normal
  double z = 0.0;      ///< independent normal mixed into the variance noise
  double eta = 0.0;    ///< unit fundamental-value shock (scaled by sigma_F by the caller)
};

/// Per-path normal stream keyed by (seed, path index); draws for a step are
/// addressed by the step index, so any step can be regenerated in isolation.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t path) noexcept : seed_(seed), path_(path) {}

  StepDraws draws(std::uint64_t step) const noexcept;

  /// Four uniforms in (0, 1] from block `block` of `step`.
  std::array<double, 4> uniforms(std::uint64_t step, std::uint32_t block) const noexcept;

 private:
  std::uint64_t seed_;
  std::uint64_t path_;
};

/// (eps_s, rho * eps_s + sqrt(1 - rho^2) * z). Throws ParameterError for |rho| > 1.
std::array<double, 2> correlated_normal_pair(double rho, double eps_s, double z);

/// Correlated pair drawn from `rng` at `step`.
std::array<double, 2> correlated_normal_pair(double rho, const CounterRng& rng,
                                             std::uint64_t step);

/// Derives an independent sub-seed from a master seed and a purpose label.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view purpose) noexcept;

/// FNV-1a 64-bit hash.
std::uint64_t fnv1a64(std::string_view bytes) noexcept;

}  // namespace abmhedge
