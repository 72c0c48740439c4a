#include "abmhedge/rng.hpp"

#include <cmath>
#include <numbers>

#include "abmhedge/errors.hpp"

namespace abmhedge {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t product = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(product >> 32);
  lo = static_cast<std::uint32_t>(product);
}

// 53 random bits mapped to (0, 1].
inline double to_unit_open_closed(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits = ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 11;
  return (static_cast<double>(bits) + 1.0) * 0x1.0p-53;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key) noexcept {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kPhiloxM0, ctr[0], hi0, lo0);
    mulhilo(kPhiloxM1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kPhiloxW0;
    key[1] += kPhiloxW1;
  }
  return ctr;
}

std::array<double, 4> CounterRng::uniforms(std::uint64_t step, std::uint32_t block) const noexcept {
  const std::array<std::uint32_t, 4> counter = {
      static_cast<std::uint32_t>(step), static_cast<std::uint32_t>(step >> 32) ^ block,
      static_cast<std::uint32_t>(path_), static_cast<std::uint32_t>(path_ >> 32)};
  const std::array<std::uint32_t, 2> key = {static_cast<std::uint32_t>(seed_),
                                            static_cast<std::uint32_t>(seed_ >> 32)};
  const auto out = philox4x32(counter, key);
  // Second pair of words re-keyed through a second counter to fill four uniforms.
  const auto out2 = philox4x32({counter[0], counter[1] ^ 0x80000000u, counter[2], counter[3]}, key);
  return {to_unit_open_closed(out[0], out[1]), to_unit_open_closed(out[2], out[3]),
          to_unit_open_closed(out2[0], out2[1]), to_unit_open_closed(out2[2], out2[3])};
}

StepDraws CounterRng::draws(std::uint64_t step) const noexcept {
  const auto u = uniforms(step, 0);
  // Box-Muller on (u0, u1) and (u2, u3); the fourth normal is discarded.
  const double r0 = std::sqrt(-2.0 * std::log(u[0]));
  const double a0 = 2.0 * std::numbers::pi * u[1];
  const double r1 = std::sqrt(-2.0 * std::log(u[2]));
  const double a1 = 2.0 * std::numbers::pi * u[3];
  return {r0 * std::cos(a0), r0 * std::sin(a0), r1 * std::cos(a1)};
}

std::array<double, 2> correlated_normal_pair(double rho, double eps_s, double z) {
  if (!(rho >= -1.0 && rho <= 1.0)) {
    throw ParameterError("correlation rho must lie in [-1, 1], got " + std::to_string(rho));
  }
  return {eps_s, rho * eps_s + std::sqrt(1.0 - rho * rho) * z};
}

std::array<double, 2> correlated_normal_pair(double rho, const CounterRng& rng,
                                             std::uint64_t step) {
  const StepDraws d = rng.draws(step);
  return correlated_normal_pair(rho, d.eps_s, d.z);
}

std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ull;
  }
  return h;
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view purpose) noexcept {
  return splitmix64(seed ^ splitmix64(fnv1a64(purpose)));
}

}  // namespace abmhedge
