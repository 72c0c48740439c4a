#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace abmhedge {

/// Named generator parameter, kept in generation order.
using ParamSnapshot = std::vector<std::pair<std::string, double>>;

/// M price paths of equal length N+1, stored row-major.
class ScenarioSet {
 public:
  ScenarioSet() = default;
  ScenarioSet(std::size_t n_paths, std::size_t path_length, std::uint64_t seed,
              std::string model_tag, ParamSnapshot params = {});

  std::size_t n_paths() const noexcept { return n_paths_; }
  /// N + 1 prices per path.
  std::size_t path_length() const noexcept { return path_length_; }
  std::size_t n_steps() const noexcept { return path_length_ == 0 ? 0 : path_length_ - 1; }

  std::span<const double> path(std::size_t i) const;
  std::span<double> path(std::size_t i);
  std::span<const double> data() const noexcept { return prices_; }

  std::uint64_t seed() const noexcept { return seed_; }
  const std::string& model_tag() const noexcept { return model_tag_; }
  const ParamSnapshot& params() const noexcept { return params_; }
  void set_params(ParamSnapshot params) { params_ = std::move(params); }

  /// Throws DomainError unless every price is finite and strictly positive.
  void validate() const;

  friend bool operator==(const ScenarioSet&, const ScenarioSet&) = default;

 private:
  std::size_t n_paths_ = 0;
  std::size_t path_length_ = 0;
  std::uint64_t seed_ = 0;
  std::string model_tag_;
  ParamSnapshot params_;
  std::vector<double> prices_;
};

/// Binary layout (little endian):
///   "CHSC" | u32 version | u64 M | u64 N+1 | u64 seed | u32 tag length | tag bytes
///   | M*(N+1) float64 row-major.
/// The parameter snapshot is not part of the binary layout.
inline constexpr std::uint32_t kScenarioFormatVersion = 1;

std::string encode_scenarios(const ScenarioSet& set);
ScenarioSet decode_scenarios(std::string_view bytes);

void write_scenarios(const ScenarioSet& set, const std::filesystem::path& path);
ScenarioSet read_scenarios(const std::filesystem::path& path);

/// One path per row, shortest round-trip decimal representation.
void write_scenarios_csv(const ScenarioSet& set, const std::filesystem::path& path);
ScenarioSet read_scenarios_csv(const std::filesystem::path& path, std::string model_tag = "csv");

}  // namespace abmhedge
