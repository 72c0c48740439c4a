#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace abmhedge::io {

/// Daily closes on strictly increasing trading dates.
struct PriceHistory {
  std::vector<std::chrono::year_month_day> dates;
  std::vector<double> closes;
  std::string source;

  std::size_t size() const noexcept { return closes.size(); }
  PriceHistory slice(std::size_t begin, std::size_t count) const;
};

struct ColumnMap {
  std::string date = "date";
  std::string close = "close";
};

/// Reads a headered CSV. Rows with unparseable dates or prices, nonpositive
/// prices, or out-of-order dates raise FormatError naming the line number.
PriceHistory ingest_csv(const std::filesystem::path& path, const ColumnMap& columns = {});
PriceHistory parse_price_csv(const std::string& text, const ColumnMap& columns = {},
                             std::string source = "inline");

struct SplitSpec {
  std::size_t calibration_len = 3000;
  std::size_t test_len = 3000;
};

/// First calibration_len rows and the test_len rows that follow.
std::pair<PriceHistory, PriceHistory> split_history(const PriceHistory& history,
                                                    const SplitSpec& spec = {});

std::chrono::year_month_day parse_iso_date(const std::string& text);
std::string format_iso_date(std::chrono::year_month_day date);

std::string read_text(const std::filesystem::path& path);
/// Writes `text` to `path`, replacing any existing file.
void write_text(const std::filesystem::path& path, const std::string& text);

/// FNV-1a 64 of the file contents as 16 hex digits.
std::string file_hash(const std::filesystem::path& path);

}  // namespace abmhedge::io
