#include "abmhedge/data_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "abmhedge/errors.hpp"
#include "abmhedge/rng.hpp"

namespace abmhedge::io {

namespace {

std::string trim(std::string s) {
  auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

PriceHistory PriceHistory::slice(std::size_t begin, std::size_t count) const {
  if (begin + count > size()) throw InsufficientDataError("slice beyond history length");
  PriceHistory out;
  out.source = source;
  out.dates.assign(dates.begin() + static_cast<std::ptrdiff_t>(begin),
                   dates.begin() + static_cast<std::ptrdiff_t>(begin + count));
  out.closes.assign(closes.begin() + static_cast<std::ptrdiff_t>(begin),
                    closes.begin() + static_cast<std::ptrdiff_t>(begin + count));
  return out;
}

std::chrono::year_month_day parse_iso_date(const std::string& text) {
  int y = 0;
  unsigned m = 0, d = 0;
  char tail = 0;
  if (text.size() != 10 || std::sscanf(text.c_str(), "%4d-%2u-%2u%c", &y, &m, &d, &tail) != 3) {
    throw FormatError("not an ISO-8601 date: '" + text + "'");
  }
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m},
                                        std::chrono::day{d}};
  if (!ymd.ok()) throw FormatError("invalid calendar date: '" + text + "'");
  return ymd;
}

std::string format_iso_date(std::chrono::year_month_day date) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", static_cast<int>(date.year()),
                static_cast<unsigned>(date.month()), static_cast<unsigned>(date.day()));
  return buf;
}

PriceHistory parse_price_csv(const std::string& text, const ColumnMap& columns, std::string source) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (header.empty() && std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!trim(line).empty()) header = split_fields(line);
  }
  if (header.empty()) throw FormatError(source + ": empty file");
  auto column = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw FormatError(source + ": missing column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t date_col = column(columns.date);
  const std::size_t close_col = column(columns.close);

  PriceHistory h;
  h.source = std::move(source);
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    const std::string where = h.source + " line " + std::to_string(line_no);
    if (fields.size() <= std::max(date_col, close_col)) throw FormatError(where + ": missing fields");
    std::chrono::year_month_day date;
    try {
      date = parse_iso_date(fields[date_col]);
    } catch (const FormatError& e) {
      throw FormatError(where + ": " + e.what());
    }
    const std::string& field = fields[close_col];
    double close = 0.0;
    const auto res = std::from_chars(field.data(), field.data() + field.size(), close);
    if (res.ec != std::errc() || res.ptr != field.data() + field.size() || !std::isfinite(close)) {
      throw FormatError(where + ": unparseable price '" + field + "'");
    }
    if (!(close > 0.0)) throw FormatError(where + ": nonpositive price " + field);
    if (!h.dates.empty() && !(h.dates.back() < date)) {
      throw FormatError(where + ": date " + fields[date_col] + " is not after " +
                        format_iso_date(h.dates.back()));
    }
    h.dates.push_back(date);
    h.closes.push_back(close);
  }
  if (h.closes.empty()) throw FormatError(h.source + ": no data rows");
  return h;
}

PriceHistory ingest_csv(const std::filesystem::path& path, const ColumnMap& columns) {
  return parse_price_csv(read_text(path), columns, path.string());
}

std::pair<PriceHistory, PriceHistory> split_history(const PriceHistory& history,
                                                    const SplitSpec& spec) {
  if (spec.calibration_len + spec.test_len > history.size()) {
    throw InsufficientDataError("history of " + std::to_string(history.size()) +
                                " rows is shorter than the requested split");
  }
  return {history.slice(0, spec.calibration_len),
          history.slice(spec.calibration_len, spec.test_len)};
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  auto tmp = path;
  tmp += ".part";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot write " + path.string());
    out << text;
    out.flush();
    if (!out) throw FormatError("short write to " + path.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string file_hash(const std::filesystem::path& path) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(read_text(path))));
  return buf;
}

}  // namespace abmhedge::io
