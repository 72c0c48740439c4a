#include "abmhedge/scenario_set.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "abmhedge/errors.hpp"

namespace abmhedge {

static_assert(std::endian::native == std::endian::little,
              "scenario binary I/O assumes a little-endian host");

ScenarioSet::ScenarioSet(std::size_t n_paths, std::size_t path_length, std::uint64_t seed,
                         std::string model_tag, ParamSnapshot params)
    : n_paths_(n_paths),
      path_length_(path_length),
      seed_(seed),
      model_tag_(std::move(model_tag)),
      params_(std::move(params)),
      prices_(n_paths * path_length, 0.0) {}

std::span<const double> ScenarioSet::path(std::size_t i) const {
  if (i >= n_paths_) throw std::out_of_range("scenario path index out of range");
  return std::span<const double>(prices_).subspan(i * path_length_, path_length_);
}

std::span<double> ScenarioSet::path(std::size_t i) {
  if (i >= n_paths_) throw std::out_of_range("scenario path index out of range");
  return std::span<double>(prices_).subspan(i * path_length_, path_length_);
}

void ScenarioSet::validate() const {
  for (std::size_t i = 0; i < prices_.size(); ++i) {
    const double p = prices_[i];
    if (!std::isfinite(p) || p <= 0.0) {
      throw DomainError("scenario price not finite and positive at path " +
                        std::to_string(i / path_length_) + ", index " +
                        std::to_string(i % path_length_));
    }
  }
}

namespace {

template <typename T>
void put(std::string& out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T value;
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }

  std::string_view take(std::size_t n) {
    need(n);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw FormatError("scenario file truncated");
  }

  std::string_view bytes_;
  std::size_t pos_ = 0;
};

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  auto tmp = path;
  tmp += ".part";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw FormatError("short write to " + path.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace

std::string encode_scenarios(const ScenarioSet& set) {
  std::string out;
  out.reserve(40 + set.model_tag().size() + set.data().size() * sizeof(double));
  out.append("CHSC", 4);
  put<std::uint32_t>(out, kScenarioFormatVersion);
  put<std::uint64_t>(out, set.n_paths());
  put<std::uint64_t>(out, set.path_length());
  put<std::uint64_t>(out, set.seed());
  put<std::uint32_t>(out, static_cast<std::uint32_t>(set.model_tag().size()));
  out.append(set.model_tag());
  for (const double p : set.data()) put<double>(out, p);
  return out;
}

ScenarioSet decode_scenarios(std::string_view bytes) {
  Reader r(bytes);
  if (r.take(4) != "CHSC") throw FormatError("bad scenario magic");
  const auto version = r.get<std::uint32_t>();
  if (version != kScenarioFormatVersion) {
    throw FormatError("unsupported scenario format version " + std::to_string(version));
  }
  const auto m = r.get<std::uint64_t>();
  const auto len = r.get<std::uint64_t>();
  const auto seed = r.get<std::uint64_t>();
  const auto tag_len = r.get<std::uint32_t>();
  std::string tag(r.take(tag_len));
  if (len != 0 && m > r.remaining() / sizeof(double) / len) {
    throw FormatError("scenario payload shorter than header dimensions");
  }
  if (r.remaining() != m * len * sizeof(double)) {
    throw FormatError("scenario payload size does not match header");
  }
  ScenarioSet set(m, len, seed, std::move(tag));
  for (std::size_t i = 0; i < m; ++i) {
    for (double& p : set.path(i)) p = r.get<double>();
  }
  try {
    set.validate();
  } catch (const DomainError& e) {
    throw FormatError(std::string("scenario payload: ") + e.what());
  }
  return set;
}

void write_scenarios(const ScenarioSet& set, const std::filesystem::path& path) {
  write_file(path, encode_scenarios(set));
}

ScenarioSet read_scenarios(const std::filesystem::path& path) {
  return decode_scenarios(slurp(path));
}

void write_scenarios_csv(const ScenarioSet& set, const std::filesystem::path& path) {
  std::string out;
  char buf[64];
  for (std::size_t i = 0; i < set.n_paths(); ++i) {
    bool first = true;
    for (const double p : set.path(i)) {
      if (!first) out += ',';
      first = false;
      const auto res = std::to_chars(buf, buf + sizeof(buf), p);
      out.append(buf, res.ptr);
    }
    out += '\n';
  }
  write_file(path, out);
}

ScenarioSet read_scenarios_csv(const std::filesystem::path& path, std::string model_tag) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    const char* p = line.data();
    const char* end = p + line.size();
    while (p < end) {
      double v = 0.0;
      const auto res = std::from_chars(p, end, v);
      if (res.ec != std::errc()) {
        throw FormatError("scenario CSV line " + std::to_string(line_no) + ": bad number");
      }
      row.push_back(v);
      p = res.ptr;
      if (p < end) {
        if (*p != ',') {
          throw FormatError("scenario CSV line " + std::to_string(line_no) + ": expected ','");
        }
        ++p;
      }
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw FormatError("scenario CSV line " + std::to_string(line_no) + ": ragged row");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw FormatError("scenario CSV is empty");
  ScenarioSet set(rows.size(), rows.front().size(), 0, std::move(model_tag));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::copy(rows[i].begin(), rows[i].end(), set.path(i).begin());
  }
  try {
    set.validate();
  } catch (const DomainError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return set;
}

}  // namespace abmhedge
