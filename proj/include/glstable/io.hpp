#pragma once

// Output plumbing: RFC-4180 CSV, deterministic number formatting, FNV-1a
// hashing and the plain-text run manifest.

#include <array>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "glstable/gl_dynamics.hpp"

namespace glstable::io {

inline constexpr const char* kVersion = "1.0.0";

/// Shortest round-trip representation; identical bits give identical text.
inline std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::array<char, 32> buf{};
  const auto r = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), r.ptr);
}

inline std::string fmt(std::uint64_t v) { return std::to_string(v); }
inline std::string fmt(int v) { return std::to_string(v); }

inline std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

/// CSV table with CRLF-free "\n" row endings and RFC-4180 quoting.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header) : width_(header.size()) { row(header); }

  void row(const std::vector<std::string>& cells) {
    if (cells.size() != width_) throw std::logic_error("CsvWriter: row width differs from header");
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) text_ += ',';
      text_ += csv_escape(cells[i]);
    }
    text_ += '\n';
  }

  const std::string& str() const { return text_; }

 private:
  std::size_t width_;
  std::string text_;
};

/// Splits one CSV record (no embedded newlines) honoring quotes.
inline std::vector<std::string> csv_split(std::string_view line) {
  std::vector<std::string> out(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        out.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        out.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.emplace_back();
    } else {
      out.back() += c;
    }
  }
  return out;
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) s[static_cast<std::size_t>(i)] = kDigits[v & 0xF];
  return s;
}

inline void write_file(const std::filesystem::path& p, std::string_view content) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream os(p, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + p.string() + " for writing");
  os.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!os) throw std::runtime_error("write failed for " + p.string());
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + p.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

/// Plain-text manifest:
///   glstable-manifest 1
///   version <v>
///   command <name>
///   seed <n>
///   config_hash fnv1a64:<hex>
///   file <relative path>        (one line per artifact)
///   config <canonical JSON on one line>
struct Manifest {
  std::string version = kVersion;
  std::string command;
  std::uint64_t seed = 0;
  std::string config_json;
  std::vector<std::string> files;

  std::string config_hash() const { return "fnv1a64:" + hex64(fnv1a64(config_json)); }

  std::string str() const {
    std::string s = "glstable-manifest 1\n";
    s += "version " + version + "\n";
    s += "command " + command + "\n";
    s += "seed " + std::to_string(seed) + "\n";
    s += "config_hash " + config_hash() + "\n";
    for (const auto& f : files) s += "file " + f + "\n";
    s += "config " + config_json + "\n";
    return s;
  }

  static Manifest parse(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    if (!std::getline(is, line) || line != "glstable-manifest 1") throw std::invalid_argument("not a glstable manifest");
    Manifest m;
    std::string hash;
    while (std::getline(is, line)) {
      const auto sp = line.find(' ');
      if (sp == std::string::npos) throw std::invalid_argument("malformed manifest line: " + line);
      const std::string key = line.substr(0, sp), value = line.substr(sp + 1);
      if (key == "version") m.version = value;
      else if (key == "command") m.command = value;
      else if (key == "seed") m.seed = std::stoull(value);
      else if (key == "config_hash") hash = value;
      else if (key == "file") m.files.push_back(value);
      else if (key == "config") m.config_json = value;
      else throw std::invalid_argument("unknown manifest key: " + key);
    }
    if (m.config_json.empty()) throw std::invalid_argument("manifest has no config line");
    if (hash != m.config_hash()) throw std::invalid_argument("manifest config hash mismatch");
    return m;
  }
};

/// Trajectory rows "t,normH,normV,normH_Y,normV_Z".
inline std::string trajectory_csv(const TrajectoryRecord& tr) {
  CsvWriter w({"t", "normH", "normV", "normH_Y", "normV_Z"});
  for (std::size_t i = 0; i < tr.times.size(); ++i)
    w.row({fmt(tr.times[i]), fmt(tr.normH[i]), fmt(tr.normV[i]), fmt(tr.normH_Y[i]), fmt(tr.normV_Z[i])});
  return w.str();
}

}  // namespace glstable::io
