#pragma once

// CSV persistence: `#`-prefixed metadata lines, one labeled header row,
// shortest round-trip number formatting. Files are written to a temporary
// sibling and renamed into place.

#include <unistd.h>

#include <charconv>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "sawspin/errors.hpp"

namespace sawspin {

struct CsvTable {
  std::vector<std::pair<std::string, std::string>> metadata;
  std::vector<std::string> columns;  // name_unit
  std::vector<std::vector<double>> rows;
};

inline std::string format_number(double v) {
  char buf[32];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw IoError("cannot format number");
  return {buf, end};
}

inline std::string to_csv_text(const CsvTable& t) {
  std::ostringstream out;
  for (const auto& [k, v] : t.metadata) out << "# " << k << ": " << v << "\n";
  for (std::size_t c = 0; c < t.columns.size(); ++c) out << (c ? "," : "") << t.columns[c];
  out << "\n";
  for (const auto& row : t.rows) {
    if (row.size() != t.columns.size()) throw IoError("row width does not match the header");
    for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << format_number(row[c]);
    out << "\n";
  }
  return out.str();
}

inline CsvTable parse_csv(const std::string& text) {
  CsvTable t;
  std::istringstream in(text);
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto colon = line.find(": ");
      if (colon != std::string::npos) t.metadata.emplace_back(line.substr(2, colon - 2), line.substr(colon + 2));
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    if (!header) {
      t.columns = cells;
      header = true;
      continue;
    }
    if (cells.size() != t.columns.size()) throw IoError("ragged CSV row: " + line);
    std::vector<double> row;
    for (const auto& c : cells) {
      double v = 0;
      const auto [end, ec] = std::from_chars(c.data(), c.data() + c.size(), v);
      if (ec != std::errc() || end != c.data() + c.size()) throw IoError("bad CSV number: " + c);
      row.push_back(v);
    }
    t.rows.push_back(std::move(row));
  }
  if (!header) throw IoError("CSV has no header row");
  return t;
}

inline CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str());
}

/// Writes `text` to `path` via a temporary file in the same directory.
inline void write_atomically(const std::string& path, const std::string& text) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  const fs::path tmp = target.string() + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string());
    out << text;
    out.flush();
    if (!out) {
      std::error_code ignore;
      fs::remove(tmp, ignore);
      throw IoError("write failed for " + tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    std::error_code ignore;
    fs::remove(tmp, ignore);
    throw IoError("cannot rename into " + path + ": " + ec.message());
  }
}

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

/// Sidecar with the resolved config plus run provenance (not bit-stable).
inline std::string meta_text(const std::string& resolved_config, unsigned long long seed, const std::string& version,
                             double wall_seconds) {
  std::ostringstream out;
  out << "software_version = " << version << "\n";
  out << "seed = " << seed << "\n";
  out << "finished_utc = " << utc_timestamp() << "\n";
  out << "wall_time_s = " << format_number(wall_seconds) << "\n";
  out << "[resolved]\n" << resolved_config;
  return out.str();
}

}  // namespace sawspin
