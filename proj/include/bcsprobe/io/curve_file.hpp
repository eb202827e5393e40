#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "bcsprobe/version.hpp"

namespace bcsprobe::io {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// shortest text that reads back to the same double
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline double parse_double(const std::string& s) {
  const char* b = s.c_str();
  char* e = nullptr;
  const double v = std::strtod(b, &e);
  if (e == b || *e != '\0') throw FormatError("not a number: '" + s + "'");
  return v;
}

struct Column {
  std::string name;
  std::string unit;
  std::vector<double> values;
};

// Column-oriented table plus ordered string metadata. Units convention and
// code version are always present.
class CurveFile {
 public:
  CurveFile() {
    set_meta("units", units_convention);
    set_meta("version", version);
  }

  void set_meta(const std::string& key, const std::string& value) {
    if (key.empty() || key.find_first_of(":\n") != std::string::npos) throw FormatError("bad metadata key: " + key);
    if (value.find('\n') != std::string::npos) throw FormatError("metadata value contains a newline");
    for (auto& kv : meta_)
      if (kv.first == key) {
        kv.second = value;
        return;
      }
    meta_.emplace_back(key, value);
  }
  std::optional<std::string> meta(const std::string& key) const {
    for (const auto& kv : meta_)
      if (kv.first == key) return kv.second;
    return std::nullopt;
  }
  const std::vector<std::pair<std::string, std::string>>& metadata() const noexcept { return meta_; }

  void set_config_hash(std::string_view canonical_config) { set_meta("config_hash", "fnv1a64:" + hex64(fnv1a64(canonical_config))); }

  Column& add_column(const std::string& name, const std::string& unit) {
    if (name.empty() || name.find_first_of(",\n") != std::string::npos) throw FormatError("bad column name: " + name);
    if (unit.find_first_of(",\n") != std::string::npos) throw FormatError("bad unit: " + unit);
    if (!columns_.empty() && !columns_.front().values.empty()) throw FormatError("add columns before rows");
    columns_.push_back({name, unit, {}});
    return columns_.back();
  }

  void add_row(const std::vector<double>& row) {
    if (row.size() != columns_.size()) throw FormatError("row width does not match column count");
    for (std::size_t i = 0; i < row.size(); ++i) columns_[i].values.push_back(row[i]);
  }

  std::size_t rows() const { return columns_.empty() ? 0 : columns_.front().values.size(); }
  const std::vector<Column>& columns() const noexcept { return columns_; }

  const Column& column(const std::string& name) const {
    for (const auto& c : columns_)
      if (c.name == name) return c;
    throw FormatError("no column named " + name);
  }
  bool has_column(const std::string& name) const {
    for (const auto& c : columns_)
      if (c.name == name) return true;
    return false;
  }

 private:
  std::vector<std::pair<std::string, std::string>> meta_;
  std::vector<Column> columns_;
};

// Identical contents, NaN equal to NaN, everything else compared bitwise.
inline bool same_contents(const CurveFile& a, const CurveFile& b) {
  if (a.metadata() != b.metadata() || a.columns().size() != b.columns().size()) return false;
  for (std::size_t i = 0; i < a.columns().size(); ++i) {
    const auto& x = a.columns()[i];
    const auto& y = b.columns()[i];
    if (x.name != y.name || x.unit != y.unit || x.values.size() != y.values.size()) return false;
    for (std::size_t r = 0; r < x.values.size(); ++r) {
      const double u = x.values[r], v = y.values[r];
      if (std::isnan(u) && std::isnan(v)) continue;
      if (std::memcmp(&u, &v, sizeof u) != 0) return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// csv: "# key: value" lines, "# column_units: ..." then the header row
// ---------------------------------------------------------------------------

inline std::string to_csv(const CurveFile& f) {
  std::string out;
  for (const auto& [k, v] : f.metadata()) out += "# " + k + ": " + v + "\n";
  out += "# column_units: ";
  for (std::size_t i = 0; i < f.columns().size(); ++i) out += (i ? "," : "") + f.columns()[i].unit;
  out += "\n";
  for (std::size_t i = 0; i < f.columns().size(); ++i) out += (i ? "," : "") + f.columns()[i].name;
  out += "\n";
  for (std::size_t r = 0; r < f.rows(); ++r) {
    for (std::size_t i = 0; i < f.columns().size(); ++i) out += (i ? "," : "") + format_double(f.columns()[i].values[r]);
    out += "\n";
  }
  return out;
}

namespace detail {

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace detail

inline CurveFile from_csv(const std::string& text) {
  CurveFile f;
  std::istringstream in(text);
  std::string line;
  std::vector<std::string> units;
  bool have_units = false, have_header = false;
  std::vector<std::string> names;
  std::vector<std::pair<std::string, std::string>> meta;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line.rfind("# ", 0) == 0) {
      const auto body = line.substr(2);
      const auto pos = body.find(": ");
      if (pos == std::string::npos) throw FormatError("malformed metadata line: " + line);
      const auto key = body.substr(0, pos), value = body.substr(pos + 2);
      if (key == "column_units") {
        units = detail::split(value, ',');
        have_units = true;
      } else {
        meta.emplace_back(key, value);
      }
      continue;
    }
    if (!have_header) {
      names = detail::split(line, ',');
      have_header = true;
      continue;
    }
    const auto cells = detail::split(line, ',');
    if (cells.size() != names.size()) throw FormatError("ragged row: " + line);
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& c : cells) row.push_back(parse_double(c));
    rows.push_back(std::move(row));
  }
  if (!have_header) throw FormatError("missing header row");
  if (!have_units || units.size() != names.size()) throw FormatError("missing or mismatched column_units");
  for (const auto& [k, v] : meta) f.set_meta(k, v);
  for (std::size_t i = 0; i < names.size(); ++i) f.add_column(names[i], units[i]);
  for (const auto& r : rows) f.add_row(r);
  return f;
}

// ---------------------------------------------------------------------------
// json: non-finite values become null (NaN) or strings (infinities)
// ---------------------------------------------------------------------------

inline nlohmann::ordered_json number_to_json(double v) {
  if (std::isnan(v)) return nullptr;
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

inline double number_from_json(const nlohmann::ordered_json& j) {
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    throw FormatError("unexpected string in numeric column: " + s);
  }
  return j.get<double>();
}

inline nlohmann::ordered_json to_json(const CurveFile& f) {
  nlohmann::ordered_json j;
  j["metadata"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : f.metadata()) j["metadata"][k] = v;
  j["columns"] = nlohmann::ordered_json::array();
  for (const auto& c : f.columns()) {
    nlohmann::ordered_json col;
    col["name"] = c.name;
    col["unit"] = c.unit;
    col["values"] = nlohmann::ordered_json::array();
    for (double v : c.values) col["values"].push_back(number_to_json(v));
    j["columns"].push_back(col);
  }
  return j;
}

inline CurveFile from_json(const nlohmann::ordered_json& j) {
  CurveFile f;
  for (const auto& [k, v] : j.at("metadata").items()) f.set_meta(k, v.get<std::string>());
  const auto& cols = j.at("columns");
  std::size_t n = 0;
  for (const auto& c : cols) {
    f.add_column(c.at("name").get<std::string>(), c.at("unit").get<std::string>());
    n = c.at("values").size();
  }
  for (const auto& c : cols)
    if (c.at("values").size() != n) throw FormatError("columns of different length");
  for (std::size_t r = 0; r < n; ++r) {
    std::vector<double> row;
    for (const auto& c : cols) row.push_back(number_from_json(c.at("values")[r]));
    f.add_row(row);
  }
  return f;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_csv(const std::filesystem::path& path, const CurveFile& f) { write_text(path, to_csv(f)); }
inline CurveFile read_csv(const std::filesystem::path& path) { return from_csv(read_text(path)); }
inline void write_json(const std::filesystem::path& path, const CurveFile& f) { write_text(path, to_json(f).dump(2) + "\n"); }
inline CurveFile read_json(const std::filesystem::path& path) { return from_json(nlohmann::ordered_json::parse(read_text(path))); }

}  // namespace bcsprobe::io
