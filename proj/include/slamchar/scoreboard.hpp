#pragma once

// The (sequence x processing element) results store and its on-disk form:
// scoreboard.json (index + provenance) plus one CSV per cell.

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "slamchar/core.hpp"

namespace slamchar {

enum class CellStatus { Ok, Absent, Failed };

inline std::string_view to_string(CellStatus s) {
  switch (s) {
    case CellStatus::Ok: return "ok";
    case CellStatus::Absent: return "absent";
    case CellStatus::Failed: return "failed";
  }
  return "?";
}

struct Cell {
  std::string sequence;
  std::string element;
  CellStatus status = CellStatus::Ok;
  std::vector<MetricRecord> records;
  std::string error;

  const MetricRecord* find(std::string_view metric_id) const {
    for (const auto& r : records) {
      if (r.metric_id == metric_id) return &r;
    }
    return nullptr;
  }
};

struct Provenance {
  std::string config_hash;
  std::string tool_version{kToolVersion};
  std::string created;
  std::vector<std::pair<std::string, std::string>> config;
};

class Scoreboard {
 public:
  using Key = std::pair<std::string, std::string>;  // (sequence, element)

  std::string dataset_name;
  Provenance provenance;

  void put(Cell cell) {
    Key key{cell.sequence, cell.element};
    cells_[std::move(key)] = std::move(cell);
  }

  const Cell* cell(const std::string& sequence, const std::string& element) const {
    const auto it = cells_.find({sequence, element});
    return it == cells_.end() ? nullptr : &it->second;
  }

  const std::map<Key, Cell>& cells() const { return cells_; }
  std::size_t size() const { return cells_.size(); }

  std::vector<std::string> sequences() const {
    std::vector<std::string> out;
    for (const auto& [k, c] : cells_) {
      if (out.empty() || out.back() != k.first) out.push_back(k.first);
    }
    return out;
  }

  std::vector<std::string> elements() const {
    std::vector<std::string> out;
    for (const auto& [k, c] : cells_) out.push_back(k.second);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  /// Every record with the given id, keyed by sequence name.
  std::vector<std::pair<std::string, const MetricRecord*>> records(std::string_view metric_id) const {
    std::vector<std::pair<std::string, const MetricRecord*>> out;
    for (const auto& [k, c] : cells_) {
      if (const auto* r = c.find(metric_id)) out.emplace_back(k.first, r);
    }
    return out;
  }

  /// Sorted distinct metric ids across all cells.
  std::vector<std::string> metric_ids() const {
    std::vector<std::string> out;
    for (const auto& [k, c] : cells_) {
      for (const auto& r : c.records) out.push_back(r.metric_id);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  std::vector<const Cell*> failures() const {
    std::vector<const Cell*> out;
    for (const auto& [k, c] : cells_) {
      if (c.status == CellStatus::Failed) out.push_back(&c);
    }
    return out;
  }

 private:
  std::map<Key, Cell> cells_;
};

/// Shortest decimal that round-trips to the same double.
inline std::string format_double(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

inline double parse_double(const std::string& s) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) throw Error("malformed number '" + s + "'");
  return v;
}

inline constexpr std::string_view kCellCsvHeader = "metric_id,level,unit,key,value";
inline constexpr std::string_view kAbsentKey = "ABSENT";

inline void write_cell_csv(std::ostream& out, const Cell& cell) {
  out << kCellCsvHeader << '\n';
  for (const auto& r : cell.records) {
    if (!r.present()) {
      out << r.metric_id << ',' << to_string(r.level) << ',' << r.unit << ',' << kAbsentKey << ",\n";
      continue;
    }
    for (const auto& v : r.values) {
      out << r.metric_id << ',' << to_string(r.level) << ',' << r.unit << ',' << v.key << ',' << format_double(v.value)
          << '\n';
    }
  }
}

inline std::vector<MetricRecord> read_cell_csv(std::istream& in, const std::string& origin) {
  std::vector<MetricRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1) {
      if (line != kCellCsvHeader) throw Error(origin + ": unexpected header");
      continue;
    }
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cols.push_back(cell);
    if (!line.empty() && line.back() == ',') cols.emplace_back();
    if (cols.size() != 5) throw Error(origin + ":" + std::to_string(lineno) + ": expected 5 columns");
    const auto level = parse_level(cols[1]);
    if (!level) throw Error(origin + ":" + std::to_string(lineno) + ": bad level " + cols[1]);
    if (out.empty() || out.back().metric_id != cols[0]) {
      out.push_back(MetricRecord{cols[0], *level, cols[2], {}, Applicability::Present});
    }
    if (cols[3] == kAbsentKey) {
      out.back().applicability = Applicability::Absent;
      continue;
    }
    out.back().values.push_back({cols[3], parse_double(cols[4])});
  }
  return out;
}

inline std::string cell_file(const Cell& c) { return c.sequence + "/" + c.element + ".csv"; }

inline void save_scoreboard(const Scoreboard& sb, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& [key, c] : sb.cells()) {
    nlohmann::json jc = {{"sequence", c.sequence}, {"element", c.element}, {"status", to_string(c.status)}};
    if (c.status == CellStatus::Failed) {
      jc["error"] = c.error;
    } else {
      const fs::path file = dir / cell_file(c);
      fs::create_directories(file.parent_path());
      std::ofstream out(file, std::ios::binary);
      if (!out) throw Error("cannot write " + file.string());
      write_cell_csv(out, c);
      jc["file"] = cell_file(c);
    }
    cells.push_back(std::move(jc));
  }
  nlohmann::json config = nlohmann::json::object();
  for (const auto& [k, v] : sb.provenance.config) config[k] = v;
  nlohmann::json j = {
      {"format_version", 1},
      {"dataset_name", sb.dataset_name},
      {"provenance",
       {{"config_hash", sb.provenance.config_hash},
        {"tool_version", sb.provenance.tool_version},
        {"created", sb.provenance.created},
        {"config", config}}},
      {"sequences", sb.sequences()},
      {"elements", sb.elements()},
      {"cells", cells},
  };
  std::ofstream out(dir / "scoreboard.json", std::ios::binary);
  if (!out) throw Error("cannot write " + (dir / "scoreboard.json").string());
  out << j.dump(2) << '\n';
}

inline Scoreboard load_scoreboard(const std::filesystem::path& dir) {
  const auto index = dir / "scoreboard.json";
  std::ifstream in(index, std::ios::binary);
  if (!in) throw Error("cannot read " + index.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error("invalid " + index.string() + ": " + e.what());
  }
  Scoreboard sb;
  sb.dataset_name = j.at("dataset_name").get<std::string>();
  const auto& p = j.at("provenance");
  sb.provenance.config_hash = p.value("config_hash", std::string());
  sb.provenance.tool_version = p.value("tool_version", std::string());
  sb.provenance.created = p.value("created", std::string());
  if (p.contains("config")) {
    for (const auto& [k, v] : p["config"].items()) sb.provenance.config.emplace_back(k, v.get<std::string>());
  }
  for (const auto& jc : j.at("cells")) {
    Cell c;
    c.sequence = jc.at("sequence").get<std::string>();
    c.element = jc.at("element").get<std::string>();
    const auto status = jc.at("status").get<std::string>();
    c.status = status == "ok" ? CellStatus::Ok : status == "absent" ? CellStatus::Absent : CellStatus::Failed;
    if (c.status == CellStatus::Failed) {
      c.error = jc.value("error", std::string());
    } else {
      const auto file = dir / jc.at("file").get<std::string>();
      std::ifstream cin(file, std::ios::binary);
      if (!cin) throw Error("cannot read " + file.string());
      c.records = read_cell_csv(cin, file.string());
    }
    sb.put(std::move(c));
  }
  return sb;
}

}  // namespace slamchar
