#pragma once

// Run outputs. Time series go to CSV with a header row; the summary is a JSON document whose
// key order is fixed, so identical runs produce byte-identical files.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "bohmion/errors.hpp"

namespace bohmion::cli {

struct Table {
  std::string file;  // file name relative to the run directory
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  void add(std::vector<double> row) {
    if (row.size() != columns.size()) throw DimensionError("table row does not match the header of " + file);
    rows.push_back(std::move(row));
  }
};

struct Invariant {
  std::string name;
  double drift = 0.0;
  double tolerance = 0.0;

  bool pass() const { return std::isfinite(drift) && drift <= tolerance; }
};

struct RunReport {
  std::string scenario;
  std::string type;
  std::string variant;  // regularization mode or EF variant, empty when not applicable
  std::uint64_t seed = 0;
  double dt = 0.0;
  long steps = 0;
  double initial_energy = 0.0;
  double final_energy = 0.0;
  std::vector<Invariant> invariants;
  std::vector<std::string> warnings;
  std::vector<Table> tables;
  double wall_seconds = 0.0;

  const Invariant* first_failure() const {
    for (const auto& inv : invariants) {
      if (!inv.pass()) return &inv;
    }
    return nullptr;
  }
};

inline std::string format_number(double x) { return fmt::format("{:.17g}", x); }

inline void write_csv(const Table& t, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  for (std::size_t c = 0; c < t.columns.size(); ++c) out << (c ? "," : "") << t.columns[c];
  out << '\n';
  for (const auto& row : t.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << format_number(row[c]);
    out << '\n';
  }
}

inline nlohmann::ordered_json summary_json(const RunReport& r) {
  nlohmann::ordered_json j;
  j["schema"] = "bohmion-run/1";
  j["scenario"] = r.scenario;
  j["type"] = r.type;
  if (!r.variant.empty()) j["variant"] = r.variant;
  j["seed"] = r.seed;
  j["dt"] = r.dt;
  j["steps"] = r.steps;
  j["initial_energy"] = r.initial_energy;
  j["final_energy"] = r.final_energy;
  auto inv = nlohmann::ordered_json::array();
  for (const auto& i : r.invariants) {
    nlohmann::ordered_json e;
    e["name"] = i.name;
    e["drift"] = std::isfinite(i.drift) ? nlohmann::ordered_json(i.drift) : nlohmann::ordered_json("non-finite");
    e["tolerance"] = i.tolerance;
    e["pass"] = i.pass();
    inv.push_back(std::move(e));
  }
  j["invariants"] = std::move(inv);
  j["warnings"] = r.warnings;
  auto files = nlohmann::ordered_json::array();
  for (const auto& t : r.tables) files.push_back(t.file);
  j["files"] = std::move(files);
  return j;
}

/// Writes every table, <scenario>.json, and <scenario>.timing.json (wall time, kept apart so the
/// summary stays reproducible).
inline void write_report(const RunReport& r, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory '" + dir.string() + "': " + ec.message());
  for (const auto& t : r.tables) write_csv(t, dir / t.file);
  {
    std::ofstream out(dir / (r.scenario + ".json"), std::ios::binary);
    if (!out) throw ConfigError("cannot write summary into '" + dir.string() + "'");
    out << summary_json(r).dump(2) << '\n';
  }
  std::ofstream out(dir / (r.scenario + ".timing.json"), std::ios::binary);
  nlohmann::ordered_json t;
  t["scenario"] = r.scenario;
  t["wall_seconds"] = r.wall_seconds;
  out << t.dump(2) << '\n';
}

}  // namespace bohmion::cli
