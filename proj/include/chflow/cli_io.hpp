#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "chflow/experiments.hpp"
#include "chflow/functionals.hpp"
#include "chflow/inequality_lab.hpp"

namespace chflow {

using ordered_json = nlohmann::ordered_json;

/// Parses `key = value` lines (`#` comments). Throws ConfigSyntax (with the
/// line number), UnknownKey, ConstraintViolation (with the key).
Scenario parse_config_text(const std::string& text);
/// Throws IoError when the file cannot be read.
Scenario parse_config(const std::filesystem::path& path);
/// Canonical text: every key in a fixed order, shortest round-trip numbers.
std::string emit_config(const Scenario& s);

/// FNV-1a 64-bit digest.
std::uint64_t fnv1a64(const std::string& text);
std::string config_hash(const Scenario& s);

/// Shortest decimal that parses back to the same double ("nan", "inf", "-inf" included).
std::string format_double(double v);
double parse_double(const std::string& text);

extern const char* const kCsvHeader;
/// Value of a numeric CSV column by name; throws InvalidArgument for unknown names.
double column_value(const DiagnosticsRecord& r, const std::string& column);
std::string series_to_csv(const DiagnosticsSeries& series);
DiagnosticsSeries series_from_csv(const std::string& text);
void emit_series(const DiagnosticsSeries& series, const std::filesystem::path& path);
DiagnosticsSeries parse_series(const std::filesystem::path& path);

/// Two-column `t value` files named <stem>_<column>.dat; NaN rows are skipped.
std::vector<std::filesystem::path> export_dat(const DiagnosticsSeries& series, const std::filesystem::path& dir,
                                              const std::string& stem);

/// Field samples as `x,value` CSV.
void emit_field(const Field& f, const std::filesystem::path& path);

struct RunManifest {
  Scenario scenario;  ///< echoed with every default filled in
  std::string scenario_id;
  std::string config_hash;
  std::string code_version;
  std::string problem;
  double L = 0.0;
  double domain_half_length = 0.0;
  std::size_t n = 0;
  SolverConfig solver;
  std::vector<std::string> outputs;
  double wall_seconds = 0.0;
  std::size_t accepted_steps = 0;
  std::size_t rejected_steps = 0;
  std::size_t snapshots = 0;
  double initial_energy = 0.0;
  double W0_measured = 0.0;
  double H0 = kNaN;
  double max_mean_drift = 0.0;
  double max_energy_increase = 0.0;
};

RunManifest make_manifest(const RunResult& r);
const char* code_version() noexcept;

ordered_json to_json(const RunManifest& m);
ordered_json to_json(const InequalityReport& r);
ordered_json to_json(const FitResult& f);
ordered_json to_json(const PhaseReport& p);
ordered_json to_json(const SpectrumReport& s);
ordered_json to_json(const Scenario& s);

/// Writes JSON with two-space indentation. Throws IoError.
void write_json(const ordered_json& j, const std::filesystem::path& path);
void write_text(const std::string& text, const std::filesystem::path& path);
std::string read_text(const std::filesystem::path& path);

void emit_report(const InequalityReport& report, const std::filesystem::path& path);

}  // namespace chflow
