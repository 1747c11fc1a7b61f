#include "chflow/cli_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "chflow/error.hpp"

#ifndef CHFLOW_VERSION
#define CHFLOW_VERSION "unknown"
#endif

namespace chflow {

namespace fs = std::filesystem;

const char* code_version() noexcept { return CHFLOW_VERSION; }

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

double parse_double(const std::string& text) {
  double v = 0.0;
  const char* b = text.data();
  const char* e = b + text.size();
  if (b != e && *b == '+') ++b;
  auto r = std::from_chars(b, e, v);
  if (r.ec != std::errc() || r.ptr != e || b == e)
    throw Error(ErrorCode::InvalidArgument, "not a number: '" + text + "'");
  return v;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

[[noreturn]] void violation(const std::string& key, const std::string& why) {
  throw Error(ErrorCode::ConstraintViolation, key + ": " + why);
}

double as_double(const std::string& key, const std::string& v) {
  try {
    return parse_double(v);
  } catch (const Error&) {
    violation(key, "expected a number, got '" + v + "'");
  }
}

std::uint64_t as_unsigned(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size() || v.empty())
    violation(key, "expected a non-negative integer, got '" + v + "'");
  return out;
}

bool as_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  violation(key, "expected true or false, got '" + v + "'");
}

std::string join_doubles(const std::vector<double>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ", ";
    out += format_double(xs[i]);
  }
  return out;
}

using Setter = std::function<void(Scenario&, const std::string&)>;
using Getter = std::function<std::string(const Scenario&)>;

struct Key {
  const char* name;
  Setter set;
  Getter get;
};

#define CHFLOW_DOUBLE_KEY(key, member)                                                  \
  Key {                                                                                 \
    key, [](Scenario& s, const std::string& v) { s.member = as_double(key, v); },       \
        [](const Scenario& s) { return format_double(s.member); }                       \
  }

#define CHFLOW_BOOL_KEY(key, member)                                                    \
  Key {                                                                                 \
    key, [](Scenario& s, const std::string& v) { s.member = as_bool(key, v); },         \
        [](const Scenario& s) { return std::string(s.member ? "true" : "false"); }      \
  }

// Canonical order of the config text.
const std::vector<Key>& keys() {
  static const std::vector<Key> k = {
      {"id", [](Scenario& s, const std::string& v) { s.id = v; }, [](const Scenario& s) { return s.id; }},
      {"problem",
       [](Scenario& s, const std::string& v) {
         try {
           s.problem = parse_problem(v);
         } catch (const Error&) {
           violation("problem", "expected torus, line or sub2e, got '" + v + "'");
         }
       },
       [](const Scenario& s) { return std::string(to_string(s.problem)); }},
      {"potential",
       [](Scenario&, const std::string& v) {
         if (v != "quartic") violation("potential", "only quartic is supported");
       },
       [](const Scenario&) { return std::string("quartic"); }},
      CHFLOW_DOUBLE_KEY("L", L),
      {"n", [](Scenario& s, const std::string& v) { s.n = as_unsigned("n", v); },
       [](const Scenario& s) { return std::to_string(s.n); }},
      CHFLOW_DOUBLE_KEY("domain_factor", domain_factor),
      CHFLOW_DOUBLE_KEY("mean", mean),
      CHFLOW_DOUBLE_KEY("mass", mass),
      CHFLOW_DOUBLE_KEY("disturbance_mass", disturbance.mass),
      CHFLOW_DOUBLE_KEY("disturbance_width", disturbance.half_width),
      CHFLOW_DOUBLE_KEY("disturbance_offset", disturbance.offset),
      CHFLOW_DOUBLE_KEY("W0_target", W0_target),
      CHFLOW_DOUBLE_KEY("epsilon", epsilon),
      CHFLOW_DOUBLE_KEY("sentinel", sentinel),
      CHFLOW_DOUBLE_KEY("noise", noise),
      {"seed", [](Scenario& s, const std::string& v) { s.seed = as_unsigned("seed", v); },
       [](const Scenario& s) { return std::to_string(s.seed); }},
      CHFLOW_DOUBLE_KEY("t0_gap", phases.t0_gap),
      CHFLOW_DOUBLE_KEY("t0_linf", phases.t0_linf),
      CHFLOW_DOUBLE_KEY("t2_eps", phases.t2_eps),
      CHFLOW_DOUBLE_KEY("fit_floor", phases.fit_floor),
      CHFLOW_DOUBLE_KEY("dt", solver.dt),
      CHFLOW_DOUBLE_KEY("stabilization", solver.stabilization),
      CHFLOW_DOUBLE_KEY("t_end", solver.t_end),
      CHFLOW_BOOL_KEY("adapt", solver.adapt),
      CHFLOW_BOOL_KEY("dealias", solver.dealias),
      CHFLOW_DOUBLE_KEY("tolerance", solver.tolerance),
      CHFLOW_DOUBLE_KEY("dt_min", solver.dt_min),
      CHFLOW_DOUBLE_KEY("dt_max", solver.dt_max),
      CHFLOW_DOUBLE_KEY("energy_slack", solver.energy_slack),
      CHFLOW_DOUBLE_KEY("log_start", solver.schedule.log_start),
      {"per_decade",
       [](Scenario& s, const std::string& v) {
         const auto k = as_unsigned("per_decade", v);
         if (k > 10000) violation("per_decade", "at most 10000");
         s.solver.schedule.per_decade = static_cast<int>(k);
       },
       [](const Scenario& s) { return std::to_string(s.solver.schedule.per_decade); }},
      CHFLOW_DOUBLE_KEY("uniform_interval", solver.schedule.uniform_interval),
      {"snapshot_extra",
       [](Scenario& s, const std::string& v) {
         s.solver.schedule.extra.clear();
         if (v.empty()) return;
         for (const auto& item : split(v, ','))
           s.solver.schedule.extra.push_back(as_double("snapshot_extra", trim(item)));
       },
       [](const Scenario& s) { return join_doubles(s.solver.schedule.extra); }},
  };
  return k;
}

#undef CHFLOW_DOUBLE_KEY
#undef CHFLOW_BOOL_KEY

void check_constraints(const Scenario& s) {
  auto positive = [](const char* key, double v) {
    if (!(std::isfinite(v) && v > 0.0)) violation(key, "must be positive and finite");
  };
  auto non_negative = [](const char* key, double v) {
    if (!(std::isfinite(v) && v >= 0.0)) violation(key, "must be non-negative and finite");
  };
  auto finite = [](const char* key, double v) {
    if (!std::isfinite(v)) violation(key, "must be finite");
  };
  if (s.id.empty()) violation("id", "must not be empty");
  for (char c : s.id)
    if (c == ' ' || c == '\t' || c == '/' || c == '#') violation("id", "no whitespace, '/' or '#'");
  positive("L", s.L);
  if (s.n < 16 || (s.n & (s.n - 1)) != 0) violation("n", "must be a power of two >= 16");
  positive("domain_factor", s.domain_factor);
  if (s.problem != Problem::TorusBump && s.domain_factor < 2.0) violation("domain_factor", "must be >= 2 on the line");
  if (!(std::abs(s.mean) < 1.0)) violation("mean", "must lie in (-1, 1)");
  non_negative("mass", s.mass);
  finite("disturbance_mass", s.disturbance.mass);
  positive("disturbance_width", s.disturbance.half_width);
  finite("disturbance_offset", s.disturbance.offset);
  non_negative("W0_target", s.W0_target);
  positive("epsilon", s.epsilon);
  positive("sentinel", s.sentinel);
  non_negative("noise", s.noise);
  positive("t0_gap", s.phases.t0_gap);
  positive("t0_linf", s.phases.t0_linf);
  positive("t2_eps", s.phases.t2_eps);
  positive("fit_floor", s.phases.fit_floor);
  const auto& c = s.solver;
  positive("dt", c.dt);
  non_negative("stabilization", c.stabilization);
  positive("t_end", c.t_end);
  positive("tolerance", c.tolerance);
  positive("dt_min", c.dt_min);
  positive("dt_max", c.dt_max);
  if (c.dt_max < c.dt_min) violation("dt_max", "must be >= dt_min");
  non_negative("energy_slack", c.energy_slack);
  positive("log_start", c.schedule.log_start);
  if (c.schedule.per_decade < 1) violation("per_decade", "must be >= 1");
  non_negative("uniform_interval", c.schedule.uniform_interval);
  for (double t : c.schedule.extra) non_negative("snapshot_extra", t);
  try {
    c.validate(Potential::quartic());
  } catch (const Error& e) {
    violation("stabilization", e.what());
  }
}

}  // namespace

Scenario parse_config_text(const std::string& text) {
  Scenario s;
  std::map<std::string, const Key*> index;
  for (const auto& k : keys()) index.emplace(k.name, &k);
  std::map<std::string, std::size_t> seen;

  std::istringstream in(text);
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorCode::ConfigSyntax, "line " + std::to_string(line_no) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw Error(ErrorCode::ConfigSyntax, "line " + std::to_string(line_no) + ": empty key");
    const auto it = index.find(key);
    if (it == index.end()) throw Error(ErrorCode::UnknownKey, key);
    if (auto [pos, fresh] = seen.emplace(key, line_no); !fresh)
      throw Error(ErrorCode::ConfigSyntax, "line " + std::to_string(line_no) + ": duplicate key '" + key +
                                               "' (first on line " + std::to_string(pos->second) + ")");
    it->second->set(s, value);
  }
  check_constraints(s);
  return s;
}

Scenario parse_config(const fs::path& path) { return parse_config_text(read_text(path)); }

std::string emit_config(const Scenario& s) {
  std::string out;
  for (const auto& k : keys()) {
    out += k.name;
    out += " = ";
    out += k.get(s);
    out += '\n';
  }
  return out;
}

std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string config_hash(const Scenario& s) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(emit_config(s))));
  return buf;
}

// ---- CSV -------------------------------------------------------------------

const char* const kCsvHeader = "t,E,D,gap_bump,gap_glued,V,V_tilde,V_minus,shift_c,zero_a,zero_b,xi_sup,linf_f,trusted";

namespace {

constexpr double DiagnosticsRecord::*kCsvColumns[] = {
    &DiagnosticsRecord::t,      &DiagnosticsRecord::E,       &DiagnosticsRecord::D,
    &DiagnosticsRecord::gap_bump, &DiagnosticsRecord::gap_glued, &DiagnosticsRecord::V,
    &DiagnosticsRecord::V_tilde, &DiagnosticsRecord::V_minus, &DiagnosticsRecord::shift_c,
    &DiagnosticsRecord::zero_a, &DiagnosticsRecord::zero_b,  &DiagnosticsRecord::xi_sup,
    &DiagnosticsRecord::linf_f,
};
constexpr std::size_t kCsvFloatColumns = std::size(kCsvColumns);

}  // namespace

double column_value(const DiagnosticsRecord& r, const std::string& column) {
  const auto names = split(kCsvHeader, ',');
  for (std::size_t c = 0; c < kCsvFloatColumns; ++c)
    if (names[c] == column) return r.*kCsvColumns[c];
  throw Error(ErrorCode::InvalidArgument, "no numeric column '" + column + "'");
}

std::string series_to_csv(const DiagnosticsSeries& series) {
  std::string out = kCsvHeader;
  out += '\n';
  for (const auto& r : series) {
    for (auto m : kCsvColumns) {
      out += format_double(r.*m);
      out += ',';
    }
    out += r.trusted ? '1' : '0';
    out += '\n';
  }
  return out;
}

DiagnosticsSeries series_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || trim(line) != kCsvHeader)
    throw Error(ErrorCode::IoError, "CSV header does not match the diagnostics schema");
  DiagnosticsSeries out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != kCsvFloatColumns + 1)
      throw Error(ErrorCode::IoError, "line " + std::to_string(line_no) + ": expected " +
                                          std::to_string(kCsvFloatColumns + 1) + " columns, got " +
                                          std::to_string(cells.size()));
    DiagnosticsRecord r;
    try {
      for (std::size_t c = 0; c < kCsvFloatColumns; ++c) r.*kCsvColumns[c] = parse_double(cells[c]);
    } catch (const Error& e) {
      throw Error(ErrorCode::IoError, "line " + std::to_string(line_no) + ": " + e.what());
    }
    const auto& flag = cells.back();
    if (flag != "0" && flag != "1")
      throw Error(ErrorCode::IoError, "line " + std::to_string(line_no) + ": trusted must be 0 or 1");
    r.trusted = flag == "1";
    out.push_back(std::move(r));
  }
  return out;
}

void emit_series(const DiagnosticsSeries& series, const fs::path& path) { write_text(series_to_csv(series), path); }

DiagnosticsSeries parse_series(const fs::path& path) { return series_from_csv(read_text(path)); }

std::vector<fs::path> export_dat(const DiagnosticsSeries& series, const fs::path& dir, const std::string& stem) {
  const auto names = split(kCsvHeader, ',');
  std::vector<fs::path> written;
  for (std::size_t c = 1; c < kCsvFloatColumns; ++c) {
    std::string body;
    for (const auto& r : series) {
      const double v = r.*kCsvColumns[c];
      if (std::isnan(v)) continue;
      body += format_double(r.t);
      body += ' ';
      body += format_double(v);
      body += '\n';
    }
    if (body.empty()) continue;
    const fs::path p = dir / (stem + "_" + names[c] + ".dat");
    write_text("# t " + names[c] + "\n" + body, p);
    written.push_back(p);
  }
  return written;
}

void emit_field(const Field& f, const fs::path& path) {
  std::string out = "x,value\n";
  for (std::size_t i = 0; i < f.size(); ++i) {
    out += format_double(f.grid.x(i));
    out += ',';
    out += format_double(f[i]);
    out += '\n';
  }
  write_text(out, path);
}

// ---- files -----------------------------------------------------------------

void write_text(const std::string& text, const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  out << text;
  out.flush();
  if (!out) throw Error(ErrorCode::IoError, "write to " + path.string() + " failed");
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw Error(ErrorCode::IoError, "read of " + path.string() + " failed");
  return ss.str();
}

void write_json(const ordered_json& j, const fs::path& path) { write_text(j.dump(2) + "\n", path); }

void emit_report(const InequalityReport& report, const fs::path& path) { write_json(to_json(report), path); }

// ---- JSON ------------------------------------------------------------------

namespace {

// nlohmann turns NaN into null already; infinities get the same treatment.
ordered_json num(double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr); }

ordered_json nums(const std::vector<double>& xs) {
  ordered_json a = ordered_json::array();
  for (double x : xs) a.push_back(num(x));
  return a;
}

ordered_json solver_json(const SolverConfig& c) {
  ordered_json j;
  j["dt"] = c.dt;
  j["stabilization"] = c.stabilization;
  j["t_end"] = c.t_end;
  j["adapt"] = c.adapt;
  j["dealias"] = c.dealias;
  j["tolerance"] = c.tolerance;
  j["dt_min"] = c.dt_min;
  j["dt_max"] = c.dt_max;
  j["energy_slack"] = c.energy_slack;
  j["log_start"] = c.schedule.log_start;
  j["per_decade"] = c.schedule.per_decade;
  j["uniform_interval"] = c.schedule.uniform_interval;
  j["snapshot_extra"] = nums(c.schedule.extra);
  return j;
}

}  // namespace

ordered_json to_json(const Scenario& s) {
  ordered_json j;
  for (const auto& k : keys()) j[k.name] = k.get(s);
  return j;
}

RunManifest make_manifest(const RunResult& r) {
  RunManifest m;
  m.scenario = r.scenario;
  m.scenario_id = r.scenario.id;
  m.config_hash = config_hash(r.scenario);
  m.code_version = code_version();
  m.problem = to_string(r.scenario.problem);
  m.L = r.scenario.L;
  m.domain_half_length = r.scenario.domain_half_length();
  m.n = r.scenario.n;
  m.solver = r.scenario.solver;
  m.wall_seconds = r.wall_seconds;
  m.accepted_steps = r.trajectory.accepted;
  m.rejected_steps = r.trajectory.rejected;
  m.snapshots = r.series.size();
  m.initial_energy = r.initial.energy;
  m.W0_measured = r.initial.W0_measured;
  m.H0 = r.initial.H0;
  m.max_mean_drift = r.trajectory.max_mean_drift;
  m.max_energy_increase = r.trajectory.max_energy_increase;
  return m;
}

ordered_json to_json(const RunManifest& m) {
  ordered_json j;
  j["scenario_id"] = m.scenario_id;
  j["config_hash"] = m.config_hash;
  j["code_version"] = m.code_version;
  j["problem"] = m.problem;
  j["grid"] = {{"L", num(m.L)}, {"domain_half_length", num(m.domain_half_length)}, {"n", m.n}};
  j["solver"] = solver_json(m.solver);
  j["config"] = to_json(m.scenario);
  j["outputs"] = m.outputs;
  j["wall_seconds"] = num(m.wall_seconds);
  j["accepted_steps"] = m.accepted_steps;
  j["rejected_steps"] = m.rejected_steps;
  j["snapshots"] = m.snapshots;
  j["initial_energy"] = num(m.initial_energy);
  j["W0_measured"] = num(m.W0_measured);
  j["H0"] = num(m.H0);
  j["max_mean_drift"] = num(m.max_mean_drift);
  j["max_energy_increase"] = num(m.max_energy_increase);
  return j;
}

ordered_json to_json(const InequalityReport& r) {
  ordered_json j;
  j["name"] = r.name;
  j["scenario"] = r.scenario;
  j["L"] = num(r.L);
  j["n"] = r.n;
  j["cap"] = num(r.cap);
  j["lower_cap"] = num(r.lower_cap);
  j["worst"] = num(r.worst);
  j["min"] = num(r.min);
  j["pass"] = r.pass;
  j["excluded"] = r.excluded;
  j["gated"] = r.gated;
  ordered_json extra = ordered_json::object();
  for (const auto& [k, v] : r.extra) extra[k] = num(v);
  j["extra"] = extra;
  j["t"] = nums(r.t);
  j["ratio"] = nums(r.ratio);
  return j;
}

ordered_json to_json(const FitResult& f) {
  ordered_json j;
  j["model"] = f.model == FitModel::PowerLaw ? "power" : "exp";
  j["exponent"] = num(f.exponent);
  j["prefactor"] = num(f.prefactor);
  j["r2"] = num(f.r2);
  j["points"] = f.points;
  j["t_lo"] = num(f.t_lo);
  j["t_hi"] = num(f.t_hi);
  return j;
}

ordered_json to_json(const PhaseReport& p) {
  ordered_json j;
  j["T0"] = num(p.T0);
  j["T1"] = num(p.T1);
  j["T2"] = num(p.T2);
  j["not_reached"] = p.not_reached;
  j["algebraic"] = to_json(p.algebraic);
  j["algebraic_constant"] = num(p.algebraic_constant);
  j["exponential"] = to_json(p.exponential);
  j["shift_tail"] = to_json(p.shift_tail);
  j["delta_c"] = num(p.delta_c);
  j["delta_x"] = num(p.delta_x);
  j["V_sup"] = num(p.V_sup);
  j["W0_measured"] = num(p.W0_measured);
  j["plateau"] = {{"start", num(p.plateau_start)},
                  {"end", num(p.plateau_end)},
                  {"max_deviation", num(p.plateau_max_deviation)}};
  j["trusted_until"] = num(p.trusted_until);
  j["thresholds"] = {{"t0_gap", p.thresholds.t0_gap},
                     {"t0_linf", p.thresholds.t0_linf},
                     {"t2_eps", p.thresholds.t2_eps},
                     {"fit_floor", p.thresholds.fit_floor}};
  j["notes"] = p.notes;
  return j;
}

ordered_json to_json(const SpectrumReport& s) {
  ordered_json j;
  j["eigenvalues"] = nums(s.eigenvalues);
  j["lambda1"] = num(s.lambda1);
  j["overlap"] = num(s.overlap);
  j["lambda2"] = num(s.lambda2);
  j["lambda3"] = num(s.lambda3);
  j["iterations"] = s.iterations;
  j["max_residual"] = num(s.max_residual);
  return j;
}

}  // namespace chflow
