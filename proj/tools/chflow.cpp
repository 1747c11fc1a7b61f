// chflow: run, check and post-process Cahn-Hilliard scenarios.
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <limits>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "chflow/cli_io.hpp"
#include "chflow/error.hpp"
#include "chflow/experiments.hpp"
#include "chflow/inequality_lab.hpp"

namespace fs = std::filesystem;
using namespace chflow;

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kRuntimeError = 3;
constexpr int kCheckFailed = 4;

struct Gate {
  std::string name;
  bool pass;
  std::string detail;
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

fs::path default_dir(const Scenario& s) { return fs::path("out") / s.id; }

// Everything that only needs the series.
ordered_json analyze(const DiagnosticsSeries& series, const Scenario& s) {
  ordered_json j;
  j["phases"] = to_json(detect_phases(series, s));
  auto attempt = [&](const char* key, auto&& fn) {
    try {
      j[key] = fn();
    } catch (const Error& e) {
      j[key] = {{"error", e.what()}};
    }
  };
  attempt("nash", [&] { return to_json(check_nash(series, s)); });
  attempt("dissipation", [&] {
    const auto d = check_dissipation_bounds(series, s);
    return ordered_json{{"by_energy", to_json(d.by_energy)},
                        {"growth", to_json(d.growth)},
                        {"integral", to_json(d.integral)}};
  });
  if (s.problem == Problem::TorusBump) attempt("ode_decay", [&] { return to_json(check_ode_decay(series, s)); });
  return j;
}

std::vector<fs::path> write_run(const RunResult& r, const fs::path& dir) {
  fs::create_directories(dir);
  const std::string stem = r.scenario.id;
  std::vector<fs::path> out;
  out.push_back(dir / (stem + ".cfg"));
  write_text(emit_config(r.scenario), out.back());
  out.push_back(dir / (stem + ".csv"));
  emit_series(r.series, out.back());
  for (auto& p : export_dat(r.series, dir, stem)) out.push_back(p);
  out.push_back(dir / (stem + "_analysis.json"));
  write_json(analyze(r.series, r.scenario), out.back());

  auto m = make_manifest(r);
  for (const auto& p : out) m.outputs.push_back(p.string());
  m.outputs.push_back((dir / (stem + "_manifest.json")).string());
  write_json(to_json(m), dir / (stem + "_manifest.json"));
  return out;
}

std::vector<Gate> gates(const RunResult& r) {
  const Scenario& s = r.scenario;
  std::vector<Gate> g;
  const auto& tr = r.trajectory;
  g.push_back({"mean drift <= 1e-13", tr.max_mean_drift <= 1e-13, fmt(tr.max_mean_drift)});
  const double eps_e = 64.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(r.initial.energy));
  g.push_back({"energy non-increasing (roundoff)", tr.max_energy_increase <= eps_e, fmt(tr.max_energy_increase)});

  const PhaseReport ph = detect_phases(r.series, s);
  const double W0 = r.initial.W0_measured;
  switch (s.problem) {
    case Problem::TorusBump: {
      g.push_back({"sup V <= 10 (W0 + 1)", ph.V_sup <= 10.0 * (W0 + 1.0), fmt(ph.V_sup)});
      g.push_back({"T0 reached", std::isfinite(ph.T0), fmt(ph.T0)});
      if (ph.algebraic.points > 0)
        g.push_back({"algebraic slope -0.5 +- 0.15", std::abs(ph.algebraic.exponent + 0.5) <= 0.15,
                     fmt(ph.algebraic.exponent)});
      if (std::isfinite(ph.T2))
        g.push_back({"exponential R^2 >= 0.99", ph.exponential.r2 >= 0.99, fmt(ph.exponential.r2)});
      const auto nash = check_nash(r.series, s);
      g.push_back({"Nash ratio <= 10", nash.pass, fmt(nash.worst)});
      break;
    }
    case Problem::LineBump: {
      const double len = ph.plateau_end - ph.plateau_start;
      g.push_back({"plateau |E - 2e*| <= 0.05 over >= L^2/20", len >= s.L * s.L / 20.0, fmt(len)});
      g.push_back({"sup V~ <= 10 (W0 + 1)", ph.V_sup <= 10.0 * (W0 + 1.0), fmt(ph.V_sup)});
      break;
    }
    case Problem::SubTwoEStar: {
      g.push_back({"E slope -0.5 +- 0.2", std::abs(ph.algebraic.exponent + 0.5) <= 0.2, fmt(ph.algebraic.exponent)});
      const double v0 = r.series.empty() ? kNaN : r.series.front().V_minus;
      g.push_back({"sup V- <= 10 (V-(0) + 1)", ph.V_sup <= 10.0 * (v0 + 1.0), fmt(ph.V_sup)});
      break;
    }
  }
  return g;
}

int cmd_run(const std::string& config, const std::string& out_dir) {
  const Scenario s = parse_config(config);
  std::cerr << "running " << s.id << " (" << to_string(s.problem) << ", L=" << s.L << ", n=" << s.n
            << ", t_end=" << s.solver.t_end << ")\n";
  const RunResult r = run(s, Potential::quartic());
  const fs::path dir = out_dir.empty() ? default_dir(s) : fs::path(out_dir);
  write_run(r, dir);
  std::cout << to_json(make_manifest(r)).dump(2) << "\n";
  return kOk;
}

int cmd_check(const std::string& config, const std::string& compare, const std::string& out_dir) {
  const Scenario s = parse_config(config);
  std::cerr << "checking " << s.id << "\n";
  const RunResult r = run(s, Potential::quartic());
  if (!out_dir.empty()) write_run(r, out_dir);
  auto g = gates(r);
  if (!compare.empty()) {
    const bool same = read_text(compare) == series_to_csv(r.series);
    g.push_back({"CSV bit-identical to " + compare, same, same ? "identical" : "differs"});
  }
  bool ok = true;
  for (const auto& x : g) {
    std::cout << (x.pass ? "PASS " : "FAIL ") << x.name << " [" << x.detail << "]\n";
    ok = ok && x.pass;
  }
  return ok ? kOk : kCheckFailed;
}

int cmd_fit(const std::string& csv, const std::string& model, const std::string& column, double t_lo, double t_hi,
            bool auto_window) {
  const auto series = parse_series(csv);
  std::vector<double> t, y;
  for (const auto& r : series) {
    if (!r.trusted) break;
    const double v = column_value(r, column);
    if (std::isfinite(v) && v > 0.0) {
      t.push_back(r.t);
      y.push_back(v);
    }
  }
  const FitModel m = model == "power" ? FitModel::PowerLaw : FitModel::Exponential;
  if (auto_window) {
    const auto [a, b] = algebraic_window(t, y);
    t_lo = t[a];
    t_hi = t[b];
  }
  std::cout << to_json(fit_rate(t, y, t_lo, t_hi, m)).dump(2) << "\n";
  return kOk;
}

int cmd_report(const std::string& dir) {
  std::vector<fs::path> configs;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().extension() == ".cfg") configs.push_back(e.path());
  std::sort(configs.begin(), configs.end());
  if (configs.empty()) throw Error(ErrorCode::IoError, "no .cfg files in " + dir);
  ordered_json all = ordered_json::object();
  for (const auto& cfg : configs) {
    fs::path csv = cfg;
    csv.replace_extension(".csv");
    const Scenario s = parse_config(cfg);
    const auto series = parse_series(csv);
    ordered_json j;
    j["config_hash"] = config_hash(s);
    j["snapshots"] = series.size();
    j.update(analyze(series, s));
    fs::path out = cfg;
    out.replace_extension("");
    write_json(j, out.string() + "_report.json");
    all[s.id] = j;
  }
  std::cout << all.dump(2) << "\n";
  return kOk;
}

int cmd_profile(const std::string& config, const std::string& out_dir) {
  const Scenario s = parse_config(config);
  const Potential p = Potential::quartic();
  const auto prof = build_profiles(s, p);
  const auto init = build_initial(s, prof, p);
  const fs::path dir = out_dir.empty() ? default_dir(s) : fs::path(out_dir);
  fs::create_directories(dir);
  ordered_json j;
  j["e_star"] = prof.e_star;
  if (prof.bump) {
    emit_field(prof.bump->samples, dir / (s.id + "_bump.csv"));
    j["bump"] = {{"energy", prof.bump->energy},
                 {"lagrange", prof.bump->lagrange},
                 {"zeros", {prof.bump->zeros.first, prof.bump->zeros.second}},
                 {"residual", prof.bump->residual}};
  }
  if (prof.glued) {
    emit_field(prof.glued->sample(s.grid()), dir / (s.id + "_glued.csv"));
    const auto& q = prof.glued->params();
    j["glued"] = {{"q", q.q}, {"alpha", q.alpha}, {"beta", q.beta}, {"energy", prof.glued_energy}};
  }
  emit_field(init.u0, dir / (s.id + "_u0.csv"));
  j["initial"] = {{"energy", init.energy},
                  {"W0_measured", init.W0_measured},
                  {"constraint_error", init.constraint_error},
                  {"corrector_amplitude", init.corrector_amplitude}};
  std::cout << j.dump(2) << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cahn-Hilliard slow-motion experiments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", code_version());

  std::string config, out_dir, compare, csv, model = "power", column = "gap_bump", dir;
  double t_lo = 0.0, t_hi = std::numeric_limits<double>::infinity();
  bool auto_window = false;

  auto* run_cmd = app.add_subcommand("run", "integrate a scenario and write CSV, .dat, analysis and manifest");
  run_cmd->add_option("config", config, "scenario file")->required();
  run_cmd->add_option("-o,--out", out_dir, "output directory (default out/<id>)");

  auto* check_cmd = app.add_subcommand("check", "run a scenario and evaluate its acceptance gates");
  check_cmd->add_option("config", config, "scenario file")->required();
  check_cmd->add_option("--compare", compare, "CSV that the new run must reproduce bit for bit");
  check_cmd->add_option("-o,--out", out_dir, "also write outputs here");

  auto* fit_cmd = app.add_subcommand("fit", "least-squares rate fit of one CSV column");
  fit_cmd->add_option("csv", csv, "diagnostics CSV")->required();
  fit_cmd->add_option("--model", model, "power or exp")->check(CLI::IsMember({"power", "exp"}));
  fit_cmd->add_option("--column", column, "column name");
  fit_cmd->add_option("--t-lo", t_lo, "window start");
  fit_cmd->add_option("--t-hi", t_hi, "window end");
  fit_cmd->add_flag("--auto", auto_window, "use the detected algebraic window");

  auto* report_cmd = app.add_subcommand("report", "analyze existing <id>.cfg/<id>.csv pairs without simulating");
  report_cmd->add_option("dir", dir, "directory")->required()->check(CLI::ExistingDirectory);

  auto* profile_cmd = app.add_subcommand("profile", "write reference profiles and initial data");
  profile_cmd->add_option("config", config, "scenario file")->required();
  profile_cmd->add_option("-o,--out", out_dir, "output directory (default out/<id>)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*run_cmd) return cmd_run(config, out_dir);
    if (*check_cmd) return cmd_check(config, compare, out_dir);
    if (*fit_cmd) return cmd_fit(csv, model, column, t_lo, t_hi, auto_window);
    if (*report_cmd) return cmd_report(dir);
    if (*profile_cmd) return cmd_profile(config, out_dir);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    switch (e.code()) {
      case ErrorCode::ConfigSyntax:
      case ErrorCode::UnknownKey:
      case ErrorCode::ConstraintViolation:
        return kConfigError;
      default:
        return kRuntimeError;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
  return kOk;
}
