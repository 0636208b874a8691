#pragma once

// Command-line front end. Exit codes are a stable contract:
//   0 success / all satisfied      1 input, file or format error
//   2 sampled LTL property violated 3 formula cannot be strengthened
//   4 only the MTL property violated (malformed trace)
//   5 a strengthening assumption does not hold for the grid

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "sampleguard/assumptions.hpp"
#include "sampleguard/control.hpp"
#include "sampleguard/monitor.hpp"
#include "sampleguard/semantics.hpp"
#include "sampleguard/smc.hpp"
#include "sampleguard/strengthen.hpp"
#include "sampleguard/syntax.hpp"
#include "sampleguard/trace_io.hpp"

namespace sampleguard::cli {

enum ExitCode : int {
  kOk = 0,
  kInputError = 1,
  kLtlViolated = 2,
  kUnsupported = 3,
  kMtlOnlyViolated = 4,
  kAssumptionUnsatisfied = 5,
};

struct ScenarioConfig {
  std::filesystem::path grid;
  std::string controller = "noop";
  TabularQParams q;
  Duration delta{5};
  std::optional<Duration> delta_small;
  Duration horizon{60};
  std::filesystem::path formulas;
  SmcConfig smc;
  std::optional<std::filesystem::path> out;

  Duration tick() const { return delta_small.value_or(Duration(delta.value() / 5)); }

  void validate() const {
    if (!delta.is_positive()) throw Error(ErrorCode::Domain, "delta must be positive");
    if (!delta.is_multiple_of(tick())) throw Error(ErrorCode::ResolutionMismatch, "delta must be a multiple of delta_small");
    if (!horizon.is_positive() || !horizon.is_multiple_of(delta))
      throw Error(ErrorCode::Domain, "horizon must be a positive multiple of delta");
    if (!std::filesystem::exists(grid)) throw Error(ErrorCode::Io, "grid file '" + grid.string() + "' not found");
    if (!std::filesystem::exists(formulas))
      throw Error(ErrorCode::Io, "formula file '" + formulas.string() + "' not found");
  }
};

namespace detail {

inline Duration duration_field(const nlohmann::json& j, const char* key, Duration fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  const auto& v = j.at(key);
  return v.is_string() ? parse_duration(v.get<std::string>()) : parse_duration(v.dump());
}

inline std::optional<std::uint64_t> env_seed() {
  const char* s = std::getenv("SAMPLEGUARD_SEED");
  if (!s || !*s) return std::nullopt;
  try {
    return std::stoull(s);
  } catch (...) {
    throw Error(ErrorCode::Domain, "SAMPLEGUARD_SEED is not an unsigned integer");
  }
}

inline std::string utc_timestamp() {
  std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

inline std::string verdict_text(const Verdict& v) {
  if (v.sat()) return "sat";
  std::string s = "violated";
  if (v.index) s += " at sample " + std::to_string(*v.index);
  if (v.window_start && v.index && *v.window_start != *v.index)
    s += " (window starting at sample " + std::to_string(*v.window_start) + ")";
  if (v.time) s += " at t=" + v.time->str() + " min";
  return s;
}

/// Parses every line of a formula file, reporting the line on failure.
inline std::vector<std::pair<std::size_t, MtlFormula>> parse_formula_file(const std::string& path) {
  std::vector<std::pair<std::size_t, MtlFormula>> out;
  for (const auto& fl : read_formula_file(path)) {
    try {
      out.emplace_back(fl.line, parse_mtl(fl.text));
    } catch (const Error& e) {
      throw Error(e.code(), path + ":" + std::to_string(fl.line) + ": " + e.what());
    }
  }
  if (out.empty()) throw Error(ErrorCode::Syntax, path + ": no formulas");
  return out;
}

inline MtlFormula conjunction_of(const std::vector<std::pair<std::size_t, MtlFormula>>& fs) {
  std::vector<MtlFormula> parts;
  for (const auto& [line, f] : fs) parts.push_back(f);
  return conjoin(parts);
}

inline bool is_strengthen_refusal(ErrorCode c) {
  return c == ErrorCode::UnsupportedFragment || c == ErrorCode::NonZeroLowerBound || c == ErrorCode::SamplingTooCoarse;
}

}  // namespace detail

inline ScenarioConfig load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open scenario '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Syntax, path.string() + ": " + e.what());
  }
  auto base = path.parent_path();
  auto rel = [&](const std::string& p) { return std::filesystem::path(p).is_absolute() ? std::filesystem::path(p) : base / p; };
  ScenarioConfig c;
  try {
    c.grid = rel(j.at("grid").get<std::string>());
    c.formulas = rel(j.at("formulas").get<std::string>());
    c.controller = j.value("controller", std::string("noop"));
    c.q.epsilon = j.value("epsilon", c.q.epsilon);
    c.q.episodes = j.value("episodes", c.q.episodes);
    c.delta = detail::duration_field(j, "delta", c.delta);
    if (j.contains("delta_small")) c.delta_small = detail::duration_field(j, "delta_small", Duration(1));
    c.horizon = detail::duration_field(j, "horizon", c.horizon);
    if (j.contains("seed")) c.smc.master_seed = j.at("seed").get<std::uint64_t>();
    else if (auto s = detail::env_seed()) c.smc.master_seed = *s;
    if (j.contains("out")) c.out = rel(j.at("out").get<std::string>());
    const auto& smc = j.at("smc");
    c.smc.alpha = smc.value("alpha", c.smc.alpha);
    if (smc.contains("n")) c.smc.n_fixed = smc.at("n").get<std::size_t>();
    if (smc.contains("epsilon")) c.smc.epsilon = smc.at("epsilon").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Syntax, path.string() + ": " + e.what());
  }
  return c;
}

inline int cmd_strengthen(const std::string& formula_file, const Duration& delta, std::ostream& out, std::ostream& err) {
  std::vector<FormulaLine> lines;
  try {
    lines = read_formula_file(formula_file);
  } catch (const Error& e) {
    err << e.what() << '\n';
    return kInputError;
  }
  for (const auto& fl : lines) {
    try {
      auto result = strengthen(parse_mtl(fl.text), delta);
      out << to_json(result).dump() << '\n';
    } catch (const Error& e) {
      err << formula_file << ":" << fl.line << ": " << e.what() << '\n';
      return detail::is_strengthen_refusal(e.code()) ? kUnsupported : kInputError;
    }
  }
  return kOk;
}

inline int cmd_check_trace(const std::string& trace_file, const std::string& formula_file,
                           const std::optional<Duration>& delta_flag, std::ostream& out, std::ostream& err) {
  TraceFile tf;
  std::vector<std::pair<std::size_t, MtlFormula>> formulas;
  try {
    tf = read_trace_file(trace_file);
    formulas = detail::parse_formula_file(formula_file);
  } catch (const Error& e) {
    err << e.what() << '\n';
    return kInputError;
  }
  auto delta = delta_flag ? delta_flag : tf.delta_sample;
  if (!delta) {
    err << "no sampling period: pass --delta or set delta_sample in the trace header\n";
    return kInputError;
  }
  bool ltl_violated = false, mtl_violated = false;
  try {
    SampledTrace sampled = sample_dense(tf.dense, *delta);
    for (const auto& [line, mtl] : formulas) {
      auto s = strengthen(mtl, *delta);
      Verdict ltl = monitor_run(compile_monitor(s.ltl), sampled);
      Verdict dense = eval_mtl_dense(mtl, tf.dense);
      out << "formula " << line << ": " << format_formula(mtl) << '\n';
      out << "  ltl " << format_formula(s.ltl) << ": " << detail::verdict_text(ltl) << '\n';
      out << "  mtl: " << detail::verdict_text(dense) << '\n';
      ltl_violated |= ltl.violated();
      mtl_violated |= dense.violated();
    }
  } catch (const Error& e) {
    err << e.what() << '\n';
    return detail::is_strengthen_refusal(e.code()) ? kUnsupported : kInputError;
  }
  if (ltl_violated) return kLtlViolated;
  if (mtl_violated) {
    out << "malformed trace: MTL violated while the strengthened LTL holds on the samples\n";
    return kMtlOnlyViolated;
  }
  return kOk;
}

struct SimulateOptions {
  std::string grid;
  std::string controller = "noop";
  std::optional<std::string> formulas;
  Duration delta{5};
  std::optional<Duration> delta_small;
  Duration horizon{60};
  std::uint64_t seed = 0;
  std::optional<std::string> out;
};

inline int cmd_simulate(const SimulateOptions& o, std::ostream& out, std::ostream& err) {
  try {
    GridSpec grid = load_grid(o.grid);
    ControllerSpec cs = parse_controller(o.controller);
    std::optional<Monitor> monitor;
    if (o.formulas) {
      auto fs = detail::parse_formula_file(*o.formulas);
      monitor = compile_monitor(strengthen(detail::conjunction_of(fs), o.delta).ltl);
    } else if (cs.shielded) {
      err << "a shielded controller needs --formulas\n";
      return kInputError;
    }
    Duration tick = o.delta_small.value_or(Duration(o.delta.value() / 5));
    TabularQController::Table table;
    if (cs.kind == ControllerSpec::Kind::TabularQ)
      table = train_tabular_q(grid, cs.q, o.horizon, o.delta, tick, splitmix64(o.seed));
    auto c = make_controller(cs, grid, o.seed, monitor, table);
    ControllerRef ref{*c};
    EpisodeRecord rec = run_episode(grid, ref, o.horizon, o.delta, tick, o.seed);
    if (o.out) {
      std::ofstream f(*o.out);
      if (!f) throw Error(ErrorCode::Io, "cannot write '" + *o.out + "'");
      write_episode(f, rec);
    } else {
      write_episode(out, rec);
    }
  } catch (const Error& e) {
    err << e.what() << '\n';
    return detail::is_strengthen_refusal(e.code()) ? kUnsupported : kInputError;
  }
  return kOk;
}

struct SmcOptions {
  std::optional<std::uint64_t> seed;
  std::size_t jobs = 1;
  std::optional<std::string> out;
  bool csv = false;
};

/// Report document without the timestamp, which callers add separately.
inline nlohmann::json smc_report(const ScenarioConfig& c, const Property& p, const SmcResult& r,
                                 const std::vector<AssumptionReport>& assumptions) {
  nlohmann::json j;
  j["config"] = {{"controller", c.controller},
                 {"delta_minutes", c.delta.str()},
                 {"delta_small_minutes", c.tick().str()},
                 {"horizon_minutes", c.horizon.str()},
                 {"padding_minutes", p.padding().str()},
                 {"master_seed", c.smc.master_seed},
                 {"alpha", c.smc.alpha},
                 {"epsilon", c.smc.epsilon ? nlohmann::json(*c.smc.epsilon) : nlohmann::json(nullptr)},
                 {"n_fixed", c.smc.n_fixed ? nlohmann::json(*c.smc.n_fixed) : nlohmann::json(nullptr)}};
  j["property"] = {{"mtl", format_formula(p.mtl)}, {"ltl", format_formula(p.strengthened.ltl)},
                   {"m", p.strengthened.horizon_m ? nlohmann::json(*p.strengthened.horizon_m) : nlohmann::json(nullptr)},
                   {"monitor", p.monitor.description()}};
  j["assumptions"] = nlohmann::json::array();
  for (const auto& a : assumptions) j["assumptions"].push_back(to_json(a));
  j["result"] = to_json(r);
  return j;
}

inline int cmd_smc(const std::string& scenario_file, const SmcOptions& o, std::ostream& out, std::ostream& err) {
  ScenarioConfig c;
  GridSpec grid;
  std::optional<Property> property;
  ControllerSpec cs;
  try {
    c = load_scenario(scenario_file);
    if (o.seed) c.smc.master_seed = *o.seed;
    c.smc.jobs = o.jobs;
    if (o.out) c.out = *o.out;
    c.validate();
    grid = load_grid(c.grid.string());
    cs = parse_controller(c.controller);
    cs.q = c.q;
    auto fs = detail::parse_formula_file(c.formulas.string());
    property = Property::from(detail::conjunction_of(fs), c.delta);
  } catch (const Error& e) {
    err << e.what() << '\n';
    return detail::is_strengthen_refusal(e.code()) ? kUnsupported : kInputError;
  }

  auto assumptions = check_assumptions(property->strengthened, grid);
  for (const auto& a : assumptions) {
    if (!a.satisfied) {
      err << "assumption unsatisfied: " << to_json(a.assumption).dump() << ": " << a.note << '\n';
      return kAssumptionUnsatisfied;
    }
  }

  SmcResult r;
  try {
    r = smc_estimate(grid, cs, *property, c.smc, {c.horizon, c.delta, c.tick()});
  } catch (const Error& e) {
    err << e.what() << '\n';
    return e.code() == ErrorCode::AssumptionUnsatisfied ? kAssumptionUnsatisfied : kInputError;
  }

  nlohmann::json report = smc_report(c, *property, r, assumptions);
  report["generated_at"] = detail::utc_timestamp();

  if (c.out) {
    std::filesystem::create_directories(*c.out);
    std::ofstream(*c.out / "report.json") << report.dump(2) << '\n';
    std::ofstream per(*c.out / "per_trace.jsonl");
    for (const auto& t : r.per_trace) per << to_json(t).dump() << '\n';
    if (o.csv) {
      std::ofstream csv(*c.out / "per_trace.csv");
      csv << "index,seed,ltl,mtl\n";
      for (const auto& t : r.per_trace)
        csv << t.index << ',' << t.seed << ',' << (t.ltl.sat() ? "sat" : "violated") << ','
            << (t.mtl.sat() ? "sat" : "violated") << '\n';
    }
  }

  out << std::setprecision(6);
  out << "episodes: " << r.n << " (alpha " << r.alpha << ")\n";
  out << "p_hat_ltl: " << r.p_hat_ltl << "  CI [" << r.ci_ltl.lo << ", " << r.ci_ltl.hi << "]\n";
  out << "p_hat_mtl: " << r.p_hat_mtl << "  CI [" << r.ci_mtl.lo << ", " << r.ci_mtl.hi << "]\n";
  out << "successes ltl/mtl: " << r.successes_ltl << "/" << r.successes_mtl
      << (r.pairing_ok ? "  (ltl <= mtl on every trace)" : "  (PAIRING BROKEN)") << '\n';
  if (!c.out) out << report.dump(2) << '\n';
  return kOk;
}

/// Entry point shared by the executable and the tests.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Sampled-time safety checking for grid controllers"};
  app.require_subcommand(1);

  std::string delta_text = "5", delta_small_text, horizon_text = "60";
  std::optional<std::uint64_t> seed;
  std::size_t jobs = 1;
  std::string out_path;
  bool csv = false;

  auto* strengthen_cmd = app.add_subcommand("strengthen", "Strengthen MTL formulas into sampled LTL");
  std::string formula_file;
  strengthen_cmd->add_option("formulas", formula_file, "Formula file (one MTL formula per line)")->required();
  strengthen_cmd->add_option("--delta", delta_text, "Sampling period in minutes");

  auto* check_cmd = app.add_subcommand("check-trace", "Check a JSONL trace against formulas");
  std::string trace_file;
  std::string check_delta;
  check_cmd->add_option("trace", trace_file, "JSONL trace file")->required();
  check_cmd->add_option("formulas", formula_file, "Formula file")->required();
  check_cmd->add_option("--delta", check_delta, "Sampling period in minutes (defaults to the trace header)");

  auto* sim_cmd = app.add_subcommand("simulate", "Run one closed-loop episode and write its trace");
  SimulateOptions sim;
  std::optional<std::string> sim_formulas;
  sim_cmd->add_option("--grid", sim.grid, "Grid JSON")->required();
  sim_cmd->add_option("--controller", sim.controller, "noop|random|greedy|tabular_q|shielded:<inner>");
  sim_cmd->add_option("--formulas", sim_formulas, "Formula file (needed by shielded controllers)");
  sim_cmd->add_option("--delta", delta_text, "Sampling period in minutes");
  sim_cmd->add_option("--delta-small", delta_small_text, "Inner simulation step in minutes");
  sim_cmd->add_option("--horizon", horizon_text, "Episode length in minutes");
  sim_cmd->add_option("--seed", seed, "Episode seed");
  sim_cmd->add_option("--out", out_path, "Output JSONL (default stdout)");

  auto* smc_cmd = app.add_subcommand("smc", "Statistical model checking campaign");
  std::string scenario;
  smc_cmd->add_option("scenario", scenario, "Scenario JSON")->required();
  smc_cmd->add_option("--seed", seed, "Master seed (overrides the scenario)");
  smc_cmd->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
  smc_cmd->add_option("--out", out_path, "Output directory (overrides the scenario)");
  smc_cmd->add_flag("--csv", csv, "Also write per_trace.csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kOk : kInputError;
  }

  try {
    if (*strengthen_cmd) return cmd_strengthen(formula_file, parse_duration(delta_text), out, err);
    if (*check_cmd)
      return cmd_check_trace(trace_file, formula_file,
                             check_delta.empty() ? std::nullopt : std::optional<Duration>(parse_duration(check_delta)),
                             out, err);
    if (*sim_cmd) {
      sim.formulas = sim_formulas;
      sim.delta = parse_duration(delta_text);
      if (!delta_small_text.empty()) sim.delta_small = parse_duration(delta_small_text);
      sim.horizon = parse_duration(horizon_text);
      sim.seed = seed ? *seed : detail::env_seed().value_or(0);
      if (!out_path.empty()) sim.out = out_path;
      return cmd_simulate(sim, out, err);
    }
    SmcOptions so;
    so.seed = seed;
    so.jobs = jobs;
    so.csv = csv;
    if (!out_path.empty()) so.out = out_path;
    return cmd_smc(scenario, so, out, err);
  } catch (const Error& e) {
    err << e.what() << '\n';
    return kInputError;
  }
}

}  // namespace sampleguard::cli
