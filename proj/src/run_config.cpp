#include "qlc/run_config.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <locale>
#include <ostream>
#include <set>
#include <sstream>

#include "qlc/approximation.hpp"
#include "qlc/control.hpp"
#include "qlc/propagation.hpp"
#include "qlc/qsl.hpp"

namespace qlc {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::pair<Task, const char*> kTaskNames[] = {
    {Task::kSpectrum, "spectrum"},   {Task::kGapSweep, "gap-sweep"},
    {Task::kEvolve, "evolve"},       {Task::kOptimize, "optimize"},
    {Task::kSweep, "sweep"},         {Task::kLandscape, "landscape"},
    {Task::kQsl, "qsl"},             {Task::kCoefficients, "coefficients"},
};

const std::set<std::string> kKnownKeys = {
    "task",     "n_spins",   "coupling", "field",     "degeneracy_offset",
    "T",        "T_grid",    "harmonics", "seed_strategy", "a",
    "g",        "grid",      "a1_range", "a2_range",  "resolution",
    "steps",    "tolerance", "max_steps", "max_iter", "rng_seed",
};

double get_number(const json& doc, const char* key) {
  const json& v = doc.at(key);
  if (!v.is_number()) throw ConfigError(std::string("'") + key + "' must be a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ConfigError(std::string("'") + key + "' must be finite");
  return d;
}

long get_integer(const json& doc, const char* key) {
  const json& v = doc.at(key);
  if (!v.is_number_integer()) {
    throw ConfigError(std::string("'") + key + "' must be an integer");
  }
  return v.get<long>();
}

std::vector<double> get_numbers(const json& doc, const char* key) {
  const json& v = doc.at(key);
  if (!v.is_array()) throw ConfigError(std::string("'") + key + "' must be an array");
  std::vector<double> out;
  for (const json& e : v) {
    if (!e.is_number()) {
      throw ConfigError(std::string("'") + key + "' must contain numbers only");
    }
    out.push_back(e.get<double>());
    if (!std::isfinite(out.back())) {
      throw ConfigError(std::string("'") + key + "' must be finite");
    }
  }
  return out;
}

std::pair<double, double> get_range(const json& doc, const char* key) {
  const auto v = get_numbers(doc, key);
  if (v.size() != 2 || !(v[0] < v[1])) {
    throw ConfigError(std::string("'") + key + "' must be [lo, hi] with lo < hi");
  }
  return {v[0], v[1]};
}

void require(bool cond, const std::string& what) {
  if (!cond) throw ConfigError(what);
}

class CsvWriter {
 public:
  explicit CsvWriter(const fs::path& path) : out_(path) {
    if (!out_) throw std::runtime_error("cannot write " + path.string());
    out_.imbue(std::locale::classic());
  }

  void header(const std::string& line) { out_ << line << '\n'; }

  template <class... Cells>
  void row(const Cells&... cells) {
    bool first = true;
    ((out_ << (first ? "" : ",") << cell(cells), first = false), ...);
    out_ << '\n';
  }

 private:
  static std::string cell(double v) { return format_number(v); }
  static std::string cell(int v) { return std::to_string(v); }
  static std::string cell(long v) { return std::to_string(v); }
  static std::string cell(std::size_t v) { return std::to_string(v); }
  static std::string cell(const std::string& v) { return v; }
  static std::string cell(const char* v) { return v; }
  static std::string cell(bool v) { return v ? "true" : "false"; }

  std::ofstream out_;
};

struct TaskContext {
  const RunConfig& config;
  fs::path out_dir;
  int jobs;
  std::ostream& log;
  RunOutcome outcome;

  fs::path output(const std::string& name) {
    fs::path p = out_dir / name;
    outcome.outputs.push_back(p);
    return p;
  }
};

OptimizeOptions optimize_options(const RunConfig& c) {
  OptimizeOptions o;
  o.harmonics = c.harmonics;
  o.strategies = c.strategies;
  o.bfgs.max_iter = c.max_iter;
  o.evolution.steps = c.steps;
  o.evolution.tolerance = c.tolerance;
  o.evolution.max_steps = c.max_steps;
  return o;
}

EvolutionSpec evolution_spec(const RunConfig& c) {
  return EvolutionSpec{c.steps, c.tolerance, c.max_steps};
}

std::vector<double> run_horizons(const RunConfig& c) {
  if (!c.horizons.empty()) return c.horizons;
  return {*c.horizon};
}

void write_gnuplot(TaskContext& ctx, const std::string& csv,
                   const std::string& body) {
  std::ofstream gp(ctx.output(to_string(ctx.config.task) + ".gp"));
  gp << "set datafile separator ','\n"
     << "set key autotitle columnhead\n"
     << "set terminal pngcairo size 900,600\n"
     << "set output '" << to_string(ctx.config.task) << ".png'\n"
     << body << '\n';
  (void)csv;
}

void run_spectrum(TaskContext& ctx) {
  const Spectrum s = diagonalize(build_hamiltonian(ctx.config.chain, ctx.config.g));
  CsvWriter csv(ctx.output("spectrum.csv"));
  csv.header("index,energy");
  for (Eigen::Index k = 0; k < s.eigenvalues.size(); ++k) {
    csv.row(static_cast<long>(k), s.eigenvalues[k]);
  }
  write_gnuplot(ctx, "spectrum.csv", "plot 'spectrum.csv' using 1:2 with points");
}

void run_gap_sweep(TaskContext& ctx) {
  const auto points = gap_sweep(ctx.config.chain, ctx.config.grid);
  CsvWriter csv(ctx.output("gap-sweep.csv"));
  csv.header("g,gap");
  for (const auto& p : points) csv.row(p.g, p.gap);
  for (const auto& p : points) {
    if (p.closed) ctx.log << "warning: gap closes at g=" << p.g << '\n';
  }
  write_gnuplot(ctx, "gap-sweep.csv", "plot 'gap-sweep.csv' using 1:2 with lines");
}

ConvergenceReport check_point(const ControlProblem& problem, const ControlParams& p,
                              const EvolutionSpec& spec) {
  return refine_until_converged(problem, p, spec);
}

void run_evolve(TaskContext& ctx) {
  const RunConfig& c = ctx.config;
  const ControlProblem problem(c.chain);
  std::vector<double> a = c.amplitudes;
  if (a.empty()) a.assign(static_cast<std::size_t>(c.harmonics), 0.0);
  const ControlParams p{a, *c.horizon};
  const ConvergenceReport conv = check_point(problem, p, evolution_spec(c));
  // report the finest step count of the Richardson triple
  EvolutionSpec fine = evolution_spec(c);
  fine.steps = 4 * conv.base_steps;
  const FidelityReport f = problem.evaluate(p, fine);

  std::string header = "T,steps,fidelity,infidelity,overlap_phase,R_M,R_2M,R_4M,R_extrapolated";
  CsvWriter csv(ctx.output("evolve.csv"));
  if (conv.converged) {
    csv.header(header);
    csv.row(p.horizon, f.steps, f.fidelity, f.infidelity, f.overlap_phase, conv.r_m,
            conv.r_2m, conv.r_4m, conv.extrapolated);
  } else {
    csv.header(header + ",status");
    csv.row(p.horizon, f.steps, f.fidelity, f.infidelity, f.overlap_phase, conv.r_m,
            conv.r_2m, conv.r_4m, conv.extrapolated, std::string("FAILED"));
    ctx.outcome.exit_code = kExitNumerical;
    ctx.outcome.message = "Richardson check failed";
  }
}

void write_sweep_csv(TaskContext& ctx, const std::string& name,
                     const ControlProblem& problem,
                     const std::vector<OptimizationResult>& results) {
  const EvolutionSpec spec = evolution_spec(ctx.config);
  std::vector<bool> ok(results.size(), true);
  std::vector<double> r_opt(results.size());
  std::vector<double> r_lin(results.size());
  parallel_for(results.size(), ctx.jobs, [&](std::size_t i) {
    const auto& r = results[i];
    const auto conv = check_point(problem, ControlParams{r.a_opt, r.horizon}, spec);
    ok[i] = conv.converged;
    r_opt[i] = conv.r_4m;
    std::vector<double> ramp(r.a_opt.size(), 0.0);
    const auto lin = check_point(problem, ControlParams{ramp, r.horizon}, spec);
    ok[i] = ok[i] && lin.converged;
    r_lin[i] = lin.r_4m;
  });
  const bool all_ok = std::all_of(ok.begin(), ok.end(), [](bool b) { return b; });
  CsvWriter csv(ctx.output(name));
  const std::string header = "T,a1_opt,a2_opt,R_opt,R_linear,constraint_ok,iterations";
  csv.header(all_ok ? header : header + ",status");
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& r = results[i];
    const double a2 = r.a_opt.size() > 1 ? r.a_opt[1] : 0.0;
    if (all_ok) {
      csv.row(r.horizon, r.a_opt[0], a2, r_opt[i], r_lin[i], r.constraint_ok,
              r.iterations);
    } else {
      csv.row(r.horizon, r.a_opt[0], a2, r_opt[i], r_lin[i], r.constraint_ok,
              r.iterations, std::string(ok[i] ? "OK" : "FAILED"));
    }
  }
  if (!all_ok) {
    ctx.outcome.exit_code = kExitNumerical;
    ctx.outcome.message = "Richardson check failed for at least one optimum";
  }
}

void run_optimize(TaskContext& ctx) {
  const ControlProblem problem(ctx.config.chain);
  OptimizeOptions o = optimize_options(ctx.config);
  if (!ctx.config.amplitudes.empty()) {
    // a user-given start acts as the warm start
    o.warm_start = ctx.config.amplitudes;
    o.warm_start->resize(static_cast<std::size_t>(o.harmonics), 0.0);
    o.warm_horizon = *ctx.config.horizon;
  }
  const auto r = optimize_infidelity(problem, *ctx.config.horizon, o);
  ctx.log << "T=" << r.horizon << " seed=" << to_string(r.seed_strategy)
          << " status=" << to_string(r.status) << '\n';
  write_sweep_csv(ctx, "optimize.csv", problem, {r});
}

void run_sweep(TaskContext& ctx) {
  const ControlProblem problem(ctx.config.chain);
  const auto horizons = run_horizons(ctx.config);
  const auto results =
      sweep_horizons(problem, horizons, optimize_options(ctx.config), ctx.jobs);
  write_sweep_csv(ctx, "sweep.csv", problem, results);

  std::vector<GammaMaximum> gm(horizons.size());
  parallel_for(horizons.size(), ctx.jobs,
               [&](std::size_t i) { gm[i] = maximize_gamma(horizons[i]); });
  CsvWriter table(ctx.output("table1.csv"));
  table.header("T,a2_opt,gamma,gamma_over_T");
  for (std::size_t i = 0; i < horizons.size(); ++i) {
    table.row(horizons[i], gm[i].a2, gm[i].gamma, gm[i].gamma / horizons[i]);
  }
  write_gnuplot(ctx, "sweep.csv",
                "set logscale x\n"
                "plot 'sweep.csv' using 1:4 with linespoints title 'optimized', \\\n"
                "     'sweep.csv' using 1:5 with linespoints title 'linear ramp'");
}

void run_landscape(TaskContext& ctx) {
  const RunConfig& c = ctx.config;
  const ControlProblem problem(c.chain);
  const LandscapeGrid grid = landscape_scan(problem, *c.horizon, c.a1_range, c.a2_range,
                                            c.a1_points, c.a2_points, ctx.jobs,
                                            evolution_spec(c));
  CsvWriter csv(ctx.output("landscape.csv"));
  csv.header("a1,a2,fidelity");
  for (std::size_t i = 0; i < grid.a1_axis.size(); ++i) {
    for (std::size_t j = 0; j < grid.a2_axis.size(); ++j) {
      csv.row(grid.a1_axis[i], grid.a2_axis[j],
              grid.fidelity(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    }
  }
  CsvWriter ridges(ctx.output("landscape_ridges.csv"));
  ridges.header("a1,mean_fidelity,variance_along_a2");
  for (const Ridge& r : find_ridges(grid)) {
    ridges.row(r.a1, r.mean_fidelity, r.variance_along_a2);
  }
  write_gnuplot(ctx, "landscape.csv",
                "set view map\n"
                "set xlabel 'a2'\nset ylabel 'a1'\n"
                "splot 'landscape.csv' using 2:1:3 with points pointtype 5 "
                "pointsize 0.4 palette notitle");
}

void run_qsl(TaskContext& ctx) {
  const RunConfig& c = ctx.config;
  const ControlProblem problem(c.chain);
  const auto horizons = run_horizons(c);
  std::vector<std::vector<double>> controls(horizons.size());
  if (!c.amplitudes.empty()) {
    for (auto& a : controls) a = c.amplitudes;
  } else {
    const auto results = sweep_horizons(problem, horizons, optimize_options(c), ctx.jobs);
    for (std::size_t i = 0; i < results.size(); ++i) controls[i] = results[i].a_opt;
  }
  std::vector<QslReport> reports(horizons.size());
  std::vector<bool> ok(horizons.size());
  parallel_for(horizons.size(), ctx.jobs, [&](std::size_t i) {
    const ControlParams p{controls[i], horizons[i]};
    reports[i] = qsl_ratio(problem, p, evolution_spec(c));
    ok[i] = check_point(problem, p, evolution_spec(c)).converged;
  });
  const bool all_ok = std::all_of(ok.begin(), ok.end(), [](bool b) { return b; });
  CsvWriter csv(ctx.output("qsl.csv"));
  const std::string header = "T,bures_angle,energy_integral,t_qsl,ratio";
  csv.header(all_ok ? header : header + ",status");
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto& r = reports[i];
    if (all_ok) {
      csv.row(r.horizon, r.bures_angle, r.energy_integral, r.t_qsl, r.ratio);
    } else {
      csv.row(r.horizon, r.bures_angle, r.energy_integral, r.t_qsl, r.ratio,
              std::string(ok[i] ? "OK" : "FAILED"));
    }
  }
  if (!all_ok) {
    ctx.outcome.exit_code = kExitNumerical;
    ctx.outcome.message = "Richardson check failed for at least one point";
  }
  write_gnuplot(ctx, "qsl.csv",
                "set logscale x\nplot 'qsl.csv' using 1:5 with linespoints");
}

void run_coefficients(TaskContext& ctx) {
  const LinearLawCoefficients k = linear_law_coefficients(ctx.config.chain);
  CsvWriter csv(ctx.output("coefficients.csv"));
  csv.header("f0,fZ,Im_fXY,F1,F2,K_gamma,slope");
  csv.row(k.f0, k.fz, k.fxy_imag, k.f1, k.f2, k.k_gamma, k.slope);
}

}  // namespace

std::string to_string(Task task) {
  for (const auto& [t, name] : kTaskNames) {
    if (t == task) return name;
  }
  return "unknown";
}

Task task_from_string(const std::string& name) {
  for (const auto& [t, n] : kTaskNames) {
    if (name == n) return t;
  }
  throw ConfigError("unknown task '" + name + "'");
}

std::string format_number(double value) {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os << std::setprecision(10) << value;
  return os.str();
}

RunConfig parse_run_config(const json& doc) {
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, _] : doc.items()) {
    if (!kKnownKeys.count(key)) throw ConfigError("unknown key '" + key + "'");
  }
  RunConfig c;
  try {
    require(doc.contains("task") && doc["task"].is_string(), "'task' is required");
    c.task = task_from_string(doc["task"].get<std::string>());

    if (doc.contains("n_spins")) c.chain.n_spins = static_cast<int>(get_integer(doc, "n_spins"));
    if (doc.contains("coupling")) c.chain.coupling = get_number(doc, "coupling");
    if (doc.contains("field")) c.chain.field = get_number(doc, "field");
    if (doc.contains("degeneracy_offset")) {
      c.chain.degeneracy_offset = get_number(doc, "degeneracy_offset");
    }
    try {
      c.chain.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }

    if (doc.contains("T")) {
      c.horizon = get_number(doc, "T");
      require(*c.horizon > 0.0, "'T' must be positive");
    }
    if (doc.contains("T_grid")) {
      c.horizons = get_numbers(doc, "T_grid");
      require(!c.horizons.empty(), "'T_grid' must not be empty");
      for (double t : c.horizons) require(t > 0.0, "'T_grid' entries must be positive");
    }
    if (doc.contains("harmonics")) {
      c.harmonics = static_cast<int>(get_integer(doc, "harmonics"));
      require(c.harmonics >= 1 && c.harmonics <= 16, "'harmonics' must lie in [1, 16]");
    }
    if (doc.contains("seed_strategy")) {
      const json& s = doc["seed_strategy"];
      c.strategies.clear();
      if (s.is_string()) {
        c.strategies.push_back(seed_strategy_from_string(s.get<std::string>()));
      } else if (s.is_array() && !s.empty()) {
        for (const json& e : s) {
          require(e.is_string(), "'seed_strategy' entries must be strings");
          c.strategies.push_back(seed_strategy_from_string(e.get<std::string>()));
        }
      } else {
        throw ConfigError("'seed_strategy' must be a string or non-empty array");
      }
    }
    if (doc.contains("a")) {
      c.amplitudes = get_numbers(doc, "a");
      require(!c.amplitudes.empty(), "'a' must not be empty");
      if (!doc.contains("harmonics")) c.harmonics = static_cast<int>(c.amplitudes.size());
      require(static_cast<int>(c.amplitudes.size()) == c.harmonics,
              "'a' length must equal 'harmonics'");
    }
    if (doc.contains("g")) c.g = get_number(doc, "g");
    if (doc.contains("grid")) {
      c.grid = static_cast<int>(get_integer(doc, "grid"));
      require(c.grid >= 2, "'grid' must be >= 2");
    }
    if (doc.contains("a1_range")) c.a1_range = get_range(doc, "a1_range");
    if (doc.contains("a2_range")) c.a2_range = get_range(doc, "a2_range");
    if (doc.contains("resolution")) {
      const json& r = doc["resolution"];
      if (r.is_number_integer()) {
        c.a1_points = c.a2_points = r.get<int>();
      } else {
        const auto v = get_numbers(doc, "resolution");
        require(v.size() == 2, "'resolution' must be an integer or [n_a1, n_a2]");
        c.a1_points = static_cast<int>(v[0]);
        c.a2_points = static_cast<int>(v[1]);
        require(c.a1_points == v[0] && c.a2_points == v[1],
                "'resolution' entries must be integers");
      }
      require(c.a1_points >= 2 && c.a2_points >= 2, "'resolution' must be >= 2 per axis");
    }
    if (doc.contains("steps")) {
      c.steps = get_integer(doc, "steps");
      require(c.steps >= 1 && c.steps <= kMaxSteps, "'steps' out of range");
    }
    if (doc.contains("tolerance")) {
      c.tolerance = get_number(doc, "tolerance");
      require(c.tolerance > 0.0, "'tolerance' must be positive");
    }
    if (doc.contains("max_steps")) {
      c.max_steps = get_integer(doc, "max_steps");
      require(c.max_steps >= 4 && c.max_steps <= kMaxSteps, "'max_steps' out of range");
    }
    if (doc.contains("max_iter")) {
      c.max_iter = static_cast<int>(get_integer(doc, "max_iter"));
      require(c.max_iter >= 1, "'max_iter' must be >= 1");
    }
    if (doc.contains("rng_seed")) c.rng_seed = get_integer(doc, "rng_seed");
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  } catch (const json::exception& e) {
    throw ConfigError(e.what());
  }

  switch (c.task) {
    case Task::kEvolve:
    case Task::kOptimize:
    case Task::kLandscape:
      require(c.horizon.has_value(), "task '" + to_string(c.task) + "' needs 'T'");
      break;
    case Task::kSweep:
    case Task::kQsl:
      require(c.horizon.has_value() || !c.horizons.empty(),
              "task '" + to_string(c.task) + "' needs 'T' or 'T_grid'");
      break;
    default:
      break;
  }
  if (c.task == Task::kLandscape) {
    require(c.harmonics == 2, "landscape scans use exactly two harmonics");
  }
  return c;
}

RunConfig load_run_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config does not parse: ") + e.what());
  }
  return parse_run_config(doc);
}

json to_json(const RunConfig& c) {
  json j;
  j["task"] = to_string(c.task);
  j["n_spins"] = c.chain.n_spins;
  j["coupling"] = c.chain.coupling;
  j["field"] = c.chain.field;
  j["degeneracy_offset"] = c.chain.degeneracy_offset;
  if (c.horizon) j["T"] = *c.horizon;
  if (!c.horizons.empty()) j["T_grid"] = c.horizons;
  j["harmonics"] = c.harmonics;
  std::vector<std::string> seeds;
  for (auto s : c.strategies) seeds.push_back(to_string(s));
  j["seed_strategy"] = seeds;
  if (!c.amplitudes.empty()) j["a"] = c.amplitudes;
  j["g"] = c.g;
  j["grid"] = c.grid;
  j["a1_range"] = {c.a1_range.first, c.a1_range.second};
  j["a2_range"] = {c.a2_range.first, c.a2_range.second};
  j["resolution"] = {c.a1_points, c.a2_points};
  j["steps"] = c.steps;
  j["tolerance"] = c.tolerance;
  j["max_steps"] = c.max_steps;
  j["max_iter"] = c.max_iter;
  j["rng_seed"] = c.rng_seed;
  return j;
}

RunOutcome execute(const RunConfig& config, const fs::path& out_dir, int jobs,
                   std::ostream& log) {
  const auto start = std::chrono::steady_clock::now();
  fs::create_directories(out_dir);
  TaskContext ctx{config, out_dir, std::max(jobs, 1), log, {}};

  switch (config.task) {
    case Task::kSpectrum: run_spectrum(ctx); break;
    case Task::kGapSweep: run_gap_sweep(ctx); break;
    case Task::kEvolve: run_evolve(ctx); break;
    case Task::kOptimize: run_optimize(ctx); break;
    case Task::kSweep: run_sweep(ctx); break;
    case Task::kLandscape: run_landscape(ctx); break;
    case Task::kQsl: run_qsl(ctx); break;
    case Task::kCoefficients: run_coefficients(ctx); break;
  }

  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  json manifest;
  manifest["version"] = QLC_VERSION;
  manifest["config"] = to_json(config);
  manifest["jobs"] = ctx.jobs;
  std::vector<std::string> files;
  for (const auto& p : ctx.outcome.outputs) files.push_back(p.filename().string());
  manifest["outputs"] = files;
  manifest["status"] = ctx.outcome.exit_code == kExitOk ? "ok" : "failed";
  if (!ctx.outcome.message.empty()) manifest["message"] = ctx.outcome.message;
  manifest["elapsed_seconds"] = elapsed;
  const fs::path manifest_path = out_dir / (to_string(config.task) + ".manifest.json");
  std::ofstream(manifest_path) << manifest.dump(2) << '\n';
  ctx.outcome.outputs.push_back(manifest_path);
  return ctx.outcome;
}

RunOutcome run_from_file(const fs::path& config_path, const fs::path& out_dir,
                         int jobs, std::ostream& log) {
  RunConfig config;
  try {
    config = load_run_config(config_path);
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << '\n';
    return {kExitConfig, {}, e.what()};
  }
  try {
    return execute(config, out_dir, jobs, log);
  } catch (const ConvergenceError& e) {
    log << "numerical failure: " << e.what() << '\n';
    return {kExitNumerical, {}, e.what()};
  } catch (const DegeneracyError& e) {
    log << "numerical failure: " << e.what() << '\n';
    return {kExitNumerical, {}, e.what()};
  }
}

}  // namespace qlc
