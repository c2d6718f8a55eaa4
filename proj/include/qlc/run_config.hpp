#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "qlc/optimizer.hpp"
#include "qlc/propagation.hpp"
#include "qlc/spin_model.hpp"

namespace qlc {

/// Bad or incomplete run configuration (CLI exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Task {
  kSpectrum,
  kGapSweep,
  kEvolve,
  kOptimize,
  kSweep,
  kLandscape,
  kQsl,
  kCoefficients,
};

std::string to_string(Task task);
Task task_from_string(const std::string& name);

/// One reproducible run. Every key of the config file maps to a field here;
/// unknown keys are rejected.
struct RunConfig {
  Task task = Task::kCoefficients;
  ChainConfig chain;

  std::optional<double> horizon;  // "T"
  std::vector<double> horizons;   // "T_grid"
  int harmonics = 2;
  std::vector<SeedStrategy> strategies{SeedStrategy::kContinuation,
                                       SeedStrategy::kCold,
                                       SeedStrategy::kAnalytic};
  std::vector<double> amplitudes;  // "a"; empty means not given

  double g = 0.0;   // spectrum
  int grid = 101;   // gap-sweep
  std::pair<double, double> a1_range{-60.0, 60.0};
  std::pair<double, double> a2_range{-60.0, 60.0};
  int a1_points = 201;
  int a2_points = 201;

  long steps = 1;
  double tolerance = 1e-8;
  long max_steps = kMaxSteps;
  int max_iter = 500;
  long rng_seed = 0;  // reserved; every task is deterministic
};

/// Parses and validates a config object. Throws ConfigError.
RunConfig parse_run_config(const nlohmann::json& doc);
RunConfig load_run_config(const std::filesystem::path& path);

/// Fully resolved parameters, as written to the manifest.
nlohmann::json to_json(const RunConfig& config);

/// Fixed-format number: 10 significant digits, classic locale.
std::string format_number(double value);

/// Exit codes of `run`.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;

struct RunOutcome {
  int exit_code = kExitOk;
  std::vector<std::filesystem::path> outputs;
  std::string message;
};

/// Executes the task and writes <task>.csv (plus companions), a gnuplot
/// script and <task>.manifest.json into `out_dir`.
RunOutcome execute(const RunConfig& config, const std::filesystem::path& out_dir,
                   int jobs, std::ostream& log);

/// Loads, validates and executes; maps failures onto exit codes. Nothing is
/// written when the config is invalid.
RunOutcome run_from_file(const std::filesystem::path& config_path,
                         const std::filesystem::path& out_dir, int jobs,
                         std::ostream& log);

}  // namespace qlc
