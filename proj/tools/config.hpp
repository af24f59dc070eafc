#pragma once

// Problem definition files (TOML or JSON) -> operator data.

#include <optional>
#include <string>

#include <json.hpp>

#include "maslov/problem.hpp"

namespace maslov::cli {

struct GridSpec {
  double x_min = -40.0;
  double x_max = 40.0;
  int n_points = 4001;
  bool given = false;
};

struct ToleranceSpec {
  std::optional<double> tol_s, tol_rank, tol_asym, kernel_tol, rtol, atol, h_max, tol_lag, h_fd;
};

struct RunConfig {
  std::string source;
  std::string name;
  int n = 0;
  Vec diffusion;
  double shift = 0.0;
  nlohmann::json potential;  // as given, for the report
  GridSpec grid;
  ToleranceSpec tolerances;
  std::optional<Problem> problem;     // every kind
  std::optional<PulseProblem> pulse;  // gradient-rd only
};

/// Thrown for malformed files (usage exit code).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Parses TOML (default) or JSON (by extension .json); unknown keys are rejected.
RunConfig load_config(const std::string& path);

/// Same, from already-parsed JSON; `base_dir` resolves relative csv paths.
RunConfig config_from_json(const nlohmann::json& doc, const std::string& base_dir, const std::string& source);

}  // namespace maslov::cli
