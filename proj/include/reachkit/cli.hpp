#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "reachkit/polyapprox.hpp"

namespace reachkit::cli {

enum ExitCode { kOk = 0, kFailure = 1, kModelError = 2, kAssumption = 3, kIterationCap = 4 };

struct Overrides {
  std::optional<double> dt, cell, tau;
  std::optional<bool> under;
  std::optional<poly::BoundMode> bounds;
  std::optional<int> max_iters;
  std::string format = "csv";
};

struct RunReport {
  std::string command;
  std::string model;
  int exit_code = kOk;
  std::string message;
  nlohmann::json diagnostics = nlohmann::json::object();
  nlohmann::json effective = nlohmann::json::object();  // parameters actually used
  std::vector<std::string> outputs;
  double elapsed_ms = 0.0;

  /// Stable layout; non-finite numbers are written as strings.
  [[nodiscard]] nlohmann::json to_json() const;
};

/// Loads the model, dispatches the command, writes outputs and report.json into out_dir.
RunReport run(const std::string& command, const std::string& model_path, const std::string& out_dir,
              const Overrides& overrides = {});

/// Exit status for an error code raised by the library.
int exit_code_for(ErrorCode code);

/// Command-line entry point.
int main(int argc, char** argv);

}  // namespace reachkit::cli
