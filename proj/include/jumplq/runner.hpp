#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "jumplq/config.hpp"

namespace jumplq {

// JSON serialization with every floating-point number printed to 17
// significant digits (the reproducibility contract for emitted reports).
std::string dump_json17(const nlohmann::ordered_json& j);

struct FileOut {
  std::string name;     // basename, e.g. "riccati_s0.csv"
  std::string content;  // already formatted
  bool is_csv = false;
};

struct RunResult {
  nlohmann::ordered_json payload;
  int exit_code = 0;
  std::vector<FileOut> files;
};

// Execute one subcommand on a parsed config, in memory: returns the report
// payload, the exit code, and the would-be output files. Throws jumplq
// errors for invalid inputs or solver failures (the CLI maps those to exit
// code 1); a clean run that fails its verification checks returns 2.
RunResult run_payload(const RunConfig& cfg, const std::string& command);

// CLI entry: run the config's command, write the requested files into
// output.directory, print the payload to stdout, return the exit code.
int run_command(const RunConfig& cfg);

}  // namespace jumplq
