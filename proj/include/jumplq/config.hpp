#pragma once

#include <cstdint>
#include <string>

#include "jumplq/finance.hpp"
#include "jumplq/types.hpp"

namespace jumplq {

struct McConfig {
  int n_paths = 10000;
  std::uint64_t seed = 12345;
};

struct Tolerances {
  double eps_N = 1e-8;
  double delta_inv = 1e-6;
  int refine = 2;
};

struct OutputConfig {
  std::string directory = ".";
  bool csv = true;
  bool json = true;
};

// A parsed run: the problem document plus the run plumbing. For a finance
// config the wealth ProblemSpec is already built and `has_finance` is set so
// the finance subcommand can reach the closed forms.
struct RunConfig {
  std::string command;  // may stay empty until the CLI picks the subcommand
  ProblemSpec problem;
  bool has_finance = false;
  FinanceParams finance;
  Eigen::VectorXd initial;  // defaults to zero (finance: x0)
  McConfig mc;
  Tolerances tolerances;
  OutputConfig output;
};

// Strict-schema JSON config parsing: unknown keys anywhere are a
// SchemaError naming the key; malformed JSON is a ParseError carrying the
// parser's position message. Matrices are nested row-major arrays; a
// time-tabulated coefficient is an array of matrices (length n_steps) or a
// single matrix meaning constant in time.
RunConfig parse_config_text(const std::string& text);
RunConfig parse_config(const std::string& path);

}  // namespace jumplq
