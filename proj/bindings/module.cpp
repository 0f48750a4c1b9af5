#include <pybind11/pybind11.h>

#include <string>

#include <json.hpp>

#include "jumplq/config.hpp"
#include "jumplq/errors.hpp"
#include "jumplq/runner.hpp"

namespace py = pybind11;

PYBIND11_MODULE(_core, m) {
  m.doc() = "Indefinite stochastic LQ control for jump diffusions";

  py::register_exception<jumplq::Error>(m, "JumpLqError");

  // One JSON-in / JSON-out entry point: everything the CLI can do, minus the
  // filesystem. The returned envelope carries the exit code, the payload
  // and the would-be output files.
  m.def(
      "run_json",
      [](const std::string& command, const std::string& config_json) {
        jumplq::RunConfig cfg = jumplq::parse_config_text(config_json);
        jumplq::RunResult res = jumplq::run_payload(cfg, command);
        nlohmann::ordered_json files = nlohmann::ordered_json::object();
        for (const auto& f : res.files) files[f.name] = f.content;
        nlohmann::ordered_json env{{"exit_code", res.exit_code},
                                   {"payload", std::move(res.payload)},
                                   {"files", std::move(files)}};
        return jumplq::dump_json17(env);
      },
      py::arg("command"), py::arg("config_json"),
      "Run a subcommand (riccati, simulate, evaluate, verify, probe, "
      "finance) on a JSON config string; returns a JSON envelope.");
}
