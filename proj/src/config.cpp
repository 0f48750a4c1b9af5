#include "jumplq/config.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <utility>
#include <vector>

#include <json.hpp>

#include "jumplq/errors.hpp"

namespace jumplq {

namespace {

using json = nlohmann::ordered_json;

void require_keys(const json& obj, const std::string& where,
                  const std::set<std::string>& allowed) {
  if (!obj.is_object())
    throw SchemaError(where + " must be a JSON object");
  for (const auto& item : obj.items())
    if (!allowed.count(item.key()))
      throw SchemaError("unknown key \"" + item.key() + "\" in " + where);
}

const json& need(const json& obj, const std::string& where,
                 const std::string& key) {
  auto it = obj.find(key);
  if (it == obj.end())
    throw SchemaError("missing key \"" + key + "\" in " + where);
  return *it;
}

double as_number(const json& j, const std::string& where) {
  if (!j.is_number())
    throw SchemaError(where + " must be a number");
  return j.get<double>();
}

long as_integer(const json& j, const std::string& where) {
  if (!j.is_number_integer())
    throw SchemaError(where + " must be an integer");
  return j.get<long>();
}

std::string as_string(const json& j, const std::string& where) {
  if (!j.is_string())
    throw SchemaError(where + " must be a string");
  return j.get<std::string>();
}

Eigen::MatrixXd parse_matrix(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty())
    throw SchemaError(where + " must be a non-empty array of rows");
  const size_t rows = j.size();
  size_t cols = 0;
  for (size_t r = 0; r < rows; ++r) {
    const json& row = j[r];
    if (!row.is_array() || row.empty())
      throw SchemaError(where + " rows must be non-empty arrays");
    if (r == 0)
      cols = row.size();
    else if (row.size() != cols)
      throw SchemaError(where + " has ragged rows");
  }
  Eigen::MatrixXd out(static_cast<long>(rows), static_cast<long>(cols));
  for (size_t r = 0; r < rows; ++r)
    for (size_t c = 0; c < cols; ++c)
      out(static_cast<long>(r), static_cast<long>(c)) =
          as_number(j[r][c], where + " entry");
  return out;
}

// A matrix is rows-of-numbers; a tabulation is an array of matrices. The
// first leaf's depth disambiguates.
MatSeries parse_series(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty())
    throw SchemaError(where + " must be a matrix or an array of matrices");
  const json& head = j[0];
  const bool tabulated =
      head.is_array() && !head.empty() && head[0].is_array();
  if (!tabulated) return MatSeries(parse_matrix(j, where));
  std::vector<Eigen::MatrixXd> mats;
  mats.reserve(j.size());
  for (size_t i = 0; i < j.size(); ++i)
    mats.push_back(
        parse_matrix(j[i], where + "[" + std::to_string(i) + "]"));
  return MatSeries(std::move(mats));
}

std::vector<double> parse_scalar_series(const json& j,
                                        const std::string& where) {
  if (j.is_number()) return {j.get<double>()};
  if (!j.is_array() || j.empty())
    throw SchemaError(where + " must be a number or a non-empty array");
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& v : j) out.push_back(as_number(v, where + " entry"));
  return out;
}

TimeGrid parse_grid(const json& j) {
  require_keys(j, "grid", {"t0", "T", "n_steps"});
  TimeGrid g;
  g.t0 = j.contains("t0") ? as_number(j["t0"], "grid.t0") : 0.0;
  g.T = as_number(need(j, "grid", "T"), "grid.T");
  const long steps = as_integer(need(j, "grid", "n_steps"), "grid.n_steps");
  if (steps < 1 || steps > (1L << 30))
    throw SchemaError("grid.n_steps out of range");
  g.n_steps = static_cast<int>(steps);
  return g;
}

JumpMeasure parse_measure(const json& j) {
  require_keys(j, "measure", {"marks"});
  const json& marks = need(j, "measure", "marks");
  if (!marks.is_array())
    throw SchemaError("measure.marks must be an array");
  JumpMeasure m;
  for (size_t k = 0; k < marks.size(); ++k) {
    const std::string where = "measure.marks[" + std::to_string(k) + "]";
    require_keys(marks[k], where, {"rate", "label"});
    JumpMark mk;
    mk.rate = as_number(need(marks[k], where, "rate"), where + ".rate");
    if (marks[k].contains("label"))
      mk.label = as_string(marks[k]["label"], where + ".label");
    m.marks.push_back(std::move(mk));
  }
  return m;
}

CostWeights parse_weights(const json& j, const std::string& where) {
  require_keys(j, where, {"Q", "S", "R", "G"});
  CostWeights w;
  w.Q = parse_series(need(j, where, "Q"), where + ".Q");
  w.S = parse_series(need(j, where, "S"), where + ".S");
  w.R = parse_series(need(j, where, "R"), where + ".R");
  w.G = parse_matrix(need(j, where, "G"), where + ".G");
  return w;
}

std::vector<MatSeries> parse_per_mark(const json& j, const std::string& where,
                                      int n_marks) {
  if (!j.is_array())
    throw SchemaError(where + " must be an array with one entry per mark");
  if (static_cast<int>(j.size()) != n_marks)
    throw SchemaError(where + " must have exactly one entry per mark");
  std::vector<MatSeries> out;
  for (size_t k = 0; k < j.size(); ++k)
    out.push_back(
        parse_series(j[k], where + "[" + std::to_string(k) + "]"));
  return out;
}

Scenario parse_scenario(const json& j, const std::string& where, int n_marks,
                        const json* shared_weights) {
  require_keys(j, where, {"probability", "coefficients", "weights"});
  Scenario sc;
  if (j.contains("probability"))
    sc.probability = as_number(j["probability"], where + ".probability");
  const json& cf = need(j, where, "coefficients");
  const std::string cw = where + ".coefficients";
  require_keys(cf, cw, {"A", "B", "C", "D", "E", "F"});
  sc.coefficients.A = parse_series(need(cf, cw, "A"), cw + ".A");
  sc.coefficients.B = parse_series(need(cf, cw, "B"), cw + ".B");
  sc.coefficients.C = parse_series(need(cf, cw, "C"), cw + ".C");
  sc.coefficients.D = parse_series(need(cf, cw, "D"), cw + ".D");
  if (n_marks == 0) {
    if (cf.contains("E") && !cf["E"].empty())
      throw SchemaError(cw + ".E given but the measure has no marks");
    if (cf.contains("F") && !cf["F"].empty())
      throw SchemaError(cw + ".F given but the measure has no marks");
  } else {
    sc.coefficients.E = parse_per_mark(need(cf, cw, "E"), cw + ".E", n_marks);
    sc.coefficients.F = parse_per_mark(need(cf, cw, "F"), cw + ".F", n_marks);
  }
  if (j.contains("weights"))
    sc.weights = parse_weights(j["weights"], where + ".weights");
  else if (shared_weights)
    sc.weights = parse_weights(*shared_weights, "weights");
  else
    throw SchemaError(where +
                      " has no weights and no top-level weights are given");
  return sc;
}

FinanceParams parse_finance(const json& j, const TimeGrid& grid,
                            const JumpMeasure& measure) {
  require_keys(j, "finance",
               {"lambda", "alpha", "r", "sigma", "gammas", "T", "x0"});
  FinanceParams p;
  p.lambda = as_number(need(j, "finance", "lambda"), "finance.lambda");
  p.alpha = as_number(need(j, "finance", "alpha"), "finance.alpha");
  p.r = parse_scalar_series(need(j, "finance", "r"), "finance.r");
  p.sigma = parse_scalar_series(need(j, "finance", "sigma"), "finance.sigma");
  p.gammas.clear();
  const json& gj = need(j, "finance", "gammas");
  if (!gj.is_array())
    throw SchemaError("finance.gammas must be an array (one entry per mark)");
  if (static_cast<int>(gj.size()) != measure.n_marks())
    throw SchemaError("finance.gammas must have one entry per mark");
  for (size_t k = 0; k < gj.size(); ++k)
    p.gammas.push_back(parse_scalar_series(
        gj[k], "finance.gammas[" + std::to_string(k) + "]"));
  p.T = j.contains("T") ? as_number(j["T"], "finance.T") : grid.T;
  if (j.contains("x0")) p.x0 = as_number(j["x0"], "finance.x0");
  return p;
}

RunConfig parse_document(const json& doc) {
  require_keys(doc, "config",
               {"command", "grid", "measure", "scenarios", "weights",
                "finance", "initial", "mc", "tolerances", "output"});

  RunConfig cfg;
  if (doc.contains("command")) {
    cfg.command = as_string(doc["command"], "command");
    static const std::set<std::string> known{"riccati",  "simulate", "evaluate",
                                            "verify",   "probe",    "finance"};
    if (!known.count(cfg.command))
      throw SchemaError("unknown command \"" + cfg.command + "\"");
  }

  const TimeGrid grid = parse_grid(need(doc, "config", "grid"));
  const JumpMeasure measure = parse_measure(need(doc, "config", "measure"));

  if (doc.contains("tolerances")) {
    const json& tj = doc["tolerances"];
    require_keys(tj, "tolerances", {"eps_N", "delta_inv", "refine"});
    if (tj.contains("eps_N"))
      cfg.tolerances.eps_N = as_number(tj["eps_N"], "tolerances.eps_N");
    if (tj.contains("delta_inv"))
      cfg.tolerances.delta_inv =
          as_number(tj["delta_inv"], "tolerances.delta_inv");
    if (tj.contains("refine")) {
      const long rf = as_integer(tj["refine"], "tolerances.refine");
      if (rf < 1 || rf > 4096)
        throw SchemaError("tolerances.refine out of range");
      cfg.tolerances.refine = static_cast<int>(rf);
    }
  }

  const bool has_scenarios = doc.contains("scenarios");
  const bool has_finance = doc.contains("finance");
  if (has_scenarios == has_finance)
    throw SchemaError(
        "config needs exactly one of \"scenarios\" and \"finance\"");

  if (has_finance) {
    cfg.has_finance = true;
    cfg.finance = parse_finance(doc["finance"], grid, measure);
    if (doc.contains("weights"))
      throw SchemaError("\"weights\" does not apply to a finance config");
    cfg.problem = build_wealth_spec(cfg.finance, grid, measure);
    cfg.initial = Eigen::VectorXd::Constant(1, cfg.finance.x0);
  } else {
    const json& sj = doc["scenarios"];
    if (!sj.is_array() || sj.empty())
      throw SchemaError("\"scenarios\" must be a non-empty array");
    const json* shared =
        doc.contains("weights") ? &doc["weights"] : nullptr;
    ProblemSpec spec;
    spec.grid = grid;
    spec.measure = measure;
    for (size_t i = 0; i < sj.size(); ++i)
      spec.scenarios.push_back(
          parse_scenario(sj[i], "scenarios[" + std::to_string(i) + "]",
                         measure.n_marks(), shared));
    spec.n = static_cast<int>(spec.scenarios.front().coefficients.A.rows());
    spec.m = static_cast<int>(spec.scenarios.front().coefficients.B.cols());
    cfg.problem = std::move(spec);
    cfg.initial = Eigen::VectorXd::Zero(cfg.problem.n);
  }
  cfg.problem.delta_inv = cfg.tolerances.delta_inv;

  if (doc.contains("initial")) {
    const json& ij = doc["initial"];
    if (!ij.is_array() || ij.empty())
      throw SchemaError("\"initial\" must be a non-empty array of numbers");
    cfg.initial.resize(static_cast<long>(ij.size()));
    for (size_t i = 0; i < ij.size(); ++i)
      cfg.initial(static_cast<long>(i)) = as_number(ij[i], "initial entry");
    if (cfg.initial.size() != cfg.problem.n)
      throw SchemaError("\"initial\" length does not match the state dim");
  }

  if (doc.contains("mc")) {
    const json& mj = doc["mc"];
    require_keys(mj, "mc", {"n_paths", "seed"});
    if (mj.contains("n_paths")) {
      const long np = as_integer(mj["n_paths"], "mc.n_paths");
      if (np < 1 || np > 100000000L)
        throw SchemaError("mc.n_paths out of range");
      cfg.mc.n_paths = static_cast<int>(np);
    }
    if (mj.contains("seed")) {
      const long sd = as_integer(mj["seed"], "mc.seed");
      if (sd < 0) throw SchemaError("mc.seed must be nonnegative");
      cfg.mc.seed = static_cast<std::uint64_t>(sd);
    }
  }

  if (doc.contains("output")) {
    const json& oj = doc["output"];
    require_keys(oj, "output", {"directory", "formats"});
    if (oj.contains("directory"))
      cfg.output.directory = as_string(oj["directory"], "output.directory");
    if (oj.contains("formats")) {
      const json& fj = oj["formats"];
      if (!fj.is_array())
        throw SchemaError("output.formats must be an array");
      cfg.output.csv = false;
      cfg.output.json = false;
      for (const auto& f : fj) {
        const std::string fmt = as_string(f, "output.formats entry");
        if (fmt == "csv")
          cfg.output.csv = true;
        else if (fmt == "json")
          cfg.output.json = true;
        else
          throw SchemaError("unknown output format \"" + fmt + "\"");
      }
    }
  }
  return cfg;
}

}  // namespace

RunConfig parse_config_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_document(doc);
}

RunConfig parse_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw ParseError("cannot open config file \"" + path + "\"");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

}  // namespace jumplq
