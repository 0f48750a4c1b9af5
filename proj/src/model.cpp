#include "jumplq/model.hpp"

#include <cmath>
#include <string>

namespace jumplq {

namespace {

std::string shape_str(const Eigen::MatrixXd& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

// Shape + finiteness for one tabulated coefficient.
void check_series(const char* name, const MatSeries& series,
                  Eigen::Index rows, Eigen::Index cols, int n_steps) {
  if (series.empty())
    throw DimensionMismatch(std::string(name) + " is not tabulated");
  const size_t sz = series.values.size();
  if (sz != 1 && sz != static_cast<size_t>(n_steps))
    throw DimensionMismatch(std::string(name) + " has " + std::to_string(sz) +
                            " entries, expected 1 or " + std::to_string(n_steps));
  for (const auto& mat : series.values) {
    if (mat.rows() != rows || mat.cols() != cols)
      throw DimensionMismatch(std::string(name) + " entry is " + shape_str(mat) +
                              ", expected " + std::to_string(rows) + "x" +
                              std::to_string(cols));
    if (!mat.allFinite())
      throw ShapeMismatch(std::string(name) + " contains non-finite entries");
  }
}

// Symmetrize in place when the asymmetry is round-off noise, reject when it
// looks like a user error.
void symmetrize_series(const char* name, MatSeries& series) {
  for (auto& mat : series.values) {
    const double asym = (mat - mat.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-10)
      throw ShapeMismatch(std::string(name) + " is asymmetric by " +
                          std::to_string(asym));
    mat = 0.5 * (mat + mat.transpose()).eval();
  }
}

}  // namespace

ValidatedProblem validate_problem(const ProblemSpec& spec) {
  const TimeGrid& grid = spec.grid;
  if (!(grid.t0 < grid.T) || grid.n_steps < 1 ||
      !std::isfinite(grid.t0) || !std::isfinite(grid.T))
    throw BadGrid("need t0 < T and n_steps >= 1, got t0=" + std::to_string(grid.t0) +
                  " T=" + std::to_string(grid.T) +
                  " n_steps=" + std::to_string(grid.n_steps));

  if (spec.n < 1 || spec.m < 1)
    throw DimensionMismatch("state/control dimensions must be positive, got n=" +
                            std::to_string(spec.n) + " m=" + std::to_string(spec.m));
  if (!(spec.delta_inv > 0.0))
    throw OutOfRange("delta_inv must be positive");

  for (const auto& mk : spec.measure.marks) {
    if (!(mk.rate >= 0.0) || !std::isfinite(mk.rate))
      throw BadProbabilities("jump rate must be finite and nonnegative, got " +
                             std::to_string(mk.rate) + " for mark '" + mk.label + "'");
  }

  if (spec.scenarios.empty())
    throw BadProbabilities("at least one scenario is required");
  double prob_sum = 0.0;
  for (const auto& sc : spec.scenarios) {
    if (!(sc.probability > 0.0))
      throw BadProbabilities("scenario probability must be positive, got " +
                             std::to_string(sc.probability));
    prob_sum += sc.probability;
  }
  if (std::abs(prob_sum - 1.0) > 1e-12)
    throw BadProbabilities("scenario probabilities sum to " + std::to_string(prob_sum));

  ProblemSpec out = spec;
  const int n = spec.n, m = spec.m, n_marks = spec.measure.n_marks();
  const int n_steps = grid.n_steps;

  for (size_t si = 0; si < out.scenarios.size(); ++si) {
    Scenario& sc = out.scenarios[si];
    CoefficientSet& cf = sc.coefficients;
    check_series("A", cf.A, n, n, n_steps);
    check_series("B", cf.B, n, m, n_steps);
    check_series("C", cf.C, n, n, n_steps);
    check_series("D", cf.D, n, m, n_steps);
    if (static_cast<int>(cf.E.size()) != n_marks ||
        static_cast<int>(cf.F.size()) != n_marks)
      throw DimensionMismatch("E/F must carry one series per jump mark (" +
                              std::to_string(n_marks) + "), got " +
                              std::to_string(cf.E.size()) + "/" +
                              std::to_string(cf.F.size()));
    for (int k = 0; k < n_marks; ++k) {
      check_series("E", cf.E[k], n, n, n_steps);
      check_series("F", cf.F[k], n, m, n_steps);
      // The jump map x -> (I+E_k)x must stay invertible with margin.
      for (const auto& ek : cf.E[k].values) {
        const double det = (Eigen::MatrixXd::Identity(n, n) + ek).determinant();
        if (std::abs(det) < spec.delta_inv)
          throw NonInvertibleJumpMap("|det(I+E)| = " + std::to_string(std::abs(det)) +
                                     " below floor " + std::to_string(spec.delta_inv) +
                                     " for mark " + std::to_string(k));
      }
    }

    CostWeights& w = sc.weights;
    check_series("Q", w.Q, n, n, n_steps);
    check_series("S", w.S, m, n, n_steps);
    check_series("R", w.R, m, m, n_steps);
    if (w.G.rows() != n || w.G.cols() != n)
      throw DimensionMismatch("G is " + shape_str(w.G) + ", expected " +
                              std::to_string(n) + "x" + std::to_string(n));
    if (!w.G.allFinite())
      throw ShapeMismatch("G contains non-finite entries");
    symmetrize_series("Q", w.Q);
    symmetrize_series("R", w.R);
    {
      const double asym = (w.G - w.G.transpose()).cwiseAbs().maxCoeff();
      if (asym > 1e-10)
        throw ShapeMismatch("G is asymmetric by " + std::to_string(asym));
      w.G = 0.5 * (w.G + w.G.transpose()).eval();
    }
  }

  // Kill the round-off slack so downstream mixing weights sum to one exactly.
  for (auto& sc : out.scenarios) sc.probability /= prob_sum;

  return ValidatedProblem{std::move(out)};
}

Eigen::MatrixXd nu_integral(const JumpMeasure& measure,
                            const std::vector<Eigen::MatrixXd>& values,
                            Eigen::Index rows, Eigen::Index cols) {
  if (values.size() != static_cast<size_t>(measure.n_marks()))
    throw ShapeMismatch("integrand supplies " + std::to_string(values.size()) +
                        " matrices for " + std::to_string(measure.n_marks()) +
                        " marks");
  if (values.empty()) {
    if (rows < 0 || cols < 0)
      throw ShapeMismatch("empty measure needs an explicit result shape");
    return Eigen::MatrixXd::Zero(rows, cols);
  }
  const Eigen::Index r = values.front().rows(), c = values.front().cols();
  if ((rows >= 0 && rows != r) || (cols >= 0 && cols != c))
    throw ShapeMismatch("declared shape disagrees with integrand");
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(r, c);
  for (size_t k = 0; k < values.size(); ++k) {
    if (values[k].rows() != r || values[k].cols() != c)
      throw ShapeMismatch("integrand shapes differ across marks");
    acc += measure.marks[k].rate * values[k];
  }
  return acc;
}

}  // namespace jumplq
