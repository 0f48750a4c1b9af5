#pragma once

#include <Eigen/Dense>

#include <string>
#include <utility>
#include <vector>

#include "jumplq/errors.hpp"

namespace jumplq {

struct TimeGrid {
  double t0 = 0.0;
  double T = 1.0;
  int n_steps = 1;

  double dt() const { return (T - t0) / n_steps; }
  double node(int i) const { return i == n_steps ? T : t0 + i * dt(); }

  // Uniform step containing time t, clamped to [0, n_steps-1] so the
  // terminal node resolves to the last step.
  int step_of(double t) const {
    int i = static_cast<int>((t - t0) / dt());
    if (i < 0) i = 0;
    if (i > n_steps - 1) i = n_steps - 1;
    return i;
  }
};

struct JumpMark {
  double rate = 0.0;  // jumps per unit time
  std::string label;
};

struct JumpMeasure {
  std::vector<JumpMark> marks;

  int n_marks() const { return static_cast<int>(marks.size()); }
  double total_rate() const {
    double s = 0.0;
    for (const auto& mk : marks) s += mk.rate;
    return s;
  }
};

// Time-tabulated matrix: one entry per grid step (left-endpoint,
// piecewise-constant on steps), or a single entry meaning constant in time.
struct MatSeries {
  std::vector<Eigen::MatrixXd> values;

  MatSeries() = default;
  MatSeries(Eigen::MatrixXd constant) : values{std::move(constant)} {}
  MatSeries(std::vector<Eigen::MatrixXd> per_step) : values(std::move(per_step)) {}

  bool is_constant() const { return values.size() == 1; }
  bool empty() const { return values.empty(); }
  const Eigen::MatrixXd& at(int step) const {
    return is_constant() ? values.front() : values.at(static_cast<size_t>(step));
  }
  Eigen::Index rows() const { return values.empty() ? 0 : values.front().rows(); }
  Eigen::Index cols() const { return values.empty() ? 0 : values.front().cols(); }
};

// Convenience for scalar problems and tests: wrap a number as a 1x1 series.
inline MatSeries scalar_series(double v) {
  Eigen::MatrixXd mat(1, 1);
  mat(0, 0) = v;
  return MatSeries(mat);
}

struct CoefficientSet {
  MatSeries A;                 // n x n
  MatSeries B;                 // n x m
  MatSeries C;                 // n x n
  MatSeries D;                 // n x m
  std::vector<MatSeries> E;    // per mark, n x n
  std::vector<MatSeries> F;    // per mark, n x m
};

struct CostWeights {
  MatSeries Q;        // n x n symmetric
  MatSeries S;        // m x n
  MatSeries R;        // m x m symmetric
  Eigen::MatrixXd G;  // n x n symmetric terminal weight
};

struct Scenario {
  double probability = 1.0;
  CoefficientSet coefficients;
  CostWeights weights;
};

struct ProblemSpec {
  TimeGrid grid;
  JumpMeasure measure;
  std::vector<Scenario> scenarios;
  int n = 0;                // state dimension
  int m = 0;                // control dimension
  double delta_inv = 1e-6;  // floor on |det(I + E_k)|
};

// Only validate_problem() makes one of these; downstream code takes it as
// proof the shape/invariant checks already ran.
struct ValidatedProblem {
  ProblemSpec spec;

  const TimeGrid& grid() const { return spec.grid; }
  const JumpMeasure& measure() const { return spec.measure; }
  const Scenario& scenario(int i) const {
    if (i < 0 || i >= n_scenarios())
      throw OutOfRange("scenario index " + std::to_string(i) + " of " +
                       std::to_string(n_scenarios()));
    return spec.scenarios[static_cast<size_t>(i)];
  }
  int n_scenarios() const { return static_cast<int>(spec.scenarios.size()); }
  int n() const { return spec.n; }
  int m() const { return spec.m; }
};

}  // namespace jumplq
