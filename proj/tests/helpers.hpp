#pragma once

// Builders shared across the test suites. Everything here goes through
// validate_problem, so a test that gets one of these back can lean on the
// structural invariants without restating them.

#include <Eigen/Dense>

#include <vector>

#include "jumplq/model.hpp"
#include "jumplq/types.hpp"

namespace testutil {

inline Eigen::MatrixXd mat1(double v) {
  Eigen::MatrixXd m(1, 1);
  m(0, 0) = v;
  return m;
}

inline Eigen::VectorXd vec1(double v) {
  Eigen::VectorXd x(1);
  x(0) = v;
  return x;
}

// Scalar problem data; one jump mark per entry of rates/es/fs.
struct ScalarSpec {
  double a = 0.0, b = 0.0, c = 0.0, d = 0.0;
  std::vector<double> rates, es, fs;
  double q = 0.0, s = 0.0, r = 1.0, g = 0.0;
};

inline jumplq::ProblemSpec scalar_spec(const jumplq::TimeGrid& grid,
                                       const ScalarSpec& p) {
  jumplq::ProblemSpec spec;
  spec.grid = grid;
  spec.n = 1;
  spec.m = 1;
  for (double rate : p.rates) spec.measure.marks.push_back({rate, ""});

  jumplq::Scenario sc;
  sc.probability = 1.0;
  sc.coefficients.A = jumplq::scalar_series(p.a);
  sc.coefficients.B = jumplq::scalar_series(p.b);
  sc.coefficients.C = jumplq::scalar_series(p.c);
  sc.coefficients.D = jumplq::scalar_series(p.d);
  for (size_t k = 0; k < p.rates.size(); ++k) {
    sc.coefficients.E.push_back(jumplq::scalar_series(p.es.at(k)));
    sc.coefficients.F.push_back(jumplq::scalar_series(p.fs.at(k)));
  }
  sc.weights.Q = jumplq::scalar_series(p.q);
  sc.weights.S = jumplq::scalar_series(p.s);
  sc.weights.R = jumplq::scalar_series(p.r);
  sc.weights.G = mat1(p.g);
  spec.scenarios.push_back(std::move(sc));
  return spec;
}

inline jumplq::ValidatedProblem scalar_problem(const jumplq::TimeGrid& grid,
                                               const ScalarSpec& p) {
  return jumplq::validate_problem(scalar_spec(grid, p));
}

// The scalar benchmark used by several suites: every coefficient active,
// indefinite-free weights, one jump mark. Well inside the convexity region.
inline jumplq::ValidatedProblem bench_problem(int n_steps) {
  ScalarSpec p;
  p.a = 0.1;
  p.b = 1.0;
  p.c = 0.3;
  p.d = 0.2;
  p.rates = {1.0};
  p.es = {0.2};
  p.fs = {0.1};
  p.q = 1.0;
  p.s = 0.0;
  p.r = 1.0;
  p.g = 1.0;
  return scalar_problem(jumplq::TimeGrid{0.0, 1.0, n_steps}, p);
}

}  // namespace testutil
