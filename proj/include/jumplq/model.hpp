#pragma once

#include <Eigen/Dense>

#include <vector>

#include "jumplq/types.hpp"

namespace jumplq {

// Checks every structural invariant of the problem data (shapes against
// n/m, grid sanity, probabilities summing to one, |det(I+E_k)| >= delta_inv,
// finiteness) and symmetrizes Q, R, G when their asymmetry is below 1e-10.
// Gross asymmetry is rejected as a likely user error.
ValidatedProblem validate_problem(const ProblemSpec& spec);

// Finite-measure jump integral: sum_k rate_k * values[k]. An empty measure
// yields the zero matrix of the declared shape (rows/cols must then be
// given; otherwise the shape is inferred from the integrand).
Eigen::MatrixXd nu_integral(const JumpMeasure& measure,
                            const std::vector<Eigen::MatrixXd>& values,
                            Eigen::Index rows = -1, Eigen::Index cols = -1);

}  // namespace jumplq
