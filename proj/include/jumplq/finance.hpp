#pragma once

#include <vector>

#include "jumplq/types.hpp"

namespace jumplq {

// Scalar wealth problem: dX = r X dt + sigma u dW + sum_k gamma_k u dN~_k,
// cost (alpha/2) * integral u^2 - (lambda/2) X(T)^2. Rate/volatility/jump
// tabulations hold one value per grid step, or a single value meaning
// constant in time.
struct FinanceParams {
  double lambda = 1.0;  // terminal penalty weight, > 0
  double alpha = 0.1;   // trading penalty weight, > 0
  std::vector<double> r{0.0};
  std::vector<double> sigma{0.0};
  std::vector<std::vector<double>> gammas;  // per mark
  double T = 1.0;
  double x0 = 1.0;
};

// One-scenario ProblemSpec with n = m = 1, A = r, B = 0, C = 0, D = sigma,
// E_k = 0, F_k = gamma_k, Q = 0, S = 0, R = alpha/2, G = -lambda/2.
ProblemSpec build_wealth_spec(const FinanceParams& params, const TimeGrid& grid,
                              const JumpMeasure& measure);

// Uniform-convexity threshold on alpha:
//   lambda * max over steps of e^{2 * integral_t^T r} (sigma(t)^2 + gbar(t)^2)
// with gbar^2 = sum_k rate_k gamma_k^2, the exponent integral taken exactly
// for the piecewise-constant tabulation, and the max attained at a step's
// left node (the exponential factor is nonincreasing for r >= 0).
double uc_threshold(const FinanceParams& params, const TimeGrid& grid,
                    const JumpMeasure& measure);

// Closed-form Riccati kernel P(t) = -(lambda/2) e^{2 * integral_t^T r}.
double analytic_kernel(const FinanceParams& params, const TimeGrid& grid,
                       double t);

}  // namespace jumplq
