#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

#include "jumplq/riccati.hpp"
#include "jumplq/sdep.hpp"
#include "jumplq/types.hpp"

namespace jumplq {

struct CostEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  long n_paths = 0;
  bool exact = false;  // true when the number came from the moment ODE
};

// Quadratic cost of one stored path under its scenario's weights: trapezoid
// of the running integrand on the event skeleton plus the terminal term.
double path_cost(const ValidatedProblem& vp, const PathData& path,
                 int scenario);

// Sample mean / standard error over a stored bundle. With several scenarios
// the paths are grouped by their scenario and combined with the scenario
// probabilities (stratified estimate), so the bundle's per-scenario path
// counts need not match the probabilities.
CostEstimate estimate_cost(const ValidatedProblem& vp, const PathBundle& paths);

// Deterministic stratified scenario assignment for n paths: counts by
// largest remainder of probability * n, scenario blocks contiguous.
std::vector<int> stratified_scenarios(const ValidatedProblem& vp, int n_paths);

// Feedback policy u = -K(t) x for one Riccati solution. The policy keeps a
// reference to `sol`, which must outlive it.
Policy feedback_policy(const RiccatiSolution& sol);

// Simulate every path under the feedback u = -K(t) x of its scenario's
// Riccati solution (one solution per scenario, index-aligned).
PathBundle closed_loop_simulate(const ValidatedProblem& vp,
                                const std::vector<RiccatiSolution>& sols,
                                const Eigen::VectorXd& initial,
                                const NoiseBundle& noise);

// Streaming variant: per-path costs without retaining the paths (the large
// Monte Carlo runs go through this). policies and scenario assignment are
// per scenario / per path respectively.
std::vector<double> streamed_costs(const ValidatedProblem& vp,
                                   const std::vector<int>& scenario_of,
                                   const std::vector<Policy>& policies,
                                   const Eigen::VectorXd& initial,
                                   const NoiseBundle& noise);

// Probability-weighted mean / standard error of per-path values grouped by
// scenario (the reduction behind estimate_cost, exposed for reuse).
CostEstimate grouped_estimate(const ValidatedProblem& vp,
                              const std::vector<double>& values,
                              const std::vector<int>& scenario_of);

// Exact expected cost of an open-loop tabulated control from the joint ODE
// system for (mean, second moment, running cost), integrated by RK4 on the
// grid. u_steps holds one vector per step, or a single vector meaning
// constant in time.
double moment_ode_cost(const ValidatedProblem& vp, int scenario,
                       const std::vector<Eigen::VectorXd>& u_steps,
                       const Eigen::VectorXd& initial);

// Probability mixture of moment_ode_cost over all scenarios.
double mixture_moment_cost(const ValidatedProblem& vp,
                           const std::vector<Eigen::VectorXd>& u_steps,
                           const Eigen::VectorXd& initial);

// Completion-of-squares check for an open-loop control u:
//   J(u)  vs  <P(t0) xi, xi> + E integral <N (u + K x), u + K x> ds,
// both sides estimated on the same paths. residual is the absolute gap of
// the means; diff_std_error the standard error of the per-path difference.
struct CompletionStats {
  double mc_mean = 0.0;
  double mc_std_error = 0.0;
  double predicted_mean = 0.0;
  double diff_std_error = 0.0;
  double residual = 0.0;
};

CompletionStats completion_stats(const ValidatedProblem& vp,
                                 const std::vector<RiccatiSolution>& sols,
                                 const std::vector<Eigen::VectorXd>& u_steps,
                                 const Eigen::VectorXd& initial,
                                 const NoiseBundle& noise);

double completion_residual(const ValidatedProblem& vp,
                           const std::vector<RiccatiSolution>& sols,
                           const std::vector<Eigen::VectorXd>& u_steps,
                           const Eigen::VectorXd& initial,
                           const NoiseBundle& noise);

// Smallest J(t0, 0; u) over a probe family of unit-L2-norm controls (the
// coordinate constants plus n_controls random tabulated ones), each cost
// exact via the moment ODE. A positive return is evidence of the uniform
// convexity floor; the value estimates the floor's constant.
double convexity_probe(const ValidatedProblem& vp, int n_controls,
                       std::uint64_t seed);

// A standard-normal tabulated control (one vector per step) from the
// counter stream, optionally scaled to unit L2 norm over the horizon.
std::vector<Eigen::VectorXd> random_tabulated_control(const TimeGrid& grid,
                                                      int m, std::uint64_t seed,
                                                      std::uint64_t index,
                                                      bool normalize);

// Second-order optimality probe around the synthesized feedback: for each
// direction v and epsilon, the cost gap of u = -Kx + eps*v against the
// feedback itself on common noise.
struct PerturbationRow {
  int direction = 0;
  double epsilon = 0.0;
  double delta_j = 0.0;
  double std_error = 0.0;  // of the per-path cost difference
};

std::vector<PerturbationRow> perturbation_test(
    const ValidatedProblem& vp, const std::vector<RiccatiSolution>& sols,
    const Eigen::VectorXd& initial,
    const std::vector<std::vector<Eigen::VectorXd>>& directions,
    const std::vector<double>& epsilons, int n_paths, std::uint64_t seed);

}  // namespace jumplq
