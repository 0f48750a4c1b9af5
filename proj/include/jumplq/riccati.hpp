#pragma once

#include <Eigen/Dense>

#include <vector>

#include "jumplq/types.hpp"

namespace jumplq {

struct NMH {
  Eigen::MatrixXd N;  // m x m control-weight aggregate
  Eigen::MatrixXd M;  // n x m cross aggregate
  Eigen::MatrixXd H;  // n x n state-weight aggregate
};

// Aggregates at one tabulation step, assembled from (P, Lambda, Xi) and the
// step's coefficients:
//   N = R + D'PD + Integral F'(P+Xi)F nu(de)
//   M = PB + Lambda D + C'PD + Integral [E'PF + (I+E)'Xi F] nu(de) + S'
//   H = A'P + PA + Lambda C + C'Lambda + C'PC
//       + Integral [Xi E + E'Xi + E'PE + E'Xi E] nu(de) + Q
// The martingale parts Lambda (one n x n) and Xi (one n x n per mark) are
// identically zero in the scenario regime, but stay explicit arguments so
// the assembly code carries every term. N and H are symmetrized to kill
// round-off asymmetry.
NMH assemble_nmh_full(const Eigen::MatrixXd& P, const Eigen::MatrixXd& Lambda,
                      const std::vector<Eigen::MatrixXd>& Xi, int step,
                      const Scenario& scenario, const JumpMeasure& measure);

// Scenario-regime form (Lambda = 0, Xi = 0) at time t.
NMH assemble_nmh(const Eigen::MatrixXd& P, double t, const ValidatedProblem& vp,
                 int scenario);

struct RiccatiSolution {
  TimeGrid grid;
  int scenario = 0;
  std::vector<double> t;                 // grid nodes, ascending
  std::vector<Eigen::MatrixXd> P;        // per node, symmetric
  std::vector<Eigen::MatrixXd> N, M, K;  // per node (node's step coefficients)
  std::vector<Eigen::MatrixXd> Lambda;   // per node; identically zero in scope
  std::vector<std::vector<Eigen::MatrixXd>> Xi;  // [mark][node]; zero in scope
  double min_eig_N = 0.0;  // min over nodes of the smallest eigenvalue of N

  // Piecewise-constant lookup: index of the node governing time `time`
  // (left node of the containing step; T maps to the terminal node).
  int node_of(double time) const;
};

// Classical RK4 backward from T on the grid for
//   dP/dt = -(H - M N^{-1} M'),  P(T) = G,
// with the smallest eigenvalue of N checked against eps_N at every stage
// evaluation. N^{-1}M' always goes through an LLT solve of N (positive
// definite by the gate), never an explicit inverse.
RiccatiSolution integrate_sre(const ValidatedProblem& vp, int scenario,
                              double eps_N = 1e-8);

// Gain K(t) = N(t)^{-1} M(t)' by piecewise-constant lookup.
Eigen::MatrixXd feedback_gain(const RiccatiSolution& sol, double t);

// Drift rate of the cost semimartingale at (t, x, v):
//   <(Psi_P + H)x, x> + 2<Mv, x> + <Nv, v>   with Psi_P = -(H - M N^{-1} M'),
// evaluated as written (so the algebraic collapse to <N(v+Kx), v+Kx> is a
// testable identity, not an implementation shortcut).
double pointwise_drift(const RiccatiSolution& sol, double t,
                       const Eigen::VectorXd& x, const Eigen::VectorXd& v);

// Independent oracle: exact discrete-time LQ Riccati recursion for the
// Euler-discretized system with second-moment-exact Brownian/Poisson
// increments, on the grid refined by an integer factor. Returns P at t0.
Eigen::MatrixXd discrete_dp_oracle(const ValidatedProblem& vp, int scenario,
                                   int refine);

}  // namespace jumplq
