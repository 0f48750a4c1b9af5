#include "jumplq/riccati.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include "jumplq/errors.hpp"

namespace jumplq {

namespace {

Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& a) {
  return 0.5 * (a + a.transpose());
}

double smallest_eigenvalue(const Eigen::MatrixXd& sym) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym,
                                                    Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

}  // namespace

NMH assemble_nmh_full(const Eigen::MatrixXd& P, const Eigen::MatrixXd& Lambda,
                      const std::vector<Eigen::MatrixXd>& Xi, int step,
                      const Scenario& scenario, const JumpMeasure& measure) {
  const CoefficientSet& cf = scenario.coefficients;
  const CostWeights& w = scenario.weights;
  const long n = P.rows();
  if (P.cols() != n || Lambda.rows() != n || Lambda.cols() != n)
    throw DimensionMismatch("assemble_nmh: P/Lambda must be n x n");
  if (static_cast<int>(Xi.size()) != measure.n_marks())
    throw DimensionMismatch("assemble_nmh: one Xi block per mark required");

  const Eigen::MatrixXd& A = cf.A.at(step);
  const Eigen::MatrixXd& B = cf.B.at(step);
  const Eigen::MatrixXd& C = cf.C.at(step);
  const Eigen::MatrixXd& D = cf.D.at(step);
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);

  NMH out;
  out.N = w.R.at(step) + D.transpose() * P * D;
  out.M = P * B + Lambda * D + C.transpose() * P * D +
          w.S.at(step).transpose();
  out.H = A.transpose() * P + P * A + Lambda * C + C.transpose() * Lambda +
          C.transpose() * P * C + w.Q.at(step);

  for (int k = 0; k < measure.n_marks(); ++k) {
    const double rate = measure.marks[static_cast<size_t>(k)].rate;
    const Eigen::MatrixXd& E = cf.E[static_cast<size_t>(k)].at(step);
    const Eigen::MatrixXd& F = cf.F[static_cast<size_t>(k)].at(step);
    const Eigen::MatrixXd& X = Xi[static_cast<size_t>(k)];
    out.N += rate * (F.transpose() * (P + X) * F);
    out.M += rate * (E.transpose() * P * F + (I + E).transpose() * X * F);
    out.H += rate * (X * E + E.transpose() * X + E.transpose() * P * E +
                     E.transpose() * X * E);
  }
  out.N = symmetrized(out.N);
  out.H = symmetrized(out.H);
  return out;
}

NMH assemble_nmh(const Eigen::MatrixXd& P, double t, const ValidatedProblem& vp,
                 int scenario) {
  const Scenario& sc = vp.scenario(scenario);
  const int n = vp.n();
  const Eigen::MatrixXd zero_l = Eigen::MatrixXd::Zero(n, n);
  std::vector<Eigen::MatrixXd> zero_xi(
      static_cast<size_t>(vp.measure().n_marks()),
      Eigen::MatrixXd::Zero(n, n));
  return assemble_nmh_full(P, zero_l, zero_xi, vp.grid().step_of(t), sc,
                           vp.measure());
}

int RiccatiSolution::node_of(double time) const {
  const double span = grid.T - grid.t0;
  const double slack = 1e-9 * span;
  if (time < grid.t0 - slack || time > grid.T + slack)
    throw OutOfRange("time outside the solution's horizon");
  if (time >= grid.T) return grid.n_steps;
  return grid.step_of(time);
}

namespace {

struct SweepContext {
  const ValidatedProblem& vp;
  int scenario;
  double eps_N;
  Eigen::MatrixXd zero_l;
  std::vector<Eigen::MatrixXd> zero_xi;

  SweepContext(const ValidatedProblem& v, int sc, double eps)
      : vp(v), scenario(sc), eps_N(eps) {
    zero_l = Eigen::MatrixXd::Zero(v.n(), v.n());
    zero_xi.assign(static_cast<size_t>(v.measure().n_marks()),
                   Eigen::MatrixXd::Zero(v.n(), v.n()));
  }

  // Assemble at step coefficients, gate N, return aggregates plus the gain.
  NMH gated(const Eigen::MatrixXd& P, int step, double t_stage,
            Eigen::MatrixXd* gain = nullptr, double* min_eig = nullptr) const {
    NMH agg = assemble_nmh_full(P, zero_l, zero_xi, step,
                                vp.scenario(scenario), vp.measure());
    const double lo = smallest_eigenvalue(agg.N);
    if (min_eig) *min_eig = lo;
    if (lo < eps_N) throw NotUniformlyConvex(t_stage, lo);
    if (gain) {
      Eigen::LLT<Eigen::MatrixXd> llt(agg.N);
      if (llt.info() != Eigen::Success)
        throw NotUniformlyConvex(t_stage, lo);
      *gain = llt.solve(agg.M.transpose());
    }
    return agg;
  }

  // dP/dt = -(H - M N^{-1} M') with step coefficients.
  Eigen::MatrixXd rhs(const Eigen::MatrixXd& P, int step,
                      double t_stage) const {
    Eigen::MatrixXd gain;
    NMH agg = gated(P, step, t_stage, &gain);
    Eigen::MatrixXd correction = agg.M * gain;  // M N^{-1} M'
    return -(agg.H - 0.5 * (correction + correction.transpose()));
  }
};

}  // namespace

RiccatiSolution integrate_sre(const ValidatedProblem& vp, int scenario,
                              double eps_N) {
  if (scenario < 0 || scenario >= vp.n_scenarios())
    throw OutOfRange("integrate_sre: scenario index out of range");
  if (!(eps_N > 0.0)) throw OutOfRange("integrate_sre: eps_N must be > 0");

  const TimeGrid& grid = vp.grid();
  const int steps = grid.n_steps;
  const double h = grid.dt();
  SweepContext ctx(vp, scenario, eps_N);

  RiccatiSolution sol;
  sol.grid = grid;
  sol.scenario = scenario;
  sol.t.resize(static_cast<size_t>(steps) + 1);
  sol.P.resize(static_cast<size_t>(steps) + 1);
  for (int i = 0; i <= steps; ++i)
    sol.t[static_cast<size_t>(i)] = grid.node(i);

  sol.P[static_cast<size_t>(steps)] = vp.scenario(scenario).weights.G;
  for (int i = steps - 1; i >= 0; --i) {
    const Eigen::MatrixXd& Pr = sol.P[static_cast<size_t>(i) + 1];
    const double tr = sol.t[static_cast<size_t>(i) + 1];
    // One backward RK4 step over [t_i, t_{i+1}], all stages on step i's
    // coefficients (piecewise-constant tabulation).
    Eigen::MatrixXd k1 = ctx.rhs(Pr, i, tr);
    Eigen::MatrixXd k2 = ctx.rhs(Pr - 0.5 * h * k1, i, tr - 0.5 * h);
    Eigen::MatrixXd k3 = ctx.rhs(Pr - 0.5 * h * k2, i, tr - 0.5 * h);
    Eigen::MatrixXd k4 = ctx.rhs(Pr - h * k3, i, tr - h);
    Eigen::MatrixXd Pi =
        Pr - (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!Pi.allFinite())
      throw NonFiniteKernel("Riccati kernel lost finiteness at t = " +
                            std::to_string(sol.t[static_cast<size_t>(i)]));
    sol.P[static_cast<size_t>(i)] = symmetrized(Pi);
  }

  // Tabulate aggregates and the gain at every node, with the node's own
  // step coefficients (terminal node clamps to the last step).
  sol.N.resize(sol.P.size());
  sol.M.resize(sol.P.size());
  sol.K.resize(sol.P.size());
  sol.Lambda.assign(sol.P.size(), ctx.zero_l);
  sol.Xi.assign(static_cast<size_t>(vp.measure().n_marks()),
                std::vector<Eigen::MatrixXd>(sol.P.size(), ctx.zero_l));
  double min_eig_all = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= steps; ++i) {
    const int step = std::min(i, steps - 1);
    double lo = 0.0;
    Eigen::MatrixXd gain;
    NMH agg = ctx.gated(sol.P[static_cast<size_t>(i)], step,
                        sol.t[static_cast<size_t>(i)], &gain, &lo);
    sol.N[static_cast<size_t>(i)] = std::move(agg.N);
    sol.M[static_cast<size_t>(i)] = std::move(agg.M);
    sol.K[static_cast<size_t>(i)] = std::move(gain);
    min_eig_all = std::min(min_eig_all, lo);
  }
  sol.min_eig_N = min_eig_all;
  return sol;
}

Eigen::MatrixXd feedback_gain(const RiccatiSolution& sol, double t) {
  return sol.K[static_cast<size_t>(sol.node_of(t))];
}

double pointwise_drift(const RiccatiSolution& sol, double t,
                       const Eigen::VectorXd& x, const Eigen::VectorXd& v) {
  const size_t i = static_cast<size_t>(sol.node_of(t));
  const Eigen::MatrixXd& N = sol.N[i];
  const Eigen::MatrixXd& M = sol.M[i];
  const Eigen::MatrixXd& K = sol.K[i];
  if (x.size() != M.rows() || v.size() != M.cols())
    throw DimensionMismatch("pointwise_drift: x must be n-dim, v m-dim");
  // <M N^{-1} M' x, x> + 2 <M v, x> + <N v, v>, with N^{-1}M' read off the
  // tabulated gain.
  const Eigen::VectorXd Kx = K * x;
  const Eigen::VectorXd Mtx = M.transpose() * x;
  return Kx.dot(Mtx) + 2.0 * x.dot(M * v) + v.dot(N * v);
}

Eigen::MatrixXd discrete_dp_oracle(const ValidatedProblem& vp, int scenario,
                                   int refine) {
  if (scenario < 0 || scenario >= vp.n_scenarios())
    throw OutOfRange("discrete_dp_oracle: scenario index out of range");
  if (refine < 1) throw OutOfRange("discrete_dp_oracle: refine must be >= 1");

  const Scenario& sc = vp.scenario(scenario);
  const CoefficientSet& cf = sc.coefficients;
  const CostWeights& w = sc.weights;
  const JumpMeasure& measure = vp.measure();
  const int n = vp.n();
  const long total = static_cast<long>(vp.grid().n_steps) * refine;
  const double h = (vp.grid().T - vp.grid().t0) / static_cast<double>(total);
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);

  Eigen::MatrixXd P = w.G;
  for (long j = total - 1; j >= 0; --j) {
    const int step = static_cast<int>(j / refine);  // containing coarse step
    const Eigen::MatrixXd& A = cf.A.at(step);
    const Eigen::MatrixXd& B = cf.B.at(step);
    const Eigen::MatrixXd& C = cf.C.at(step);
    const Eigen::MatrixXd& D = cf.D.at(step);
    const Eigen::MatrixXd IA = I + h * A;
    const Eigen::MatrixXd Bh = h * B;

    // Exact second moments of the one-step Euler map
    //   x+ = x + (Ax+Bu)h + (Cx+Du)dW + sum_k (E_k x + F_k u)(dN_k - r_k h):
    // E[T'PT] for the transition pair collapses to the three blocks below
    // (the compensator in the drift cancels against the dN cross moments).
    Eigen::MatrixXd exx = IA.transpose() * P * IA + h * C.transpose() * P * C;
    Eigen::MatrixXd exu = Bh.transpose() * P * IA + h * D.transpose() * P * C;
    Eigen::MatrixXd euu = Bh.transpose() * P * Bh + h * D.transpose() * P * D;
    for (int k = 0; k < measure.n_marks(); ++k) {
      const double rate = measure.marks[static_cast<size_t>(k)].rate;
      const Eigen::MatrixXd& E = cf.E[static_cast<size_t>(k)].at(step);
      const Eigen::MatrixXd& F = cf.F[static_cast<size_t>(k)].at(step);
      exx += rate * h * E.transpose() * P * E;
      exu += rate * h * F.transpose() * P * E;
      euu += rate * h * F.transpose() * P * F;
    }

    Eigen::MatrixXd next = h * w.Q.at(step) + exx;
    Eigen::MatrixXd cross = h * w.S.at(step) + exu;            // m x n
    Eigen::MatrixXd inner = h * w.R.at(step) + euu;            // m x m
    if (!cross.isZero(0.0)) {
      Eigen::LLT<Eigen::MatrixXd> llt(symmetrized(inner));
      if (llt.info() != Eigen::Success)
        throw SingularInnerMatrix(
            "discrete_dp_oracle: inner matrix not positive definite at step " +
            std::to_string(j));
      next -= cross.transpose() * llt.solve(cross);
    }
    if (!next.allFinite())
      throw NonFiniteKernel("discrete_dp_oracle: non-finite kernel at step " +
                            std::to_string(j));
    P = symmetrized(next);
  }
  return P;
}

}  // namespace jumplq
