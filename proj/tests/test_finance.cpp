#include <doctest.h>

#include <cmath>
#include <vector>

#include "jumplq/control.hpp"
#include "jumplq/finance.hpp"
#include "jumplq/model.hpp"
#include "jumplq/riccati.hpp"
#include "helpers.hpp"

using namespace jumplq;
using testutil::vec1;

namespace {

FinanceParams base_params() {
  FinanceParams p;
  p.lambda = 1.0;
  p.alpha = 0.1;
  p.r = {0.05};
  p.sigma = {0.2};
  p.gammas = {{0.1}};
  p.T = 1.0;
  p.x0 = 1.0;
  return p;
}

JumpMeasure one_mark(double rate) {
  JumpMeasure m;
  m.marks = {{rate, ""}};
  return m;
}

const TimeGrid kGrid{0.0, 1.0, 200};

}  // namespace

TEST_CASE("the wealth spec places every coefficient") {
  const FinanceParams p = base_params();
  const ProblemSpec spec = build_wealth_spec(p, kGrid, one_mark(1.0));
  const ValidatedProblem vp = validate_problem(spec);
  CHECK(vp.n() == 1);
  CHECK(vp.m() == 1);
  CHECK(vp.n_scenarios() == 1);
  const auto& cf = vp.scenario(0).coefficients;
  const auto& w = vp.scenario(0).weights;
  CHECK(cf.A.at(7)(0, 0) == 0.05);
  CHECK(cf.B.at(0)(0, 0) == 0.0);
  CHECK(cf.C.at(0)(0, 0) == 0.0);
  CHECK(cf.D.at(3)(0, 0) == 0.2);
  CHECK(cf.E[0].at(0)(0, 0) == 0.0);
  CHECK(cf.F[0].at(5)(0, 0) == 0.1);
  CHECK(w.Q.at(0)(0, 0) == 0.0);
  CHECK(w.S.at(0)(0, 0) == 0.0);
  CHECK(w.R.at(0)(0, 0) == 0.05);
  CHECK(w.G(0, 0) == -0.5);
}

TEST_CASE("tabulated inputs land step by step") {
  FinanceParams p = base_params();
  const TimeGrid grid{0.0, 1.0, 4};
  p.r = {0.00, 0.01, 0.02, 0.03};
  p.gammas = {{0.1, 0.2, 0.3, 0.4}};
  const ProblemSpec spec = build_wealth_spec(p, grid, one_mark(2.0));
  CHECK(spec.scenarios[0].coefficients.A.at(2)(0, 0) == 0.02);
  CHECK(spec.scenarios[0].coefficients.F[0].at(3)(0, 0) == 0.4);
  CHECK(spec.scenarios[0].coefficients.D.at(3)(0, 0) == 0.2);  // constant stays
}

TEST_CASE("a jump-free market is allowed") {
  FinanceParams p = base_params();
  p.gammas = {};
  const ValidatedProblem vp =
      validate_problem(build_wealth_spec(p, kGrid, JumpMeasure{}));
  CHECK(vp.measure().n_marks() == 0);
  // Threshold reduces to the diffusion part.
  CHECK(uc_threshold(p, kGrid, JumpMeasure{}) ==
        doctest::Approx(std::exp(0.1) * 0.04).epsilon(1e-14));
}

TEST_CASE("the convexity threshold matches hand arithmetic") {
  FinanceParams p = base_params();
  SUBCASE("flat rate zero") {
    p.r = {0.0};
    CHECK(uc_threshold(p, kGrid, one_mark(1.0)) ==
          doctest::Approx(0.05).epsilon(1e-14));
  }
  SUBCASE("compounding lifts the bar") {
    CHECK(uc_threshold(p, kGrid, one_mark(1.0)) ==
          doctest::Approx(0.05 * std::exp(0.1)).epsilon(1e-14));
  }
  SUBCASE("no risk, no bar") {
    p.sigma = {0.0};
    p.gammas = {};
    CHECK(uc_threshold(p, kGrid, JumpMeasure{}) == 0.0);
  }
  SUBCASE("a late volatility burst sets the max away from t0") {
    p.r = {0.0};
    std::vector<double> sig(200, 0.1);
    sig.back() = 0.5;
    p.sigma = sig;
    CHECK(uc_threshold(p, kGrid, one_mark(1.0)) ==
          doctest::Approx(0.25 + 0.01).epsilon(1e-14));
  }
}

TEST_CASE("the threshold exponent integrates the tabulated rate exactly") {
  FinanceParams p = base_params();
  const TimeGrid grid{0.0, 1.0, 8};
  p.r = {0.00, 0.01, 0.02, 0.03, 0.04, 0.05, 0.06, 0.07};
  double int_r = 0.0;
  for (double rv : p.r) int_r += rv * grid.dt();
  CHECK(uc_threshold(p, grid, one_mark(1.0)) ==
        doctest::Approx(0.05 * std::exp(2.0 * int_r)).epsilon(1e-14));
}

TEST_CASE("the closed-form kernel has the expected anchors") {
  const FinanceParams p = base_params();
  CHECK(analytic_kernel(p, kGrid, 0.0) ==
        doctest::Approx(-0.5 * std::exp(0.1)).epsilon(1e-14));
  CHECK(analytic_kernel(p, kGrid, 0.5) ==
        doctest::Approx(-0.5 * std::exp(0.05)).epsilon(1e-14));
  CHECK(analytic_kernel(p, kGrid, 1.0) == -0.5);
  FinanceParams flat = p;
  flat.r = {0.0};
  CHECK(analytic_kernel(flat, kGrid, 0.321) == -0.5);
  CHECK_THROWS_AS(analytic_kernel(p, kGrid, 1.0 + 1e-6), OutOfRange);
  CHECK_THROWS_AS(analytic_kernel(p, kGrid, -1e-6), OutOfRange);
}

TEST_CASE("the sweep reproduces the closed-form kernel at every node") {
  SUBCASE("flat rate") {
    const FinanceParams p = base_params();
    const ValidatedProblem vp =
        validate_problem(build_wealth_spec(p, kGrid, one_mark(1.0)));
    const RiccatiSolution sol = integrate_sre(vp, 0);
    for (int i = 0; i <= kGrid.n_steps; ++i) {
      const double want = analytic_kernel(p, kGrid, sol.t[static_cast<size_t>(i)]);
      CHECK(std::abs(sol.P[static_cast<size_t>(i)](0, 0) - want) / std::abs(want) <=
            1e-8);
    }
  }
  SUBCASE("tabulated rate") {
    FinanceParams p = base_params();
    std::vector<double> r(200);
    for (int i = 0; i < 200; ++i) r[static_cast<size_t>(i)] = 0.02 + 0.0005 * i;
    p.r = r;
    const ValidatedProblem vp =
        validate_problem(build_wealth_spec(p, kGrid, one_mark(1.0)));
    const RiccatiSolution sol = integrate_sre(vp, 0);
    for (int i = 0; i <= kGrid.n_steps; ++i) {
      const double want = analytic_kernel(p, kGrid, sol.t[static_cast<size_t>(i)]);
      CHECK(std::abs(sol.P[static_cast<size_t>(i)](0, 0) - want) / std::abs(want) <=
            1e-8);
    }
  }
}

TEST_CASE("the synthesized portfolio stays flat") {
  const ValidatedProblem vp =
      validate_problem(build_wealth_spec(base_params(), kGrid, one_mark(1.0)));
  const RiccatiSolution sol = integrate_sre(vp, 0);
  for (const auto& k : sol.K) CHECK(std::abs(k(0, 0)) <= 1e-10);
}

TEST_CASE("the threshold is sharp on both sides") {
  FinanceParams p = base_params();
  const double thr = uc_threshold(p, kGrid, one_mark(1.0));

  p.alpha = 1.02 * thr;
  const RiccatiSolution sol = integrate_sre(
      validate_problem(build_wealth_spec(p, kGrid, one_mark(1.0))), 0);
  CHECK(sol.min_eig_N > 0.0);

  p.alpha = 0.98 * thr;
  try {
    integrate_sre(validate_problem(build_wealth_spec(p, kGrid, one_mark(1.0))), 0);
    FAIL("expected the convexity guard to fire");
  } catch (const NotUniformlyConvex& e) {
    // The floor fails where e^{2 int r} crosses alpha / (lambda(sigma^2+gbar^2)),
    // i.e. below t = -10 ln(0.98) for these numbers.
    CHECK(std::abs(e.t - (-10.0 * std::log(0.98))) <= 0.01);
  }
}

TEST_CASE("unit trading at zero interest is an isometry in the mean square") {
  // E X(T)^2 for u = 1, x0 = 0 equals (sigma^2 + gbar^2) T; read it off the
  // moment system by pricing with G = 1 and no other weights.
  FinanceParams p = base_params();
  p.r = {0.0};
  ProblemSpec spec = build_wealth_spec(p, kGrid, one_mark(1.0));
  spec.scenarios[0].weights.R = scalar_series(0.0);
  spec.scenarios[0].weights.G = testutil::mat1(1.0);
  const ValidatedProblem vp = validate_problem(spec);
  const double second_moment =
      moment_ode_cost(vp, 0, constant_control(kGrid, vec1(1.0)), vec1(0.0));
  CHECK(second_moment == doctest::Approx(0.05).epsilon(1e-12));
}

TEST_CASE("below the threshold the witness family scales quadratically down") {
  FinanceParams p = base_params();
  p.r = {0.0};
  p.alpha = 0.04;  // threshold is 0.05 here
  const ValidatedProblem vp =
      validate_problem(build_wealth_spec(p, kGrid, one_mark(1.0)));
  double prev = 0.0;
  for (double c : {1.0, 2.0, 4.0}) {
    const double cost =
        moment_ode_cost(vp, 0, constant_control(kGrid, vec1(c)), vec1(0.0));
    CHECK(cost == doctest::Approx(-0.005 * c * c).epsilon(1e-12));
    CHECK(cost < prev);
    prev = cost;
  }
}

TEST_CASE("parameter validation rejects out-of-domain inputs") {
  const JumpMeasure meas = one_mark(1.0);
  SUBCASE("gamma at the singular boundary") {
    FinanceParams p = base_params();
    p.gammas = {{-1.0}};
    CHECK_THROWS_AS(build_wealth_spec(p, kGrid, meas), OutOfRange);
  }
  SUBCASE("negative interest") {
    FinanceParams p = base_params();
    p.r = {-0.01};
    CHECK_THROWS_AS(build_wealth_spec(p, kGrid, meas), OutOfRange);
  }
  SUBCASE("nonpositive weights") {
    FinanceParams p = base_params();
    p.alpha = 0.0;
    CHECK_THROWS_AS(build_wealth_spec(p, kGrid, meas), OutOfRange);
    p = base_params();
    p.lambda = -1.0;
    CHECK_THROWS_AS(build_wealth_spec(p, kGrid, meas), OutOfRange);
  }
  SUBCASE("horizon mismatch") {
    FinanceParams p = base_params();
    p.T = 2.0;
    CHECK_THROWS_AS(build_wealth_spec(p, kGrid, meas), BadGrid);
  }
  SUBCASE("tabulation length mismatch") {
    FinanceParams p = base_params();
    p.sigma = {0.1, 0.2, 0.3};
    CHECK_THROWS_AS(build_wealth_spec(p, kGrid, meas), DimensionMismatch);
  }
  SUBCASE("gamma count must match the marks") {
    FinanceParams p = base_params();
    p.gammas = {{0.1}, {0.2}};
    CHECK_THROWS_AS(build_wealth_spec(p, kGrid, meas), DimensionMismatch);
  }
}

TEST_CASE("the probe and the sweep agree about the convexity region") {
  FinanceParams p = base_params();
  p.r = {0.0};
  p.alpha = 0.04;
  const ValidatedProblem vp =
      validate_problem(build_wealth_spec(p, kGrid, one_mark(1.0)));
  CHECK_THROWS_AS(integrate_sre(vp, 0), NotUniformlyConvex);
  CHECK(convexity_probe(vp, 16, 3) < 0.0);
}
