#include "jumplq/finance.hpp"

#include <cmath>
#include <string>

#include "jumplq/errors.hpp"

namespace jumplq {

namespace {

double series_at(const std::vector<double>& v, int step) {
  if (v.size() == 1) return v.front();
  return v.at(static_cast<size_t>(step));
}

void check_series(const std::vector<double>& v, int n_steps,
                  const std::string& name) {
  if (v.empty() || (v.size() != 1 && static_cast<int>(v.size()) != n_steps))
    throw DimensionMismatch("finance: " + name +
                            " needs one entry or one per step");
}

void check_params(const FinanceParams& p, const TimeGrid& grid,
                  const JumpMeasure& measure) {
  if (!(p.lambda > 0.0)) throw OutOfRange("finance: lambda must be > 0");
  if (!(p.alpha > 0.0)) throw OutOfRange("finance: alpha must be > 0");
  if (!(p.T > 0.0)) throw OutOfRange("finance: T must be > 0");
  if (std::abs(grid.T - p.T) > 1e-12 * std::max(1.0, std::abs(p.T)))
    throw BadGrid("finance: grid horizon does not match params.T");
  check_series(p.r, grid.n_steps, "r");
  check_series(p.sigma, grid.n_steps, "sigma");
  for (double rv : p.r)
    if (!(rv >= 0.0)) throw OutOfRange("finance: r must be >= 0");
  if (static_cast<int>(p.gammas.size()) != measure.n_marks())
    throw DimensionMismatch("finance: one gamma tabulation per mark required");
  for (size_t k = 0; k < p.gammas.size(); ++k) {
    check_series(p.gammas[k], grid.n_steps, "gamma");
    for (double gv : p.gammas[k])
      if (!(gv > -1.0)) throw OutOfRange("finance: gamma must be > -1");
  }
}

// Exact integral of the piecewise-constant rate over [t, T].
double int_r(const FinanceParams& p, const TimeGrid& grid, double t) {
  double acc = 0.0;
  for (int i = 0; i < grid.n_steps; ++i) {
    const double lo = std::max(grid.node(i), t);
    const double hi = grid.node(i + 1);
    if (hi > lo) acc += series_at(p.r, i) * (hi - lo);
  }
  return acc;
}

}  // namespace

ProblemSpec build_wealth_spec(const FinanceParams& params, const TimeGrid& grid,
                              const JumpMeasure& measure) {
  check_params(params, grid, measure);

  auto to_series = [](const std::vector<double>& v) {
    std::vector<Eigen::MatrixXd> mats;
    mats.reserve(v.size());
    for (double x : v) {
      Eigen::MatrixXd m(1, 1);
      m(0, 0) = x;
      mats.push_back(m);
    }
    return MatSeries(std::move(mats));
  };

  Scenario sc;
  sc.probability = 1.0;
  sc.coefficients.A = to_series(params.r);
  sc.coefficients.B = scalar_series(0.0);
  sc.coefficients.C = scalar_series(0.0);
  sc.coefficients.D = to_series(params.sigma);
  for (const auto& g : params.gammas) {
    sc.coefficients.E.push_back(scalar_series(0.0));
    sc.coefficients.F.push_back(to_series(g));
  }
  sc.weights.Q = scalar_series(0.0);
  sc.weights.S = scalar_series(0.0);
  sc.weights.R = scalar_series(0.5 * params.alpha);
  Eigen::MatrixXd G(1, 1);
  G(0, 0) = -0.5 * params.lambda;
  sc.weights.G = G;

  ProblemSpec spec;
  spec.grid = grid;
  spec.measure = measure;
  spec.scenarios.push_back(std::move(sc));
  spec.n = 1;
  spec.m = 1;
  return spec;
}

double uc_threshold(const FinanceParams& params, const TimeGrid& grid,
                    const JumpMeasure& measure) {
  check_params(params, grid, measure);
  double best = 0.0;
  for (int i = 0; i < grid.n_steps; ++i) {
    double gbar2 = 0.0;
    for (int k = 0; k < measure.n_marks(); ++k) {
      const double g = series_at(params.gammas[static_cast<size_t>(k)], i);
      gbar2 += measure.marks[static_cast<size_t>(k)].rate * g * g;
    }
    const double s = series_at(params.sigma, i);
    const double factor = std::exp(2.0 * int_r(params, grid, grid.node(i)));
    best = std::max(best, factor * (s * s + gbar2));
  }
  return params.lambda * best;
}

double analytic_kernel(const FinanceParams& params, const TimeGrid& grid,
                       double t) {
  const double slack = 1e-9 * (grid.T - grid.t0);
  if (t < grid.t0 - slack || t > grid.T + slack)
    throw OutOfRange("analytic_kernel: t outside [t0, T]");
  return -0.5 * params.lambda * std::exp(2.0 * int_r(params, grid, t));
}

}  // namespace jumplq
