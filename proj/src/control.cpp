#include "jumplq/control.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <utility>

#include "jumplq/errors.hpp"
#include "jumplq/parallel.hpp"
#include "jumplq/rng.hpp"

namespace jumplq {

namespace {

// ell(x, u) = <Qx,x> + 2<Sx,u> + <Ru,u> with step-tabulated weights.
double running_integrand(const CostWeights& w, int step,
                         const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
  return x.dot(w.Q.at(step) * x) + 2.0 * u.dot(w.S.at(step) * x) +
         u.dot(w.R.at(step) * u);
}

struct GroupStats {
  std::vector<double> mean, var;  // per scenario (sample variance)
  std::vector<long> count;
};

GroupStats group_by_scenario(int n_scenarios, const std::vector<double>& values,
                             const std::vector<int>& scenario_of) {
  if (values.size() != scenario_of.size())
    throw DimensionMismatch("per-path values and scenario tags disagree");
  GroupStats g;
  g.mean.assign(static_cast<size_t>(n_scenarios), 0.0);
  g.var.assign(static_cast<size_t>(n_scenarios), 0.0);
  g.count.assign(static_cast<size_t>(n_scenarios), 0);
  // Welford per group.
  std::vector<double> m2(static_cast<size_t>(n_scenarios), 0.0);
  for (size_t p = 0; p < values.size(); ++p) {
    const int s = scenario_of[p];
    if (s < 0 || s >= n_scenarios)
      throw OutOfRange("path carries an unknown scenario index");
    const size_t si = static_cast<size_t>(s);
    g.count[si] += 1;
    const double d = values[p] - g.mean[si];
    g.mean[si] += d / static_cast<double>(g.count[si]);
    m2[si] += d * (values[p] - g.mean[si]);
  }
  for (size_t si = 0; si < g.mean.size(); ++si)
    g.var[si] = g.count[si] > 1
                    ? m2[si] / static_cast<double>(g.count[si] - 1)
                    : 0.0;
  return g;
}

}  // namespace

double path_cost(const ValidatedProblem& vp, const PathData& path,
                 int scenario) {
  const CostWeights& w = vp.scenario(scenario).weights;
  const Skeleton& sk = path.skel;
  double acc = 0.0;
  for (int i = 0; i < sk.n_intervals(); ++i) {
    const double len = sk.times[static_cast<size_t>(i) + 1] -
                       sk.times[static_cast<size_t>(i)];
    if (len <= 0.0) continue;
    const int step = sk.ustep[static_cast<size_t>(i)];
    const Eigen::VectorXd& u = path.control[static_cast<size_t>(i)];
    const double left =
        running_integrand(w, step, path.post[static_cast<size_t>(i)], u);
    const double right =
        running_integrand(w, step, path.pre[static_cast<size_t>(i) + 1], u);
    acc += 0.5 * (left + right) * len;
  }
  const Eigen::VectorXd& xT = path.post.back();
  return acc + xT.dot(w.G * xT);
}

CostEstimate grouped_estimate(const ValidatedProblem& vp,
                              const std::vector<double>& values,
                              const std::vector<int>& scenario_of) {
  GroupStats g = group_by_scenario(vp.n_scenarios(), values, scenario_of);
  CostEstimate est;
  est.n_paths = static_cast<long>(values.size());
  double var_of_mean = 0.0;
  for (int s = 0; s < vp.n_scenarios(); ++s) {
    const size_t si = static_cast<size_t>(s);
    const double p = vp.scenario(s).probability;
    if (g.count[si] == 0) {
      if (p > 0.0)
        throw BadProbabilities("no paths drawn for a scenario with mass");
      continue;
    }
    est.mean += p * g.mean[si];
    var_of_mean += p * p * g.var[si] / static_cast<double>(g.count[si]);
  }
  est.std_error = std::sqrt(var_of_mean);
  return est;
}

CostEstimate estimate_cost(const ValidatedProblem& vp,
                           const PathBundle& paths) {
  std::vector<double> costs(paths.paths.size());
  parallel_for(static_cast<int>(paths.paths.size()), [&](int p) {
    costs[static_cast<size_t>(p)] = path_cost(
        vp, paths.paths[static_cast<size_t>(p)],
        paths.scenario[static_cast<size_t>(p)]);
  });
  return grouped_estimate(vp, costs, paths.scenario);
}

std::vector<int> stratified_scenarios(const ValidatedProblem& vp,
                                      int n_paths) {
  const int ns = vp.n_scenarios();
  if (n_paths < ns)
    throw OutOfRange("need at least one path per scenario");
  std::vector<long> counts(static_cast<size_t>(ns), 0);
  std::vector<std::pair<double, int>> rema;
  long assigned = 0;
  for (int s = 0; s < ns; ++s) {
    const double ideal = vp.scenario(s).probability * n_paths;
    counts[static_cast<size_t>(s)] = static_cast<long>(ideal);
    assigned += counts[static_cast<size_t>(s)];
    rema.emplace_back(ideal - std::floor(ideal), s);
  }
  std::sort(rema.begin(), rema.end(), [](const auto& a, const auto& b) {
    return a.first > b.first || (a.first == b.first && a.second < b.second);
  });
  for (long k = 0; k < n_paths - assigned; ++k)
    counts[static_cast<size_t>(rema[static_cast<size_t>(k % ns)].second)] += 1;
  // Every positive-probability scenario gets at least one path.
  for (int s = 0; s < ns; ++s)
    if (counts[static_cast<size_t>(s)] == 0) {
      int donor = static_cast<int>(std::distance(
          counts.begin(), std::max_element(counts.begin(), counts.end())));
      counts[static_cast<size_t>(donor)] -= 1;
      counts[static_cast<size_t>(s)] += 1;
    }
  std::vector<int> out;
  out.reserve(static_cast<size_t>(n_paths));
  for (int s = 0; s < ns; ++s)
    out.insert(out.end(), static_cast<size_t>(counts[static_cast<size_t>(s)]),
               s);
  return out;
}

Policy feedback_policy(const RiccatiSolution& sol) {
  return Policy::feedback([&sol](double t, const Eigen::VectorXd& x) {
    return Eigen::VectorXd(-(feedback_gain(sol, t) * x));
  });
}

PathBundle closed_loop_simulate(const ValidatedProblem& vp,
                                const std::vector<RiccatiSolution>& sols,
                                const Eigen::VectorXd& initial,
                                const NoiseBundle& noise) {
  if (static_cast<int>(sols.size()) != vp.n_scenarios())
    throw DimensionMismatch("one Riccati solution per scenario required");
  std::vector<Policy> policies;
  policies.reserve(sols.size());
  for (const auto& sol : sols) policies.push_back(feedback_policy(sol));
  const std::vector<int> tags = stratified_scenarios(vp, noise.n_paths);

  PathBundle out;
  out.noise = std::make_shared<const NoiseBundle>(noise);
  out.scenario = tags;
  out.paths.resize(static_cast<size_t>(noise.n_paths));
  parallel_for(noise.n_paths, [&](int p) {
    const int s = tags[static_cast<size_t>(p)];
    out.paths[static_cast<size_t>(p)] =
        simulate_one(vp, s, policies[static_cast<size_t>(s)], initial,
                     noise, p);
  });
  return out;
}

std::vector<double> streamed_costs(const ValidatedProblem& vp,
                                   const std::vector<int>& scenario_of,
                                   const std::vector<Policy>& policies,
                                   const Eigen::VectorXd& initial,
                                   const NoiseBundle& noise) {
  if (static_cast<int>(scenario_of.size()) != noise.n_paths)
    throw DimensionMismatch("scenario tags must cover every noise path");
  if (static_cast<int>(policies.size()) != vp.n_scenarios())
    throw DimensionMismatch("one policy per scenario required");
  std::vector<double> costs(static_cast<size_t>(noise.n_paths));
  parallel_for(noise.n_paths, [&](int p) {
    const int s = scenario_of[static_cast<size_t>(p)];
    PathData path = simulate_one(vp, s, policies[static_cast<size_t>(s)],
                                 initial, noise, p);
    costs[static_cast<size_t>(p)] = path_cost(vp, path, s);
  });
  return costs;
}

double moment_ode_cost(const ValidatedProblem& vp, int scenario,
                       const std::vector<Eigen::VectorXd>& u_steps,
                       const Eigen::VectorXd& initial) {
  const Scenario& sc = vp.scenario(scenario);
  const CoefficientSet& cf = sc.coefficients;
  const CostWeights& w = sc.weights;
  const TimeGrid& grid = vp.grid();
  const int n = vp.n();
  if (initial.size() != n)
    throw DimensionMismatch("moment_ode_cost: initial state must be n-dim");
  if (u_steps.empty())
    throw DimensionMismatch("moment_ode_cost: control tabulation is empty");
  if (u_steps.size() != 1 &&
      static_cast<int>(u_steps.size()) != grid.n_steps)
    throw DimensionMismatch(
        "moment_ode_cost: control must have one entry or one per step");
  for (const auto& u : u_steps)
    if (u.size() != vp.m())
      throw DimensionMismatch("moment_ode_cost: control entries must be m-dim");

  const double h = grid.dt();
  Eigen::VectorXd mean = initial;
  Eigen::MatrixXd V = initial * initial.transpose();  // second moment
  double J = 0.0;

  for (int i = 0; i < grid.n_steps; ++i) {
    const Eigen::VectorXd& u =
        u_steps.size() == 1 ? u_steps[0] : u_steps[static_cast<size_t>(i)];
    const Eigen::MatrixXd& A = cf.A.at(i);
    const Eigen::MatrixXd& C = cf.C.at(i);
    const Eigen::VectorXd Bu = cf.B.at(i) * u;
    const Eigen::VectorXd Du = cf.D.at(i) * u;
    const double uRu = u.dot(w.R.at(i) * u);
    const Eigen::VectorXd Stu2 = 2.0 * (w.S.at(i).transpose() * u);

    // Joint RK4 stage map for (mean m, second moment V, running cost J):
    //   m' = A m + B u
    //   V' = A V + V A' + Bu m' + m Bu' + (C m + Du)(C m + Du)' - sym parts
    //        expanded below + per-mark jump second moments
    //   J' = tr(Q V) + 2 u'S m + u'R u
    auto f = [&](const Eigen::VectorXd& mv, const Eigen::MatrixXd& Vv,
                 Eigen::VectorXd& dm, Eigen::MatrixXd& dV, double& dJ) {
      dm = A * mv + Bu;
      const Eigen::VectorXd Cm = C * mv;
      dV = A * Vv + Vv * A.transpose() + Bu * mv.transpose() +
           mv * Bu.transpose() + C * Vv * C.transpose() +
           Cm * Du.transpose() + Du * Cm.transpose() + Du * Du.transpose();
      for (int k = 0; k < vp.measure().n_marks(); ++k) {
        const double rate = vp.measure().marks[static_cast<size_t>(k)].rate;
        const Eigen::MatrixXd& E = cf.E[static_cast<size_t>(k)].at(i);
        const Eigen::VectorXd Fu = cf.F[static_cast<size_t>(k)].at(i) * u;
        const Eigen::VectorXd Em = E * mv;
        dV += rate * (E * Vv * E.transpose() + Em * Fu.transpose() +
                      Fu * Em.transpose() + Fu * Fu.transpose());
      }
      dJ = (w.Q.at(i) * Vv).trace() + Stu2.dot(mv) + uRu;
    };

    Eigen::VectorXd k1m, k2m, k3m, k4m;
    Eigen::MatrixXd k1v, k2v, k3v, k4v;
    double k1j, k2j, k3j, k4j;
    f(mean, V, k1m, k1v, k1j);
    f(mean + 0.5 * h * k1m, V + 0.5 * h * k1v, k2m, k2v, k2j);
    f(mean + 0.5 * h * k2m, V + 0.5 * h * k2v, k3m, k3v, k3j);
    f(mean + h * k3m, V + h * k3v, k4m, k4v, k4j);
    mean += (h / 6.0) * (k1m + 2.0 * k2m + 2.0 * k3m + k4m);
    V += (h / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    J += (h / 6.0) * (k1j + 2.0 * k2j + 2.0 * k3j + k4j);
    if (!V.allFinite() || !mean.allFinite() || !std::isfinite(J))
      throw NonFiniteKernel("moment ODE lost finiteness at t = " +
                            std::to_string(grid.node(i + 1)));
    V = 0.5 * (V + V.transpose());
  }
  return J + (w.G * V).trace();
}

double mixture_moment_cost(const ValidatedProblem& vp,
                           const std::vector<Eigen::VectorXd>& u_steps,
                           const Eigen::VectorXd& initial) {
  double j = 0.0;
  for (int s = 0; s < vp.n_scenarios(); ++s)
    j += vp.scenario(s).probability * moment_ode_cost(vp, s, u_steps, initial);
  return j;
}

CompletionStats completion_stats(const ValidatedProblem& vp,
                                 const std::vector<RiccatiSolution>& sols,
                                 const std::vector<Eigen::VectorXd>& u_steps,
                                 const Eigen::VectorXd& initial,
                                 const NoiseBundle& noise) {
  if (static_cast<int>(sols.size()) != vp.n_scenarios())
    throw DimensionMismatch("one Riccati solution per scenario required");
  const std::vector<int> tags = stratified_scenarios(vp, noise.n_paths);
  const Policy open_loop = u_steps.size() == 1
                               ? Policy::constant(u_steps[0])
                               : Policy::tabulated(u_steps);

  std::vector<double> costs(static_cast<size_t>(noise.n_paths));
  std::vector<double> predicted(static_cast<size_t>(noise.n_paths));
  std::vector<double> diffs(static_cast<size_t>(noise.n_paths));
  parallel_for(noise.n_paths, [&](int p) {
    const int s = tags[static_cast<size_t>(p)];
    const RiccatiSolution& sol = sols[static_cast<size_t>(s)];
    PathData path = simulate_one(vp, s, open_loop, initial, noise, p);
    const double c = path_cost(vp, path, s);
    // Left-endpoint quadrature of <N (u + K x), u + K x> on the skeleton.
    double pen = 0.0;
    const Skeleton& sk = path.skel;
    for (int i = 0; i < sk.n_intervals(); ++i) {
      const double len = sk.times[static_cast<size_t>(i) + 1] -
                         sk.times[static_cast<size_t>(i)];
      if (len <= 0.0) continue;
      const size_t node =
          static_cast<size_t>(sol.node_of(sk.times[static_cast<size_t>(i)]));
      const Eigen::VectorXd w = path.control[static_cast<size_t>(i)] +
                                sol.K[node] * path.post[static_cast<size_t>(i)];
      pen += len * w.dot(sol.N[node] * w);
    }
    const double v = initial.dot(sol.P.front() * initial) + pen;
    costs[static_cast<size_t>(p)] = c;
    predicted[static_cast<size_t>(p)] = v;
    diffs[static_cast<size_t>(p)] = c - v;
  });

  const CostEstimate mc = grouped_estimate(vp, costs, tags);
  const CostEstimate pred = grouped_estimate(vp, predicted, tags);
  const CostEstimate diff = grouped_estimate(vp, diffs, tags);
  CompletionStats out;
  out.mc_mean = mc.mean;
  out.mc_std_error = mc.std_error;
  out.predicted_mean = pred.mean;
  out.diff_std_error = diff.std_error;
  out.residual = std::abs(diff.mean);
  return out;
}

double completion_residual(const ValidatedProblem& vp,
                           const std::vector<RiccatiSolution>& sols,
                           const std::vector<Eigen::VectorXd>& u_steps,
                           const Eigen::VectorXd& initial,
                           const NoiseBundle& noise) {
  return completion_stats(vp, sols, u_steps, initial, noise).residual;
}

std::vector<Eigen::VectorXd> random_tabulated_control(const TimeGrid& grid,
                                                      int m, std::uint64_t seed,
                                                      std::uint64_t index,
                                                      bool normalize) {
  std::vector<Eigen::VectorXd> u(static_cast<size_t>(grid.n_steps),
                                 Eigen::VectorXd::Zero(m));
  for (int i = 0; i < grid.n_steps; ++i)
    for (int d = 0; d < m; ++d)
      u[static_cast<size_t>(i)](d) =
          counter_normal(seed, kStreamControl + index,
                         static_cast<std::uint64_t>(i),
                         static_cast<std::uint64_t>(d));
  if (normalize) {
    double norm2 = 0.0;
    for (const auto& ui : u) norm2 += ui.squaredNorm() * grid.dt();
    if (norm2 > 0.0) {
      const double scale = 1.0 / std::sqrt(norm2);
      for (auto& ui : u) ui *= scale;
    }
  }
  return u;
}

double convexity_probe(const ValidatedProblem& vp, int n_controls,
                       std::uint64_t seed) {
  if (n_controls < 0) throw OutOfRange("convexity_probe: n_controls < 0");
  const TimeGrid& grid = vp.grid();
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(vp.n());
  const double span = grid.T - grid.t0;
  double best = std::numeric_limits<double>::infinity();
  // Coordinate constants, unit L2 norm over the horizon.
  for (int d = 0; d < vp.m(); ++d) {
    Eigen::VectorXd u = Eigen::VectorXd::Zero(vp.m());
    u(d) = 1.0 / std::sqrt(span);
    best = std::min(best, mixture_moment_cost(vp, {u}, zero));
  }
  for (int c = 0; c < n_controls; ++c) {
    const auto u = random_tabulated_control(grid, vp.m(), seed,
                                            static_cast<std::uint64_t>(c),
                                            /*normalize=*/true);
    best = std::min(best, mixture_moment_cost(vp, u, zero));
  }
  return best;
}

std::vector<PerturbationRow> perturbation_test(
    const ValidatedProblem& vp, const std::vector<RiccatiSolution>& sols,
    const Eigen::VectorXd& initial,
    const std::vector<std::vector<Eigen::VectorXd>>& directions,
    const std::vector<double>& epsilons, int n_paths, std::uint64_t seed) {
  if (static_cast<int>(sols.size()) != vp.n_scenarios())
    throw DimensionMismatch("one Riccati solution per scenario required");
  const NoiseBundle noise =
      sample_noise(vp.measure(), vp.grid(), n_paths, seed);
  const std::vector<int> tags = stratified_scenarios(vp, n_paths);

  std::vector<Policy> base;
  base.reserve(sols.size());
  for (const auto& sol : sols) base.push_back(feedback_policy(sol));
  const std::vector<double> base_costs =
      streamed_costs(vp, tags, base, initial, noise);

  const TimeGrid& grid = vp.grid();
  std::vector<PerturbationRow> rows;
  for (size_t d = 0; d < directions.size(); ++d) {
    const std::vector<Eigen::VectorXd>& v = directions[d];
    if (v.size() != 1 && static_cast<int>(v.size()) != grid.n_steps)
      throw DimensionMismatch(
          "perturbation direction must have one entry or one per step");
    auto v_at = [&v](int step) -> const Eigen::VectorXd& {
      return v.size() == 1 ? v[0] : v[static_cast<size_t>(step)];
    };
    for (double eps : epsilons) {
      std::vector<Policy> shifted;
      shifted.reserve(sols.size());
      for (const auto& sol : sols)
        shifted.push_back(Policy::feedback(
            [&sol, &v_at, eps, &grid](double t, const Eigen::VectorXd& x) {
              return Eigen::VectorXd(-(feedback_gain(sol, t) * x) +
                                     eps * v_at(grid.step_of(t)));
            }));
      const std::vector<double> bumped =
          streamed_costs(vp, tags, shifted, initial, noise);
      std::vector<double> delta(bumped.size());
      for (size_t p = 0; p < bumped.size(); ++p)
        delta[p] = bumped[p] - base_costs[p];
      const CostEstimate est = grouped_estimate(vp, delta, tags);
      PerturbationRow row;
      row.direction = static_cast<int>(d);
      row.epsilon = eps;
      row.delta_j = est.mean;
      row.std_error = est.std_error;
      rows.push_back(row);
    }
  }
  return rows;
}

}  // namespace jumplq
