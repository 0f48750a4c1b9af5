#include "jumplq/sdep.hpp"

#include <cmath>
#include <utility>

#include "jumplq/parallel.hpp"

namespace jumplq {

Policy Policy::constant(Eigen::VectorXd u) {
  Policy p;
  p.kind_ = Kind::kConstant;
  p.u_const_ = std::move(u);
  return p;
}

Policy Policy::tabulated(std::vector<Eigen::VectorXd> per_step) {
  Policy p;
  p.kind_ = Kind::kTabulated;
  p.u_steps_ = std::move(per_step);
  return p;
}

Policy Policy::feedback(Feedback f) {
  Policy p;
  p.kind_ = Kind::kFeedback;
  p.fb_ = std::move(f);
  return p;
}

Eigen::VectorXd Policy::value(double t, int ustep, const Eigen::VectorXd& x_left) const {
  switch (kind_) {
    case Kind::kConstant:
      return u_const_;
    case Kind::kTabulated:
      return u_steps_.at(static_cast<size_t>(ustep));
    case Kind::kFeedback:
      return fb_(t, x_left);
  }
  return u_const_;  // unreachable
}

std::vector<Eigen::VectorXd> constant_control(const TimeGrid& grid,
                                              const Eigen::VectorXd& u) {
  return std::vector<Eigen::VectorXd>(static_cast<size_t>(grid.n_steps), u);
}

PathData simulate_one(const ValidatedProblem& vp, int scenario, const Policy& policy,
                      const Eigen::VectorXd& initial, const NoiseBundle& noise,
                      int path) {
  if (initial.size() != vp.n())
    throw DimensionMismatch("initial state has size " + std::to_string(initial.size()) +
                            ", expected " + std::to_string(vp.n()));
  const CoefficientSet& cf = vp.scenario(scenario).coefficients;
  const auto& marks = vp.measure().marks;

  PathData pd;
  pd.skel = build_skeleton(noise.grid, noise.events.at(static_cast<size_t>(path)));
  const int K = pd.skel.n_intervals();
  pd.pre.resize(K + 1);
  pd.post.resize(K + 1);
  pd.control.resize(K);
  pd.pre[0] = initial;
  pd.post[0] = initial;

  Eigen::VectorXd x = initial, drift(vp.n()), diff(vp.n());
  for (int w = 0; w < K; ++w) {
    const int i = pd.skel.ustep[w];
    const double tw = pd.skel.times[w];
    const double h = pd.skel.times[w + 1] - tw;
    const double dw = noise.dW(path, w, pd.skel);

    Eigen::VectorXd u = policy.value(tw, i, x);
    // Compensated drift: the -nu dt part of the jump integral folded in.
    drift.noalias() = cf.A.at(i) * x;
    drift.noalias() += cf.B.at(i) * u;
    for (size_t k = 0; k < marks.size(); ++k) {
      const double rate = marks[k].rate;
      if (rate == 0.0) continue;
      drift.noalias() -= rate * (cf.E[k].at(i) * x);
      drift.noalias() -= rate * (cf.F[k].at(i) * u);
    }
    diff.noalias() = cf.C.at(i) * x;
    diff.noalias() += cf.D.at(i) * u;

    x += h * drift + dw * diff;
    pd.pre[w + 1] = x;
    const int ek = pd.skel.event_mark[w + 1];
    if (ek >= 0) {
      // Jump uses the left limit and the control frozen before the event.
      x.noalias() += cf.E[static_cast<size_t>(ek)].at(i) * pd.pre[w + 1];
      x.noalias() += cf.F[static_cast<size_t>(ek)].at(i) * u;
    }
    if (!x.allFinite()) throw NonFiniteState(path, pd.skel.times[w + 1]);
    pd.post[w + 1] = x;
    pd.control[w] = std::move(u);
  }
  return pd;
}

namespace {

PathBundle simulate_common(const ValidatedProblem& vp, int scenario, const Policy& policy,
                           const std::function<const Eigen::VectorXd&(int)>& initial_of,
                           const NoiseBundle& noise) {
  PathBundle pb;
  pb.noise = std::make_shared<NoiseBundle>(noise);
  pb.paths.resize(static_cast<size_t>(noise.n_paths));
  pb.scenario.assign(static_cast<size_t>(noise.n_paths), scenario);
  parallel_for(noise.n_paths, [&](int p) {
    pb.paths[static_cast<size_t>(p)] =
        simulate_one(vp, scenario, policy, initial_of(p), noise, p);
  });
  return pb;
}

}  // namespace

PathBundle simulate_paths(const ValidatedProblem& vp, int scenario, const Policy& policy,
                          const Eigen::VectorXd& initial, const NoiseBundle& noise) {
  return simulate_common(vp, scenario, policy,
                         [&](int) -> const Eigen::VectorXd& { return initial; }, noise);
}

PathBundle simulate_paths(const ValidatedProblem& vp, int scenario, const Policy& policy,
                          const std::vector<Eigen::VectorXd>& initials,
                          const NoiseBundle& noise) {
  if (initials.size() != static_cast<size_t>(noise.n_paths))
    throw DimensionMismatch("got " + std::to_string(initials.size()) +
                            " initial states for " + std::to_string(noise.n_paths) +
                            " paths");
  return simulate_common(vp, scenario, policy,
                         [&](int p) -> const Eigen::VectorXd& {
                           return initials[static_cast<size_t>(p)];
                         },
                         noise);
}

FlowPair fundamental_pair(const ValidatedProblem& vp, int scenario,
                          const NoiseBundle& noise) {
  const CoefficientSet& cf = vp.scenario(scenario).coefficients;
  const auto& marks = vp.measure().marks;
  const int n = vp.n();
  const int n_steps = vp.grid().n_steps;
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);

  // Per-step tabulations. Between events
  //   dPhi = (A - sum_k rate_k E_k) Phi dt + C Phi dW
  //   dPsi = Psi (-A + sum_k rate_k E_k + C C) dt - Psi C dW
  // and across an event of mark k, Phi -> (I+E_k) Phi, Psi -> Psi (I+E_k)^{-1};
  // these are the unique choices with d(Psi Phi) = 0. Note the C*C (not
  // C^T C) in the Psi drift: the product rule puts Psi C C Phi in the
  // cancellation, which matters once C stops commuting.
  std::vector<Eigen::MatrixXd> phi_drift(static_cast<size_t>(n_steps)),
      psi_drift(static_cast<size_t>(n_steps));
  std::vector<std::vector<Eigen::MatrixXd>> inv_ie(
      marks.size(), std::vector<Eigen::MatrixXd>(static_cast<size_t>(n_steps)));

  FlowPair fp;
  fp.corr_drift.resize(static_cast<size_t>(n_steps));
  fp.corr_jump.assign(marks.size(),
                      std::vector<Eigen::MatrixXd>(static_cast<size_t>(n_steps)));

  for (int i = 0; i < n_steps; ++i) {
    Eigen::MatrixXd sum_le = Eigen::MatrixXd::Zero(n, n);
    for (size_t k = 0; k < marks.size(); ++k)
      sum_le += marks[k].rate * cf.E[k].at(i);
    phi_drift[static_cast<size_t>(i)] = cf.A.at(i) - sum_le;
    psi_drift[static_cast<size_t>(i)] =
        -cf.A.at(i) + sum_le + cf.C.at(i) * cf.C.at(i);
    fp.corr_drift[static_cast<size_t>(i)] = cf.C.at(i) * cf.D.at(i);
    for (size_t k = 0; k < marks.size(); ++k) {
      Eigen::PartialPivLU<Eigen::MatrixXd> lu(id + cf.E[k].at(i));
      inv_ie[k][static_cast<size_t>(i)] = lu.inverse();
      fp.corr_jump[k][static_cast<size_t>(i)] = inv_ie[k][static_cast<size_t>(i)] * cf.F[k].at(i);
      fp.corr_drift[static_cast<size_t>(i)] +=
          marks[k].rate * (cf.E[k].at(i) * fp.corr_jump[k][static_cast<size_t>(i)]);
    }
  }

  fp.paths.resize(static_cast<size_t>(noise.n_paths));
  parallel_for(noise.n_paths, [&](int p) {
    FlowData fd;
    fd.skel = build_skeleton(noise.grid, noise.events.at(static_cast<size_t>(p)));
    const int K = fd.skel.n_intervals();
    fd.phi_pre.resize(K + 1);
    fd.phi_post.resize(K + 1);
    fd.psi_pre.resize(K + 1);
    fd.psi_post.resize(K + 1);
    fd.phi_pre[0] = fd.phi_post[0] = id;
    fd.psi_pre[0] = fd.psi_post[0] = id;
    Eigen::MatrixXd phi = id, psi = id;
    for (int w = 0; w < K; ++w) {
      const int i = fd.skel.ustep[w];
      const double h = fd.skel.times[w + 1] - fd.skel.times[w];
      const double dw = noise.dW(p, w, fd.skel);
      const Eigen::MatrixXd& c = cf.C.at(i);
      Eigen::MatrixXd phi_n = phi + h * (phi_drift[static_cast<size_t>(i)] * phi) + dw * (c * phi);
      Eigen::MatrixXd psi_n = psi + h * (psi * psi_drift[static_cast<size_t>(i)]) - dw * (psi * c);
      fd.phi_pre[w + 1] = phi_n;
      fd.psi_pre[w + 1] = psi_n;
      const int ek = fd.skel.event_mark[w + 1];
      if (ek >= 0) {
        phi_n = (id + cf.E[static_cast<size_t>(ek)].at(i)) * phi_n;
        psi_n = psi_n * inv_ie[static_cast<size_t>(ek)][static_cast<size_t>(i)];
      }
      if (!phi_n.allFinite() || !psi_n.allFinite())
        throw NonFiniteState(p, fd.skel.times[w + 1]);
      fd.phi_post[w + 1] = phi_n;
      fd.psi_post[w + 1] = psi_n;
      phi = std::move(phi_n);
      psi = std::move(psi_n);
    }
    fp.paths[static_cast<size_t>(p)] = std::move(fd);
  });
  return fp;
}

AccData control_accumulator(const ValidatedProblem& vp, int scenario,
                            const FlowPair& flow, int path,
                            const std::vector<Eigen::VectorXd>& u_steps,
                            const NoiseBundle& noise) {
  const CoefficientSet& cf = vp.scenario(scenario).coefficients;
  const auto& marks = vp.measure().marks;
  if (u_steps.size() != static_cast<size_t>(vp.grid().n_steps))
    throw DimensionMismatch("open-loop control has " + std::to_string(u_steps.size()) +
                            " steps, expected " + std::to_string(vp.grid().n_steps));
  const FlowData& fd = flow.paths.at(static_cast<size_t>(path));
  const int K = fd.skel.n_intervals();

  AccData ad;
  ad.pre.resize(K + 1);
  ad.post.resize(K + 1);
  ad.pre[0] = ad.post[0] = Eigen::VectorXd::Zero(vp.n());
  Eigen::VectorXd acc = ad.pre[0];
  for (int w = 0; w < K; ++w) {
    const int i = fd.skel.ustep[w];
    const double h = fd.skel.times[w + 1] - fd.skel.times[w];
    const double dw = noise.dW(path, w, fd.skel);
    const Eigen::VectorXd& u = u_steps[static_cast<size_t>(i)];
    // Lebesgue part (B - corr_drift minus the jump compensator), then the
    // Brownian part, all premultiplied by Psi at the left node.
    Eigen::VectorXd integ = (cf.B.at(i) - flow.corr_drift[static_cast<size_t>(i)]) * u;
    for (size_t k = 0; k < marks.size(); ++k)
      if (marks[k].rate != 0.0)
        integ.noalias() -= marks[k].rate * (flow.corr_jump[k][static_cast<size_t>(i)] * u);
    acc.noalias() += fd.psi_post[w] * (h * integ + dw * (cf.D.at(i) * u));
    ad.pre[w + 1] = acc;
    const int ek = fd.skel.event_mark[w + 1];
    if (ek >= 0)
      acc.noalias() += fd.psi_pre[w + 1] *
                       (flow.corr_jump[static_cast<size_t>(ek)][static_cast<size_t>(i)] * u);
    ad.post[w + 1] = acc;
  }
  return ad;
}

PathBundle state_via_flow(const ValidatedProblem& vp, int scenario, const FlowPair& flow,
                          const std::vector<Eigen::VectorXd>& u_steps,
                          const Eigen::VectorXd& initial, const NoiseBundle& noise) {
  if (initial.size() != vp.n())
    throw DimensionMismatch("initial state has size " + std::to_string(initial.size()) +
                            ", expected " + std::to_string(vp.n()));
  PathBundle pb;
  pb.noise = std::make_shared<NoiseBundle>(noise);
  pb.paths.resize(static_cast<size_t>(noise.n_paths));
  pb.scenario.assign(static_cast<size_t>(noise.n_paths), scenario);
  parallel_for(noise.n_paths, [&](int p) {
    const FlowData& fd = flow.paths.at(static_cast<size_t>(p));
    const AccData ad = control_accumulator(vp, scenario, flow, p, u_steps, noise);
    PathData pd;
    pd.skel = fd.skel;
    const int K = fd.skel.n_intervals();
    pd.pre.resize(K + 1);
    pd.post.resize(K + 1);
    pd.control.resize(K);
    for (int w = 0; w <= K; ++w) {
      pd.pre[w] = fd.phi_pre[w] * (initial + ad.pre[w]);
      pd.post[w] = fd.phi_post[w] * (initial + ad.post[w]);
      if (!pd.post[w].allFinite()) throw NonFiniteState(p, fd.skel.times[w]);
    }
    for (int w = 0; w < K; ++w)
      pd.control[w] = u_steps[static_cast<size_t>(fd.skel.ustep[w])];
    pb.paths[static_cast<size_t>(p)] = std::move(pd);
  });
  return pb;
}

PathBundle inverse_flow(const ValidatedProblem& vp, int scenario, const FlowPair& flow,
                        const std::vector<Eigen::VectorXd>& u_steps,
                        const NoiseBundle& noise, const Eigen::VectorXd& x) {
  if (x.size() != vp.n())
    throw DimensionMismatch("inverse flow argument has size " + std::to_string(x.size()) +
                            ", expected " + std::to_string(vp.n()));
  PathBundle pb;
  pb.noise = std::make_shared<NoiseBundle>(noise);
  pb.paths.resize(static_cast<size_t>(noise.n_paths));
  pb.scenario.assign(static_cast<size_t>(noise.n_paths), scenario);
  parallel_for(noise.n_paths, [&](int p) {
    const FlowData& fd = flow.paths.at(static_cast<size_t>(p));
    const AccData ad = control_accumulator(vp, scenario, flow, p, u_steps, noise);
    PathData pd;
    pd.skel = fd.skel;
    const int K = fd.skel.n_intervals();
    pd.pre.resize(K + 1);
    pd.post.resize(K + 1);
    pd.control.resize(K);
    for (int w = 0; w <= K; ++w) {
      pd.pre[w] = fd.psi_pre[w] * x - ad.pre[w];
      pd.post[w] = fd.psi_post[w] * x - ad.post[w];
      if (!pd.post[w].allFinite()) throw NonFiniteState(p, fd.skel.times[w]);
    }
    for (int w = 0; w < K; ++w)
      pd.control[w] = u_steps[static_cast<size_t>(fd.skel.ustep[w])];
    pb.paths[static_cast<size_t>(p)] = std::move(pd);
  });
  return pb;
}

}  // namespace jumplq
