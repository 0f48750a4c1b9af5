#pragma once

#include <Eigen/Dense>

#include <functional>
#include <memory>
#include <vector>

#include "jumplq/noise.hpp"
#include "jumplq/types.hpp"

namespace jumplq {

// One path on its event-augmented skeleton. `pre` holds the left limit at
// each node, `post` the value after the jump (equal when no event fires);
// `control` holds the value frozen on [times[w], times[w+1]) — the jump at
// node w+1 uses control[w], the predictable convention.
struct PathData {
  Skeleton skel;
  std::vector<Eigen::VectorXd> pre;
  std::vector<Eigen::VectorXd> post;
  std::vector<Eigen::VectorXd> control;
};

struct PathBundle {
  std::shared_ptr<const NoiseBundle> noise;
  std::vector<PathData> paths;
  std::vector<int> scenario;  // per path

  int n_paths() const { return static_cast<int>(paths.size()); }
};

// Open-loop tabulated (per uniform step), constant, or feedback u(t, x-).
class Policy {
 public:
  using Feedback = std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)>;

  static Policy zero(int m) { return constant(Eigen::VectorXd::Zero(m)); }
  static Policy constant(Eigen::VectorXd u);
  static Policy tabulated(std::vector<Eigen::VectorXd> per_step);
  static Policy feedback(Feedback f);

  // Control for the interval starting at time t (inside uniform step
  // `ustep`), given the left-limit state there.
  Eigen::VectorXd value(double t, int ustep, const Eigen::VectorXd& x_left) const;

 private:
  enum class Kind { kConstant, kTabulated, kFeedback };
  Kind kind_ = Kind::kConstant;
  Eigen::VectorXd u_const_;
  std::vector<Eigen::VectorXd> u_steps_;
  Feedback fb_;
};

// Euler scheme on the event-augmented skeleton. Between events the
// compensator is folded into the drift, A x + B u - sum_k rate_k (E_k x +
// F_k u); at an event of mark k the state jumps by E_k x- + F_k u.
PathData simulate_one(const ValidatedProblem& vp, int scenario, const Policy& policy,
                      const Eigen::VectorXd& initial, const NoiseBundle& noise,
                      int path);

PathBundle simulate_paths(const ValidatedProblem& vp, int scenario, const Policy& policy,
                          const Eigen::VectorXd& initial, const NoiseBundle& noise);
PathBundle simulate_paths(const ValidatedProblem& vp, int scenario, const Policy& policy,
                          const std::vector<Eigen::VectorXd>& initials,
                          const NoiseBundle& noise);

// Fundamental matrix pair on one path. Phi solves the uncontrolled flow
// equation, Psi its algebraic inverse by its own SDE (never by inverting
// Phi numerically, so the Phi*Psi - I defect stays a genuine scheme
// diagnostic).
struct FlowData {
  Skeleton skel;
  std::vector<Eigen::MatrixXd> phi_pre, phi_post;
  std::vector<Eigen::MatrixXd> psi_pre, psi_post;
};

struct FlowPair {
  std::vector<FlowData> paths;
  // Correction tabulations, per uniform step:
  //   corr_drift = C D + sum_k rate_k E_k (I+E_k)^{-1} F_k
  //   corr_jump[k] = (I+E_k)^{-1} F_k
  std::vector<Eigen::MatrixXd> corr_drift;
  std::vector<std::vector<Eigen::MatrixXd>> corr_jump;  // [mark][step]
};

FlowPair fundamental_pair(const ValidatedProblem& vp, int scenario,
                          const NoiseBundle& noise);

// Control accumulator of the variation-of-constants representation: the
// running sum of the Lebesgue (B - corr_drift), Brownian (D) and
// compensated-jump (corr_jump) integrals, all premultiplied by Psi.
struct AccData {
  std::vector<Eigen::VectorXd> pre, post;  // per node
};

AccData control_accumulator(const ValidatedProblem& vp, int scenario,
                            const FlowPair& flow, int path,
                            const std::vector<Eigen::VectorXd>& u_steps,
                            const NoiseBundle& noise);

// State via the explicit representation X(s) = Phi(s)[xi + Acc(s)] on the
// same skeleton and noise as the direct scheme.
PathBundle state_via_flow(const ValidatedProblem& vp, int scenario, const FlowPair& flow,
                          const std::vector<Eigen::VectorXd>& u_steps,
                          const Eigen::VectorXd& initial, const NoiseBundle& noise);

// Inverse flow Y(s) = Psi(s) x - Acc(s): applied to y = X(s) it recovers
// the time-zero state, which is the identity the tests lean on.
PathBundle inverse_flow(const ValidatedProblem& vp, int scenario, const FlowPair& flow,
                        const std::vector<Eigen::VectorXd>& u_steps,
                        const NoiseBundle& noise, const Eigen::VectorXd& x);

// Expand a constant control to the per-step tabulation the flow ops take.
std::vector<Eigen::VectorXd> constant_control(const TimeGrid& grid,
                                              const Eigen::VectorXd& u);

}  // namespace jumplq
