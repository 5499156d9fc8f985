#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "atmg/game.hpp"
#include "atmg/policy.hpp"

namespace atmg {

/// Discounted cumulative adversary reward per state.
using ValueVector = Eigen::VectorXd;
/// Unnormalized discounted state occupancy; sums to 1 / (1 - gamma).
using VisitationMeasure = Eigen::VectorXd;

/// Probability of every joint team action at state s under x (mixed-radix order).
std::vector<double> joint_action_weights(const GameSpec& spec, const TeamPolicy& x, std::size_t s);

/// Joint action weights at state s with player k's factor replaced by 1.
std::vector<double> joint_action_weights_without(const GameSpec& spec, const TeamPolicy& x,
                                                 std::size_t s, std::size_t k);
/// Player k's component of a joint action index.
std::size_t player_action(const GameSpec& spec, std::size_t a_joint, std::size_t k);

/// Row-stochastic S x S matrix of the chain induced by (x, y).
Eigen::MatrixXd induced_transition(const GameSpec& spec, const TeamPolicy& x,
                                   const AdversaryPolicy& y);
Eigen::VectorXd induced_reward(const GameSpec& spec, const TeamPolicy& x, const AdversaryPolicy& y);

/// r(s, x, b) = E_{a ~ x_s}[r(s, a, b)].
double marginal_reward(const GameSpec& spec, std::size_t s, const TeamPolicy& x, std::size_t b);
/// P(. | s, x, b) = E_{a ~ x_s}[P(. | s, a, b)].
Eigen::VectorXd marginal_transition(const GameSpec& spec, std::size_t s, const TeamPolicy& x,
                                    std::size_t b);

/// Solves (I - gamma P(x,y)) v = r(x,y).
ValueVector value_vector(const GameSpec& spec, const TeamPolicy& x, const AdversaryPolicy& y);
/// rho^T value_vector(x, y).
double value_rho(const GameSpec& spec, const TeamPolicy& x, const AdversaryPolicy& y);
/// Solves d^T (I - gamma P(x,y)) = rho^T.
VisitationMeasure visitation(const GameSpec& spec, const TeamPolicy& x, const AdversaryPolicy& y);

/// Value of a fixed Markov chain; throws NumericError if the residual exceeds 1e-10 * S.
Eigen::VectorXd evaluate_chain(const Eigen::MatrixXd& transition, const Eigen::VectorXd& reward,
                               double discount);

/**
 * Single-agent tabular MDP.
 *   reward[s * A + a], transition[(s * A + a) * S + s']
 */
struct MdpModel {
  std::size_t state_count = 0;
  std::size_t action_count = 0;
  double discount = 0.0;
  std::vector<double> reward;
  std::vector<double> transition;

  double reward_at(std::size_t s, std::size_t a) const { return reward[s * action_count + a]; }
  std::span<const double> transition_row(std::size_t s, std::size_t a) const {
    return {transition.data() + (s * action_count + a) * state_count, state_count};
  }
};

enum class Objective { Maximize, Minimize };

struct MdpSolveOptions {
  /// Sup-norm distance to the optimal value targeted by value iteration.
  double tolerance = 1e-10;
  std::size_t max_sweeps = 1'000'000;
  /// Optional starting point for value iteration (e.g. the previous solution).
  const ValueVector* warm_start = nullptr;
};

struct MdpSolution {
  /// Deterministic optimal action per state; ties go to the lowest index.
  std::vector<std::size_t> policy;
  /// Exact value of `policy`.
  ValueVector value;
  std::size_t sweeps = 0;
};

/**
 * Value iteration until ||v_{t+1} - v_t||_inf <= tol (1 - gamma) / (2 gamma),
 * then greedy extraction. The greedy policy is evaluated exactly and
 * re-improved until stable, so the returned value is the optimal value to
 * linear-solve precision.
 */
MdpSolution solve_mdp(const MdpModel& mdp, Objective objective, const MdpSolveOptions& options = {});

/// The adversary's MDP when the team plays x.
MdpModel adversary_mdp(const GameSpec& spec, const TeamPolicy& x);
/// Player k's MDP when the other team members play x_{-k} and the adversary plays y.
MdpModel team_player_mdp(const GameSpec& spec, std::size_t k, const TeamPolicy& x,
                         const AdversaryPolicy& y);

struct AdversaryBestResponse {
  AdversaryPolicy policy;
  std::vector<std::size_t> actions;
  ValueVector value;
  /// rho^T value = phi(x).
  double value_rho = 0.0;
};

AdversaryBestResponse adversary_best_response(const GameSpec& spec, const TeamPolicy& x,
                                              const MdpSolveOptions& options = {});

struct TeamBestResponse {
  std::size_t player = 0;
  std::vector<std::size_t> actions;
  /// x with player k's blocks replaced by the deterministic best response.
  TeamPolicy deviation;
  ValueVector value;
  double value_rho = 0.0;
};

/// Player k minimizes the adversary's value; team payoffs are -r / n.
TeamBestResponse team_player_best_response(const GameSpec& spec, std::size_t k, const TeamPolicy& x,
                                           const AdversaryPolicy& y,
                                           const MdpSolveOptions& options = {});

/// x with player k's block at every state set to the point mass on actions[s].
TeamPolicy with_deterministic_player(const TeamPolicy& x, std::size_t k,
                                     std::span<const std::size_t> actions);

struct JointGradient {
  /// dV_rho / dx in TeamPolicy coordinate layout.
  std::vector<double> team;
  /// dV_rho / dy in AdversaryPolicy coordinate layout.
  std::vector<double> adversary;
};

/**
 * Exact gradient under direct parametrization:
 *   dV/dx_{k,s,a} = d(s) * E_{a_-k, b}[r(s,(a;a_-k),b) + gamma sum_s' P(s'|..) v(s')]
 * with d unnormalized.
 */
std::vector<double> policy_gradient(const GameSpec& spec, const TeamPolicy& x,
                                    const AdversaryPolicy& y);
JointGradient joint_gradient(const GameSpec& spec, const TeamPolicy& x, const AdversaryPolicy& y);

/// In-place Euclidean projection of one block onto the probability simplex.
void project_simplex(std::span<double> block);
/// Projects every (k, s) block of `z` independently.
TeamPolicy project_product_simplex(const TeamPolicy& z);

struct SmoothnessConstants {
  /// Lipschitz constant sqrt(sum A_k + B) / (1 - gamma)^2.
  double lipschitz = 0.0;
  /// Smoothness constant 2 (sum A_k + B) / (1 - gamma)^3.
  double smoothness = 0.0;
  /// 1 / ((1 - gamma) min_s rho(s)), an upper bound on the mismatch coefficient.
  double mismatch_bound = 0.0;
};

SmoothnessConstants smoothness_constants(const GameSpec& spec);

}  // namespace atmg
