#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace atmg {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor shapes or policy dimensions do not agree with the game.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A linear solve or pivot sequence lost accuracy beyond its tolerance.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// All rewards are equal, so no affine map onto (0,1) exists.
class DegenerateRewardsError : public Error {
 public:
  using Error::Error;
};

/**
 * Tabular adversarial team Markov game.
 *
 * Only the adversary's reward is stored. Every team member receives
 * -reward / n, so team rewards are identical across members and the game is
 * zero-sum between the team and the adversary.
 *
 * Joint team actions are flattened with a mixed-radix index where player 0
 * varies fastest:
 *
 *   a_joint = a_0 + A_0 * (a_1 + A_1 * (a_2 + ...))
 *
 * Tensor layouts (row-major):
 *   reward[s][a_joint][b]
 *   transition[s][a_joint][b][s']
 */
struct GameSpec {
  std::size_t state_count = 0;
  std::vector<std::size_t> team_sizes;
  std::size_t adversary_actions = 0;
  std::vector<double> reward;
  std::vector<double> transition;
  double discount = 0.0;
  std::vector<double> initial_dist;

  std::size_t team_count() const { return team_sizes.size(); }
  std::size_t joint_action_count() const;
  /// Sum of the team players' action counts.
  std::size_t team_action_total() const;

  std::size_t reward_index(std::size_t s, std::size_t a_joint, std::size_t b) const {
    return (s * joint_action_count() + a_joint) * adversary_actions + b;
  }
  double reward_at(std::size_t s, std::size_t a_joint, std::size_t b) const {
    return reward[reward_index(s, a_joint, b)];
  }
  std::span<const double> transition_row(std::size_t s, std::size_t a_joint,
                                         std::size_t b) const {
    return {transition.data() + reward_index(s, a_joint, b) * state_count, state_count};
  }

  std::size_t joint_index(std::span<const std::size_t> actions) const;
  std::vector<std::size_t> decode_joint(std::size_t a_joint) const;

  /// Shape check only; throws DimensionError.
  void check_shapes() const;
};

enum class ViolationKind {
  Shape,
  Discount,
  TransitionNegative,
  TransitionRowSum,
  InitialSupport,
  InitialSum,
  NonFinite,
  RewardRange,
};

struct Violation {
  ViolationKind kind;
  /// Tensor index the violation refers to, e.g. {s, a_joint, b}.
  std::vector<std::size_t> index;
  std::string message;
};

const char* to_string(ViolationKind kind);

/// Checks every GameSpec invariant and reports all violations found.
std::vector<Violation> validate(const GameSpec& spec);

/// Structural checks only; rewards may lie outside (0,1).
std::vector<Violation> validate_structure(const GameSpec& spec);

inline constexpr double kDefaultRewardMargin = 0.05;

/// r' = (r + shift) * scale.
struct RewardAffineMap {
  double shift = 0.0;
  double scale = 1.0;

  double apply(double r) const { return (r + shift) * scale; }
  /// Converts a gap measured on the normalized game back to original units.
  double gap_to_original(double gap) const { return gap / scale; }
};

struct NormalizedGame {
  GameSpec spec;
  RewardAffineMap map;
};

/**
 * Maps rewards affinely onto (0,1):
 *
 *   r' = (r - min r + delta) / (max r - min r + 2 delta)
 *
 * Positive affine maps preserve the Nash equilibria; every deviation gap is
 * multiplied by `map.scale`.
 */
NormalizedGame normalize_rewards(const GameSpec& spec, double delta = kDefaultRewardMargin);

/// State count of the landmark grid world: side^6 positional states + terminal.
std::size_t grid_world_state_count(std::size_t side);

/**
 * Landmark grid world with two team agents and one adversary on a side x side
 * grid.
 *
 * Positions are flattened as cell = row * side + col. Nonterminal state
 * index is p0 + C * (p1 + C * p_adv) with C = side^2; the last state is the
 * absorbing terminal. Actions: 0 = up, 1 = down, 2 = left, 3 = right; moves
 * into a wall leave the agent in place. Landmarks sit at cells 0 and C - 1.
 *
 * After the synchronous move, if both team agents stand on the two distinct
 * landmarks the episode ends with raw adversary reward -1 (the team wins a
 * simultaneous arrival); otherwise, if the adversary stands on a landmark it
 * ends with +1; otherwise the raw reward is 0. Raw rewards are normalized
 * with `delta`, which maps the terminal self-loop reward 0 to 0.5. The initial
 * distribution is uniform over all states.
 */
GameSpec grid_world(std::size_t side, double delta = kDefaultRewardMargin, double gamma = 0.9);

}  // namespace atmg
