#include "atmg/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace atmg {

namespace {

// Actions whose Q-values differ by less than this are treated as tied.
constexpr double kTieTolerance = 1e-12;
constexpr std::size_t kMaxPolicyRounds = 64;

// Product distribution over joint actions with player `skip` (if any) left out.
std::vector<double> product_weights(const GameSpec& spec, const TeamPolicy& x, std::size_t s,
                                    std::size_t skip) {
  std::vector<double> w{1.0};
  for (std::size_t k = spec.team_count(); k-- > 0;) {
    const std::size_t A = spec.team_sizes[k];
    std::vector<double> next(w.size() * A);
    auto block = x.block(k, s);
    for (std::size_t j = 0; j < w.size(); ++j) {
      for (std::size_t a = 0; a < A; ++a) {
        next[j * A + a] = w[j] * (k == skip ? 1.0 : block[a]);
      }
    }
    w = std::move(next);
  }
  return w;
}

std::size_t action_of(const GameSpec& spec, std::size_t a_joint, std::size_t k) {
  for (std::size_t j = 0; j < k; ++j) a_joint /= spec.team_sizes[j];
  return a_joint % spec.team_sizes[k];
}

Eigen::MatrixXd chain_of(const MdpModel& mdp, std::span<const std::size_t> policy,
                         Eigen::VectorXd& reward) {
  const std::size_t S = mdp.state_count;
  Eigen::MatrixXd P(S, S);
  reward.resize(static_cast<Eigen::Index>(S));
  for (std::size_t s = 0; s < S; ++s) {
    reward(s) = mdp.reward_at(s, policy[s]);
    auto row = mdp.transition_row(s, policy[s]);
    for (std::size_t t = 0; t < S; ++t) P(s, t) = row[t];
  }
  return P;
}

double q_value(const MdpModel& mdp, std::size_t s, std::size_t a, const Eigen::VectorXd& v) {
  double future = 0.0;
  auto row = mdp.transition_row(s, a);
  for (std::size_t t = 0; t < mdp.state_count; ++t) {
    if (row[t] != 0.0) future += row[t] * v(t);
  }
  return mdp.reward_at(s, a) + mdp.discount * future;
}

bool better(double candidate, double incumbent, Objective objective) {
  return objective == Objective::Maximize ? candidate > incumbent : candidate < incumbent;
}

std::vector<std::size_t> greedy(const MdpModel& mdp, const Eigen::VectorXd& v, Objective objective) {
  std::vector<std::size_t> policy(mdp.state_count, 0);
  std::vector<double> q(mdp.action_count);
  for (std::size_t s = 0; s < mdp.state_count; ++s) {
    double best = q_value(mdp, s, 0, v);
    q[0] = best;
    for (std::size_t a = 1; a < mdp.action_count; ++a) {
      q[a] = q_value(mdp, s, a, v);
      if (better(q[a], best, objective)) best = q[a];
    }
    for (std::size_t a = 0; a < mdp.action_count; ++a) {
      if (std::abs(q[a] - best) <= kTieTolerance) {
        policy[s] = a;
        break;
      }
    }
  }
  return policy;
}

}  // namespace

std::vector<double> joint_action_weights(const GameSpec& spec, const TeamPolicy& x, std::size_t s) {
  return product_weights(spec, x, s, std::numeric_limits<std::size_t>::max());
}

std::vector<double> joint_action_weights_without(const GameSpec& spec, const TeamPolicy& x,
                                                 std::size_t s, std::size_t k) {
  return product_weights(spec, x, s, k);
}

std::size_t player_action(const GameSpec& spec, std::size_t a_joint, std::size_t k) {
  return action_of(spec, a_joint, k);
}

Eigen::MatrixXd induced_transition(const GameSpec& spec, const TeamPolicy& x,
                                   const AdversaryPolicy& y) {
  require_compatible(spec, x, y);
  const std::size_t S = spec.state_count;
  const std::size_t J = spec.joint_action_count();
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(S, S);
  for (std::size_t s = 0; s < S; ++s) {
    const auto w = joint_action_weights(spec, x, s);
    for (std::size_t aj = 0; aj < J; ++aj) {
      for (std::size_t b = 0; b < spec.adversary_actions; ++b) {
        const double p = w[aj] * y.prob(s, b);
        if (p == 0.0) continue;
        auto row = spec.transition_row(s, aj, b);
        for (std::size_t t = 0; t < S; ++t) {
          if (row[t] != 0.0) P(s, t) += p * row[t];
        }
      }
    }
  }
  return P;
}

Eigen::VectorXd induced_reward(const GameSpec& spec, const TeamPolicy& x, const AdversaryPolicy& y) {
  require_compatible(spec, x, y);
  const std::size_t J = spec.joint_action_count();
  Eigen::VectorXd r = Eigen::VectorXd::Zero(spec.state_count);
  for (std::size_t s = 0; s < spec.state_count; ++s) {
    const auto w = joint_action_weights(spec, x, s);
    for (std::size_t aj = 0; aj < J; ++aj) {
      for (std::size_t b = 0; b < spec.adversary_actions; ++b) {
        r(s) += w[aj] * y.prob(s, b) * spec.reward_at(s, aj, b);
      }
    }
  }
  return r;
}

double marginal_reward(const GameSpec& spec, std::size_t s, const TeamPolicy& x, std::size_t b) {
  require_compatible(spec, x);
  if (s >= spec.state_count || b >= spec.adversary_actions) {
    throw DimensionError("marginal_reward: index out of range");
  }
  const auto w = joint_action_weights(spec, x, s);
  double r = 0.0;
  for (std::size_t aj = 0; aj < w.size(); ++aj) r += w[aj] * spec.reward_at(s, aj, b);
  return r;
}

Eigen::VectorXd marginal_transition(const GameSpec& spec, std::size_t s, const TeamPolicy& x,
                                    std::size_t b) {
  require_compatible(spec, x);
  if (s >= spec.state_count || b >= spec.adversary_actions) {
    throw DimensionError("marginal_transition: index out of range");
  }
  const auto w = joint_action_weights(spec, x, s);
  Eigen::VectorXd row = Eigen::VectorXd::Zero(spec.state_count);
  for (std::size_t aj = 0; aj < w.size(); ++aj) {
    if (w[aj] == 0.0) continue;
    auto p = spec.transition_row(s, aj, b);
    for (std::size_t t = 0; t < spec.state_count; ++t) row(t) += w[aj] * p[t];
  }
  return row;
}

Eigen::VectorXd evaluate_chain(const Eigen::MatrixXd& transition, const Eigen::VectorXd& reward,
                               double discount) {
  const auto S = transition.rows();
  const Eigen::MatrixXd system = Eigen::MatrixXd::Identity(S, S) - discount * transition;
  Eigen::VectorXd v = system.partialPivLu().solve(reward);
  const double residual = (system * v - reward).lpNorm<Eigen::Infinity>();
  if (!(residual <= 1e-10 * static_cast<double>(S))) {
    throw NumericError("value solve residual " + std::to_string(residual) + " exceeds tolerance");
  }
  return v;
}

ValueVector value_vector(const GameSpec& spec, const TeamPolicy& x, const AdversaryPolicy& y) {
  return evaluate_chain(induced_transition(spec, x, y), induced_reward(spec, x, y), spec.discount);
}

double value_rho(const GameSpec& spec, const TeamPolicy& x, const AdversaryPolicy& y) {
  const ValueVector v = value_vector(spec, x, y);
  return Eigen::Map<const Eigen::VectorXd>(spec.initial_dist.data(), v.size()).dot(v);
}

VisitationMeasure visitation(const GameSpec& spec, const TeamPolicy& x, const AdversaryPolicy& y) {
  const auto S = static_cast<Eigen::Index>(spec.state_count);
  const Eigen::MatrixXd system =
      Eigen::MatrixXd::Identity(S, S) - spec.discount * induced_transition(spec, x, y);
  const Eigen::Map<const Eigen::VectorXd> rho(spec.initial_dist.data(), S);
  return system.transpose().partialPivLu().solve(rho);
}

MdpSolution solve_mdp(const MdpModel& mdp, Objective objective, const MdpSolveOptions& options) {
  const std::size_t S = mdp.state_count;
  const double gamma = mdp.discount;
  MdpSolution out;

  Eigen::VectorXd v = options.warm_start != nullptr && options.warm_start->size() == static_cast<Eigen::Index>(S)
                          ? *options.warm_start
                          : Eigen::VectorXd::Zero(S);
  const double stop = gamma > 0.0 ? options.tolerance * (1.0 - gamma) / (2.0 * gamma) : 0.0;
  Eigen::VectorXd next(S);
  while (out.sweeps < options.max_sweeps) {
    for (std::size_t s = 0; s < S; ++s) {
      double best = q_value(mdp, s, 0, v);
      for (std::size_t a = 1; a < mdp.action_count; ++a) {
        const double q = q_value(mdp, s, a, v);
        if (better(q, best, objective)) best = q;
      }
      next(s) = best;
    }
    ++out.sweeps;
    const double change = (next - v).lpNorm<Eigen::Infinity>();
    v.swap(next);
    if (gamma == 0.0 || change <= stop) break;
  }

  out.policy = greedy(mdp, v, objective);
  Eigen::VectorXd reward;
  for (std::size_t round = 0; round < kMaxPolicyRounds; ++round) {
    out.value = evaluate_chain(chain_of(mdp, out.policy, reward), reward, gamma);
    auto improved = greedy(mdp, out.value, objective);
    // Only switch on a strict improvement; lowest-index ties were already applied.
    bool changed = false;
    for (std::size_t s = 0; s < S; ++s) {
      if (improved[s] == out.policy[s]) continue;
      const double current = q_value(mdp, s, out.policy[s], out.value);
      const double candidate = q_value(mdp, s, improved[s], out.value);
      if (std::abs(candidate - current) > kTieTolerance) {
        out.policy[s] = improved[s];
        changed = true;
      }
    }
    if (!changed) break;
  }
  return out;
}

MdpModel adversary_mdp(const GameSpec& spec, const TeamPolicy& x) {
  require_compatible(spec, x);
  const std::size_t S = spec.state_count;
  const std::size_t B = spec.adversary_actions;
  const std::size_t J = spec.joint_action_count();
  MdpModel mdp{S, B, spec.discount, std::vector<double>(S * B, 0.0),
               std::vector<double>(S * B * S, 0.0)};
  for (std::size_t s = 0; s < S; ++s) {
    const auto w = joint_action_weights(spec, x, s);
    for (std::size_t aj = 0; aj < J; ++aj) {
      if (w[aj] == 0.0) continue;
      for (std::size_t b = 0; b < B; ++b) {
        mdp.reward[s * B + b] += w[aj] * spec.reward_at(s, aj, b);
        auto row = spec.transition_row(s, aj, b);
        double* out = mdp.transition.data() + (s * B + b) * S;
        for (std::size_t t = 0; t < S; ++t) {
          if (row[t] != 0.0) out[t] += w[aj] * row[t];
        }
      }
    }
  }
  return mdp;
}

MdpModel team_player_mdp(const GameSpec& spec, std::size_t k, const TeamPolicy& x,
                         const AdversaryPolicy& y) {
  require_compatible(spec, x, y);
  if (k >= spec.team_count()) throw DimensionError("team_player_mdp: no such player");
  const std::size_t S = spec.state_count;
  const std::size_t A = spec.team_sizes[k];
  const std::size_t B = spec.adversary_actions;
  const std::size_t J = spec.joint_action_count();
  MdpModel mdp{S, A, spec.discount, std::vector<double>(S * A, 0.0),
               std::vector<double>(S * A * S, 0.0)};
  for (std::size_t s = 0; s < S; ++s) {
    const auto w = product_weights(spec, x, s, k);
    for (std::size_t aj = 0; aj < J; ++aj) {
      if (w[aj] == 0.0) continue;
      const std::size_t a = action_of(spec, aj, k);
      for (std::size_t b = 0; b < B; ++b) {
        const double p = w[aj] * y.prob(s, b);
        if (p == 0.0) continue;
        mdp.reward[s * A + a] += p * spec.reward_at(s, aj, b);
        auto row = spec.transition_row(s, aj, b);
        double* out = mdp.transition.data() + (s * A + a) * S;
        for (std::size_t t = 0; t < S; ++t) {
          if (row[t] != 0.0) out[t] += p * row[t];
        }
      }
    }
  }
  return mdp;
}

AdversaryBestResponse adversary_best_response(const GameSpec& spec, const TeamPolicy& x,
                                              const MdpSolveOptions& options) {
  auto solution = solve_mdp(adversary_mdp(spec, x), Objective::Maximize, options);
  AdversaryBestResponse out;
  out.policy = AdversaryPolicy::deterministic(spec.adversary_actions, solution.policy);
  out.actions = std::move(solution.policy);
  out.value = std::move(solution.value);
  out.value_rho = Eigen::Map<const Eigen::VectorXd>(spec.initial_dist.data(), out.value.size()).dot(out.value);
  return out;
}

TeamPolicy with_deterministic_player(const TeamPolicy& x, std::size_t k,
                                     std::span<const std::size_t> actions) {
  if (k >= x.player_count() || actions.size() != x.state_count()) {
    throw DimensionError("with_deterministic_player: dimension mismatch");
  }
  TeamPolicy out = x;
  for (std::size_t s = 0; s < x.state_count(); ++s) {
    auto block = out.block(k, s);
    std::fill(block.begin(), block.end(), 0.0);
    block[actions[s]] = 1.0;
  }
  return out;
}

TeamBestResponse team_player_best_response(const GameSpec& spec, std::size_t k, const TeamPolicy& x,
                                           const AdversaryPolicy& y, const MdpSolveOptions& options) {
  auto solution = solve_mdp(team_player_mdp(spec, k, x, y), Objective::Minimize, options);
  TeamBestResponse out;
  out.player = k;
  out.deviation = with_deterministic_player(x, k, solution.policy);
  out.actions = std::move(solution.policy);
  out.value = std::move(solution.value);
  out.value_rho = Eigen::Map<const Eigen::VectorXd>(spec.initial_dist.data(), out.value.size()).dot(out.value);
  return out;
}

JointGradient joint_gradient(const GameSpec& spec, const TeamPolicy& x, const AdversaryPolicy& y) {
  require_compatible(spec, x, y);
  const std::size_t S = spec.state_count;
  const std::size_t J = spec.joint_action_count();
  const std::size_t B = spec.adversary_actions;
  const double gamma = spec.discount;

  const Eigen::MatrixXd P = induced_transition(spec, x, y);
  const Eigen::MatrixXd system = Eigen::MatrixXd::Identity(S, S) - gamma * P;
  const auto lu = system.partialPivLu();
  const Eigen::VectorXd v = lu.solve(induced_reward(spec, x, y));
  const Eigen::Map<const Eigen::VectorXd> rho(spec.initial_dist.data(), S);
  const Eigen::VectorXd d = system.transpose().partialPivLu().solve(rho);

  JointGradient grad{std::vector<double>(x.dimension(), 0.0), std::vector<double>(y.dimension(), 0.0)};
  std::vector<double> q(J * B);
  for (std::size_t s = 0; s < S; ++s) {
    for (std::size_t aj = 0; aj < J; ++aj) {
      for (std::size_t b = 0; b < B; ++b) {
        double future = 0.0;
        auto row = spec.transition_row(s, aj, b);
        for (std::size_t t = 0; t < S; ++t) {
          if (row[t] != 0.0) future += row[t] * v(t);
        }
        q[aj * B + b] = spec.reward_at(s, aj, b) + gamma * future;
      }
    }

    const auto w = joint_action_weights(spec, x, s);
    for (std::size_t b = 0; b < B; ++b) {
      double sum = 0.0;
      for (std::size_t aj = 0; aj < J; ++aj) sum += w[aj] * q[aj * B + b];
      grad.adversary[s * B + b] = d(s) * sum;
    }

    for (std::size_t k = 0; k < spec.team_count(); ++k) {
      const auto w_others = product_weights(spec, x, s, k);
      const std::size_t base = x.offset(k, s);
      for (std::size_t aj = 0; aj < J; ++aj) {
        if (w_others[aj] == 0.0) continue;
        double expected = 0.0;
        for (std::size_t b = 0; b < B; ++b) expected += y.prob(s, b) * q[aj * B + b];
        grad.team[base + action_of(spec, aj, k)] += d(s) * w_others[aj] * expected;
      }
    }
  }
  return grad;
}

std::vector<double> policy_gradient(const GameSpec& spec, const TeamPolicy& x,
                                    const AdversaryPolicy& y) {
  return joint_gradient(spec, x, y).team;
}

void project_simplex(std::span<double> block) {
  if (block.empty()) return;
  std::vector<double> sorted(block.begin(), block.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumulative = 0.0;
  double threshold = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    cumulative += sorted[i];
    const double candidate = (cumulative - 1.0) / static_cast<double>(i + 1);
    if (sorted[i] - candidate > 0.0) threshold = candidate;
  }
  for (double& v : block) v = std::max(v - threshold, 0.0);
}

TeamPolicy project_product_simplex(const TeamPolicy& z) {
  TeamPolicy out = z;
  for (std::size_t k = 0; k < out.player_count(); ++k) {
    for (std::size_t s = 0; s < out.state_count(); ++s) project_simplex(out.block(k, s));
  }
  return out;
}

SmoothnessConstants smoothness_constants(const GameSpec& spec) {
  const double gamma = spec.discount;
  const double actions = static_cast<double>(spec.team_action_total() + spec.adversary_actions);
  const double min_rho = *std::min_element(spec.initial_dist.begin(), spec.initial_dist.end());
  const double g = 1.0 - gamma;
  return {std::sqrt(actions) / (g * g), 2.0 * actions / (g * g * g), 1.0 / (g * min_rho)};
}

}  // namespace atmg
