#include "atmg/extension.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace atmg {

ExtensionConstants extension_constants(const GameSpec& spec) {
  const SmoothnessConstants sc = smoothness_constants(spec);
  const double gamma = spec.discount;
  const double g = 1.0 - gamma;
  const double S = static_cast<double>(spec.state_count);
  const double root = std::sqrt(static_cast<double>(spec.team_action_total()));
  ExtensionConstants out;
  out.c2 = (root + gamma * S * root / g + gamma * S * sc.lipschitz + sc.lipschitz) / g;
  out.c1 = 4.0 * sc.smoothness + out.c2;
  return out;
}

double extension_bound(const GameSpec& spec, double epsilon) {
  const ExtensionConstants c = extension_constants(spec);
  const double D = smoothness_constants(spec).mismatch_bound;
  const double S = static_cast<double>(spec.state_count);
  const double B = static_cast<double>(spec.adversary_actions);
  return (2.0 * c.c2 * B * S * D + c.c1 * D * S) * epsilon;
}

std::size_t lp_adv_row_count(const GameSpec& spec) {
  const std::size_t S = spec.state_count;
  return S * spec.team_action_total() + 2 * S * spec.adversary_actions + 2 * S;
}

double lp_adv_epsilon(double measured_gap) { return std::max(1.1 * measured_gap, 1e-8); }

lp::LinearProgram build_lp_adv(const GameSpec& spec, const TeamPolicy& x_hat,
                               const ValueVector& v_hat, double epsilon) {
  require_compatible(spec, x_hat);
  const std::size_t S = spec.state_count;
  const std::size_t J = spec.joint_action_count();
  const std::size_t B = spec.adversary_actions;
  if (static_cast<std::size_t>(v_hat.size()) != S) throw DimensionError("v_hat has wrong length");
  if (!(epsilon >= 0.0)) throw std::invalid_argument("epsilon must be nonnegative");
  const double gamma = spec.discount;
  const ExtensionConstants c = extension_constants(spec);

  // q[(s * J + aj) * B + b] = r(s,aj,b) + gamma sum_s' P(s'|s,aj,b) v_hat(s') - v_hat(s)
  std::vector<double> q(S * J * B);
  for (std::size_t s = 0; s < S; ++s) {
    for (std::size_t aj = 0; aj < J; ++aj) {
      for (std::size_t b = 0; b < B; ++b) {
        double future = 0.0;
        auto row = spec.transition_row(s, aj, b);
        for (std::size_t t = 0; t < S; ++t) {
          if (row[t] != 0.0) future += row[t] * v_hat(t);
        }
        q[spec.reward_index(s, aj, b)] = spec.reward_at(s, aj, b) + gamma * future - v_hat(s);
      }
    }
  }

  lp::LinearProgram lp(S * B);
  std::vector<double> objective(S * B, 0.0);
  std::vector<double> bracket(S * B, 0.0);
  for (std::size_t s = 0; s < S; ++s) {
    const auto w = joint_action_weights(spec, x_hat, s);
    for (std::size_t b = 0; b < B; ++b) {
      for (std::size_t aj = 0; aj < J; ++aj) {
        objective[s * B + b] += w[aj] * spec.reward_at(s, aj, b);
        bracket[s * B + b] += w[aj] * q[spec.reward_index(s, aj, b)];
      }
    }
  }
  lp.set_objective(objective);

  // (a) per player, state and action.
  for (std::size_t k = 0; k < spec.team_count(); ++k) {
    const std::size_t A = spec.team_sizes[k];
    for (std::size_t s = 0; s < S; ++s) {
      const auto w_others = joint_action_weights_without(spec, x_hat, s, k);
      for (std::size_t a = 0; a < A; ++a) {
        std::vector<double> row(S * B, 0.0);
        for (std::size_t aj = 0; aj < J; ++aj) {
          if (player_action(spec, aj, k) != a || w_others[aj] == 0.0) continue;
          for (std::size_t b = 0; b < B; ++b) {
            row[s * B + b] += w_others[aj] * q[spec.reward_index(s, aj, b)];
          }
        }
        lp.add_row(std::move(row), lp::Sense::GreaterEqual, -c.c1 * epsilon);
      }
    }
  }
  // (b) and (c): one coefficient per row.
  for (const auto sense : {lp::Sense::LessEqual, lp::Sense::GreaterEqual}) {
    const double rhs = sense == lp::Sense::LessEqual ? c.c2 * epsilon : -c.c2 * epsilon;
    for (std::size_t i = 0; i < S * B; ++i) {
      std::vector<double> row(S * B, 0.0);
      row[i] = bracket[i];
      lp.add_row(std::move(row), sense, rhs);
    }
  }
  // (d) and (e): occupancy mass per state.
  for (std::size_t s = 0; s < S; ++s) {
    std::vector<double> row(S * B, 0.0);
    std::fill(row.begin() + static_cast<std::ptrdiff_t>(s * B),
              row.begin() + static_cast<std::ptrdiff_t>((s + 1) * B), 1.0);
    lp.add_row(std::move(row), lp::Sense::GreaterEqual, spec.initial_dist[s]);
  }
  for (std::size_t s = 0; s < S; ++s) {
    std::vector<double> row(S * B, 0.0);
    std::fill(row.begin() + static_cast<std::ptrdiff_t>(s * B),
              row.begin() + static_cast<std::ptrdiff_t>((s + 1) * B), 1.0);
    lp.add_row(std::move(row), lp::Sense::LessEqual, 1.0 / (1.0 - gamma));
  }
  return lp;
}

AdvNashResult adv_nash_policy(const GameSpec& spec, const TeamPolicy& x_hat, double epsilon,
                              LpAdvMode mode) {
  require_compatible(spec, x_hat);
  const std::size_t S = spec.state_count;
  const std::size_t B = spec.adversary_actions;

  AdvNashResult out;
  out.epsilon = epsilon;
  out.v_hat = adversary_best_response(spec, x_hat).value;
  const lp::LinearProgram program = build_lp_adv(spec, x_hat, out.v_hat, epsilon);
  out.solution = mode == LpAdvMode::Feasible ? lp::find_feasible(program) : lp::solve(program);
  if (!out.solution.has_point()) {
    char message[256];
    std::snprintf(message, sizeof message,
                  "extension program infeasible at epsilon=%.6g (phase-one residue %.3g, "
                  "max violation %.3g); the team policy is not epsilon-nearly stationary",
                  epsilon, out.solution.infeasibility, out.solution.max_residual);
    throw LpAdvInfeasibleError(message, out.solution.infeasibility, out.solution.max_residual);
  }

  out.lambda = out.solution.point;
  out.policy = AdversaryPolicy(S, B);
  for (std::size_t s = 0; s < S; ++s) {
    double total = 0.0;
    for (std::size_t b = 0; b < B; ++b) total += out.lambda[s * B + b];
    for (std::size_t b = 0; b < B; ++b) out.policy.block(s)[b] = out.lambda[s * B + b] / total;
  }
  return out;
}

NashGapReport nash_gap(const GameSpec& spec, const TeamPolicy& x, const AdversaryPolicy& y) {
  require_compatible(spec, x, y);
  NashGapReport out;
  out.value = value_rho(spec, x, y);
  out.adversary_gap = adversary_best_response(spec, x).value_rho - out.value;
  out.epsilon_certified = out.adversary_gap;
  for (std::size_t k = 0; k < spec.team_count(); ++k) {
    const double gap = out.value - team_player_best_response(spec, k, x, y).value_rho;
    out.team_gaps.push_back(gap);
    out.epsilon_certified = std::max(out.epsilon_certified, gap);
  }
  return out;
}

bool check_epsilon_ne(const GameSpec& spec, const TeamPolicy& x, const AdversaryPolicy& y,
                      double epsilon) {
  return nash_gap(spec, x, y).epsilon_certified <= epsilon + 1e-9;
}

QnlpResiduals qnlp_residuals(const GameSpec& spec, const TeamPolicy& x, const ValueVector& v,
                             const TeamPolicy& x_anchor) {
  require_compatible(spec, x);
  require_compatible(spec, x_anchor);
  const std::size_t S = spec.state_count;
  if (static_cast<std::size_t>(v.size()) != S) throw DimensionError("v has wrong length");
  const double ell = smoothness_constants(spec).smoothness;

  QnlpResiduals out;
  const Eigen::Map<const Eigen::VectorXd> rho(spec.initial_dist.data(), static_cast<Eigen::Index>(S));
  double distance2 = 0.0;
  for (std::size_t i = 0; i < x.dimension(); ++i) {
    const double diff = x.coords()[i] - x_anchor.coords()[i];
    distance2 += diff * diff;
  }
  out.objective = rho.dot(v) + ell * distance2;

  const MdpModel mdp = adversary_mdp(spec, x);
  for (std::size_t s = 0; s < S; ++s) {
    for (std::size_t b = 0; b < spec.adversary_actions; ++b) {
      double future = 0.0;
      auto row = mdp.transition_row(s, b);
      for (std::size_t t = 0; t < S; ++t) future += row[t] * v(t);
      const double excess = mdp.reward_at(s, b) + spec.discount * future - v(s);
      out.bellman_violation = std::max(out.bellman_violation, excess);
    }
  }
  for (std::size_t k = 0; k < x.player_count(); ++k) {
    for (std::size_t s = 0; s < S; ++s) {
      double sum = 0.0;
      for (double p : x.block(k, s)) {
        sum += p;
        out.simplex_violation = std::max(out.simplex_violation, -p);
      }
      out.simplex_violation = std::max(out.simplex_violation, std::abs(sum - 1.0));
    }
  }
  out.max_violation = std::max(out.bellman_violation, out.simplex_violation);
  return out;
}

}  // namespace atmg
