#include "atmg/game.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace atmg {

namespace {

std::string index_string(std::initializer_list<std::size_t> idx) {
  std::ostringstream out;
  out << '(';
  bool first = true;
  for (auto i : idx) {
    if (!first) out << ", ";
    out << i;
    first = false;
  }
  out << ')';
  return out.str();
}

constexpr double kSumTolerance = 1e-12;

}  // namespace

std::size_t GameSpec::joint_action_count() const {
  std::size_t count = 1;
  for (auto a : team_sizes) count *= a;
  return count;
}

std::size_t GameSpec::team_action_total() const {
  std::size_t total = 0;
  for (auto a : team_sizes) total += a;
  return total;
}

std::size_t GameSpec::joint_index(std::span<const std::size_t> actions) const {
  if (actions.size() != team_sizes.size()) {
    throw DimensionError("joint_index: expected one action per team player");
  }
  std::size_t index = 0;
  for (std::size_t k = team_sizes.size(); k-- > 0;) {
    if (actions[k] >= team_sizes[k]) throw DimensionError("joint_index: action out of range");
    index = index * team_sizes[k] + actions[k];
  }
  return index;
}

std::vector<std::size_t> GameSpec::decode_joint(std::size_t a_joint) const {
  std::vector<std::size_t> actions(team_sizes.size());
  for (std::size_t k = 0; k < team_sizes.size(); ++k) {
    actions[k] = a_joint % team_sizes[k];
    a_joint /= team_sizes[k];
  }
  return actions;
}

void GameSpec::check_shapes() const {
  if (state_count == 0) throw DimensionError("game has no states");
  if (team_sizes.empty()) throw DimensionError("game has no team players");
  for (auto a : team_sizes) {
    if (a == 0) throw DimensionError("team player with zero actions");
  }
  if (adversary_actions == 0) throw DimensionError("adversary has zero actions");
  const std::size_t cells = state_count * joint_action_count() * adversary_actions;
  if (reward.size() != cells) throw DimensionError("reward tensor has wrong size");
  if (transition.size() != cells * state_count) {
    throw DimensionError("transition tensor has wrong size");
  }
  if (initial_dist.size() != state_count) {
    throw DimensionError("initial distribution has wrong size");
  }
}

const char* to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::Shape: return "shape";
    case ViolationKind::Discount: return "discount";
    case ViolationKind::TransitionNegative: return "transition-negative";
    case ViolationKind::TransitionRowSum: return "transition-row-sum";
    case ViolationKind::InitialSupport: return "initial-support";
    case ViolationKind::InitialSum: return "initial-sum";
    case ViolationKind::NonFinite: return "non-finite";
    case ViolationKind::RewardRange: return "reward-range";
  }
  return "unknown";
}

std::vector<Violation> validate_structure(const GameSpec& spec) {
  std::vector<Violation> report;
  try {
    spec.check_shapes();
  } catch (const DimensionError& e) {
    report.push_back({ViolationKind::Shape, {}, e.what()});
    return report;
  }

  if (!(spec.discount >= 0.0 && spec.discount < 1.0)) {
    report.push_back({ViolationKind::Discount, {}, "discount must lie in [0, 1)"});
  }

  const std::size_t S = spec.state_count;
  const std::size_t J = spec.joint_action_count();
  const std::size_t B = spec.adversary_actions;
  for (std::size_t s = 0; s < S; ++s) {
    for (std::size_t a = 0; a < J; ++a) {
      for (std::size_t b = 0; b < B; ++b) {
        if (!std::isfinite(spec.reward_at(s, a, b))) {
          report.push_back({ViolationKind::NonFinite, {s, a, b},
                            "reward " + index_string({s, a, b}) + " is not finite"});
        }
        auto row = spec.transition_row(s, a, b);
        double sum = 0.0;
        bool negative = false;
        for (double p : row) {
          if (!std::isfinite(p) || p < 0.0) negative = true;
          sum += p;
        }
        if (negative) {
          report.push_back({ViolationKind::TransitionNegative, {s, a, b},
                            "transition row " + index_string({s, a, b}) +
                                " has a negative or non-finite entry"});
        }
        if (!(std::abs(sum - 1.0) <= kSumTolerance)) {
          std::ostringstream msg;
          msg.precision(17);
          msg << "transition row " << index_string({s, a, b}) << " sums to " << sum;
          report.push_back({ViolationKind::TransitionRowSum, {s, a, b}, msg.str()});
        }
      }
    }
  }

  double rho_sum = 0.0;
  for (std::size_t s = 0; s < S; ++s) {
    const double p = spec.initial_dist[s];
    if (!(p > 0.0)) {
      report.push_back({ViolationKind::InitialSupport, {s},
                        "initial distribution has no mass on state " + std::to_string(s)});
    }
    rho_sum += p;
  }
  if (!(std::abs(rho_sum - 1.0) <= kSumTolerance)) {
    report.push_back({ViolationKind::InitialSum, {}, "initial distribution does not sum to 1"});
  }
  return report;
}

std::vector<Violation> validate(const GameSpec& spec) {
  auto report = validate_structure(spec);
  if (!report.empty() && report.front().kind == ViolationKind::Shape) return report;

  const std::size_t J = spec.joint_action_count();
  for (std::size_t s = 0; s < spec.state_count; ++s) {
    for (std::size_t a = 0; a < J; ++a) {
      for (std::size_t b = 0; b < spec.adversary_actions; ++b) {
        const double r = spec.reward_at(s, a, b);
        if (std::isfinite(r) && !(r > 0.0 && r < 1.0)) {
          report.push_back({ViolationKind::RewardRange, {s, a, b},
                            "reward " + index_string({s, a, b}) + " outside (0, 1)"});
        }
      }
    }
  }
  return report;
}

NormalizedGame normalize_rewards(const GameSpec& spec, double delta) {
  if (spec.reward.empty()) throw DimensionError("normalize_rewards: empty reward tensor");
  if (!(delta > 0.0)) throw std::invalid_argument("normalize_rewards: delta must be positive");
  const auto [lo_it, hi_it] = std::minmax_element(spec.reward.begin(), spec.reward.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  if (!std::isfinite(lo) || !std::isfinite(hi)) {
    throw std::invalid_argument("normalize_rewards: rewards must be finite");
  }
  if (hi == lo) throw DegenerateRewardsError("all rewards are equal; the game is trivial");

  RewardAffineMap map{-lo + delta, 1.0 / (hi - lo + 2.0 * delta)};
  NormalizedGame out{spec, map};
  for (double& r : out.spec.reward) r = map.apply(r);
  return out;
}

std::size_t grid_world_state_count(std::size_t side) {
  const std::size_t cells = side * side;
  return cells * cells * cells + 1;
}

GameSpec grid_world(std::size_t side, double delta, double gamma) {
  if (side < 2) throw std::invalid_argument("grid_world: side must be at least 2");

  const std::size_t C = side * side;
  const std::size_t S = grid_world_state_count(side);
  const std::size_t terminal = S - 1;
  constexpr std::size_t kMoves = 4;
  const std::size_t landmark_a = 0;
  const std::size_t landmark_b = C - 1;

  auto move = [side](std::size_t cell, std::size_t action) {
    std::size_t row = cell / side;
    std::size_t col = cell % side;
    switch (action) {
      case 0: row = row == 0 ? 0 : row - 1; break;
      case 1: row = std::min(row + 1, side - 1); break;
      case 2: col = col == 0 ? 0 : col - 1; break;
      default: col = std::min(col + 1, side - 1); break;
    }
    return row * side + col;
  };
  auto on_landmark = [&](std::size_t cell) { return cell == landmark_a || cell == landmark_b; };

  GameSpec spec;
  spec.state_count = S;
  spec.team_sizes = {kMoves, kMoves};
  spec.adversary_actions = kMoves;
  spec.discount = gamma;
  const std::size_t J = spec.joint_action_count();
  spec.reward.assign(S * J * kMoves, 0.0);
  spec.transition.assign(S * J * kMoves * S, 0.0);
  spec.initial_dist.assign(S, 1.0 / static_cast<double>(S));

  for (std::size_t s = 0; s < terminal; ++s) {
    const std::size_t p0 = s % C;
    const std::size_t p1 = (s / C) % C;
    const std::size_t padv = s / (C * C);
    for (std::size_t a0 = 0; a0 < kMoves; ++a0) {
      for (std::size_t a1 = 0; a1 < kMoves; ++a1) {
        const std::size_t aj = a0 + kMoves * a1;
        const std::size_t q0 = move(p0, a0);
        const std::size_t q1 = move(p1, a1);
        const bool team_done = on_landmark(q0) && on_landmark(q1) && q0 != q1;
        for (std::size_t b = 0; b < kMoves; ++b) {
          const std::size_t qadv = move(padv, b);
          double raw = 0.0;
          std::size_t next = q0 + C * (q1 + C * qadv);
          if (team_done) {
            raw = -1.0;
            next = terminal;
          } else if (on_landmark(qadv)) {
            raw = 1.0;
            next = terminal;
          }
          const std::size_t cell = spec.reward_index(s, aj, b);
          spec.reward[cell] = raw;
          spec.transition[cell * S + next] = 1.0;
        }
      }
    }
  }
  for (std::size_t aj = 0; aj < J; ++aj) {
    for (std::size_t b = 0; b < kMoves; ++b) {
      const std::size_t cell = spec.reward_index(terminal, aj, b);
      spec.reward[cell] = 0.0;
      spec.transition[cell * S + terminal] = 1.0;
    }
  }

  auto normalized = normalize_rewards(spec, delta).spec;
  // Raw rewards span [-1, 1], so the map sends 0 to the midpoint up to rounding.
  for (std::size_t aj = 0; aj < J; ++aj) {
    for (std::size_t b = 0; b < kMoves; ++b) {
      normalized.reward[normalized.reward_index(terminal, aj, b)] = 0.5;
    }
  }
  return normalized;
}

}  // namespace atmg
