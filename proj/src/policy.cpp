#include "atmg/policy.hpp"

#include <cmath>
#include <sstream>

namespace atmg {

TeamPolicy::TeamPolicy(std::size_t state_count, std::vector<std::size_t> team_sizes)
    : state_count_(state_count), team_sizes_(std::move(team_sizes)) {
  std::size_t offset = 0;
  player_offsets_.reserve(team_sizes_.size());
  for (auto a : team_sizes_) {
    player_offsets_.push_back(offset);
    offset += state_count_ * a;
  }
  coords_.assign(offset, 0.0);
}

TeamPolicy::TeamPolicy(std::size_t state_count, std::vector<std::size_t> team_sizes,
                       std::vector<double> coords)
    : TeamPolicy(state_count, std::move(team_sizes)) {
  if (coords.size() != coords_.size()) {
    throw DimensionError("TeamPolicy: coordinate count does not match the layout");
  }
  coords_ = std::move(coords);
}

TeamPolicy TeamPolicy::uniform(const GameSpec& spec) {
  TeamPolicy x(spec.state_count, spec.team_sizes);
  for (std::size_t k = 0; k < x.player_count(); ++k) {
    const double p = 1.0 / static_cast<double>(spec.team_sizes[k]);
    for (std::size_t s = 0; s < spec.state_count; ++s) {
      for (double& v : x.block(k, s)) v = p;
    }
  }
  return x;
}

bool TeamPolicy::matches(const GameSpec& spec) const {
  return state_count_ == spec.state_count && team_sizes_ == spec.team_sizes;
}

AdversaryPolicy::AdversaryPolicy(std::size_t state_count, std::size_t action_count)
    : state_count_(state_count), action_count_(action_count), coords_(state_count * action_count, 0.0) {}

AdversaryPolicy::AdversaryPolicy(std::size_t state_count, std::size_t action_count,
                                 std::vector<double> coords)
    : state_count_(state_count), action_count_(action_count), coords_(std::move(coords)) {
  if (coords_.size() != state_count_ * action_count_) {
    throw DimensionError("AdversaryPolicy: coordinate count does not match the layout");
  }
}

AdversaryPolicy AdversaryPolicy::uniform(const GameSpec& spec) {
  AdversaryPolicy y(spec.state_count, spec.adversary_actions);
  for (double& v : y.coords()) v = 1.0 / static_cast<double>(spec.adversary_actions);
  return y;
}

AdversaryPolicy AdversaryPolicy::deterministic(std::size_t action_count,
                                               std::span<const std::size_t> actions) {
  AdversaryPolicy y(actions.size(), action_count);
  for (std::size_t s = 0; s < actions.size(); ++s) {
    if (actions[s] >= action_count) throw DimensionError("deterministic: action out of range");
    y.block(s)[actions[s]] = 1.0;
  }
  return y;
}

bool AdversaryPolicy::matches(const GameSpec& spec) const {
  return state_count_ == spec.state_count && action_count_ == spec.adversary_actions;
}

std::string simplex_violation(std::span<const double> block, double tol) {
  double sum = 0.0;
  for (std::size_t i = 0; i < block.size(); ++i) {
    if (!std::isfinite(block[i]) || block[i] < 0.0) {
      return "entry " + std::to_string(i) + " is negative or not finite";
    }
    sum += block[i];
  }
  if (std::abs(sum - 1.0) > tol) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "block sums to " << sum;
    return msg.str();
  }
  return {};
}

std::string check_policy(const TeamPolicy& x, double tol) {
  for (std::size_t k = 0; k < x.player_count(); ++k) {
    for (std::size_t s = 0; s < x.state_count(); ++s) {
      auto why = simplex_violation(x.block(k, s), tol);
      if (!why.empty()) {
        return "team player " + std::to_string(k) + ", state " + std::to_string(s) + ": " + why;
      }
    }
  }
  return {};
}

std::string check_policy(const AdversaryPolicy& y, double tol) {
  for (std::size_t s = 0; s < y.state_count(); ++s) {
    auto why = simplex_violation(y.block(s), tol);
    if (!why.empty()) return "adversary, state " + std::to_string(s) + ": " + why;
  }
  return {};
}

void require_compatible(const GameSpec& spec, const TeamPolicy& x) {
  if (!x.matches(spec)) throw DimensionError("team policy does not match the game dimensions");
}

void require_compatible(const GameSpec& spec, const TeamPolicy& x, const AdversaryPolicy& y) {
  require_compatible(spec, x);
  if (!y.matches(spec)) throw DimensionError("adversary policy does not match the game dimensions");
}

double euclidean_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("euclidean_distance: size mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return std::sqrt(sum);
}

double joint_distance(const TeamPolicy& x, const AdversaryPolicy& y, const TeamPolicy& x2,
                      const AdversaryPolicy& y2) {
  const double dx = euclidean_distance(x.coords(), x2.coords());
  const double dy = euclidean_distance(y.coords(), y2.coords());
  return std::sqrt(dx * dx + dy * dy);
}

}  // namespace atmg
