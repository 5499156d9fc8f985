#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "atmg/game.hpp"

namespace atmg {

/**
 * Directly parameterized stationary team policy x[k][s] in Delta(A_k).
 *
 * Coordinates are stored flat, player-major then state-major:
 *   offset(k, s) = S * (A_0 + ... + A_{k-1}) + s * A_k
 * The same layout is used for team gradients and unconstrained iterates.
 */
class TeamPolicy {
 public:
  TeamPolicy() = default;
  TeamPolicy(std::size_t state_count, std::vector<std::size_t> team_sizes);
  TeamPolicy(std::size_t state_count, std::vector<std::size_t> team_sizes,
             std::vector<double> coords);

  static TeamPolicy uniform(const GameSpec& spec);

  std::size_t state_count() const { return state_count_; }
  const std::vector<std::size_t>& team_sizes() const { return team_sizes_; }
  std::size_t player_count() const { return team_sizes_.size(); }
  std::size_t dimension() const { return coords_.size(); }

  std::size_t offset(std::size_t k, std::size_t s) const {
    return player_offsets_[k] + s * team_sizes_[k];
  }
  std::span<double> block(std::size_t k, std::size_t s) {
    return {coords_.data() + offset(k, s), team_sizes_[k]};
  }
  std::span<const double> block(std::size_t k, std::size_t s) const {
    return {coords_.data() + offset(k, s), team_sizes_[k]};
  }
  double prob(std::size_t k, std::size_t s, std::size_t a) const { return coords_[offset(k, s) + a]; }

  std::vector<double>& coords() { return coords_; }
  const std::vector<double>& coords() const { return coords_; }

  bool matches(const GameSpec& spec) const;

 private:
  std::size_t state_count_ = 0;
  std::vector<std::size_t> team_sizes_;
  std::vector<std::size_t> player_offsets_;
  std::vector<double> coords_;
};

/// Adversary policy y[s] in Delta(B), stored as y[s * B + b].
class AdversaryPolicy {
 public:
  AdversaryPolicy() = default;
  AdversaryPolicy(std::size_t state_count, std::size_t action_count);
  AdversaryPolicy(std::size_t state_count, std::size_t action_count, std::vector<double> coords);

  static AdversaryPolicy uniform(const GameSpec& spec);
  static AdversaryPolicy deterministic(std::size_t action_count, std::span<const std::size_t> actions);

  std::size_t state_count() const { return state_count_; }
  std::size_t action_count() const { return action_count_; }
  std::size_t dimension() const { return coords_.size(); }

  std::span<double> block(std::size_t s) { return {coords_.data() + s * action_count_, action_count_}; }
  std::span<const double> block(std::size_t s) const {
    return {coords_.data() + s * action_count_, action_count_};
  }
  double prob(std::size_t s, std::size_t b) const { return coords_[s * action_count_ + b]; }

  std::vector<double>& coords() { return coords_; }
  const std::vector<double>& coords() const { return coords_; }

  bool matches(const GameSpec& spec) const;

 private:
  std::size_t state_count_ = 0;
  std::size_t action_count_ = 0;
  std::vector<double> coords_;
};

inline constexpr double kSimplexTolerance = 1e-12;

/// Empty string when every block is a probability vector within `tol`.
std::string simplex_violation(std::span<const double> block, double tol = kSimplexTolerance);
/// Describes the first invalid block of `x`, or returns an empty string.
std::string check_policy(const TeamPolicy& x, double tol = kSimplexTolerance);
std::string check_policy(const AdversaryPolicy& y, double tol = kSimplexTolerance);

/// Throws DimensionError unless both policies fit the game.
void require_compatible(const GameSpec& spec, const TeamPolicy& x, const AdversaryPolicy& y);
void require_compatible(const GameSpec& spec, const TeamPolicy& x);

/// Euclidean distance between the concatenations (x, y) and (x', y').
double joint_distance(const TeamPolicy& x, const AdversaryPolicy& y, const TeamPolicy& x2,
                      const AdversaryPolicy& y2);

double euclidean_distance(std::span<const double> a, std::span<const double> b);

}  // namespace atmg
