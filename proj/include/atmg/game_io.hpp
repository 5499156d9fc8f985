#pragma once

#include <optional>
#include <string>
#include <vector>

#include "atmg/game.hpp"
#include "atmg/policy.hpp"

namespace atmg {

/// A game or policy file is missing, unreadable, or does not follow its schema.
class FormatError : public Error {
 public:
  using Error::Error;
};

inline constexpr const char* kGameSchema = "atmg-v1";
inline constexpr const char* kPolicySchema = "atmg-policies-v1";

/**
 * Reads an atmg-v1 game file:
 *
 *   {
 *     "schema": "atmg-v1",
 *     "states": S, "team_sizes": [A_0, ...], "adversary_actions": B,
 *     "gamma": g, "rho": [...],
 *     "reward": [s][a_joint][b],
 *     "transition": [s][a_joint][b][s']            (dense)
 *     "transition_sparse": [[s, a_joint, b, s', p], ...]   (alternative)
 *   }
 *
 * Only shapes are checked here; invariants are left to validate().
 */
GameSpec read_game(const std::string& path);

/// Writes with 17 significant digits so that reading back is bit-identical.
/// Transitions are stored sparsely when fewer than 10% of entries are nonzero.
void write_game(const GameSpec& spec, const std::string& path);

struct PolicyFile {
  TeamPolicy team;
  AdversaryPolicy adversary;
  /// lambda[s * B + b], when present.
  std::optional<std::vector<double>> lambda;
};

/**
 * Policy file:
 *   { "schema": "atmg-policies-v1", "team": [k][s][a], "adversary": [s][b],
 *     "lambda": [s][b] (optional) }
 * Shapes must match `spec`; simplex invariants are not checked here.
 */
PolicyFile read_policies(const std::string& path, const GameSpec& spec);

void write_policies(const std::string& path, const TeamPolicy& team, const AdversaryPolicy& adversary,
                    const std::vector<double>* lambda = nullptr);

}  // namespace atmg
