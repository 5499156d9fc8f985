#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "atmg/game.hpp"
#include "atmg/mdp.hpp"
#include "atmg/policy.hpp"

namespace atmg {

enum class ScheduleMode { Theorem, Proposition, Manual };
enum class SelectionMode { ProxScan, Random };

const char* to_string(ScheduleMode mode);
const char* to_string(SelectionMode mode);

/// Inner solver settings for the proximal subproblem.
struct ProxOptions {
  std::size_t max_iterations = 2000;
  /// Stop once successive subgradient iterates move less than this.
  double tolerance = 1e-7;
};

struct IpgmaxConfig {
  double epsilon = 0.1;
  /// Step size; zero is allowed and freezes the team.
  double eta = 0.01;
  /// Number of policy-gradient steps T.
  std::size_t iters = 100;
  ScheduleMode schedule = ScheduleMode::Manual;
  SelectionMode selection = SelectionMode::ProxScan;
  /// Failure probability for random selection, in (0,1).
  double delta = 0.1;
  std::uint64_t seed = 0;
  /// Candidate stride for ProxScan; 0 means ceil(T / 100).
  std::size_t scan_stride = 0;
  ProxOptions prox;
  /// Keep every iterate when (T + 1) * (dim x + dim y) stays below this many doubles.
  std::size_t retain_budget = 4'000'000;
};

/// Throws std::invalid_argument on eps <= 0, eta < 0, T = 0 or delta outside (0,1).
void check_config(const IpgmaxConfig& config);

/**
 * Step size and iteration count of a schedule. The iteration count may be
 * far beyond 64 bits for small epsilon, so it is kept as a long double
 * holding an integer value.
 */
struct Schedule {
  double eta = 0.0;
  long double iterations = 0.0L;

  /// True when `iterations` fits into a size_t.
  bool representable() const;
  /// min(iterations, cap).
  std::size_t capped(std::size_t cap) const;
  /// Decimal digits of the integer `iterations`.
  std::string iterations_text() const;
};

/**
 * eta = eps^2 (1-gamma)^9 / (32 S^4 D^2 (sum A_k + B)^3)
 * T   = ceil(512 S^8 D^4 (sum A_k + B)^4 / (eps^4 (1-gamma)^12))
 */
Schedule schedule_theorem(const GameSpec& spec, double epsilon, double mismatch);

/**
 * eta = 2 eps^2 (1-gamma)
 * T   = ceil((1-gamma)^4 / (8 eps^4 (sum A_k + B)^2))
 */
Schedule schedule_proposition(const GameSpec& spec, double epsilon);

/**
 * Replaces eta and iters of `config` according to its schedule mode. Theorem
 * mode uses the mismatch bound of smoothness_constants. A nonzero `cap`
 * limits the iteration count.
 */
IpgmaxConfig apply_schedule(const GameSpec& spec, IpgmaxConfig config, std::size_t cap = 0);

/**
 * Record of one IPGmax run.
 *
 * Entry t of `phi` and `frobenius` belongs to iterate x^(t), t = 0..T.
 * adversary[t] for t >= 1 is the best response to x^(t-1) used in step t;
 * adversary[0] is taken as the best response to x^(0) so that the t = 1
 * joint-policy difference is defined. phi[t] = rho^T v_hat(x^(t)).
 */
struct RunTrace {
  std::size_t iterations = 0;
  std::vector<double> phi;
  /// ||pi^(t) - pi^(t-1)||_F over concatenated (x, y); 0 at t = 0.
  std::vector<double> frobenius;
  /// Retained iterates keyed by t.
  std::map<std::size_t, TeamPolicy> team;
  std::map<std::size_t, AdversaryPolicy> adversary;
  TeamPolicy final_team;

  /// Prox gaps evaluated during selection, keyed by t.
  std::map<std::size_t, double> prox_gaps;
  std::size_t selected = 0;
  TeamPolicy x_hat;
  double selected_gap = 0.0;
  /// Some prox evaluation hit its iteration budget.
  bool prox_warning = false;
  double wall_seconds = 0.0;
};

struct ProxResult {
  TeamPolicy point;
  /// psi(point) = phi(point) + smoothness * ||x - point||^2.
  double objective = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

/**
 * argmin_{x'} phi(x') + smoothness ||x - x'||^2 by projected subgradient
 * descent with step 2 / (smoothness (t + 2)). The subgradient of phi at x'
 * is the policy gradient against an exact adversary best response. Returns
 * whichever of the best iterate and the (t+1)-weighted average has the lower
 * objective.
 */
ProxResult prox_point(const GameSpec& spec, const TeamPolicy& x, const ProxOptions& options = {});

struct ProxGap {
  double gap = 0.0;
  bool converged = false;
};

/// ||x - prox_point(x)||.
ProxGap prox_gap(const GameSpec& spec, const TeamPolicy& x, const ProxOptions& options = {});

/// ceil(ln(1 / delta)) draws for random selection.
std::size_t random_draw_count(double delta);

/**
 * Indices in [0, T-1] whose prox gaps are compared.
 *   ProxScan: every stride-th index plus T-1, ascending.
 *   Random:   random_draw_count(delta) uniform draws with replacement from `seed`.
 */
std::vector<std::size_t> candidate_indices(std::size_t iterations, const IpgmaxConfig& config);

struct Selection {
  std::size_t index = 0;
  double gap = 0.0;
  std::map<std::size_t, double> gaps;
  bool warning = false;
};

/// Argmin of the prox gap over the candidates (ties go to the smallest t).
Selection select_iterate(const GameSpec& spec, const RunTrace& trace, const IpgmaxConfig& config);

/**
 * IPGmax: for t = 1..T, y^(t) = best response to x^(t-1) and every team
 * player steps x_k^(t) = Proj(x_k^(t-1) - eta grad_{x_k} V(x^(t-1), y^(t))).
 * The run ends with iterate selection, which fills x_hat.
 */
RunTrace run(const GameSpec& spec, const TeamPolicy& x0, const IpgmaxConfig& config);

}  // namespace atmg
