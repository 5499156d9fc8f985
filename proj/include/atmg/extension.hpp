#pragma once

#include <cstddef>
#include <vector>

#include "atmg/game.hpp"
#include "atmg/lp.hpp"
#include "atmg/mdp.hpp"
#include "atmg/policy.hpp"

namespace atmg {

/**
 * Perturbation constants of the adversary extension program.
 *
 *   c2 = (sqrt(sum A_k) + gamma S sqrt(sum A_k) / (1-gamma) + gamma S L + L) / (1-gamma)
 *   c1 = 4 ell + c2
 */
struct ExtensionConstants {
  double c1 = 0.0;
  double c2 = 0.0;
};

ExtensionConstants extension_constants(const GameSpec& spec);

/**
 * Upper bound on the Nash gap of the extended pair at a point whose prox gap
 * is epsilon:
 *
 *   (2 c2 B S D + c1 D S) epsilon,  D = 1 / ((1-gamma) min rho).
 */
double extension_bound(const GameSpec& spec, double epsilon);

/**
 * The adversary extension program over lambda[s * B + b] >= 0:
 *
 *   maximize sum lambda(s,b) r(s, x_hat, b)
 *
 * Rows are appended in this order:
 *   (a) for k, s, a_k:  sum_b lambda(s,b) [Q(s, (e_a; x_hat_-k), b) - v_hat(s)] >= -c1 eps
 *   (b) for s, b:       lambda(s,b) [Q(s, x_hat, b) - v_hat(s)] <= c2 eps
 *   (c) for s, b:       lambda(s,b) [Q(s, x_hat, b) - v_hat(s)] >= -c2 eps
 *   (d) for s:          sum_b lambda(s,b) >= rho(s)
 *   (e) for s:          sum_b lambda(s,b) <= 1 / (1-gamma)
 * where Q(s, a, b) = r(s,a,b) + gamma sum_s' P(s'|s,a,b) v_hat(s').
 *
 * epsilon = 0 is accepted and gives the unperturbed program.
 */
lp::LinearProgram build_lp_adv(const GameSpec& spec, const TeamPolicy& x_hat,
                               const ValueVector& v_hat, double epsilon);

/// Number of rows build_lp_adv emits: S sum A_k + 2 S B + 2 S.
std::size_t lp_adv_row_count(const GameSpec& spec);

/// Epsilon handed to the extension program for a measured prox gap: 10% slack, floor 1e-8.
double lp_adv_epsilon(double measured_gap);

/// The extension program has no feasible point.
class LpAdvInfeasibleError : public Error {
 public:
  LpAdvInfeasibleError(const std::string& message, double infeasibility, double max_violation)
      : Error(message), infeasibility_(infeasibility), max_violation_(max_violation) {}

  /// Phase-one optimum left over (sum of artificial variables).
  double infeasibility() const { return infeasibility_; }
  /// Largest constraint violation of the least-infeasible vertex.
  double max_violation() const { return max_violation_; }

 private:
  double infeasibility_;
  double max_violation_;
};

enum class LpAdvMode {
  /// Any feasible vertex (phase one only).
  Feasible,
  /// Optimal vertex of the printed objective.
  Optimize,
};

struct AdvNashResult {
  AdversaryPolicy policy;
  /// lambda[s * B + b].
  std::vector<double> lambda;
  ValueVector v_hat;
  double epsilon = 0.0;
  lp::LpSolution solution;
};

/**
 * Best-response value at x_hat, the extension program, any feasible lambda,
 * then y_hat(s, b) = lambda(s,b) / sum_b lambda(s,b).
 * Throws LpAdvInfeasibleError when the program is infeasible.
 */
AdvNashResult adv_nash_policy(const GameSpec& spec, const TeamPolicy& x_hat, double epsilon,
                              LpAdvMode mode = LpAdvMode::Feasible);

inline constexpr double kGapFloor = -1e-9;

struct NashGapReport {
  /// V(x,y) - min over x_k of V((x_k; x_-k), y), in adversary reward units.
  std::vector<double> team_gaps;
  /// max over y' of V(x,y') - V(x,y).
  double adversary_gap = 0.0;
  /// Largest of all gaps.
  double epsilon_certified = 0.0;
  /// V_rho(x, y).
  double value = 0.0;
};

/// Exact unilateral deviation gaps of (x, y).
NashGapReport nash_gap(const GameSpec& spec, const TeamPolicy& x, const AdversaryPolicy& y);

/// nash_gap(x, y).epsilon_certified <= epsilon + 1e-9.
bool check_epsilon_ne(const GameSpec& spec, const TeamPolicy& x, const AdversaryPolicy& y,
                      double epsilon);

struct QnlpResiduals {
  /// rho^T v + ell ||x - x_anchor||^2.
  double objective = 0.0;
  /// max over (s,b) of [r(s,x,b) + gamma sum_s' P(s'|s,x,b) v(s') - v(s)]_+.
  double bellman_violation = 0.0;
  /// Largest simplex violation of x (negative entries or |sum - 1|).
  double simplex_violation = 0.0;
  double max_violation = 0.0;
};

/// Objective and constraint residuals of the regularized best-response program at (x, v).
QnlpResiduals qnlp_residuals(const GameSpec& spec, const TeamPolicy& x, const ValueVector& v,
                             const TeamPolicy& x_anchor);

}  // namespace atmg
