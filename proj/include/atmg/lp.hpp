#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "atmg/game.hpp"
#include "atmg/mdp.hpp"

namespace atmg::lp {

enum class Sense { LessEqual, GreaterEqual, Equal };

struct Row {
  std::vector<double> coefficients;
  Sense sense = Sense::LessEqual;
  double rhs = 0.0;
};

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/**
 * Dense linear program
 *
 *   maximize c^T x  s.t.  rows,  lower <= x <= upper.
 *
 * Lower bounds default to 0 and upper bounds to +inf; -inf lower bounds make
 * a variable free.
 */
class LinearProgram {
 public:
  explicit LinearProgram(std::size_t variable_count);

  std::size_t variable_count() const { return objective_.size(); }
  std::size_t row_count() const { return rows_.size(); }

  void set_objective(std::vector<double> c);
  void set_objective_coefficient(std::size_t j, double value) { objective_.at(j) = value; }
  void add_row(std::vector<double> coefficients, Sense sense, double rhs);
  void set_bounds(std::size_t j, double lower, double upper);

  const std::vector<double>& objective() const { return objective_; }
  const std::vector<Row>& rows() const { return rows_; }
  const std::vector<double>& lower() const { return lower_; }
  const std::vector<double>& upper() const { return upper_; }

  /// Largest violation of any row or bound at `point`.
  double max_residual(std::span<const double> point) const;
  double objective_value(std::span<const double> point) const;

 private:
  std::vector<double> objective_;
  std::vector<Row> rows_;
  std::vector<double> lower_;
  std::vector<double> upper_;
};

enum class Status { Optimal, Feasible, Infeasible, Unbounded };

const char* to_string(Status status);

struct LpSolution {
  Status status = Status::Infeasible;
  /// Present for Optimal and Feasible. For Infeasible it holds the phase-one
  /// vertex, and max_residual its largest constraint violation.
  std::vector<double> point;
  double objective = 0.0;
  double max_residual = 0.0;
  /// Infeasible: phase-one optimum (sum of artificial values) left over.
  double infeasibility = 0.0;
  std::size_t pivots = 0;

  bool has_point() const { return status == Status::Optimal || status == Status::Feasible; }
};

inline constexpr double kPivotTolerance = 1e-9;
inline constexpr double kResidualLimit = 1e-6;

/**
 * Two-phase dense tableau simplex with Bland's rule.
 * Throws NumericError if the refined vertex still violates a row by more
 * than 1e-6.
 */
LpSolution solve(const LinearProgram& lp);

/// Phase one only: any vertex of the feasible region.
LpSolution find_feasible(const LinearProgram& lp);

struct AdversaryPrimalDual {
  /// Primal: min rho^T v s.t. v(s) >= r(s,x,b) + gamma sum_s' P(s'|s,x,b) v(s').
  ValueVector value;
  double primal_objective = 0.0;
  /// Dual occupancy variables lambda[s * B + b].
  std::vector<double> occupancy;
  double dual_objective = 0.0;
  /// Row-normalized occupancy.
  AdversaryPolicy policy;
};

/// Solves the adversary's MDP against x as a primal LP and as its occupancy dual.
AdversaryPrimalDual adversary_mdp_primal_dual(const GameSpec& spec, const TeamPolicy& x);

}  // namespace atmg::lp
