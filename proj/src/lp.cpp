#include "atmg/lp.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

namespace atmg::lp {

LinearProgram::LinearProgram(std::size_t variable_count)
    : objective_(variable_count, 0.0), lower_(variable_count, 0.0), upper_(variable_count, kInfinity) {}

void LinearProgram::set_objective(std::vector<double> c) {
  if (c.size() != objective_.size()) throw DimensionError("objective width mismatch");
  objective_ = std::move(c);
}

void LinearProgram::add_row(std::vector<double> coefficients, Sense sense, double rhs) {
  if (coefficients.size() != objective_.size()) throw DimensionError("row width mismatch");
  for (double a : coefficients) {
    if (!std::isfinite(a)) throw std::invalid_argument("row coefficients must be finite");
  }
  if (!std::isfinite(rhs)) throw std::invalid_argument("row right-hand side must be finite");
  rows_.push_back({std::move(coefficients), sense, rhs});
}

void LinearProgram::set_bounds(std::size_t j, double lower, double upper) {
  if (j >= objective_.size()) throw DimensionError("bound index out of range");
  if (lower > upper || lower == kInfinity || upper == -kInfinity) {
    throw std::invalid_argument("inconsistent variable bounds");
  }
  lower_[j] = lower;
  upper_[j] = upper;
}

double LinearProgram::max_residual(std::span<const double> point) const {
  if (point.size() != objective_.size()) throw DimensionError("point width mismatch");
  double worst = 0.0;
  for (const auto& row : rows_) {
    double lhs = 0.0;
    for (std::size_t j = 0; j < point.size(); ++j) lhs += row.coefficients[j] * point[j];
    double violation = 0.0;
    switch (row.sense) {
      case Sense::LessEqual: violation = lhs - row.rhs; break;
      case Sense::GreaterEqual: violation = row.rhs - lhs; break;
      case Sense::Equal: violation = std::abs(lhs - row.rhs); break;
    }
    worst = std::max(worst, violation);
  }
  for (std::size_t j = 0; j < point.size(); ++j) {
    worst = std::max({worst, lower_[j] - point[j], point[j] - upper_[j]});
  }
  return worst;
}

double LinearProgram::objective_value(std::span<const double> point) const {
  double value = 0.0;
  for (std::size_t j = 0; j < point.size(); ++j) value += objective_[j] * point[j];
  return value;
}

const char* to_string(Status status) {
  switch (status) {
    case Status::Optimal: return "Optimal";
    case Status::Feasible: return "Feasible";
    case Status::Infeasible: return "Infeasible";
    case Status::Unbounded: return "Unbounded";
  }
  return "Unknown";
}

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Original variable j = offset + sign * col_pos - col_neg (col_neg only for free variables).
struct VariableMap {
  std::ptrdiff_t col_pos = -1;
  std::ptrdiff_t col_neg = -1;
  double offset = 0.0;
  double sign = 1.0;
};

/// Standard form: A z (sense) b, z >= 0, b >= 0, with slack/surplus/artificial columns.
class Tableau {
 public:
  explicit Tableau(const LinearProgram& lp) : lp_(lp) { build(); }

  LpSolution run(bool optimize) {
    LpSolution out;
    if (!phase_one(out)) return out;
    if (!optimize) {
      finish(out, Status::Feasible);
      return out;
    }
    if (!phase_two(out)) return out;
    finish(out, Status::Optimal);
    return out;
  }

 private:
  void build() {
    const std::size_t n = lp_.variable_count();
    maps_.resize(n);
    std::size_t cols = 0;
    std::vector<std::pair<std::size_t, double>> upper_rows;  // (standard column, bound)
    for (std::size_t j = 0; j < n; ++j) {
      const double lo = lp_.lower()[j];
      const double hi = lp_.upper()[j];
      auto& m = maps_[j];
      if (std::isfinite(lo)) {
        m = {static_cast<std::ptrdiff_t>(cols++), -1, lo, 1.0};
        if (std::isfinite(hi)) upper_rows.emplace_back(m.col_pos, hi - lo);
      } else if (std::isfinite(hi)) {
        m = {static_cast<std::ptrdiff_t>(cols++), -1, hi, -1.0};
      } else {
        m.col_pos = static_cast<std::ptrdiff_t>(cols++);
        m.col_neg = static_cast<std::ptrdiff_t>(cols++);
      }
    }
    structural_ = cols;

    struct StdRow {
      std::vector<std::pair<std::size_t, double>> terms;
      Sense sense;
      double rhs;
    };
    std::vector<StdRow> std_rows;
    for (const auto& row : lp_.rows()) {
      StdRow r{{}, row.sense, row.rhs};
      for (std::size_t j = 0; j < n; ++j) {
        const double a = row.coefficients[j];
        if (a == 0.0) continue;
        const auto& m = maps_[j];
        r.rhs -= a * m.offset;
        r.terms.emplace_back(static_cast<std::size_t>(m.col_pos), a * m.sign);
        if (m.col_neg >= 0) r.terms.emplace_back(static_cast<std::size_t>(m.col_neg), -a);
      }
      std_rows.push_back(std::move(r));
    }
    for (auto [col, bound] : upper_rows) std_rows.push_back({{{col, 1.0}}, Sense::LessEqual, bound});

    for (auto& r : std_rows) {
      if (r.rhs < 0.0) {
        r.rhs = -r.rhs;
        for (auto& t : r.terms) t.second = -t.second;
        if (r.sense == Sense::LessEqual) {
          r.sense = Sense::GreaterEqual;
        } else if (r.sense == Sense::GreaterEqual) {
          r.sense = Sense::LessEqual;
        }
      }
    }

    const std::size_t m = std_rows.size();
    std::size_t slack_cols = 0;
    std::size_t art_cols = 0;
    for (const auto& r : std_rows) {
      if (r.sense != Sense::Equal) ++slack_cols;
      if (r.sense != Sense::LessEqual) ++art_cols;
    }
    artificial_begin_ = structural_ + slack_cols;
    columns_ = artificial_begin_ + art_cols;

    tableau_ = RowMatrix::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(columns_ + 1));
    basis_.assign(m, 0);
    active_.assign(m, true);
    std::size_t next_slack = structural_;
    std::size_t next_art = artificial_begin_;
    for (std::size_t i = 0; i < m; ++i) {
      const auto& r = std_rows[i];
      for (auto [col, a] : r.terms) tableau_(i, col) += a;
      tableau_(i, columns_) = r.rhs;
      switch (r.sense) {
        case Sense::LessEqual:
          tableau_(i, next_slack) = 1.0;
          basis_[i] = next_slack++;
          break;
        case Sense::GreaterEqual:
          tableau_(i, next_slack++) = -1.0;
          tableau_(i, next_art) = 1.0;
          basis_[i] = next_art++;
          break;
        case Sense::Equal:
          tableau_(i, next_art) = 1.0;
          basis_[i] = next_art++;
          break;
      }
    }
    original_ = tableau_;
    scale_ = 1.0;
    for (const auto& r : std_rows) scale_ = std::max(scale_, r.rhs);
  }

  bool is_artificial(std::size_t col) const { return col >= artificial_begin_; }

  void pivot(std::size_t r, std::size_t e) {
    const auto R = static_cast<Eigen::Index>(r);
    const auto E = static_cast<Eigen::Index>(e);
    tableau_.row(R) /= tableau_(R, E);
    for (Eigen::Index i = 0; i < tableau_.rows(); ++i) {
      if (i == R) continue;
      const double f = tableau_(i, E);
      if (f != 0.0) tableau_.row(i) -= f * tableau_.row(R);
    }
    const double f = reduced_(E);
    if (f != 0.0) reduced_ -= f * tableau_.row(R).transpose();
    basis_[r] = e;
    ++pivots_;
  }

  // reduced_(j) = c_j - c_B B^{-1} A_j for the structural costs `cost`; last entry is -objective.
  void price(const std::vector<double>& cost) {
    reduced_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(columns_ + 1));
    for (std::size_t j = 0; j < columns_; ++j) reduced_(j) = cost[j];
    for (std::size_t i = 0; i < basis_.size(); ++i) {
      if (!active_[i]) continue;
      const double cb = cost[basis_[i]];
      if (cb != 0.0) reduced_ -= cb * tableau_.row(static_cast<Eigen::Index>(i)).transpose();
    }
  }

  enum class Outcome { Optimal, Unbounded };

  Outcome iterate(bool allow_artificial) {
    const std::size_t limit = 200 * (columns_ + basis_.size()) + 10'000;
    while (true) {
      if (pivots_ > limit) throw NumericError("simplex exceeded its pivot budget");
      std::ptrdiff_t entering = -1;
      for (std::size_t j = 0; j < columns_; ++j) {
        if (!allow_artificial && is_artificial(j)) continue;
        if (reduced_(j) > kPivotTolerance) {
          entering = static_cast<std::ptrdiff_t>(j);
          break;
        }
      }
      if (entering < 0) return Outcome::Optimal;

      std::ptrdiff_t leaving = -1;
      double best_ratio = 0.0;
      for (std::size_t i = 0; i < basis_.size(); ++i) {
        if (!active_[i]) continue;
        const double a = tableau_(i, entering);
        if (a <= kPivotTolerance) continue;
        const double ratio = tableau_(i, columns_) / a;
        if (leaving < 0 || ratio < best_ratio - 1e-12 * std::max(1.0, std::abs(best_ratio)) ||
            (std::abs(ratio - best_ratio) <= 1e-12 * std::max(1.0, std::abs(best_ratio)) &&
             basis_[i] < basis_[static_cast<std::size_t>(leaving)])) {
          leaving = static_cast<std::ptrdiff_t>(i);
          best_ratio = ratio;
        }
      }
      if (leaving < 0) return Outcome::Unbounded;
      pivot(static_cast<std::size_t>(leaving), static_cast<std::size_t>(entering));
    }
  }

  bool phase_one(LpSolution& out) {
    if (artificial_begin_ == columns_) return true;
    std::vector<double> cost(columns_, 0.0);
    for (std::size_t j = artificial_begin_; j < columns_; ++j) cost[j] = -1.0;
    price(cost);
    iterate(true);

    double leftover = 0.0;
    for (std::size_t i = 0; i < basis_.size(); ++i) {
      if (is_artificial(basis_[i])) leftover += tableau_(i, columns_);
    }
    if (leftover > 1e-9 * scale_) {
      out.status = Status::Infeasible;
      out.infeasibility = leftover;
      // The least-infeasible vertex is kept as a diagnostic.
      out.point = to_original(tableau_vertex());
      out.max_residual = lp_.max_residual(out.point);
      out.pivots = pivots_;
      return false;
    }

    for (std::size_t i = 0; i < basis_.size(); ++i) {
      if (!is_artificial(basis_[i])) continue;
      std::ptrdiff_t col = -1;
      for (std::size_t j = 0; j < artificial_begin_; ++j) {
        if (std::abs(tableau_(i, j)) > kPivotTolerance) {
          col = static_cast<std::ptrdiff_t>(j);
          break;
        }
      }
      if (col >= 0) {
        pivot(i, static_cast<std::size_t>(col));
      } else {
        active_[i] = false;  // redundant row
      }
    }
    return true;
  }

  bool phase_two(LpSolution& out) {
    std::vector<double> cost(columns_, 0.0);
    for (std::size_t j = 0; j < maps_.size(); ++j) {
      const double c = lp_.objective()[j];
      const auto& m = maps_[j];
      cost[static_cast<std::size_t>(m.col_pos)] += c * m.sign;
      if (m.col_neg >= 0) cost[static_cast<std::size_t>(m.col_neg)] -= c;
    }
    price(cost);
    if (iterate(false) == Outcome::Unbounded) {
      out.status = Status::Unbounded;
      out.pivots = pivots_;
      return false;
    }
    return true;
  }

  std::vector<double> to_original(const Eigen::VectorXd& z) const {
    std::vector<double> x(maps_.size());
    for (std::size_t j = 0; j < maps_.size(); ++j) {
      const auto& m = maps_[j];
      x[j] = m.offset + m.sign * z(m.col_pos);
      if (m.col_neg >= 0) x[j] -= z(m.col_neg);
    }
    return x;
  }

  // Re-solves B z_B = b against the untouched standard-form matrix.
  Eigen::VectorXd refined_vertex() const {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < basis_.size(); ++i) {
      if (active_[i]) rows.push_back(i);
    }
    const auto m = static_cast<Eigen::Index>(rows.size());
    Eigen::MatrixXd basis_matrix(m, m);
    Eigen::VectorXd rhs(m);
    for (Eigen::Index r = 0; r < m; ++r) {
      for (Eigen::Index c = 0; c < m; ++c) {
        basis_matrix(r, c) = original_(rows[r], basis_[rows[c]]);
      }
      rhs(r) = original_(rows[r], columns_);
    }
    const Eigen::VectorXd zb = basis_matrix.fullPivLu().solve(rhs);
    Eigen::VectorXd z = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(columns_));
    for (Eigen::Index c = 0; c < m; ++c) z(basis_[rows[c]]) = std::max(zb(c), 0.0);
    return z;
  }

  Eigen::VectorXd tableau_vertex() const {
    Eigen::VectorXd z = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(columns_));
    for (std::size_t i = 0; i < basis_.size(); ++i) {
      if (active_[i]) z(basis_[i]) = std::max(tableau_(i, columns_), 0.0);
    }
    return z;
  }

  void finish(LpSolution& out, Status status) {
    auto point = to_original(tableau_vertex());
    double residual = lp_.max_residual(point);
    if (residual > 1e-12) {
      auto refined = to_original(refined_vertex());
      const double refined_residual = lp_.max_residual(refined);
      if (std::isfinite(refined_residual) && refined_residual < residual) {
        point = std::move(refined);
        residual = refined_residual;
      }
    }
    if (!(residual <= kResidualLimit)) {
      throw NumericError("simplex vertex violates a constraint by " + std::to_string(residual));
    }
    out.status = status;
    out.objective = lp_.objective_value(point);
    out.point = std::move(point);
    out.max_residual = residual;
    out.pivots = pivots_;
  }

  const LinearProgram& lp_;
  std::vector<VariableMap> maps_;
  std::size_t structural_ = 0;
  std::size_t artificial_begin_ = 0;
  std::size_t columns_ = 0;
  RowMatrix tableau_;
  RowMatrix original_;
  Eigen::VectorXd reduced_;
  std::vector<std::size_t> basis_;
  std::vector<bool> active_;
  double scale_ = 1.0;
  std::size_t pivots_ = 0;
};

}  // namespace

LpSolution solve(const LinearProgram& lp) { return Tableau(lp).run(true); }

LpSolution find_feasible(const LinearProgram& lp) { return Tableau(lp).run(false); }

AdversaryPrimalDual adversary_mdp_primal_dual(const GameSpec& spec, const TeamPolicy& x) {
  const MdpModel mdp = adversary_mdp(spec, x);
  const std::size_t S = spec.state_count;
  const std::size_t B = spec.adversary_actions;
  const double gamma = spec.discount;

  // Primal over free v: max -rho^T v  s.t.  v(s) - gamma sum_s' P v(s') >= r(s, x, b).
  LinearProgram primal(S);
  std::vector<double> c(S);
  for (std::size_t s = 0; s < S; ++s) {
    c[s] = -spec.initial_dist[s];
    primal.set_bounds(s, -kInfinity, kInfinity);
  }
  primal.set_objective(std::move(c));
  for (std::size_t s = 0; s < S; ++s) {
    for (std::size_t b = 0; b < B; ++b) {
      std::vector<double> row(S, 0.0);
      auto p = mdp.transition_row(s, b);
      for (std::size_t t = 0; t < S; ++t) row[t] = -gamma * p[t];
      row[s] += 1.0;
      primal.add_row(std::move(row), Sense::GreaterEqual, mdp.reward_at(s, b));
    }
  }

  // Dual: max sum lambda(s,b) r(s,x,b)
  //   s.t. sum_b lambda(t,b) - gamma sum_{s,b} P(t|s,x,b) lambda(s,b) = rho(t).
  LinearProgram dual(S * B);
  dual.set_objective(mdp.reward);
  for (std::size_t t = 0; t < S; ++t) {
    std::vector<double> row(S * B, 0.0);
    for (std::size_t s = 0; s < S; ++s) {
      for (std::size_t b = 0; b < B; ++b) row[s * B + b] -= gamma * mdp.transition_row(s, b)[t];
    }
    for (std::size_t b = 0; b < B; ++b) row[t * B + b] += 1.0;
    dual.add_row(std::move(row), Sense::Equal, spec.initial_dist[t]);
  }

  const LpSolution p = solve(primal);
  const LpSolution d = solve(dual);
  if (p.status != Status::Optimal || d.status != Status::Optimal) {
    throw NumericError("adversary MDP linear programs did not reach optimality");
  }

  AdversaryPrimalDual out;
  out.value = Eigen::Map<const Eigen::VectorXd>(p.point.data(), static_cast<Eigen::Index>(S));
  out.primal_objective = -p.objective;
  out.occupancy = d.point;
  out.dual_objective = d.objective;
  out.policy = AdversaryPolicy(S, B);
  for (std::size_t s = 0; s < S; ++s) {
    double total = 0.0;
    for (std::size_t b = 0; b < B; ++b) total += out.occupancy[s * B + b];
    for (std::size_t b = 0; b < B; ++b) {
      out.policy.block(s)[b] = total > 0.0 ? out.occupancy[s * B + b] / total : 1.0 / static_cast<double>(B);
    }
  }
  return out;
}

}  // namespace atmg::lp
