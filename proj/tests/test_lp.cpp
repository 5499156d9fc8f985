#include <doctest.h>

#include <cmath>

#include "atmg/lp.hpp"
#include "support/oracles.hpp"

using namespace atmg;
using namespace atmg::lp;
namespace t = atmg::testing;
using t::Rng;

TEST_SUITE("lp") {
  TEST_CASE("max x s.t. x <= 1") {
    LinearProgram p(1);
    p.set_objective({1.0});
    p.add_row({1.0}, Sense::LessEqual, 1.0);
    const LpSolution s = solve(p);
    REQUIRE(s.status == Status::Optimal);
    CHECK(s.point[0] == doctest::Approx(1.0));
    CHECK(s.objective == doctest::Approx(1.0));
  }

  TEST_CASE("max x s.t. x <= -1, x >= 0 is infeasible") {
    LinearProgram p(1);
    p.set_objective({1.0});
    p.add_row({1.0}, Sense::LessEqual, -1.0);
    const LpSolution s = solve(p);
    CHECK(s.status == Status::Infeasible);
    CHECK(s.infeasibility == doctest::Approx(1.0));
    CHECK(s.max_residual == doctest::Approx(1.0));
    CHECK_FALSE(s.has_point());
  }

  TEST_CASE("two-variable vertex (1.6, 1.2)") {
    LinearProgram p(2);
    p.set_objective({1.0, 1.0});
    p.add_row({1.0, 2.0}, Sense::LessEqual, 4.0);
    p.add_row({3.0, 1.0}, Sense::LessEqual, 6.0);
    const LpSolution s = solve(p);
    REQUIRE(s.status == Status::Optimal);
    CHECK(s.point[0] == doctest::Approx(1.6));
    CHECK(s.point[1] == doctest::Approx(1.2));
    CHECK(s.objective == doctest::Approx(2.8));

    // Enumerate the intersections of all pairs of constraint lines (including the axes).
    const double lines[4][3] = {{1, 2, 4}, {3, 1, 6}, {1, 0, 0}, {0, 1, 0}};
    double best = -1e300;
    for (int i = 0; i < 4; ++i) {
      for (int j = i + 1; j < 4; ++j) {
        const double det = lines[i][0] * lines[j][1] - lines[i][1] * lines[j][0];
        if (std::abs(det) < 1e-12) continue;
        const double x = (lines[i][2] * lines[j][1] - lines[i][1] * lines[j][2]) / det;
        const double y = (lines[i][0] * lines[j][2] - lines[i][2] * lines[j][0]) / det;
        if (x < -1e-12 || y < -1e-12 || x + 2 * y > 4 + 1e-12 || 3 * x + y > 6 + 1e-12) continue;
        best = std::max(best, x + y);
      }
    }
    CHECK(s.objective == doctest::Approx(best));
  }

  TEST_CASE("unbounded program") {
    LinearProgram p(2);
    p.set_objective({1.0, 0.0});
    p.add_row({1.0, -1.0}, Sense::LessEqual, 1.0);
    CHECK(solve(p).status == Status::Unbounded);
  }

  TEST_CASE("equalities, >= rows, free and bounded variables") {
    // min x + y with x free, y in [-2, 3], x - y = 1, x + y >= -1.
    LinearProgram p(2);
    p.set_objective({-1.0, -1.0});
    p.set_bounds(0, -kInfinity, kInfinity);
    p.set_bounds(1, -2.0, 3.0);
    p.add_row({1.0, -1.0}, Sense::Equal, 1.0);
    p.add_row({1.0, 1.0}, Sense::GreaterEqual, -1.0);
    const LpSolution s = solve(p);
    REQUIRE(s.status == Status::Optimal);
    CHECK(s.point[0] + s.point[1] == doctest::Approx(-1.0));
    CHECK(s.point[0] - s.point[1] == doctest::Approx(1.0));
    CHECK(s.max_residual <= 1e-9);

    LinearProgram q(1);
    q.set_objective({1.0});
    q.set_bounds(0, -kInfinity, 2.5);
    const LpSolution r = solve(q);
    REQUIRE(r.status == Status::Optimal);
    CHECK(r.point[0] == doctest::Approx(2.5));
  }

  TEST_CASE("Bland's rule terminates on a cycling-prone degenerate program") {
    // Beale's example: Dantzig's largest-coefficient rule cycles here.
    LinearProgram p(4);
    p.set_objective({0.75, -150.0, 0.02, -6.0});
    p.add_row({0.25, -60.0, -0.04, 9.0}, Sense::LessEqual, 0.0);
    p.add_row({0.5, -90.0, -0.02, 3.0}, Sense::LessEqual, 0.0);
    p.add_row({0.0, 0.0, 1.0, 0.0}, Sense::LessEqual, 1.0);
    const LpSolution s = solve(p);
    REQUIRE(s.status == Status::Optimal);
    CHECK(s.objective == doctest::Approx(0.05));
  }

  TEST_CASE("find_feasible") {
    LinearProgram p(1);
    p.add_row({1.0}, Sense::LessEqual, 1.0);
    const LpSolution s = find_feasible(p);
    REQUIRE(s.status == Status::Feasible);
    CHECK(s.point[0] >= 0.0);
    CHECK(s.point[0] <= 1.0);

    LinearProgram q(1);
    q.add_row({1.0}, Sense::GreaterEqual, 2.0);
    q.add_row({1.0}, Sense::LessEqual, 1.0);
    CHECK(find_feasible(q).status == Status::Infeasible);
  }

  TEST_CASE("redundant equality rows are tolerated") {
    LinearProgram p(2);
    p.set_objective({1.0, 2.0});
    p.add_row({1.0, 1.0}, Sense::Equal, 1.0);
    p.add_row({2.0, 2.0}, Sense::Equal, 2.0);
    const LpSolution s = solve(p);
    REQUIRE(s.status == Status::Optimal);
    CHECK(s.objective == doctest::Approx(2.0));
  }

  TEST_CASE("random programs: weak duality, residuals and determinism") {
    Rng rng(201);
    for (int i = 0; i < 30; ++i) {
      const std::size_t n = t::uniform_index(rng, 2, 6);
      const std::size_t m = t::uniform_index(rng, 2, 6);
      // max c^T x, A x <= b, x >= 0 with A, b > 0 (bounded, feasible)
      // dual: min b^T u, A^T u >= c, u >= 0.
      std::vector<std::vector<double>> A(m, std::vector<double>(n));
      std::vector<double> b(m), c(n);
      for (auto& row : A) for (double& a : row) a = t::uniform(rng, 0.1, 2.0);
      for (double& v : b) v = t::uniform(rng, 0.5, 3.0);
      for (double& v : c) v = t::uniform(rng, -1.0, 2.0);
      LinearProgram primal(n);
      primal.set_objective(c);
      for (std::size_t r = 0; r < m; ++r) primal.add_row(A[r], Sense::LessEqual, b[r]);
      LinearProgram dual(m);
      std::vector<double> neg_b(m);
      for (std::size_t r = 0; r < m; ++r) neg_b[r] = -b[r];
      dual.set_objective(neg_b);
      for (std::size_t j = 0; j < n; ++j) {
        std::vector<double> col(m);
        for (std::size_t r = 0; r < m; ++r) col[r] = A[r][j];
        dual.add_row(col, Sense::GreaterEqual, c[j]);
      }
      const LpSolution ps = solve(primal);
      const LpSolution ds = solve(dual);
      REQUIRE(ps.status == Status::Optimal);
      REQUIRE(ds.status == Status::Optimal);
      CHECK(ps.max_residual <= 1e-8);
      CHECK(ds.max_residual <= 1e-8);
      CHECK(ps.objective <= -ds.objective + 1e-7);
      CHECK(ps.objective == doctest::Approx(-ds.objective).epsilon(1e-9));
      const LpSolution again = solve(primal);
      CHECK(again.point == ps.point);
    }
  }

  TEST_CASE("adversary MDP primal and dual") {
    Rng rng(202);
    for (int i = 0; i < 20; ++i) {
      const GameSpec g = t::random_game(rng, t::random_shape(rng));
      const TeamPolicy x = t::random_team(rng, g);
      const AdversaryPrimalDual pd = adversary_mdp_primal_dual(g, x);
      const auto br = adversary_best_response(g, x);
      CHECK((pd.value - br.value).cwiseAbs().maxCoeff() <= 1e-7);
      CHECK(std::abs(pd.primal_objective - pd.dual_objective) <= 1e-7);
      const std::size_t B = g.adversary_actions;
      for (std::size_t s = 0; s < g.state_count; ++s) {
        double mass = 0.0;
        for (std::size_t b = 0; b < B; ++b) mass += pd.occupancy[s * B + b];
        CHECK(mass >= g.initial_dist[s] - 1e-9);
        CHECK(mass <= 1.0 / (1.0 - g.discount) + 1e-9);
      }
      const auto d = t::oracle::visitation(g, x, pd.policy);
      for (std::size_t s = 0; s < g.state_count; ++s) {
        for (std::size_t b = 0; b < B; ++b) {
          CHECK(std::abs(pd.occupancy[s * B + b] - d[s] * pd.policy.prob(s, b)) <= 1e-7);
        }
      }
    }
  }

  TEST_CASE("single state: all occupancy on the best action") {
    const GameSpec g = [] {
      GameSpec h = t::matching_pennies();
      h.discount = 0.5;
      return h;
    }();
    const AdversaryPrimalDual pd = adversary_mdp_primal_dual(g, t::single_state_team(0.8));
    // r(x, b) = (0.74, 0.26): action 0 is best.
    CHECK(pd.occupancy[0] == doctest::Approx(2.0));
    CHECK(pd.occupancy[1] == doctest::Approx(0.0));
  }
}
