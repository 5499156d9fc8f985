#include <doctest.h>

#include <cmath>

#include "atmg/ipgmax.hpp"
#include "support/oracles.hpp"

using namespace atmg;
namespace t = atmg::testing;
using t::Rng;

namespace {

GameSpec four_action_game(double gamma) {
  Rng rng(5);
  GameSpec g = t::random_game(rng, {2, {2}, 2, gamma});
  g.initial_dist = {0.5, 0.5};
  return g;
}

/// psi(x') = max_b <x', r_b> + ell ||x - x'||^2 on a one-state single-player game with gamma = 0.
double bilinear_psi(const GameSpec& g, double anchor0, double p0, double ell) {
  double phi = -1e300;
  for (std::size_t b = 0; b < g.adversary_actions; ++b) {
    phi = std::max(phi, p0 * g.reward_at(0, 0, b) + (1 - p0) * g.reward_at(0, 1, b));
  }
  return phi + ell * 2.0 * (p0 - anchor0) * (p0 - anchor0);
}

}  // namespace

TEST_SUITE("ipgmax") {
  TEST_CASE("theorem schedule") {
    const GameSpec g = four_action_game(0.5);
    const Schedule s = schedule_theorem(g, 0.1, 4.0);
    // 0.01 * 2^-9 / (32 * 16 * 16 * 64) = 0.01 * 2^-28
    CHECK(s.eta == doctest::Approx(0.01 * std::ldexp(1.0, -28)).epsilon(1e-13));
    // 512 * 2^8 * 4^4 * 4^4 / (1e-4 * 2^-12) = 2^45 * 1e4
    CHECK(static_cast<double>(s.iterations) == doctest::Approx(std::ldexp(1.0, 45) * 1e4).epsilon(1e-12));
    const Schedule half = schedule_theorem(g, 0.05, 4.0);
    CHECK(static_cast<double>(half.iterations / s.iterations) == doctest::Approx(16.0));
    CHECK(s.representable());
    CHECK(s.capped(1000) == 1000);
    CHECK(s.iterations_text().rfind("3518437208883", 0) == 0);
    CHECK(s.iterations_text().size() == 18);
    CHECK_FALSE(schedule_theorem(g, 1e-6, 4.0).representable());
  }

  TEST_CASE("proposition schedule") {
    const GameSpec g = four_action_game(0.5);
    const Schedule s = schedule_proposition(g, 0.1);
    CHECK(s.eta == doctest::Approx(0.01));
    // 0.5^4 / (8 * 1e-4 * 16) = 4.8828125
    CHECK(static_cast<double>(s.iterations) == 5.0);
    const Schedule one = schedule_proposition(g, 1.0);
    CHECK(one.eta == doctest::Approx(1.0));
    CHECK(static_cast<double>(one.iterations) == 1.0);

    Rng rng(9);
    const GameSpec bigger = t::random_game(rng, {2, {3}, 3, 0.5});
    CHECK(schedule_proposition(bigger, 0.01).iterations < schedule_proposition(g, 0.01).iterations);
  }

  TEST_CASE("apply_schedule honours the cap") {
    const GameSpec g = four_action_game(0.5);
    IpgmaxConfig config;
    config.schedule = ScheduleMode::Theorem;
    const IpgmaxConfig capped = apply_schedule(g, config, 50);
    CHECK(capped.iters == 50);
    CHECK(capped.eta == schedule_theorem(g, config.epsilon, smoothness_constants(g).mismatch_bound).eta);
    config.schedule = ScheduleMode::Manual;
    config.iters = 80;
    CHECK(apply_schedule(g, config, 50).iters == 50);
    CHECK(apply_schedule(g, config).iters == 80);
  }

  TEST_CASE("config checks") {
    IpgmaxConfig c;
    c.iters = 0;
    CHECK_THROWS_AS(check_config(c), std::invalid_argument);
    c.iters = 1;
    c.eta = -1.0;
    CHECK_THROWS_AS(check_config(c), std::invalid_argument);
    c.eta = 0.0;
    CHECK_NOTHROW(check_config(c));
    c.selection = SelectionMode::Random;
    c.delta = 1.0;
    CHECK_THROWS_AS(check_config(c), std::invalid_argument);
  }

  TEST_CASE("zero step size leaves the team policy fixed") {
    Rng rng(301);
    const GameSpec g = t::random_game(rng, {3, {2, 2}, 2, 0.5});
    const TeamPolicy x0 = t::random_team(rng, g);
    IpgmaxConfig c;
    c.eta = 0.0;
    c.iters = 20;
    c.prox.max_iterations = 50;
    const RunTrace trace = run(g, x0, c);
    REQUIRE(trace.phi.size() == 21);
    for (double f : trace.frobenius) CHECK(f == 0.0);
    for (const auto& [step, x] : trace.team) CHECK(x.coords() == x0.coords());
    CHECK(trace.final_team.coords() == x0.coords());
  }

  TEST_CASE("matching pennies run") {
    const GameSpec g = t::matching_pennies();
    IpgmaxConfig c;
    c.eta = 0.05;
    c.iters = 500;
    const RunTrace trace = run(g, t::single_state_team(0.9), c);
    REQUIRE(trace.phi.size() == 501);
    REQUIRE(trace.frobenius.size() == 501);
    // Each step moves x by 0.02 in each coordinate while the adversary keeps its response.
    CHECK(trace.frobenius[1] == doctest::Approx(std::sqrt(2.0) * 0.02));
    CHECK(std::abs(trace.final_team.prob(0, 0, 0) - 0.5) <= 0.05);
    CHECK(std::abs(trace.phi[trace.selected] - 0.5) <= 0.02);
    CHECK(trace.selected_gap <= 0.05);
    for (double f : trace.phi) {
      CHECK(f > 0.0);
      CHECK(f < 1.0);
    }
    double running = 1e300;
    for (const auto& [step, gap] : trace.prox_gaps) {
      CHECK(gap >= 0.0);
      running = std::min(running, gap);
    }
    CHECK(trace.selected_gap <= running);
    CHECK(trace.x_hat.coords() == trace.team.at(trace.selected).coords());
  }

  TEST_CASE("runs are deterministic") {
    Rng rng(302);
    const GameSpec g = t::random_game(rng, {3, {2, 3}, 2, 0.9});
    IpgmaxConfig c;
    c.eta = 0.01;
    c.iters = 40;
    c.selection = SelectionMode::Random;
    c.delta = 0.05;
    c.seed = 17;
    c.prox.max_iterations = 100;
    const RunTrace a = run(g, TeamPolicy::uniform(g), c);
    const RunTrace b = run(g, TeamPolicy::uniform(g), c);
    CHECK(a.phi == b.phi);
    CHECK(a.frobenius == b.frobenius);
    CHECK(a.selected == b.selected);
    CHECK(a.x_hat.coords() == b.x_hat.coords());
  }

  TEST_CASE("iterates stay on the product of simplices") {
    Rng rng(303);
    const GameSpec g = t::random_game(rng, {4, {3, 2}, 3, 0.9});
    IpgmaxConfig c;
    c.eta = 0.5;
    c.iters = 30;
    c.prox.max_iterations = 20;
    const RunTrace trace = run(g, t::random_team(rng, g), c);
    CHECK(trace.team.size() == 31);
    for (const auto& [step, x] : trace.team) CHECK(check_policy(x, 1e-12).empty());
    for (const auto& [step, y] : trace.adversary) CHECK(check_policy(y).empty());
  }

  TEST_CASE("long runs keep only the selection candidates") {
    Rng rng(304);
    const GameSpec g = t::random_game(rng, {2, {2}, 2, 0.5});
    IpgmaxConfig c;
    c.eta = 0.01;
    c.iters = 1000;
    c.retain_budget = 100;
    c.prox.max_iterations = 20;
    const RunTrace trace = run(g, TeamPolicy::uniform(g), c);
    CHECK(trace.phi.size() == 1001);
    const auto candidates = candidate_indices(1000, c);
    CHECK(candidates.size() == 101);
    CHECK(candidates.back() == 999);
    for (std::size_t idx : candidates) CHECK(trace.team.count(idx) == 1);
    CHECK(trace.team.size() == 102);
  }

  TEST_CASE("candidate indices and draw counts") {
    IpgmaxConfig c;
    CHECK(candidate_indices(1, c) == std::vector<std::size_t>{0});
    c.scan_stride = 3;
    CHECK(candidate_indices(7, c) == std::vector<std::size_t>{0, 3, 6});
    CHECK(candidate_indices(8, c) == std::vector<std::size_t>{0, 3, 6, 7});
    CHECK(random_draw_count(0.5) == 1);
    CHECK(random_draw_count(0.1) == 3);
    CHECK(random_draw_count(1e-3) == 7);
    c.selection = SelectionMode::Random;
    c.delta = 0.5;
    CHECK(candidate_indices(100, c).size() == 1);
    c.delta = 0.01;
    for (std::size_t idx : candidate_indices(10, c)) CHECK(idx < 10);
  }

  TEST_CASE("T = 1 selects iterate 0") {
    const GameSpec g = t::matching_pennies();
    IpgmaxConfig c;
    c.iters = 1;
    c.eta = 0.05;
    c.prox.max_iterations = 50;
    CHECK(run(g, t::single_state_team(0.7), c).selected == 0);
  }

  TEST_CASE("prox point matches a dense grid search on the bilinear fixture") {
    GameSpec g = t::matching_pennies();
    const double ell = smoothness_constants(g).smoothness;
    CHECK(ell == doctest::Approx(8.0));
    Rng rng(305);
    for (int i = 0; i < 6; ++i) {
      // Also use asymmetric payoffs so the minimizer is not always the kink.
      if (i >= 3) g.reward = {t::uniform(rng, 0.05, 0.95), t::uniform(rng, 0.05, 0.95),
                              t::uniform(rng, 0.05, 0.95), t::uniform(rng, 0.05, 0.95)};
      const double anchor = t::uniform(rng, 0.0, 1.0);
      ProxOptions options;
      options.max_iterations = 20000;
      options.tolerance = 1e-9;
      const ProxResult prox = prox_point(g, t::single_state_team(anchor), options);
      double best_p = 0.0;
      double best = 1e300;
      for (int k = 0; k <= 1000; ++k) {
        const double p = k / 1000.0;
        const double v = bilinear_psi(g, anchor, p, ell);
        if (v < best) {
          best = v;
          best_p = p;
        }
      }
      CHECK(std::abs(prox.point.prob(0, 0, 0) - best_p) <= 1e-3);
      CHECK(prox.objective <= best + 1e-9);
      CHECK(prox.objective == doctest::Approx(bilinear_psi(g, anchor, prox.point.prob(0, 0, 0), ell)));
    }
  }

  TEST_CASE("prox at a stationary interior point is the point itself") {
    const GameSpec g = t::matching_pennies();
    const ProxGap gap = prox_gap(g, t::single_state_team(0.5));
    CHECK(gap.gap <= 1e-6);
    // Off the equilibrium the gap is positive: the prox point of 0.48 is the kink at 0.5.
    const ProxGap off = prox_gap(g, t::single_state_team(0.48), {20000, 1e-10});
    CHECK(off.gap == doctest::Approx(0.02 * std::sqrt(2.0)).epsilon(1e-3));
  }

  TEST_CASE("prox is nonexpansive on the convex bilinear fixture") {
    Rng rng(306);
    GameSpec g = t::matching_pennies();
    for (int i = 0; i < 20; ++i) {
      g.reward = {t::uniform(rng, 0.05, 0.95), t::uniform(rng, 0.05, 0.95), t::uniform(rng, 0.05, 0.95),
                  t::uniform(rng, 0.05, 0.95)};
      const double a = t::uniform(rng), b = t::uniform(rng);
      const ProxOptions options{20000, 1e-10};
      const TeamPolicy pa = prox_point(g, t::single_state_team(a), options).point;
      const TeamPolicy pb = prox_point(g, t::single_state_team(b), options).point;
      const double lhs = euclidean_distance(pa.coords(), pb.coords());
      const double rhs = std::sqrt(2.0) * std::abs(a - b);
      CHECK(lhs <= rhs + 1e-4);
    }
  }
}
