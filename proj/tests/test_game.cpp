#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "atmg/game.hpp"
#include "support/oracles.hpp"

using namespace atmg;
using atmg::testing::Rng;

namespace {

GameSpec one_state_game() {
  GameSpec g;
  g.state_count = 1;
  g.team_sizes = {2};
  g.adversary_actions = 2;
  g.discount = 0.5;
  g.reward = {0.2, 0.4, 0.6, 0.8};
  g.transition = {1.0, 1.0, 1.0, 1.0};
  g.initial_dist = {1.0};
  return g;
}

bool has_kind(const std::vector<Violation>& report, ViolationKind kind) {
  return std::any_of(report.begin(), report.end(), [&](const Violation& v) { return v.kind == kind; });
}

}  // namespace

TEST_SUITE("game") {
  TEST_CASE("well-formed one-state game validates cleanly") {
    CHECK(validate(one_state_game()).empty());
  }

  TEST_CASE("transition row summing to 0.9 is reported at its index") {
    GameSpec g;
    g.state_count = 2;
    g.team_sizes = {1};
    g.adversary_actions = 2;
    g.discount = 0.5;
    g.reward.assign(4, 0.5);
    g.transition = {0.5, 0.5, 1.0, 0.0, 0.0, 1.0, 0.5, 0.4};
    g.initial_dist = {0.5, 0.5};
    const auto report = validate(g);
    REQUIRE(report.size() == 1);
    CHECK(report[0].kind == ViolationKind::TransitionRowSum);
    CHECK(report[0].index == std::vector<std::size_t>{1, 0, 1});
  }

  TEST_CASE("initial distribution without full support is reported per state") {
    GameSpec g;
    g.state_count = 2;
    g.team_sizes = {1};
    g.adversary_actions = 1;
    g.discount = 0.0;
    g.reward = {0.5, 0.5};
    g.transition = {1.0, 0.0, 0.0, 1.0};
    g.initial_dist = {1.0, 0.0};
    const auto report = validate(g);
    REQUIRE(report.size() == 1);
    CHECK(report[0].kind == ViolationKind::InitialSupport);
    CHECK(report[0].index == std::vector<std::size_t>{1});
  }

  TEST_CASE("other invariants are reported") {
    GameSpec g = one_state_game();
    g.discount = 1.0;
    g.reward[0] = 1.5;
    g.transition[1] = -0.5;
    const auto report = validate(g);
    CHECK(has_kind(report, ViolationKind::Discount));
    CHECK(has_kind(report, ViolationKind::RewardRange));
    CHECK(has_kind(report, ViolationKind::TransitionNegative));
    CHECK(validate_structure(g).size() == report.size() - 1);

    GameSpec bad_shape = one_state_game();
    bad_shape.reward.pop_back();
    const auto shape_report = validate(bad_shape);
    REQUIRE(shape_report.size() == 1);
    CHECK(shape_report[0].kind == ViolationKind::Shape);
  }

  TEST_CASE("joint index is mixed radix with player 0 fastest") {
    GameSpec g;
    g.team_sizes = {2, 3, 4};
    CHECK(g.joint_action_count() == 24);
    const std::size_t actions[] = {1, 2, 3};
    CHECK(g.joint_index(actions) == 1 + 2 * (2 + 3 * 3));
    for (std::size_t j = 0; j < 24; ++j) CHECK(g.joint_index(g.decode_joint(j)) == j);
  }

  TEST_CASE("normalization maps {-1, 0, 1} with delta 0.05") {
    GameSpec g = one_state_game();
    g.reward = {-1.0, 0.0, 1.0, 0.0};
    const NormalizedGame n = normalize_rewards(g);
    CHECK(n.map.shift == doctest::Approx(1.05));
    CHECK(n.map.scale == doctest::Approx(1.0 / 2.1));
    CHECK(n.spec.reward[0] == doctest::Approx(0.05 / 2.1));
    CHECK(n.spec.reward[1] == doctest::Approx(0.5));
    CHECK(n.spec.reward[2] == doctest::Approx(2.05 / 2.1));
    CHECK(validate(n.spec).empty());
    CHECK(n.map.gap_to_original(1.0) == doctest::Approx(2.1));
  }

  TEST_CASE("normalization is the identity on games spanning [delta, 1 - delta]") {
    GameSpec g = one_state_game();
    g.reward = {0.05, 0.3, 0.95, 0.7};
    const NormalizedGame n = normalize_rewards(g);
    for (std::size_t i = 0; i < g.reward.size(); ++i) CHECK(std::abs(n.spec.reward[i] - g.reward[i]) <= 1e-12);
    const NormalizedGame twice = normalize_rewards(n.spec);
    for (std::size_t i = 0; i < g.reward.size(); ++i) {
      CHECK(std::abs(twice.spec.reward[i] - n.spec.reward[i]) <= 1e-12);
    }
  }

  TEST_CASE("constant rewards are degenerate") {
    GameSpec g = one_state_game();
    g.reward.assign(4, 0.3);
    CHECK_THROWS_AS(normalize_rewards(g), DegenerateRewardsError);
  }

  TEST_CASE("normalized random games land strictly inside (0,1)") {
    Rng rng(11);
    for (int i = 0; i < 20; ++i) {
      GameSpec g = atmg::testing::random_game(rng, atmg::testing::random_shape(rng), -3.0, 7.0);
      const NormalizedGame n = normalize_rewards(g);
      CHECK(validate(n.spec).empty());
      for (std::size_t c = 0; c < g.reward.size(); ++c) {
        CHECK(n.map.apply(g.reward[c]) == doctest::Approx(n.spec.reward[c]));
      }
    }
  }

  TEST_CASE("grid world sizes") {
    CHECK(grid_world_state_count(2) == 65);
    CHECK(grid_world_state_count(3) == 730);
    CHECK_THROWS(grid_world(1));
  }

  TEST_CASE("grid world dynamics") {
    const GameSpec g = grid_world(2);
    REQUIRE(g.state_count == 65);
    CHECK(g.team_sizes == std::vector<std::size_t>{4, 4});
    CHECK(g.adversary_actions == 4);
    CHECK(g.discount == 0.9);
    CHECK(validate(g).empty());
    const std::size_t terminal = 64;
    const double win = 0.05 / 2.1;   // raw -1
    const double loss = 2.05 / 2.1;  // raw +1

    // Cells: 0 (0,0), 1 (0,1), 2 (1,0), 3 (1,1). Landmarks are 0 and 3.
    auto state = [](std::size_t p0, std::size_t p1, std::size_t padv) { return p0 + 4 * (p1 + 4 * padv); };
    auto joint = [](std::size_t a0, std::size_t a1) { return a0 + 4 * a1; };

    // Player 0 left -> 0, player 1 down stays on 2, adversary up stays on 1.
    std::size_t s = state(1, 2, 1);
    CHECK(g.reward_at(s, joint(2, 1), 0) == doctest::Approx(0.5));
    CHECK(g.transition_row(s, joint(2, 1), 0)[state(0, 2, 1)] == 1.0);
    // Player 0 left -> 0, player 1 right -> 3: team lands on distinct landmarks.
    CHECK(g.reward_at(s, joint(2, 3), 0) == doctest::Approx(win));
    CHECK(g.transition_row(s, joint(2, 3), 0)[terminal] == 1.0);
    // Adversary at 1 moves left onto landmark 0 while the team does not finish.
    CHECK(g.reward_at(s, joint(0, 0), 2) == doctest::Approx(loss));
    CHECK(g.transition_row(s, joint(0, 0), 2)[terminal] == 1.0);
    // Simultaneous arrival: the team wins.
    CHECK(g.reward_at(s, joint(2, 3), 2) == doctest::Approx(win));
    // Both team agents on the same landmark does not finish.
    s = state(1, 1, 1);
    CHECK(g.reward_at(s, joint(2, 2), 0) == doctest::Approx(0.5));
    // Terminal is absorbing with the midpoint reward.
    CHECK(g.reward_at(terminal, 5, 3) == 0.5);
    CHECK(g.transition_row(terminal, 5, 3)[terminal] == 1.0);
    for (double r : g.initial_dist) CHECK(r == doctest::Approx(1.0 / 65.0));
  }
}
