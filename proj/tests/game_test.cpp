#include <doctest.h>

#include "learndyn/game.hpp"

using namespace learndyn;

TEST_SUITE("game") {

TEST_CASE("contribution payoffs") {
  Game g = make_contribution_game(1.8);
  CHECK(g.players() == 2);
  CHECK(g.num_actions(0) == 2);
  // 0 = C, 1 = D
  CHECK(g.expected_payoff({0, 0})[0] == doctest::Approx(3.6).epsilon(1e-12));
  CHECK(g.expected_payoff({0, 1})[0] == doctest::Approx(1.8).epsilon(1e-12));
  CHECK(g.expected_payoff({0, 1})[1] == doctest::Approx(3.8).epsilon(1e-12));
  CHECK(g.expected_payoff({1, 0})[0] == doctest::Approx(3.8).epsilon(1e-12));
  CHECK(g.expected_payoff({1, 1})[0] == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("normalized pd payoffs") {
  Game g = make_general_pd(1.5, 0.4);
  CHECK(g.expected_payoff({0, 0})[0] == doctest::Approx(1.0));
  CHECK(g.expected_payoff({0, 1})[0] == doctest::Approx(0.0));
  CHECK(g.expected_payoff({1, 0})[0] == doctest::Approx(1.5));
  CHECK(g.expected_payoff({1, 1})[0] == doctest::Approx(0.4));
}

TEST_CASE("simple bertrand profits") {
  Game g = make_bertrand(bertrand_simple_params());
  // action 0 = price 0.5, action 1 = price 2
  Vec v = g.expected_payoff({0, 1});
  CHECK(v[0] == doctest::Approx(1.25).epsilon(1e-12));
  CHECK(v[1] == doctest::Approx(0.0).epsilon(1e-12));
  v = g.expected_payoff({0, 0});
  CHECK(v[0] == doctest::Approx(0.625).epsilon(1e-12));
  v = g.expected_payoff({1, 1});
  CHECK(v[0] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("grid bertrand structure") {
  Game g = make_bertrand(bertrand_grid_params());
  CHECK(g.num_actions(0) == 100);
  Vec grid = bertrand_price_grid();
  CHECK(grid[20] == doctest::Approx(0.01 + 20 * (9.99 / 99)).epsilon(1e-15));
  // unit demand to the lowest price, half each on a tie
  Vec v = g.expected_payoff({20, 21});
  CHECK(v[0] == doctest::Approx(grid[20] - 2.0).epsilon(1e-12));
  CHECK(v[1] == doctest::Approx(0.0));
  v = g.expected_payoff({21, 21});
  CHECK(v[0] == doctest::Approx((grid[21] - 2.0) / 2).epsilon(1e-12));
}

TEST_CASE("keyword expected payoffs") {
  Game g = make_keyword_game();
  CHECK(g.stochastic);
  CHECK(g.num_actions(0) == 8);
  // both bid everywhere: contested margin 1/6 per keyword, weighted by ctr
  Vec both = g.expected_payoff({7, 7});
  CHECK(both[0] == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(both[1] == doctest::Approx(0.3).epsilon(1e-12));
  // split: A on {a,m}, B on {b,m}; solo branded at the reserve plus contested m
  Vec split = g.expected_payoff({3, 6});
  CHECK(split[0] == doctest::Approx(0.5 + 0.6 / 6).epsilon(1e-12));
  CHECK(split[1] == doctest::Approx(0.5 + 0.6 / 6).epsilon(1e-12));
  // A solo on its branded keyword only
  CHECK(g.expected_payoff({1, 0})[0] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("keyword sampler matches expectation") {
  Game g = make_keyword_game();
  std::mt19937_64 rng(7);
  const int n = 200000;
  double sum0 = 0;
  for (int k = 0; k < n; ++k) sum0 += g.payoff({7, 7}, rng)[0];
  double mean = sum0 / n;
  // payoffs bounded by 2; 5 sigma band with sd <= 1
  CHECK(std::abs(mean - 0.3) < 5.0 / std::sqrt(double(n)));
}

TEST_CASE("iesds on dominance-solvable games") {
  Game pd = make_contribution_game(1.8);
  auto surv = pure_iesds(pd);
  REQUIRE(surv.size() == 2);
  CHECK(surv[0] == std::vector<int>{1});
  CHECK(surv[1] == std::vector<int>{1});
  // order independence for strict dominance
  CHECK(pure_iesds_all_orders(pd) == surv);

  Game sb = make_bertrand(bertrand_simple_params());
  auto s2 = pure_iesds(sb);
  CHECK(s2[0] == std::vector<int>{0});
}

TEST_CASE("grid bertrand thick survivors") {
  Game gb = make_bertrand(bertrand_grid_params());
  auto surv = pure_iesds(gb, DominanceMode::thick);
  REQUIRE(surv.size() == 2);
  CHECK(surv[0] == std::vector<int>{20, 21});
  CHECK(surv[1] == std::vector<int>{20, 21});
  // strict elimination alone keeps more prices than the thick notion
  auto strict = pure_iesds(gb, DominanceMode::strict);
  CHECK(strict[0].size() >= surv[0].size());
}

TEST_CASE("json round trip") {
  Game g = make_contribution_game(1.7);
  Game back = game_from_json(game_to_json(g));
  CHECK(back.family == g.family);
  CHECK(back.num_actions(0) == 2);
  CHECK(back.expected_payoff({1, 0})[0] == doctest::Approx(g.expected_payoff({1, 0})[0]));
}

}  // TEST_SUITE
