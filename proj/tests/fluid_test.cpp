#include <doctest.h>

#include "learndyn/analysis.hpp"
#include "learndyn/fluid.hpp"
#include "learndyn/simulator.hpp"

using namespace learndyn;

namespace {

std::vector<ReinforcerSpec> pd_specs(double alpha, double gamma, double eps) {
  ReinforcerSpec s;
  s.alpha = alpha;
  s.gamma = gamma;
  s.epsilon = eps;
  return {s, s};
}

}  // namespace

TEST_SUITE("fluid") {

TEST_CASE("field pieces match the symmetric closed forms") {
  const double g = 1.8, eps = 0.1, gamma = 0.9, alpha = 0.05;
  Game game = make_contribution_game(g);
  PiecewiseField pf = build_field(game, pd_specs(alpha, gamma, eps));
  SymmetricPieces pieces = symmetric_pd_pieces(g, eps, gamma, alpha);

  // on the symmetric subspace, each agent's block of the 4-D field must equal
  // the 2-D closed-form piece
  for (int lab : {0, 1}) {
    const Mat& A = lab == 0 ? pieces.A_C : pieces.A_D;
    const Vec& b = lab == 0 ? pieces.b_C : pieces.b_D;
    for (Vec q : {Vec{7.0, 5.0}, Vec{20.0, 30.0}, Vec{0.0, 0.0}}) {
      Vec full{q[0], q[1], q[0], q[1]};
      Vec f4 = pf.eval(full, {lab, lab});
      Vec f2 = A.apply(q) + b;
      for (int i = 0; i < 2; ++i) {
        CHECK(f4[i] == doctest::Approx(f2[i]).epsilon(1e-12));
        CHECK(f4[2 + i] == doctest::Approx(f2[i]).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("field equals the expected one-step update") {
  Game game = make_contribution_game(1.8);
  PiecewiseField pf = build_field(game, pd_specs(0.05, 0.9, 0.1));
  FieldCheckReport rep = verify_field_monte_carlo(pf, {30.0, 25.0, 24.0, 28.0}, 200000, 5);
  CHECK(rep.max_sigmas < 5.0);

  // boundary points are rejected: the expectation is not defined there
  CHECK_THROWS(verify_field_monte_carlo(pf, {30.0, 30.0, 24.0, 28.0}, 10, 5));
}

TEST_CASE("sync field check") {
  Game game = make_bertrand(bertrand_simple_params());
  ReinforcerSpec s;
  s.family = UpdateFamily::q_sync;
  s.alpha = 0.05;
  s.gamma = 0.0;
  s.epsilon = 0.1;
  PiecewiseField pf = build_field(game, {s, s});
  FieldCheckReport rep = verify_field_monte_carlo(pf, {2.0, 1.0, 0.8, 1.4}, 100000, 3);
  CHECK(rep.max_sigmas < 5.0);
}

TEST_CASE("unit-scale jump path equals the discrete simulator") {
  Game game = make_contribution_game(1.8);
  auto specs = pd_specs(0.05, 0.9, 0.1);
  Vec th0 = initial_theta(specs[0], game, 0);
  JumpPath jp = simulate_scaled_process(game, specs, 1, 200.0, 42, {th0, th0});

  EpisodeConfig cfg;
  cfg.iterations = long(jp.theta.size());
  cfg.seed = 42;
  cfg.snapshot_stride = 1;
  EpisodeResult res = run_episode(game, specs, cfg);

  // same seed, same streams: jump k lands exactly on iteration k's state
  REQUIRE(jp.theta.size() > 50);
  for (size_t k = 0; k + 1 < std::min(jp.theta.size(), res.theta_trace[0].size()); ++k) {
    for (int a = 0; a < 2; ++a) {
      CHECK(jp.theta[k][a] == res.theta_trace[0][k][a]);
      CHECK(jp.theta[k][2 + a] == res.theta_trace[1][k][a]);
    }
  }
}

TEST_CASE("scaled process concentrates on the flow") {
  Game game = make_contribution_game(1.8);
  auto specs = pd_specs(0.05, 0.9, 0.1);
  PiecewiseField pf = build_field(game, specs);
  // interior of the all-defect domain
  Vec start{0.0, 10.0, 0.0, 10.0};
  IntegrateOptions opt;
  opt.horizon = 5.0;
  HybridTrajectory flow = integrate(pf.switched(), start, opt);

  auto sup_dist = [&](int n, uint64_t seed) {
    JumpPath jp = simulate_scaled_process(game, specs, n, 5.0, seed, {{0.0, 10.0}, {0.0, 10.0}});
    double worst = 0;
    for (size_t k = 0; k < jp.t.size(); ++k)
      worst = std::max(worst, norm_inf(jp.theta[k] - flow.state_at(jp.t[k])));
    return worst;
  };
  double d10 = 0, d100 = 0;
  const int seeds = 10;
  for (uint64_t s = 1; s <= seeds; ++s) {
    d10 += sup_dist(10, s);
    d100 += sup_dist(100, s);
  }
  CHECK(d100 / seeds < d10 / seeds);
}

TEST_CASE("field json export") {
  Game game = make_contribution_game(1.8);
  PiecewiseField pf = build_field(game, pd_specs(0.05, 0.9, 0.1));
  auto j = pf.to_json();
  REQUIRE(j.contains("pieces"));
  CHECK(j["pieces"].size() == 4);  // 2x2 greedy domains
}

}  // TEST_SUITE
