#include <doctest.h>

#include <cmath>
#include <random>

#include "learndyn/analysis.hpp"

using namespace learndyn;

TEST_SUITE("analysis") {

TEST_CASE("exploration threshold closed form") {
  CHECK(epsilon_threshold(1.8) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  // monotone increasing in g, vanishing at g = 1
  CHECK(epsilon_threshold(1.0) == doctest::Approx(0.0));
  double prev = -1;
  for (double g = 1.1; g < 2.0; g += 0.1) {
    double e = epsilon_threshold(g);
    CHECK(e > prev);
    prev = e;
  }
  CHECK(epsilon_threshold(1.99) > 0.9);
}

TEST_CASE("benchmark steady states") {
  PDSteadyStateReport r = pd_steady_states(1.8, 0.1, 0.9);
  CHECK(r.q_eq_D[0] == doctest::Approx(20.70).epsilon(1e-9));
  CHECK(r.q_eq_D[1] == doctest::Approx(20.90).epsilon(1e-9));
  REQUIRE(r.exists_C);
  CHECK((*r.q_eq_C)[0] == doctest::Approx(35.0936589).epsilon(1e-6));
  CHECK((*r.q_eq_C)[0] == (*r.q_eq_C)[1]);
  REQUIRE(r.tau_at_C.has_value());
  CHECK(*r.tau_at_C == doctest::Approx(0.992615218).epsilon(1e-8));

  // above the threshold the tied point disappears
  PDSteadyStateReport high = pd_steady_states(1.8, 0.8, 0.9);
  CHECK(!high.exists_C);
}

TEST_CASE("steady states are actual rest points of the field pieces") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> ug(1.05, 1.95), ue(0.01, 0.95), uga(0.0, 0.95);
  int tried = 0;
  while (tried < 20) {
    double g = ug(rng), gamma = uga(rng);
    double eps = ue(rng) * 0.95 * epsilon_threshold(g);
    if (eps <= 0.0) continue;
    tried++;
    SymmetricPieces p = symmetric_pd_pieces(g, eps, gamma, 0.05);
    PDSteadyStateReport r = pd_steady_states(g, eps, gamma);
    // defect-domain rest point annihilates the D piece
    CHECK(norm_inf(p.A_D.apply(r.q_eq_D) + p.b_D) < 1e-9);
    // tied point: the sliding rate vanishes
    REQUIRE(r.exists_C);
    CHECK(std::abs(symmetric_sliding_rate(g, eps, gamma, 0.05, (*r.q_eq_C)[0])) < 1e-8);
  }
}

TEST_CASE("general-parameter region verdicts") {
  // normalized benchmark coordinates x = 2/g, y = (2-g)/g at g = 1.8; eps
  // well below threshold lies inside with positive slack on every bound
  RegionVerdict v = pd_region_general(2.0 / 1.8, 0.2 / 1.8, 0.1);
  CHECK(v.inside);
  for (double s : v.slacks) CHECK(s > 0);
  RegionVerdict out = pd_region_general(1.9, 0.9, 0.6);
  CHECK(!out.inside);
}

TEST_CASE("bertrand stationary structure") {
  BertrandReport a = bertrand_structure(BertrandModel::simple, Updating::async);
  CHECK(a.competitive_value == doctest::Approx(0.625).epsilon(1e-10));
  CHECK(a.collusive_value == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(a.collusive_set_exists);

  BertrandReport s = bertrand_structure(BertrandModel::simple, Updating::sync);
  REQUIRE(s.sync_attractor.size() == 2);
  CHECK(s.sync_attractor[0] == doctest::Approx(0.625).epsilon(1e-10));
  CHECK(s.sync_attractor[1] == doctest::Approx(0.0).epsilon(1e-10));

  BertrandReport g = bertrand_structure(BertrandModel::grid, Updating::sync);
  CHECK(g.grid_predicted == std::vector<int>{20, 21});
}

TEST_CASE("coupling-rate witnesses for high local time") {
  // normalized benchmark: x = 2/1.8, y = 0.2/1.8; tied point with tau ~ 0.99
  auto ws = find_coupling_rates(2.0 / 1.8, 0.2 / 1.8);
  REQUIRE(!ws.empty());
  // pick a witness with most of the local time on the cooperative side
  const CouplingWitness* w = nullptr;
  for (const CouplingWitness& c : ws)
    if (c.tau > 0.9) {
      w = &c;
      break;
    }
  REQUIRE(w != nullptr);
  CHECK(w->residual < 1e-8);
  CHECK(w->alpha > 0.5);
  CHECK(w->alpha < 1.0);
  CHECK(w->sliding_slack <= 1e-12);
  CHECK(w->regions_ok);

  // the witness field really slides at the tied estimate
  SwitchedField f = coupling_witness_field(2.0 / 1.8, 0.2 / 1.8, w->alpha);
  SwitchingSurface surf;
  surf.plus_label = {0};
  surf.minus_label = {1};
  BoundaryReport br = classify_boundary(f, surf, {w->theta, w->theta});
  CHECK(br.kind == BoundaryKind::sliding);
  REQUIRE(br.tau.has_value());
  CHECK(*br.tau == doctest::Approx(w->tau).epsilon(1e-6));
}

TEST_CASE("dominance is learned in both views") {
  Game game = make_contribution_game(1.6);
  ReinforcerSpec s;
  s.family = UpdateFamily::q_sync;
  s.alpha = 0.05;
  s.gamma = 0.0;
  s.epsilon = 0.1;
  std::vector<ReinforcerSpec> specs{s, s};
  for (VerifyMode m : {VerifyMode::fluid, VerifyMode::discrete}) {
    auto verdicts = verify_dominance_learning(game, specs, {1, 1}, m, 2);
    REQUIRE(verdicts.size() == 2);
    CHECK(verdicts[0]);
    CHECK(verdicts[1]);
  }
}

TEST_CASE("basins partition initial conditions") {
  SwitchedField f = symmetric_pd_field(1.8, 0.1, 0.9, 0.05);
  PDSteadyStateReport r = pd_steady_states(1.8, 0.1, 0.9);
  std::vector<Vec> inits{{39.0, 38.0}, {5.0, 10.0}};
  std::vector<Vec> targets{*r.q_eq_C, r.q_eq_D};
  IntegrateOptions opt;
  BasinMap bm = basins(f, inits, targets, 0.5, opt);
  REQUIRE(bm.labels.size() == 2);
  CHECK(bm.labels[0] == 0);
  CHECK(bm.labels[1] == 1);
}

TEST_CASE("separation of nearby chatter trajectories is diagnosed") {
  // short-horizon smoke: converging regime (large eps) shows no growth
  Game game = make_contribution_game(1.8);
  ReinforcerSpec s;
  s.alpha = 0.05;
  s.gamma = 0.9;
  s.epsilon = 0.8;
  PiecewiseField pf = build_field(game, {s, s});
  ChaosReport rep = chaos_diagnostics(pf.switched(), {22.0, 21.0, 20.0, 21.5}, 1e-8, 30.0, 0.2, 1e-3);
  CHECK(rep.max_separation < 1e-4);
  CHECK(rep.orders_grown < 2.0);
}

}  // TEST_SUITE
