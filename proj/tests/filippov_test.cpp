#include <doctest.h>

#include <cmath>

#include "learndyn/analysis.hpp"
#include "learndyn/filippov.hpp"
#include "learndyn/fluid.hpp"

using namespace learndyn;

namespace {

SwitchedField pd2(double eps) { return symmetric_pd_field(1.8, eps, 0.9, 0.05); }

SwitchingSurface diag_surface() {
  SwitchingSurface s;
  s.block = 0;
  s.hi = 0;
  s.lo = 1;
  s.plus_label = {0};
  s.minus_label = {1};
  return s;
}

}  // namespace

TEST_SUITE("filippov") {

TEST_CASE("boundary classification on the symmetric diagonal") {
  SwitchedField f = pd2(0.1);
  SwitchingSurface s = diag_surface();

  // just above the tied rest point the diagonal attracts from both sides
  BoundaryReport slide = classify_boundary(f, s, {36.0, 36.0});
  CHECK(slide.kind == BoundaryKind::sliding);
  CHECK(slide.n_plus < 0);
  CHECK(slide.n_minus > 0);
  REQUIRE(slide.tau.has_value());
  CHECK(*slide.tau > 0.9);

  auto [g, tau] = sliding_field(f, s, {36.0, 36.0});
  CHECK(g[0] == doctest::Approx(g[1]).epsilon(1e-9));  // tangent to the diagonal
  CHECK(tau == doctest::Approx(*slide.tau));

  // well below the band both one-sided fields cross upward
  BoundaryReport low = classify_boundary(f, s, {30.0, 30.0});
  CHECK(low.kind == BoundaryKind::crossing);
  CHECK(low.n_plus > 0);
  CHECK(low.n_minus > 0);
}

TEST_CASE("sliding field matches the scalar closed form") {
  const double g = 1.8, eps = 0.1, gamma = 0.9, alpha = 0.05;
  SwitchedField f = symmetric_pd_field(g, eps, gamma, alpha);
  for (double q : {35.2, 36.0, 40.0}) {
    auto [fld, tau] = sliding_field(f, diag_surface(), {q, q});
    (void)tau;
    CHECK(fld[0] == doctest::Approx(symmetric_sliding_rate(g, eps, gamma, alpha, q)).epsilon(1e-9));
  }
}

TEST_CASE("hybrid integration finds the boundary rest point below threshold") {
  // eps < eps_bar: pseudo-steady-state on the diagonal
  auto ss = pd_steady_states(1.8, 0.1, 0.9);
  REQUIRE(ss.exists_C);
  IntegrateOptions opt;
  HybridTrajectory tr = integrate(pd2(0.1), {39.0, 38.0}, opt);
  CHECK(tr.steady);
  CHECK(tr.pseudo);
  CHECK(norm_inf(tr.final_state - *ss.q_eq_C) < 1e-6);

  // eps > eps_bar: interior rest point of the defect domain instead
  auto ss2 = pd_steady_states(1.8, 0.8, 0.9);
  CHECK(!ss2.exists_C);
  HybridTrajectory tr2 = integrate(pd2(0.8), {39.0, 38.0}, opt);
  CHECK(tr2.steady);
  CHECK(!tr2.pseudo);
  CHECK(norm_inf(tr2.final_state - ss2.q_eq_D) < 1e-6);
}

TEST_CASE("codimension-2 attractivity flips at the detachment level") {
  // at gamma = 0 the intersection of both switching surfaces stops being
  // nodally attractive below q_bar = g + 1 + (eps^2 g / 2 + 1 - eps g)/(1 - eps)
  const double g = 1.8, eps = 0.1, alpha = 0.05;
  Game game = make_contribution_game(g);
  ReinforcerSpec s;
  s.alpha = alpha;
  s.gamma = 0.0;
  s.epsilon = eps;
  PiecewiseField pf = build_field(game, {s, s});
  double qbar = g + 1 + (eps * eps * g / 2 + 1 - eps * g) / (1 - eps);
  CHECK(qbar == doctest::Approx(3.721111).epsilon(1e-5));

  Codim2Report above = classify_codim2(pf.switched(), {qbar + 0.2, qbar + 0.2, qbar + 0.2, qbar + 0.2});
  CHECK(above.nodal);
  Codim2Report below = classify_codim2(pf.switched(), {qbar - 0.2, qbar - 0.2, qbar - 0.2, qbar - 0.2});
  CHECK(!below.nodal);

  DoubleSlidingResult ds = double_sliding_field(pf.switched(), {qbar + 0.5, qbar + 0.5, qbar + 0.5, qbar + 0.5});
  CHECK(ds.ok);
  CHECK(ds.wA > 0.0);
  CHECK(ds.wA < 1.0);
  CHECK(ds.residual < 1e-9);
}

TEST_CASE("chatter integration") {
  SwitchedField f = pd2(0.1);
  SampledPath p = integrate_chatter(f, {39.0, 38.0}, 0.01, 200.0, 10);
  REQUIRE(p.t.size() > 10);
  CHECK(p.t.back() == doctest::Approx(200.0).epsilon(1e-9));

  // deterministic: same call, same samples
  SampledPath q = integrate_chatter(f, {39.0, 38.0}, 0.01, 200.0, 10);
  for (size_t k = 0; k < p.states.size(); ++k) CHECK(p.states[k] == q.states[k]);

  // interpolation brackets the recorded samples
  Vec mid = p.state_at(0.5 * (p.t[3] + p.t[4]));
  CHECK(mid[0] == doctest::Approx(0.5 * (p.states[3][0] + p.states[4][0])).epsilon(1e-12));

  // long-run chatter hugs the diagonal near the boundary rest point
  SampledPath lr = integrate_chatter(f, {39.0, 38.0}, 0.01, 3000.0, 100);
  Vec last = lr.states.back();
  CHECK(std::abs(last[0] - last[1]) < 0.1);
  auto ss = pd_steady_states(1.8, 0.1, 0.9);
  CHECK(std::abs(last[0] - (*ss.q_eq_C)[0]) < 0.5);

  CHECK_THROWS(integrate_chatter(f, {1.0, 1.0}, -0.1, 10.0));
}

TEST_CASE("classification rejects off-surface points") {
  CHECK_THROWS(classify_boundary(pd2(0.1), diag_surface(), {30.0, 31.0}));
}

}  // TEST_SUITE
