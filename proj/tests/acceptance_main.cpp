// End-to-end acceptance checks. Each check prints one PASS/FAIL line with the
// measured quantities; the exit code is the number of failures.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "learndyn/analysis.hpp"
#include "learndyn/filippov.hpp"
#include "learndyn/fluid.hpp"
#include "learndyn/game.hpp"
#include "learndyn/mechanisms.hpp"
#include "learndyn/reinforcer.hpp"
#include "learndyn/simulator.hpp"

using namespace learndyn;

namespace {

int failures = 0;

void report(int id, const char* name, bool ok, const std::string& detail) {
  std::printf("[%2d] %-34s %s  %s\n", id, name, ok ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!ok) failures++;
}

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

ReinforcerSpec spec_of(double alpha, double gamma, double eps,
                       UpdateFamily fam = UpdateFamily::q_async) {
  ReinforcerSpec s;
  s.family = fam;
  s.alpha = alpha;
  s.gamma = gamma;
  s.epsilon = eps;
  return s;
}

// --------------------------------------------------------------------------
// 1. exploration threshold closed form

void check_threshold() {
  double at_bench = epsilon_threshold(1.8);
  bool ok = std::abs(at_bench - 2.0 / 3.0) < 1e-12;
  double prev = 0;
  bool monotone = true;
  for (int k = 1; k <= 9; ++k) {
    double e = epsilon_threshold(1.0 + 0.1 * k);
    if (e <= prev) monotone = false;
    prev = e;
  }
  bool tail = epsilon_threshold(1.99) > 0.9;
  report(1, "exploration threshold", ok && monotone && tail,
         fmt("eps_bar(1.8)=%.15f monotone=%d eps_bar(1.99)=%.4f", at_bench, int(monotone),
             epsilon_threshold(1.99)));
}

// --------------------------------------------------------------------------
// 2. closed-form steady states annihilate the field pieces

void check_steady_state_consistency() {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> ug(1.05, 1.95), ue(0.05, 0.95), uga(0.0, 0.9);
  double worst_D = 0, worst_slide = 0;
  int tried = 0;
  while (tried < 20) {
    double g = ug(rng), gamma = uga(rng);
    double eps = ue(rng) * 0.95 * epsilon_threshold(g);
    if (eps < 1e-4) continue;
    tried++;
    SymmetricPieces p = symmetric_pd_pieces(g, eps, gamma, 0.05);
    PDSteadyStateReport r = pd_steady_states(g, eps, gamma);
    worst_D = std::max(worst_D, norm_inf(p.A_D.apply(r.q_eq_D) + p.b_D));
    if (r.exists_C)
      worst_slide = std::max(
          worst_slide, std::abs(symmetric_sliding_rate(g, eps, gamma, 0.05, (*r.q_eq_C)[0])));
    else
      worst_slide = 1.0;  // admissible triple must have the tied point
  }
  bool ok = worst_D < 1e-10 && worst_slide < 1e-10;
  report(2, "steady states vs field pieces", ok,
         fmt("max|A_D q+b_D|=%.2e max|slide(q*)|=%.2e over 20 triples", worst_D, worst_slide));
}

// --------------------------------------------------------------------------
// 3. integrator agrees with the threshold on a parameter grid

void check_bifurcation_grid() {
  const double gamma = 0.9, alpha = 0.05;
  int agree = 0, total = 0;
  std::string bad;
  for (double g : {1.2, 1.35, 1.5, 1.65, 1.8}) {
    double eb = epsilon_threshold(g);
    for (double eps : {0.1, 0.25, 0.4, 0.55, 0.7}) {
      if (std::abs(eps - eb) < 0.02) continue;
      total++;
      SwitchedField f = symmetric_pd_field(g, eps, gamma, alpha);
      Vec init{2 * g / (1 - gamma) + 2, 2 * g / (1 - gamma)};
      HybridTrajectory tr = integrate(f, init);
      bool found = tr.steady && tr.pseudo;
      if (found == (eps < eb))
        agree++;
      else if (bad.size() < 120)
        bad += fmt(" (g=%.2f,eps=%.2f)", g, eps);
    }
  }
  report(3, "bifurcation grid agreement", agree == total,
         fmt("%d/%d grid points agree%s", agree, total, bad.c_str()));
}

// --------------------------------------------------------------------------
// 4. discrete local time vs the analytic sliding weight

void check_local_time() {
  Game game = make_contribution_game(1.8);
  std::vector<ReinforcerSpec> specs{spec_of(0.05, 0.9, 0.1), spec_of(0.05, 0.9, 0.1)};
  PDSteadyStateReport r = pd_steady_states(1.8, 0.1, 0.9);
  double tau = *r.tau_at_C;
  double sum = 0;
  int n = 0;
  EpisodeConfig cfg;
  cfg.iterations = 100000;
  for (uint64_t seed = 1; seed <= 20; ++seed) {
    cfg.seed = seed;
    EpisodeResult res = run_episode(game, specs, cfg);
    for (double lt : res.local_time) {
      sum += lt;
      n++;
    }
  }
  double mean = sum / n;
  bool ok = std::abs(mean - tau) <= 0.10;
  report(4, "cooperation local time", ok,
         fmt("mean=%.4f analytic=%.4f (20 seeds, 100k iters)", mean, tau));
}

// --------------------------------------------------------------------------
// 5. scaled jump process converges to the flow

void check_fluid_convergence() {
  Game game = make_contribution_game(1.8);
  std::vector<ReinforcerSpec> specs{spec_of(0.05, 0.9, 0.1), spec_of(0.05, 0.9, 0.1)};
  PiecewiseField pf = build_field(game, specs);
  IntegrateOptions opt;
  opt.horizon = 5.0;
  HybridTrajectory flow = integrate(pf.switched(), {0.0, 10.0, 0.0, 10.0}, opt);

  auto median_dist = [&](int n) {
    std::vector<double> d;
    for (uint64_t seed = 1; seed <= 50; ++seed) {
      JumpPath jp = simulate_scaled_process(game, specs, n, 5.0, seed, {{0.0, 10.0}, {0.0, 10.0}});
      double worst = 0;
      for (size_t k = 0; k < jp.t.size(); ++k)
        worst = std::max(worst, norm_inf(jp.theta[k] - flow.state_at(jp.t[k])));
      d.push_back(worst);
    }
    std::nth_element(d.begin(), d.begin() + d.size() / 2, d.end());
    return d[d.size() / 2];
  };
  double m10 = median_dist(10), m100 = median_dist(100), m1000 = median_dist(1000);
  bool ok = m100 < m10 && m1000 < m100;
  report(5, "jump process scaling", ok,
         fmt("median sup-dist n=10:%.4f n=100:%.4f n=1000:%.4f", m10, m100, m1000));
}

// --------------------------------------------------------------------------
// 6. two-price competition: stationary structure and sync attractor

void check_bertrand_simple() {
  BertrandReport a = bertrand_structure(BertrandModel::simple, Updating::async);
  bool closed = std::abs(a.competitive_value - 0.625) < 1e-10 &&
                std::abs(a.collusive_value - 1.0) < 1e-10 && a.collusive_set_exists;
  BertrandReport s = bertrand_structure(BertrandModel::simple, Updating::sync);
  closed = closed && std::abs(s.sync_attractor[0] - 0.625) < 1e-10 &&
           std::abs(s.sync_attractor[1]) < 1e-10;

  Game game = make_bertrand(bertrand_simple_params());
  auto sp = spec_of(0.05, 0.0, 0.0, UpdateFamily::q_sync);
  PiecewiseField pf = build_field(game, {sp, sp});
  IntegrateOptions opt;
  opt.rtol = 1e-11;
  opt.atol = 1e-13;
  opt.ss_tol = 1e-13;
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  int converged = 0;
  double worst = 0;
  for (int k = 0; k < 100; ++k) {
    Vec init{u(rng), u(rng), u(rng), u(rng)};
    HybridTrajectory tr = integrate(pf.switched(), init, opt);
    Vec target{0.625, 0.0, 0.625, 0.0};
    double d = norm_inf(tr.final_state - target);
    worst = std::max(worst, d);
    if (tr.steady && d < 1e-10) converged++;
  }
  bool ok = closed && converged == 100;
  report(6, "two-price stationary structure", ok,
         fmt("closed_forms=%d sync_converged=%d/100 worst_dist=%.2e", int(closed), converged,
             worst));
}

// --------------------------------------------------------------------------
// 7. price grid: synchronous learners land on the two surviving prices

void check_bertrand_grid() {
  Game game = make_bertrand(bertrand_grid_params());
  auto sp = spec_of(0.002, 0.0, 0.01, UpdateFamily::q_sync);
  std::vector<ReinforcerSpec> specs{sp, sp};
  Vec grid = bertrand_price_grid();
  EpisodeConfig cfg;
  cfg.iterations = 300000;
  cfg.snapshot_stride = 10000;
  int hits = 0;
  std::string misses;
  for (uint64_t seed = 1; seed <= 20; ++seed) {
    cfg.seed = seed;
    EpisodeResult res = run_episode(game, specs, cfg);
    bool both = true;
    for (int i = 0; i < 2; ++i) {
      const Vec& th = res.final_theta[i];
      int best = int(std::max_element(th.begin(), th.end()) - th.begin());
      if (best != 20 && best != 21) {
        both = false;
        if (misses.size() < 120) misses += fmt(" seed%llu:firm%d@%.4f", (unsigned long long)seed, i, grid[best]);
      }
    }
    if (both) hits++;
  }
  bool ok = hits >= 18;
  report(7, "price grid learning", ok, fmt("%d/20 seeds on {2.0282, 2.1291}%s", hits, misses.c_str()));
}

// --------------------------------------------------------------------------
// 8. keyword auction: both the dominant and the splitting outcome occur

void check_keyword_split() {
  Game game = make_keyword_game();
  auto sp = spec_of(0.005, 0.9, 0.01);
  std::vector<ReinforcerSpec> specs{sp, sp};
  EpisodeConfig cfg;
  cfg.iterations = 500000;
  cfg.snapshot_stride = 50000;
  int all = 0, split = 0, other = 0;
  for (uint64_t seed = 1; seed <= 50; ++seed) {
    cfg.seed = seed;
    EpisodeResult res = run_episode(game, specs, cfg);
    int mA = int(std::max_element(res.final_theta[0].begin(), res.final_theta[0].end()) -
                 res.final_theta[0].begin());
    int mB = int(std::max_element(res.final_theta[1].begin(), res.final_theta[1].end()) -
                 res.final_theta[1].begin());
    if (mA == 7 && mB == 7)
      all++;
    else if ((mA | mB) == 7 && ((mA & mB) == 0 || (mA & mB) == 2))
      split++;  // full coverage with disjoint branded keywords
    else
      other++;
  }
  double frac = split / 50.0;
  bool ok = all > 0 && split > 0 && frac >= 0.10 && frac <= 0.70;
  report(8, "keyword market splitting", ok,
         fmt("all=%d split=%d other=%d split_frac=%.2f", all, split, other, frac));
}

// --------------------------------------------------------------------------
// 9. uniform relative rates learn the dominant action

void check_dominance_learning() {
  int good = 0, total = 0;
  for (int k = 1; k <= 9; ++k) {
    double g = 1.0 + 0.1 * k;
    Game game = make_contribution_game(g);
    auto sp = spec_of(0.05, 0.9, 0.1, UpdateFamily::q_sync);
    std::vector<ReinforcerSpec> specs{sp, sp};
    EpisodeConfig cfg;
    cfg.iterations = 50000;
    for (uint64_t seed = 1; seed <= 20; ++seed) {
      cfg.seed = seed;
      EpisodeResult res = run_episode(game, specs, cfg);
      total++;
      if (res.learned_actions[0] == 1 && res.learned_actions[1] == 1) good++;
    }
  }
  report(9, "dominance under uniform rates", good == total, fmt("%d/%d runs learned D", good, total));
}

// --------------------------------------------------------------------------
// 10. constant-rate coupling witness sustains the tied point

void check_coupling_witness() {
  const double x = 2.0 / 1.8, y = 0.2 / 1.8;
  auto ws = find_coupling_rates(x, y);
  bool ok = false;
  std::string detail = "no witness";
  for (const CouplingWitness& w : ws) {
    if (w.residual >= 1e-8 || w.alpha <= 0.5 || w.alpha >= 1.0 || w.sliding_slack > 1e-12 ||
        !w.regions_ok)
      continue;
    SwitchedField f = coupling_witness_field(x, y, w.alpha);
    SwitchingSurface surf;
    surf.plus_label = {0};
    surf.minus_label = {1};
    BoundaryReport br = classify_boundary(f, surf, {w.theta, w.theta});
    if (br.kind != BoundaryKind::sliding) continue;
    ok = true;
    detail = fmt("alpha=%.4f theta*=%.4f tau=%.4f residual=%.1e sliding=yes", w.alpha, w.theta,
                 w.tau, w.residual);
    break;
  }
  report(10, "coupling-rate witness", ok, detail);
}

// --------------------------------------------------------------------------
// 11. sensitive dependence in the 4-D asymmetric system

void check_chaos() {
  Game game = make_contribution_game(1.8);
  auto sp = spec_of(0.05, 0.9, 0.1);
  PiecewiseField pf = build_field(game, {sp, sp});
  ChaosReport rep =
      chaos_diagnostics(pf.switched(), {34.0, 34.5, 35.5, 34.8}, 1e-10, 16000.0);
  bool ok = rep.divergence_slope > 0 && rep.orders_grown >= 10.0 && rep.center_occupancy >= 0.8;
  report(11, "trajectory divergence", ok,
         fmt("slope=%.2e orders=%.2f occupancy=%.3f sat_t=%.0f", rep.divergence_slope,
             rep.orders_grown, rep.center_occupancy, rep.saturation_time));
}

// --------------------------------------------------------------------------
// 12. feedback policies and auction counterfactuals

bool agent_strategy_proof(const FiniteMechanism& m, int agent) {
  for (int opp = 0; opp < m.opp_profiles(agent); ++opp)
    for (int t = 0; t < m.type_counts[agent]; ++t) {
      double truthful = m.util(agent, m.outcome_vs(agent, t, opp), t);
      for (int d = 0; d < m.type_counts[agent]; ++d)
        if (m.util(agent, m.outcome_vs(agent, d, opp), t) > truthful + 1e-12) return false;
    }
  return true;
}

void check_mechanisms() {
  // Exhaustive sweep over outcome maps and one agent's binary utility table.
  // Both the agent's strategy-proofness and both policy constructions depend
  // only on that pair, so the sweep covers every strategy-proof mechanism
  // with these type spaces and 0/1 utilities.
  long checked = 0, mismatches = 0;
  for (int nx = 1; nx <= 4; ++nx) {
    int nf = 1;
    for (int k = 0; k < 4; ++k) nf *= nx;
    int nu = 1 << (2 * nx);
    for (int fi = 0; fi < nf; ++fi) {
      FiniteMechanism m;
      m.type_counts = {2, 2};
      m.outcomes = nx;
      m.f.resize(4);
      int rem = fi;
      for (int p = 0; p < 4; ++p) {
        m.f[p] = rem % nx;
        rem /= nx;
      }
      m.utilities.assign(2, Vec(size_t(2 * nx), 0.0));
      for (int agent = 0; agent < 2; ++agent) {
        for (int ui = 0; ui < nu; ++ui) {
          for (int b = 0; b < 2 * nx; ++b) m.utilities[agent][b] = (ui >> b) & 1;
          if (!agent_strategy_proof(m, agent)) continue;
          checked++;
          FeedbackPolicy canon = canonical_max_policy(m, agent);
          FeedbackPolicy brute = brute_force_max_policy(m, agent);
          if (!canon.valid || !brute.valid ||
              privacy_compare(canon, brute) != PrivacyOrder::equal)
            mismatches++;
        }
        std::fill(m.utilities[agent].begin(), m.utilities[agent].end(), 0.0);
      }
    }
  }

  std::mt19937_64 rng(12);
  std::uniform_int_distribution<int> bid(0, 100);
  long cf_checked = 0, cf_bad = 0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<int> bids{bid(rng), bid(rng), bid(rng), bid(rng)};
    VcgOutcome out = vcg_two_slot(bids);
    for (int agent = 0; agent < 4; ++agent)
      for (int dev = 0; dev <= 100; ++dev) {
        cf_checked++;
        if (counterfactual_reconstruct(agent, out.feedback[agent], bids[agent], dev) !=
            vcg_rerun_payoff(bids, agent, bids[agent], dev))
          cf_bad++;
      }
  }
  bool ok = mismatches == 0 && cf_bad == 0;
  report(12, "feedback and counterfactuals", ok,
         fmt("policy pairs=%ld mismatches=%ld; counterfactuals=%ld bad=%ld", checked, mismatches,
             cf_checked, cf_bad));
}

// --------------------------------------------------------------------------
// 13. general-parameter region vs integrator verdicts

void check_region_grid() {
  int agree = 0, total = 0;
  std::string bad;
  for (double x : {1.2, 1.5, 1.8})
    for (double y : {0.2, 0.5, 0.8})
      for (double eps : {0.1, 0.3, 0.5}) {
        RegionVerdict v = pd_region_general(x, y, eps);
        double margin = 1e9;
        for (double s : v.slacks) margin = std::min(margin, std::abs(s));
        if (margin < 0.02) continue;  // too close to the boundary to trust either side
        total++;
        SwitchedField f = symmetric_general_pd_field(x, y, eps, 0.0, 0.05);
        HybridTrajectory tr = integrate(f, {4.0, 3.8});
        bool found = tr.steady && tr.pseudo;
        if (found == v.inside)
          agree++;
        else if (bad.size() < 120)
          bad += fmt(" (x=%.1f,y=%.1f,eps=%.1f)", x, y, eps);
      }
  report(13, "region verdict agreement", agree == total,
         fmt("%d/%d grid points agree%s", agree, total, bad.c_str()));
}

}  // namespace

int main() {
  auto t0 = std::chrono::steady_clock::now();
  check_threshold();
  check_steady_state_consistency();
  check_bifurcation_grid();
  check_local_time();
  check_fluid_convergence();
  check_bertrand_simple();
  check_bertrand_grid();
  check_keyword_split();
  check_dominance_learning();
  check_coupling_witness();
  check_chaos();
  check_mechanisms();
  check_region_grid();
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("%d/13 criteria passed (%.0f s)\n", 13 - failures, secs);
  return failures;
}
