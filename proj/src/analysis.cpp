#include "learndyn/analysis.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "learndyn/simulator.hpp"

namespace learndyn {

double epsilon_threshold(double g) { return 1.0 - std::sqrt((2.0 - g) / g); }

PDSteadyStateReport pd_steady_states(double g, double epsilon, double gamma) {
  if (!(g > 1 && g < 2)) throw std::invalid_argument("g must lie in (1,2)");
  if (!(epsilon >= 0 && epsilon <= 1)) throw std::invalid_argument("epsilon must lie in [0,1]");
  if (!(gamma >= 0 && gamma < 1)) throw std::invalid_argument("gamma must lie in [0,1)");
  PDSteadyStateReport rep;
  rep.g = g;
  rep.epsilon = epsilon;
  rep.gamma = gamma;
  rep.epsilon_threshold = epsilon_threshold(g);
  double qd = (4.0 + epsilon * g) / (2.0 * (1.0 - gamma));
  // first component solves the defection-domain row exactly:
  // Q_C = E r(C) + gamma Q_D with E r(C) = (1 - eps/2) g + (eps/2) 2g
  double qc = (2.0 * g + epsilon * g) / 2.0 +
              gamma * (4.0 + epsilon * g) / (2.0 * (1.0 - gamma));
  rep.q_eq_D = {qc, qd};
  rep.exists_C = epsilon < rep.epsilon_threshold;
  if (rep.exists_C) {
    double rad = (g - 1) * (g - 1 - epsilon * g + epsilon * epsilon * g / 2.0);
    double yv = (1.0 + g + std::sqrt(rad)) / (1.0 - gamma);
    rep.q_eq_C = Vec{yv, yv};
    double num = epsilon * epsilon * g / 2.0 + epsilon - 2.0 - yv * (gamma - 1.0) * (1.0 - epsilon);
    double den = 2.0 * (epsilon - 1.0) * (1.0 + g + (gamma - 1.0) * yv);
    rep.tau_at_C = num / den;
  }
  return rep;
}

SymmetricPieces symmetric_pd_pieces(double g, double epsilon, double gamma, double alpha) {
  SymmetricPieces p;
  double e2 = epsilon / 2.0;
  p.A_C = Mat(2, 2);
  p.A_C(0, 0) = alpha * (1 - e2) * (gamma - 1);
  p.A_C(0, 1) = 0;
  p.A_C(1, 0) = alpha * gamma * e2;
  p.A_C(1, 1) = -alpha * e2;
  p.A_D = Mat(2, 2);
  p.A_D(0, 0) = -alpha * e2;
  p.A_D(0, 1) = alpha * gamma * e2;
  p.A_D(1, 0) = 0;
  p.A_D(1, 1) = alpha * (1 - e2) * (gamma - 1);
  p.b_C = {alpha * (1 - e2) * (2 - e2) * g, alpha * e2 * (2 + g - g * e2)};
  p.b_D = {alpha * (1 + e2) * e2 * g, alpha * (1 - e2) * (2 + e2 * g)};
  return p;
}

double symmetric_sliding_rate(double g, double epsilon, double gamma, double alpha, double q) {
  double num = 0.5 * epsilon * g * (2 - epsilon) * (g - 1) +
               (2 * g + (gamma - 1) * q) * (2 + (gamma - 1) * q);
  double den = 2 * (1 + g + (gamma - 1) * q);
  return alpha * num / den;
}

namespace {

// Symmetric 2-D reduction of a symmetric 2x2 game under epsilon-greedy Q:
// both agents share the state (Q_0, Q_1); inside label a the opponent's
// mixture puts 1 - eps/2 on a.
SwitchedField symmetric_reduction(const Game& game, double epsilon, double gamma, double alpha) {
  SwitchedField f;
  f.dim = 2;
  f.block_offset = {0};
  f.block_dim = {2};
  Vec r(4);  // r[own*2+opp] for player 0
  for (int own = 0; own < 2; ++own)
    for (int opp = 0; opp < 2; ++opp) r[own * 2 + opp] = game.expected_payoff({own, opp})[0];
  f.eval = [r, epsilon, gamma, alpha](const Vec& q, const DomainLabel& label) {
    int a = label[0];
    double p_opp_a = 1 - epsilon / 2;
    Vec out(2);
    for (int b = 0; b < 2; ++b) {
      double er = p_opp_a * r[b * 2 + a] + (1 - p_opp_a) * r[b * 2 + (1 - a)];
      double pol = epsilon / 2 + (b == a ? 1 - epsilon : 0.0);
      out[b] = alpha * pol * (er + gamma * q[a] - q[b]);
    }
    return out;
  };
  return f;
}

}  // namespace

SwitchedField symmetric_pd_field(double g, double epsilon, double gamma, double alpha) {
  return symmetric_reduction(make_contribution_game(g), epsilon, gamma, alpha);
}

SwitchedField symmetric_general_pd_field(double x, double y, double epsilon, double gamma,
                                         double alpha) {
  return symmetric_reduction(make_general_pd(x, y), epsilon, gamma, alpha);
}

RegionVerdict pd_region_general(double x, double y, double epsilon) {
  RegionVerdict v;
  v.x = x;
  v.y = y;
  v.epsilon = epsilon;
  double s = 2 * epsilon - epsilon * epsilon;
  double ub_x = (4 + 2 * epsilon - epsilon * epsilon) / s - 4 * std::sqrt(1.0 / s);
  double den = 4 - 2 * epsilon + epsilon * epsilon;
  double inner = epsilon * epsilon * (x - 2) - 2 * epsilon * (x - 2) + 4 * (x - 1);
  double root = std::sqrt((epsilon - 2) * (epsilon - 2) * epsilon * epsilon * inner /
                          (den * den * den * den));
  double ub_y = -4 * root + (16 - 4 * std::pow(epsilon, 3) * (x - 1) +
                             std::pow(epsilon, 4) * (x - 1) - 8 * epsilon * (x + 2) +
                             4 * epsilon * epsilon * (1 + 2 * x)) /
                                (den * den);
  v.slacks = {ub_x - x, y, ub_y - y};
  v.inside = x > 1 && v.slacks[0] > 0 && y >= 0 && v.slacks[2] >= 0;
  return v;
}

BasinMap basins(const SwitchedField& field, const std::vector<Vec>& inits,
                const std::vector<Vec>& targets, double radius, const IntegrateOptions& opt) {
  BasinMap map;
  map.points = inits;
  map.targets = targets;
  map.labels.assign(inits.size(), -1);
  int jobs = std::max(1u, std::thread::hardware_concurrency());
  std::atomic<size_t> next{0};
  auto worker = [&]() {
    while (true) {
      size_t k = next.fetch_add(1);
      if (k >= inits.size()) break;
      HybridTrajectory tr = integrate(field, inits[k], opt);
      for (size_t j = 0; j < targets.size(); ++j) {
        if (norm_inf(tr.final_state - targets[j]) <= radius) {
          map.labels[k] = int(j);
          break;
        }
      }
    }
  };
  std::vector<std::thread> pool;
  for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  return map;
}

BertrandReport bertrand_structure(BertrandModel model, Updating updating) {
  BertrandReport rep;
  rep.updating = updating;
  if (model == BertrandModel::simple) {
    Game game = make_bertrand(bertrand_simple_params());
    double r_ll = game.expected_payoff({0, 0})[0];  // both at the low price
    double r_hh = game.expected_payoff({1, 1})[0];  // both at the high price
    double r_hl = game.expected_payoff({1, 0})[0];  // high against low
    if (updating == Updating::async) {
      // greedy asynchronous fluid, gamma = 0: the off-greedy entry is frozen
      rep.competitive_value = r_ll;
      rep.collusive_value = r_hh;
      rep.collusive_set_exists = true;
    } else {
      // synchronous: per greedy label a, the candidate rest point is
      // Q_b = r(b, a); keep the ones whose greedy label is consistent
      for (int a = 0; a < 2; ++a) {
        Vec q = {game.expected_payoff({0, a})[0], game.expected_payoff({1, a})[0]};
        int greedy = q[0] >= q[1] ? 0 : 1;
        if (greedy == a) {
          rep.sync_attractor = q;
          rep.competitive_value = q[0];
        }
      }
      (void)r_hl;
    }
  } else {
    if (updating != Updating::sync)
      throw std::invalid_argument("grid model structure is derived for synchronous updating");
    Game game = make_bertrand(bertrand_grid_params());
    auto survivors = pure_iesds(game, DominanceMode::thick);
    rep.grid_predicted = survivors[0];
  }
  return rep;
}

std::vector<CouplingWitness> find_coupling_rates(double x, double y, int tau_grid) {
  if (!(x > 1 && x < 2 && y > 0 && y < 1))
    throw std::invalid_argument("normalized parameters out of range");
  std::vector<CouplingWitness> out;
  for (int k = 1; k <= tau_grid; ++k) {
    double tau = double(k) / (tau_grid + 1);
    // theta* solves tau^2 (1-theta)(x-theta) = (1-tau)^2 theta (theta-y)
    auto G = [&](double th) {
      return tau * tau * (1 - th) * (x - th) - (1 - tau) * (1 - tau) * th * (th - y);
    };
    double lo = y + 1e-12, hi = 1.0 - 1e-12;
    if (G(lo) <= 0 || G(hi) >= 0) continue;
    for (int it = 0; it < 200; ++it) {
      double mid = 0.5 * (lo + hi);
      if (G(mid) > 0)
        lo = mid;
      else
        hi = mid;
    }
    double th = 0.5 * (lo + hi);
    double alpha = (1 - tau) * th / (tau * (1 - th) + (1 - tau) * th);
    CouplingWitness w;
    w.tau = tau;
    w.theta = th;
    w.alpha = alpha;
    double r1 = alpha * tau * (1 - th) + (1 - alpha) * (1 - tau) * (0 - th);
    double r2 = (1 - alpha) * tau * (x - th) + alpha * (1 - tau) * (y - th);
    w.residual = std::max(std::abs(r1), std::abs(r2));
    w.sliding_slack = tau * (1 - th) + (1 - tau) * (y - th);
    w.regions_ok = (x - th) > (1 - th) && (1 - th) >= 0 && 0 > (y - th) && (y - th) > (0 - th);
    if (w.residual < 1e-8 && alpha > 0.5 && alpha < 1 && w.sliding_slack <= 0 && w.regions_ok)
      out.push_back(w);
  }
  return out;
}

SwitchedField coupling_witness_field(double x, double y, double alpha) {
  SwitchedField f;
  f.dim = 2;
  f.block_offset = {0};
  f.block_dim = {2};
  f.eval = [x, y, alpha](const Vec& th, const DomainLabel& label) {
    Vec out(2);
    if (label[0] == 0) {  // cooperation greedy, opponent mirrors
      out[0] = alpha * (1 - th[0]);
      out[1] = (1 - alpha) * (x - th[1]);
    } else {
      out[0] = (1 - alpha) * (0 - th[0]);
      out[1] = alpha * (y - th[1]);
    }
    return out;
  };
  return f;
}

std::vector<bool> verify_dominance_learning(const Game& game,
                                            const std::vector<ReinforcerSpec>& specs,
                                            const ActionProfile& dominant, VerifyMode mode,
                                            uint64_t seed) {
  const int n = game.players();
  std::vector<bool> verdict(n, false);
  if (mode == VerifyMode::discrete) {
    EpisodeConfig cfg;
    cfg.iterations = 20000;
    cfg.seed = seed;
    EpisodeResult r = run_episode(game, specs, cfg);
    for (int i = 0; i < n; ++i) verdict[i] = r.learned_actions[i] == dominant[i];
    return verdict;
  }
  PiecewiseField pf = build_field(game, specs);
  Vec start;
  for (int i = 0; i < n; ++i) {
    Vec th = initial_theta(specs[i], game, i);
    start.insert(start.end(), th.begin(), th.end());
  }
  IntegrateOptions opt;
  opt.horizon = 1e4;
  HybridTrajectory tr = integrate(pf.switched(), start, opt);
  // dominant entry maximal at the end and over the tail of the trajectory
  for (int i = 0; i < n; ++i) {
    bool ok = true;
    double t_tail = 0.9 * tr.final_time;
    for (const auto& seg : tr.segments) {
      for (size_t k = 0; k < seg.t.size(); ++k) {
        if (seg.t[k] < t_tail) continue;
        const Vec& s = seg.states[k];
        double dv = s[pf.block_offset[i] + dominant[i]];
        for (int a = 0; a < pf.block_dim[i]; ++a)
          if (s[pf.block_offset[i] + a] > dv + 1e-9) ok = false;
      }
    }
    verdict[i] = ok;
  }
  return verdict;
}

ChaosReport chaos_diagnostics(const SwitchedField& field4, const Vec& init, double perturbation,
                              double horizon, double cell, double dt) {
  Vec init2 = init;
  init2[0] += perturbation;
  long steps = long(std::ceil(horizon / dt));
  int stride = int(std::max(1L, steps / 8000));
  SampledPath a = integrate_chatter(field4, init, dt, horizon, stride);
  SampledPath b = integrate_chatter(field4, init2, dt, horizon, stride);

  ChaosReport rep;
  const size_t n = std::min(a.t.size(), b.t.size());
  std::vector<double> logsep(n);
  Vec lo = a.states.front(), hi = a.states.front();
  for (size_t k = 0; k < n; ++k) {
    logsep[k] = std::log10(std::max(1e-300, norm2(a.states[k] - b.states[k])));
    if (!std::isfinite(logsep[k])) rep.truncated = true;
    for (size_t i = 0; i < lo.size(); ++i) {
      lo[i] = std::min(lo[i], a.states[k][i]);
      hi[i] = std::max(hi[i], a.states[k][i]);
    }
  }
  double diam = norm2(hi - lo);

  // occupancy of the center cell: all blocks' top two entries within `cell`
  double in_time = 0, total = 0;
  for (size_t k = 1; k < n; ++k) {
    const Vec& x = a.states[k];
    bool in = true;
    for (int bl = 0; bl < field4.blocks(); ++bl)
      in = in && std::abs(x[field4.block_offset[bl]] - x[field4.block_offset[bl] + 1]) <= cell;
    double w = a.t[k] - a.t[k - 1];
    total += w;
    if (in) in_time += w;
  }
  rep.center_occupancy = total > 0 ? in_time / total : 0;

  // saturation: separation reaches 1% of the attractor diameter
  double sat_level = std::log10(std::max(1e-12, 0.01 * diam));
  size_t k_sat = n - 1;
  for (size_t k = 0; k < n; ++k)
    if (logsep[k] >= sat_level) {
      k_sat = k;
      break;
    }
  rep.saturation_time = a.t[k_sat];

  // growth window: from the pre-saturation separation minimum to saturation.
  // The slope is fitted to the running maximum of log-separation: growth is
  // intermittent, and re-convergence episodes between bursts would otherwise
  // mask the envelope. Merging trajectories still yield a flat envelope.
  size_t k_min = 0;
  for (size_t k = 0; k <= k_sat; ++k)
    if (logsep[k] < logsep[k_min]) k_min = k;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  long m = 0;
  double env = logsep[k_min];
  for (size_t k = k_min; k <= k_sat; ++k) {
    env = std::max(env, logsep[k]);
    sx += a.t[k];
    sy += env;
    sxx += a.t[k] * a.t[k];
    sxy += a.t[k] * env;
    m++;
  }
  if (m > 1) {
    double det = double(m) * sxx - sx * sx;
    if (std::abs(det) > 0) rep.divergence_slope = (double(m) * sxy - sx * sy) / det;
  }
  double maxlog = *std::max_element(logsep.begin(), logsep.end());
  rep.min_separation = std::pow(10.0, logsep[k_min]);
  rep.max_separation = std::pow(10.0, maxlog);
  rep.orders_grown = maxlog - logsep[k_min];
  return rep;
}

}  // namespace learndyn
