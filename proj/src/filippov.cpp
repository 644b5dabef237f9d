#include "learndyn/filippov.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace learndyn {

namespace {

double dot_sparse(const Vec& v, int i_pos, int i_neg) { return v[i_pos] - v[i_neg]; }

}  // namespace

BoundaryReport classify_boundary(const SwitchedField& field, const SwitchingSurface& surface,
                                 const Vec& point, double tol) {
  int ip = field.block_offset[surface.block] + surface.hi;
  int in = field.block_offset[surface.block] + surface.lo;
  if (std::abs(point[ip] - point[in]) > 1e-6)
    throw std::invalid_argument("point is not on the switching surface");
  Vec fp = field.eval(point, surface.plus_label);
  Vec fm = field.eval(point, surface.minus_label);
  BoundaryReport rep;
  rep.n_plus = dot_sparse(fp, ip, in);
  rep.n_minus = dot_sparse(fm, ip, in);
  if (std::abs(rep.n_plus) < tol || std::abs(rep.n_minus) < tol) {
    rep.kind = BoundaryKind::degenerate;
    return rep;
  }
  if (rep.n_plus * rep.n_minus > 0) {
    rep.kind = BoundaryKind::crossing;
  } else if (rep.n_plus > 0 && rep.n_minus < 0) {
    rep.kind = BoundaryKind::repulsive;
  } else {
    rep.kind = BoundaryKind::sliding;
    double tau = rep.n_minus / (rep.n_minus - rep.n_plus);
    Vec g = tau * fp + (1.0 - tau) * fm;
    rep.tau = tau;
    rep.sliding_field = g;
  }
  return rep;
}

std::pair<Vec, double> sliding_field(const SwitchedField& field, const SwitchingSurface& surface,
                                     const Vec& point) {
  int ip = field.block_offset[surface.block] + surface.hi;
  int in = field.block_offset[surface.block] + surface.lo;
  Vec fp = field.eval(point, surface.plus_label);
  Vec fm = field.eval(point, surface.minus_label);
  double hp = dot_sparse(fp, ip, in);
  double hm = dot_sparse(fm, ip, in);
  double den = hm - hp;
  if (std::abs(den) < 1e-14) throw std::runtime_error("degenerate sliding combination");
  double tau = hm / den;
  return {tau * fp + (1.0 - tau) * fm, tau};
}

Codim2Report classify_codim2(const SwitchedField& field, const Vec& point) {
  if (field.blocks() != 2 || field.block_dim[0] != 2 || field.block_dim[1] != 2)
    throw std::invalid_argument("codimension-2 analysis needs two 2-action blocks");
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  int a0 = field.block_offset[0], b0 = field.block_offset[1];
  Codim2Report rep;
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      Vec f = field.eval(point, {a, b});
      rep.nA[a * 2 + b] = inv_sqrt2 * (f[a0] - f[a0 + 1]);
      rep.nB[a * 2 + b] = inv_sqrt2 * (f[b0] - f[b0 + 1]);
    }
  }
  // labels: 0 = action 0 (C) greedy, 1 = action 1 (D) greedy
  rep.slack[0] = rep.nA[1 * 2 + 1];
  rep.slack[1] = rep.nA[1 * 2 + 0];
  rep.slack[2] = -rep.nA[0 * 2 + 1];
  rep.slack[3] = -rep.nA[0 * 2 + 0];
  rep.slack[4] = rep.nB[1 * 2 + 1];
  rep.slack[5] = -rep.nB[1 * 2 + 0];
  rep.slack[6] = rep.nB[0 * 2 + 1];
  rep.slack[7] = -rep.nB[0 * 2 + 0];
  rep.nodal = true;
  for (double s : rep.slack)
    if (!(s > 0)) rep.nodal = false;
  return rep;
}

DoubleSlidingResult double_sliding_field(const SwitchedField& field, const Vec& point) {
  Vec F[2][2];
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) F[a][b] = field.eval(point, {a, b});
  int a0 = field.block_offset[0], b0 = field.block_offset[1];
  auto nA = [&](const Vec& f) { return f[a0] - f[a0 + 1]; };
  auto nB = [&](const Vec& f) { return f[b0] - f[b0 + 1]; };

  auto combine = [&](double wA, double wB) {
    Vec g = (wA * wB) * F[0][0];
    axpy(wA * (1 - wB), F[0][1], g);
    axpy((1 - wA) * wB, F[1][0], g);
    axpy((1 - wA) * (1 - wB), F[1][1], g);
    return g;
  };

  auto residuals = [&](double wA, double wB, double& pA, double& pB) {
    Vec g = combine(wA, wB);
    pA = nA(g);
    pB = nB(g);
  };

  auto newton = [&](double wA, double wB, bool& ok) {
    for (int it = 0; it < 60; ++it) {
      double pA, pB;
      residuals(wA, wB, pA, pB);
      if (std::abs(pA) < 1e-13 && std::abs(pB) < 1e-13) break;
      // d/dwA and d/dwB of the bilinear combination
      Vec dA = wB * F[0][0];
      axpy(1 - wB, F[0][1], dA);
      axpy(-wB, F[1][0], dA);
      axpy(-(1 - wB), F[1][1], dA);
      Vec dB = wA * F[0][0];
      axpy(-wA, F[0][1], dB);
      axpy(1 - wA, F[1][0], dB);
      axpy(-(1 - wA), F[1][1], dB);
      double j11 = nA(dA), j12 = nA(dB), j21 = nB(dA), j22 = nB(dB);
      double det = j11 * j22 - j12 * j21;
      if (std::abs(det) < 1e-16) break;
      wA -= (j22 * pA - j12 * pB) / det;
      wB -= (-j21 * pA + j11 * pB) / det;
      if (wA < -1 || wA > 2 || wB < -1 || wB > 2) break;
    }
    double pA, pB;
    residuals(wA, wB, pA, pB);
    ok = std::abs(pA) < 1e-10 && std::abs(pB) < 1e-10 && wA > -1e-9 && wA < 1 + 1e-9 &&
         wB > -1e-9 && wB < 1 + 1e-9;
    DoubleSlidingResult r;
    r.wA = std::clamp(wA, 0.0, 1.0);
    r.wB = std::clamp(wB, 0.0, 1.0);
    r.residual = std::max(std::abs(pA), std::abs(pB));
    return r;
  };

  bool ok = false;
  DoubleSlidingResult r = newton(0.5, 0.5, ok);
  if (!ok) {
    // coarse grid restart, then polish
    double best = 1e300, bwA = 0.5, bwB = 0.5;
    for (int i = 0; i <= 20; ++i) {
      for (int j = 0; j <= 20; ++j) {
        double wA = i / 20.0, wB = j / 20.0, pA, pB;
        residuals(wA, wB, pA, pB);
        double m = std::max(std::abs(pA), std::abs(pB));
        if (m < best) {
          best = m;
          bwA = wA;
          bwB = wB;
        }
      }
    }
    r = newton(bwA, bwB, ok);
  }
  r.ok = ok;
  r.field = combine(r.wA, r.wB);
  return r;
}

Vec HybridTrajectory::state_at(double tq) const {
  for (const auto& seg : segments) {
    if (seg.t.empty()) continue;
    if (tq > seg.t.back() + 1e-12) continue;
    // first segment containing tq
    auto it = std::lower_bound(seg.t.begin(), seg.t.end(), tq);
    size_t k = size_t(it - seg.t.begin());
    if (k == 0) return seg.states.front();
    double t0 = seg.t[k - 1], t1 = seg.t[k];
    double s = (t1 > t0) ? (tq - t0) / (t1 - t0) : 0.0;
    Vec out = seg.states[k - 1];
    for (size_t i = 0; i < out.size(); ++i)
      out[i] += s * (seg.states[k][i] - seg.states[k - 1][i]);
    return out;
  }
  return final_state;
}

namespace {

// Dormand-Prince 5(4) pair.
struct StepOut {
  Vec y1;
  Vec f1;
  double err = 0;  // scaled error estimate (<= 1 accepted)
};

template <typename F>
StepOut dp45_step(const F& f, const Vec& y0, const Vec& f0, double h, double rtol, double atol) {
  static const double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static const double a21 = 1.0 / 5;
  static const double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static const double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static const double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                      a54 = -212.0 / 729;
  static const double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                      a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  static const double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                      b6 = 11.0 / 84;
  static const double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                      e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
  (void)c2;
  (void)c3;
  (void)c4;
  (void)c5;
  const size_t n = y0.size();
  Vec y(n), k2, k3, k4, k5, k6;
  auto stage = [&](std::initializer_list<std::pair<double, const Vec*>> terms) {
    for (size_t i = 0; i < n; ++i) {
      double s = 0;
      for (auto& [w, k] : terms) s += w * (*k)[i];
      y[i] = y0[i] + h * s;
    }
    return f(y);
  };
  k2 = stage({{a21, &f0}});
  k3 = stage({{a31, &f0}, {a32, &k2}});
  k4 = stage({{a41, &f0}, {a42, &k2}, {a43, &k3}});
  k5 = stage({{a51, &f0}, {a52, &k2}, {a53, &k3}, {a54, &k4}});
  k6 = stage({{a61, &f0}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}});
  StepOut out;
  out.y1.resize(n);
  for (size_t i = 0; i < n; ++i)
    out.y1[i] = y0[i] + h * (b1 * f0[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
  out.f1 = f(out.y1);  // FSAL stage k7
  double err = 0;
  for (size_t i = 0; i < n; ++i) {
    double e = h * (e1 * f0[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] +
                    e7 * out.f1[i]);
    double sc = atol + rtol * std::max(std::abs(y0[i]), std::abs(out.y1[i]));
    err = std::max(err, std::abs(e) / sc);
  }
  out.err = err;
  return out;
}

Vec hermite(const Vec& y0, const Vec& f0, const Vec& y1, const Vec& f1, double h, double s) {
  double s2 = s * s, s3 = s2 * s;
  double h00 = 2 * s3 - 3 * s2 + 1, h10 = s3 - 2 * s2 + s, h01 = -2 * s3 + 3 * s2,
         h11 = s3 - s2;
  Vec out(y0.size());
  for (size_t i = 0; i < y0.size(); ++i)
    out[i] = h00 * y0[i] + h * h10 * f0[i] + h01 * y1[i] + h * h11 * f1[i];
  return out;
}

struct ActiveSurface {
  int block, hi, lo;
};

class HybridIntegrator {
 public:
  HybridIntegrator(const SwitchedField& field, const IntegrateOptions& opt)
      : F(field), opt(opt) {}

  HybridTrajectory run(const Vec& start) {
    y = start;
    t = 0;
    label = F.label_of(y);
    mode = Mode::smooth;
    h = opt.init_step;
    below_since = -1;
    resolve_initial_surfaces();
    open_segment();
    long steps = 0;
    while (t < opt.horizon && !traj.steady && !traj.unresolved_corner && !traj.diverged) {
      if (++steps > opt.max_steps) {
        event("step-budget-exhausted");
        break;
      }
      step();
    }
    close_out();
    return std::move(traj);
  }

 private:
  enum class Mode { smooth, slide1, slide2 };

  const SwitchedField& F;
  IntegrateOptions opt;
  HybridTrajectory traj;
  Vec y;
  double t = 0, h = 1e-3;
  DomainLabel label;          // smooth: domain; slide1: plus-side label; slide2: {0,0} base
  Mode mode = Mode::smooth;
  ActiveSurface surf{0, 0, 1};  // slide1
  double wA = 0.5, wB = 0.5;    // slide2 warm start
  double below_since = -1;

  int idx(int b, int a) const { return F.block_offset[b] + a; }

  void event(const std::string& what) { traj.events.push_back({t, what, y}); }

  void open_segment() {
    TrajectorySegment seg;
    seg.mode = mode == Mode::smooth ? "smooth" : (mode == Mode::slide1 ? "slide1" : "slide2");
    seg.label = label;
    seg.surface_block = mode == Mode::slide1 ? surf.block : -1;
    seg.t.push_back(t);
    seg.states.push_back(y);
    traj.segments.push_back(std::move(seg));
  }

  void record() {
    traj.segments.back().t.push_back(t);
    traj.segments.back().states.push_back(y);
  }

  void close_out() {
    traj.final_time = t;
    traj.final_state = y;
    traj.final_mode =
        mode == Mode::smooth ? "smooth" : (mode == Mode::slide1 ? "slide1" : "slide2");
  }

  // --- field evaluation per mode ---

  DomainLabel minus_label() const {
    DomainLabel l = label;
    l[surf.block] = surf.lo;
    return l;
  }

  Vec rhs(const Vec& x) {
    switch (mode) {
      case Mode::smooth:
        return F.eval(x, label);
      case Mode::slide1: {
        Vec fp = F.eval(x, label);
        Vec fm = F.eval(x, minus_label());
        double hp = fp[idx(surf.block, surf.hi)] - fp[idx(surf.block, surf.lo)];
        double hm = fm[idx(surf.block, surf.hi)] - fm[idx(surf.block, surf.lo)];
        double den = hm - hp;
        double tau = (std::abs(den) < 1e-300) ? 0.5 : hm / den;
        tau = std::clamp(tau, 0.0, 1.0);
        return tau * fp + (1.0 - tau) * fm;
      }
      case Mode::slide2: {
        DoubleSlidingResult r = double_sliding_field(F, x);
        return r.field;
      }
    }
    return Vec(F.dim, 0.0);
  }

  void project() {
    if (mode == Mode::slide1) {
      double m = 0.5 * (y[idx(surf.block, surf.hi)] + y[idx(surf.block, surf.lo)]);
      y[idx(surf.block, surf.hi)] = m;
      y[idx(surf.block, surf.lo)] = m;
    } else if (mode == Mode::slide2) {
      for (int b = 0; b < 2; ++b) {
        double m = 0.5 * (y[idx(b, 0)] + y[idx(b, 1)]);
        y[idx(b, 0)] = m;
        y[idx(b, 1)] = m;
      }
    }
  }

  // Event functions that must stay >= 0 in the current mode.
  // Returns pairs (value, descriptor).
  struct EventFn {
    int block, a;  // theta[block, ref] - theta[block, a] with ref the greedy entry
    int ref;
  };

  std::vector<EventFn> event_fns() const {
    std::vector<EventFn> out;
    for (int b = 0; b < F.blocks(); ++b) {
      if (mode != Mode::smooth) {
        if (mode == Mode::slide2) continue;  // 2x2 blocks, both tied
        if (mode == Mode::slide1 && b == surf.block) {
          // third actions catching up with the tied pair
          for (int a = 0; a < F.block_dim[b]; ++a)
            if (a != surf.hi && a != surf.lo) out.push_back({b, a, surf.hi});
          continue;
        }
      }
      for (int a = 0; a < F.block_dim[b]; ++a)
        if (a != label[b]) out.push_back({b, a, label[b]});
    }
    return out;
  }

  double eval_event(const EventFn& e, const Vec& x) const {
    return x[idx(e.block, e.ref)] - x[idx(e.block, e.a)];
  }

  // --- stepping ---

  void step() {
    Vec f0 = rhs(y);
    if (check_steady_and_divergence(f0)) return;

    StepOut so;
    double used_h = h;
    for (int tries = 0; tries < 60; ++tries) {
      used_h = std::min(h, std::min(opt.max_step, opt.horizon - t + 1e-12));
      so = dp45_step([this](const Vec& x) { return rhs(x); }, y, f0, used_h, opt.rtol, opt.atol);
      if (so.err <= 1.0 || used_h <= 1e-13) break;
      h = std::max(1e-13, 0.9 * used_h * std::pow(so.err, -0.2));
    }
    double grow = (so.err > 0) ? 0.9 * std::pow(so.err, -0.2) : 5.0;
    h = std::clamp(used_h * std::clamp(grow, 0.2, 5.0), 1e-13, opt.max_step);

    // event scan over the step via Hermite dense output
    auto evs = event_fns();
    double s_min = 2.0;
    int hit = -1;
    for (size_t i = 0; i < evs.size(); ++i) {
      double v1 = eval_event(evs[i], so.y1);
      if (v1 < -opt.event_tol) {
        double v0 = eval_event(evs[i], y);
        double s = locate(evs[i], f0, so, used_h, std::max(v0, 0.0));
        if (s < s_min) {
          s_min = s;
          hit = int(i);
        }
      }
    }

    if (hit < 0) {
      t += used_h;
      y = so.y1;
      project();
      record();
      post_step_monitors();
      return;
    }

    // boundary hit
    t += s_min * used_h;
    y = hermite(y, f0, so.y1, so.f1, used_h, s_min);
    // land exactly on the tie
    {
      const auto& e = evs[hit];
      double m = 0.5 * (y[idx(e.block, e.ref)] + y[idx(e.block, e.a)]);
      y[idx(e.block, e.ref)] = m;
      y[idx(e.block, e.a)] = m;
    }
    project();
    record();
    handle_boundary(evs[hit]);
    h = std::max(h * 0.5, 1e-6);
  }

  double locate(const EventFn& e, const Vec& f0, const StepOut& so, double used_h, double) {
    double lo = 0.0, hi_s = 1.0;
    for (int it = 0; it < 90; ++it) {
      double mid = 0.5 * (lo + hi_s);
      double v = eval_event(e, hermite(y, f0, so.y1, so.f1, used_h, mid));
      if (v > 0)
        lo = mid;
      else
        hi_s = mid;
      if (hi_s - lo < 1e-15) break;
    }
    return hi_s;
  }

  bool check_steady_and_divergence(const Vec& f0) {
    if (!std::isfinite(norm_inf(y)) || norm_inf(y) > 1e9) {
      traj.diverged = true;
      event("diverged");
      return true;
    }
    if (norm_inf(f0) < opt.ss_tol) {
      if (below_since < 0) below_since = t;
      if (t - below_since >= opt.ss_dwell) {
        traj.steady = true;
        traj.pseudo = (mode != Mode::smooth);
        event(mode == Mode::smooth ? "steady-state" : "pseudo-steady-state");
        return true;
      }
      // crawl forward through the dwell window
      h = std::min(h, opt.ss_dwell);
    } else {
      below_since = -1;
    }
    return false;
  }

  void post_step_monitors() {
    if (mode == Mode::slide1) {
      Vec fp = F.eval(y, label);
      Vec fm = F.eval(y, minus_label());
      double hp = fp[idx(surf.block, surf.hi)] - fp[idx(surf.block, surf.lo)];
      double hm = fm[idx(surf.block, surf.hi)] - fm[idx(surf.block, surf.lo)];
      double den = hm - hp;
      double tau = (std::abs(den) < 1e-300) ? 0.5 : hm / den;
      if (tau >= 1.0 - opt.tau_margin) {
        event("sliding-exit-plus");
        mode = Mode::smooth;  // label already the plus side
        open_segment();
      } else if (tau <= opt.tau_margin) {
        event("sliding-exit-minus");
        label = minus_label();
        mode = Mode::smooth;
        open_segment();
      }
    } else if (mode == Mode::slide2) {
      // double sliding persists only while the intersection attracts from all
      // four domains; the weights can stay interior past that point
      Codim2Report c2 = classify_codim2(F, y);
      if (!c2.nodal) {
        event("double-sliding-detached");
        resolve_corner();
        return;
      }
      DoubleSlidingResult r = double_sliding_field(F, y);
      wA = r.wA;
      wB = r.wB;
      if (!r.ok) {
        event("double-sliding-lost");
        resolve_corner();
        return;
      }
      bool exitA = r.wA <= opt.tau_margin || r.wA >= 1 - opt.tau_margin;
      bool exitB = r.wB <= opt.tau_margin || r.wB >= 1 - opt.tau_margin;
      if (exitA && exitB) {
        label = {r.wA >= 0.5 ? 0 : 1, r.wB >= 0.5 ? 0 : 1};
        mode = Mode::smooth;
        event("double-sliding-exit-both");
        open_segment();
      } else if (exitA) {
        label = {r.wA >= 0.5 ? 0 : 1, 0};
        surf = {1, 0, 1};
        mode = Mode::slide1;
        event("double-sliding-exit-A");
        open_segment();
      } else if (exitB) {
        label = {0, r.wB >= 0.5 ? 0 : 1};
        surf = {0, 0, 1};
        mode = Mode::slide1;
        event("double-sliding-exit-B");
        open_segment();
      }
    }
  }

  // --- boundary and corner handling ---

  void handle_boundary(const EventFn& e) {
    // Count surfaces active at the current point.
    std::vector<ActiveSurface> active;
    for (int b = 0; b < F.blocks(); ++b) {
      // tied top pair of block b, if any
      int top = 0;
      for (int a = 1; a < F.block_dim[b]; ++a)
        if (y[idx(b, a)] > y[idx(b, top)]) top = a;
      for (int a = 0; a < F.block_dim[b]; ++a)
        if (a != top && std::abs(y[idx(b, a)] - y[idx(b, top)]) <= opt.event_tol)
          active.push_back({b, std::min(top, a), std::max(top, a)});
    }
    bool slide_here = mode != Mode::smooth;
    if (mode == Mode::slide1) {
      // our own tied pair is active by construction; drop it from the list
      std::erase_if(active, [&](const ActiveSurface& s) {
        return s.block == surf.block && s.hi == std::min(surf.hi, surf.lo) &&
               s.lo == std::max(surf.hi, surf.lo);
      });
    }
    if (int(active.size()) >= 2 || (slide_here && !active.empty())) {
      // more than one tie somewhere, or a second tie while sliding: corner
      if (F.blocks() == 2 && F.block_dim[0] == 2 && F.block_dim[1] == 2) {
        event("corner");
        resolve_corner();
      } else {
        traj.unresolved_corner = true;
        event("unresolved-corner");
      }
      return;
    }
    if (active.empty()) {
      // grazed and recovered; keep going
      return;
    }
    // plain codimension-1 hit
    ActiveSurface s = active.front();
    int came_from = (mode == Mode::smooth) ? label[s.block] : e.ref;
    int other = (s.hi == came_from) ? s.lo : s.hi;
    SwitchingSurface sw;
    sw.block = s.block;
    sw.hi = came_from;
    sw.lo = other;
    sw.plus_label = label;
    sw.plus_label[s.block] = came_from;
    sw.minus_label = label;
    sw.minus_label[s.block] = other;
    BoundaryReport rep = classify_boundary(F, sw, y, 0.0);
    switch (rep.kind) {
      case BoundaryKind::sliding:
        surf = {s.block, came_from, other};
        label = sw.plus_label;
        mode = Mode::slide1;
        event("sliding-entry");
        open_segment();
        break;
      case BoundaryKind::crossing:
        if (rep.n_plus < 0) {
          label = sw.minus_label;
          event("crossing");
        } else {
          // pushes back into the side we came from
          label = sw.plus_label;
          event("grazing");
        }
        mode = Mode::smooth;
        open_segment();
        break;
      case BoundaryKind::repulsive:
        // cannot arrive at a repulsive point from the plus side; treat as
        // staying on the incoming side
        label = sw.plus_label;
        mode = Mode::smooth;
        event("repulsive-touch");
        open_segment();
        break;
      case BoundaryKind::degenerate:
        event("degenerate-tangency");
        // pick the side whose field is consistent, default to the far side
        label = (rep.n_minus < 0) ? sw.minus_label : sw.plus_label;
        mode = Mode::smooth;
        open_segment();
        break;
    }
  }

  // Corner of a 4-D two-block system: both blocks tied.
  void resolve_corner() {
    for (int b = 0; b < 2; ++b) {
      double m = 0.5 * (y[idx(b, 0)] + y[idx(b, 1)]);
      y[idx(b, 0)] = m;
      y[idx(b, 1)] = m;
    }
    Codim2Report rep = classify_codim2(F, y);
    if (rep.nodal) {
      mode = Mode::slide2;
      label = {0, 0};
      event("double-sliding-entry");
      open_segment();
      return;
    }
    const double tol = 1e-12;
    auto cdot = [&](int b, const Vec& f) { return f[idx(b, 0)] - f[idx(b, 1)]; };
    // candidate smooth exits
    std::vector<DomainLabel> smooth_cands;
    for (int a = 0; a < 2; ++a) {
      for (int b = 0; b < 2; ++b) {
        Vec f = F.eval(y, {a, b});
        double ca = cdot(0, f), cb = cdot(1, f);
        bool inA = (a == 0) ? ca > tol : ca < -tol;
        bool inB = (b == 0) ? cb > tol : cb < -tol;
        if (inA && inB) smooth_cands.push_back({a, b});
      }
    }
    // candidate single-surface slides
    struct SlideCand {
      int block;     // sliding block
      int other_lab;  // fixed label of the other block
    };
    std::vector<SlideCand> slide_cands;
    for (int sb = 0; sb < 2; ++sb) {
      int ob = 1 - sb;
      for (int l = 0; l < 2; ++l) {
        DomainLabel lp(2), lm(2);
        lp[sb] = 0;
        lm[sb] = 1;
        lp[ob] = l;
        lm[ob] = l;
        Vec fp = F.eval(y, lp), fm = F.eval(y, lm);
        double hp = cdot(sb, fp), hm = cdot(sb, fm);
        if (!(hp < -tol && hm > tol)) continue;
        double tau = hm / (hm - hp);
        Vec g = tau * fp + (1 - tau) * fm;
        double drift = cdot(ob, g);
        bool consistent = (l == 0) ? drift > tol : drift < -tol;
        if (consistent) slide_cands.push_back({sb, l});
      }
    }
    if (smooth_cands.size() + slide_cands.size() == 1) {
      if (!smooth_cands.empty()) {
        label = smooth_cands.front();
        mode = Mode::smooth;
        event("corner-exit-smooth");
      } else {
        auto c = slide_cands.front();
        surf = {c.block, 0, 1};
        label = DomainLabel(2);
        label[c.block] = 0;
        label[1 - c.block] = c.other_lab;
        mode = Mode::slide1;
        event("corner-exit-sliding");
      }
      open_segment();
      return;
    }
    if (!slide_cands.empty()) {
      // ambiguous but a sliding branch exists: prefer the first and flag it
      auto c = slide_cands.front();
      surf = {c.block, 0, 1};
      label = DomainLabel(2);
      label[c.block] = 0;
      label[1 - c.block] = c.other_lab;
      mode = Mode::slide1;
      event("corner-exit-sliding-ambiguous");
      open_segment();
      return;
    }
    if (!smooth_cands.empty()) {
      label = smooth_cands.front();
      mode = Mode::smooth;
      event("corner-exit-smooth-ambiguous");
      open_segment();
      return;
    }
    traj.unresolved_corner = true;
    event("unresolved-corner");
  }

  void resolve_initial_surfaces() {
    // Start on one or more surfaces: classify before integrating.
    std::vector<ActiveSurface> active;
    for (int b = 0; b < F.blocks(); ++b) {
      int top = label[b];
      for (int a = 0; a < F.block_dim[b]; ++a)
        if (a != top && std::abs(y[idx(b, a)] - y[idx(b, top)]) <= opt.event_tol)
          active.push_back({b, top, a});
    }
    if (active.empty()) return;
    if (int(active.size()) > 1) {
      if (F.blocks() == 2 && F.block_dim[0] == 2 && F.block_dim[1] == 2) {
        resolve_corner();
        if (!traj.segments.empty()) traj.segments.pop_back();  // reopened below
      } else {
        traj.unresolved_corner = true;
      }
      return;
    }
    ActiveSurface s = active.front();
    SwitchingSurface sw;
    sw.block = s.block;
    sw.hi = s.hi;
    sw.lo = s.lo;
    sw.plus_label = label;
    sw.plus_label[s.block] = s.hi;
    sw.minus_label = label;
    sw.minus_label[s.block] = s.lo;
    BoundaryReport rep = classify_boundary(F, sw, y, 0.0);
    switch (rep.kind) {
      case BoundaryKind::sliding:
        surf = {s.block, s.hi, s.lo};
        label = sw.plus_label;
        mode = Mode::slide1;
        break;
      case BoundaryKind::crossing:
        label = (rep.n_plus > 0) ? sw.plus_label : sw.minus_label;
        break;
      case BoundaryKind::repulsive:
        // documented rule: perturb toward the plus side by the event tolerance
        y[idx(s.block, s.hi)] += opt.event_tol;
        traj.events.push_back({0.0, "repulsive-start-perturbed", y});
        label = sw.plus_label;
        break;
      case BoundaryKind::degenerate:
        label = sw.plus_label;
        break;
    }
  }
};

}  // namespace

HybridTrajectory integrate(const SwitchedField& field, const Vec& start,
                           const IntegrateOptions& opt) {
  HybridIntegrator hi(field, opt);
  return hi.run(start);
}

Vec SampledPath::state_at(double tq) const {
  if (t.empty()) return {};
  auto it = std::lower_bound(t.begin(), t.end(), tq);
  size_t k = size_t(it - t.begin());
  if (k == 0) return states.front();
  if (k >= t.size()) return states.back();
  double t0 = t[k - 1], t1 = t[k];
  double s = (t1 > t0) ? (tq - t0) / (t1 - t0) : 0.0;
  Vec out = states[k - 1];
  for (size_t i = 0; i < out.size(); ++i) out[i] += s * (states[k][i] - states[k - 1][i]);
  return out;
}

SampledPath integrate_chatter(const SwitchedField& field, const Vec& start, double dt,
                              double horizon, int record_stride) {
  if (dt <= 0 || horizon <= 0 || record_stride < 1)
    throw std::invalid_argument("bad chatter-integration parameters");
  SampledPath path;
  Vec y = start;
  path.t.push_back(0);
  path.states.push_back(y);
  long steps = long(std::ceil(horizon / dt));
  const int dim = field.dim;

  // The step count is large, so probe for a flattened affine table: for each
  // label, b = F(0) and the columns of A follow from unit-vector probes. One
  // extra probe at `start` confirms affinity; any mismatch falls back to the
  // generic eval path.
  long nlab = 1;
  for (int b = 0; b < field.blocks(); ++b) nlab *= field.block_dim[b];
  std::vector<double> tabA, tabB;
  bool fast = nlab <= 256;
  if (fast) {
    tabA.resize(size_t(nlab) * dim * dim);
    tabB.resize(size_t(nlab) * dim);
    for (long li = 0; li < nlab && fast; ++li) {
      DomainLabel lab(field.blocks());
      long rem = li;
      for (int b = field.blocks() - 1; b >= 0; --b) {
        lab[b] = int(rem % field.block_dim[b]);
        rem /= field.block_dim[b];
      }
      Vec zero(dim, 0.0);
      Vec base = field.eval(zero, lab);
      for (int i = 0; i < dim; ++i) tabB[size_t(li) * dim + i] = base[i];
      for (int j = 0; j < dim; ++j) {
        Vec e(dim, 0.0);
        e[j] = 1.0;
        Vec col = field.eval(e, lab);
        for (int i = 0; i < dim; ++i) tabA[(size_t(li) * dim + i) * dim + j] = col[i] - base[i];
      }
      Vec probe = field.eval(start, lab);
      for (int i = 0; i < dim; ++i) {
        double acc = tabB[size_t(li) * dim + i];
        for (int j = 0; j < dim; ++j) acc += tabA[(size_t(li) * dim + i) * dim + j] * start[j];
        if (std::abs(acc - probe[i]) > 1e-9 * (1.0 + std::abs(probe[i]))) fast = false;
      }
    }
  }

  if (fast) {
    std::vector<double> st(y.begin(), y.end()), k1(dim), k2(dim), k3(dim), k4(dim), tmp(dim);
    auto f = [&](const std::vector<double>& x, std::vector<double>& out) {
      long li = 0;
      for (int b = 0; b < field.blocks(); ++b) {
        int best = 0;
        const int off = field.block_offset[b];
        for (int a = 1; a < field.block_dim[b]; ++a)
          if (x[off + a] > x[off + best]) best = a;
        li = li * field.block_dim[b] + best;
      }
      const double* A = &tabA[size_t(li) * dim * dim];
      const double* bb = &tabB[size_t(li) * dim];
      for (int i = 0; i < dim; ++i) {
        double acc = bb[i];
        for (int j = 0; j < dim; ++j) acc += A[i * dim + j] * x[j];
        out[i] = acc;
      }
    };
    for (long k = 0; k < steps; ++k) {
      f(st, k1);
      for (int i = 0; i < dim; ++i) tmp[i] = st[i] + 0.5 * dt * k1[i];
      f(tmp, k2);
      for (int i = 0; i < dim; ++i) tmp[i] = st[i] + 0.5 * dt * k2[i];
      f(tmp, k3);
      for (int i = 0; i < dim; ++i) tmp[i] = st[i] + dt * k3[i];
      f(tmp, k4);
      for (int i = 0; i < dim; ++i)
        st[i] += dt * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) / 6.0;
      if ((k + 1) % record_stride == 0 || k + 1 == steps) {
        path.t.push_back((k + 1) * dt);
        path.states.push_back(Vec(st.begin(), st.end()));
      }
    }
    return path;
  }

  auto f = [&](const Vec& x) { return field.eval(x, field.label_of(x)); };
  for (long k = 0; k < steps; ++k) {
    Vec k1 = f(y);
    Vec k2 = f(y + (0.5 * dt) * k1);
    Vec k3 = f(y + (0.5 * dt) * k2);
    Vec k4 = f(y + dt * k3);
    axpy(dt / 6.0, k1, y);
    axpy(dt / 3.0, k2, y);
    axpy(dt / 3.0, k3, y);
    axpy(dt / 6.0, k4, y);
    if ((k + 1) % record_stride == 0 || k + 1 == steps) {
      path.t.push_back((k + 1) * dt);
      path.states.push_back(y);
    }
  }
  return path;
}

}  // namespace learndyn
