#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "learndyn/fluid.hpp"
#include "learndyn/util.hpp"

namespace learndyn {

/// Switching surface between two adjacent greedy domains: the locus where
/// block `block` ties actions `hi` and `lo`. The normal c = e_{block,hi} -
/// e_{block,lo} points into the plus side (hi strictly greedy).
struct SwitchingSurface {
  int block = 0;
  int hi = 0;
  int lo = 1;
  DomainLabel plus_label;   // label with hi greedy in `block`
  DomainLabel minus_label;  // same label with lo greedy

  Vec normal(int dim, const std::vector<int>& block_offset) const {
    Vec c(dim, 0.0);
    c[block_offset[block] + hi] = 1.0;
    c[block_offset[block] + lo] = -1.0;
    return c;
  }
};

enum class BoundaryKind { crossing, repulsive, sliding, degenerate };

struct BoundaryReport {
  BoundaryKind kind = BoundaryKind::degenerate;
  double n_plus = 0;   // c . F_plus
  double n_minus = 0;  // c . F_minus
  std::optional<Vec> sliding_field;
  std::optional<double> tau;  // weight on the plus-side field
};

BoundaryReport classify_boundary(const SwitchedField& field, const SwitchingSurface& surface,
                                 const Vec& point, double tol = 1e-9);

/// Tangent convex combination tau*F_plus + (1-tau)*F_minus with
/// tau = c.F_minus / (c.F_minus - c.F_plus). Requires a sliding point.
std::pair<Vec, double> sliding_field(const SwitchedField& field, const SwitchingSurface& surface,
                                     const Vec& point);

struct TrajectorySegment {
  std::string mode;  // "smooth", "slide1", "slide2"
  DomainLabel label;           // domain label; for slide1, the plus-side label
  int surface_block = -1;      // active surface block (slide1)
  std::vector<double> t;
  std::vector<Vec> states;
};

struct TrajectoryEvent {
  double t = 0;
  std::string what;
  Vec state;
};

struct HybridTrajectory {
  std::vector<TrajectorySegment> segments;
  std::vector<TrajectoryEvent> events;
  bool steady = false;
  bool pseudo = false;             // steady state with an argmax tie (on a surface)
  bool unresolved_corner = false;
  bool diverged = false;
  double final_time = 0;
  Vec final_state;
  std::string final_mode;

  /// Piecewise-linear interpolation of the recorded samples.
  Vec state_at(double t) const;
};

struct IntegrateOptions {
  double horizon = 2e4;
  double rtol = 1e-9;
  double atol = 1e-11;
  double max_step = 50.0;
  double init_step = 1e-3;
  double event_tol = 1e-10;   // absolute tolerance on the event functions
  double ss_tol = 1e-10;      // steady-state norm threshold
  double ss_dwell = 1.0;      // time the norm must stay below ss_tol
  double tau_margin = 1e-8;   // sliding exit when tau leaves [m, 1-m]
  long max_steps = 20000000;
};

HybridTrajectory integrate(const SwitchedField& field, const Vec& start,
                           const IntegrateOptions& opt = {});

/// Codimension-2 analysis for two 2-action blocks (4-D systems). Conditions
/// are the eight sign constraints making the intersection of both switching
/// surfaces nodally attractive; slack > 0 means satisfied.
struct Codim2Report {
  bool nodal = false;
  std::array<double, 4> nA;      // N^A . F_{a,b} over labels (a,b) row-major
  std::array<double, 4> nB;
  std::array<double, 8> slack;
};

Codim2Report classify_codim2(const SwitchedField& field, const Vec& point);

struct DoubleSlidingResult {
  bool ok = false;
  Vec field;
  double wA = 0.5, wB = 0.5;  // weights on the action-0 side of each block
  double residual = 0;
};

/// Solves the bilinear 2x2 system for the convex weights that make the
/// combined field tangent to both surfaces.
DoubleSlidingResult double_sliding_field(const SwitchedField& field, const Vec& point);

struct SampledPath {
  std::vector<double> t;
  std::vector<Vec> states;

  Vec state_at(double tq) const;  // linear interpolation
};

/// Fixed-step RK4 on the switched field with the greedy label re-read at every
/// evaluation. There is no sliding-mode resolution; trajectories chatter
/// across attractive surfaces at the step scale. Past points where the
/// Filippov continuation stops being unique this is the faithful picture of
/// the dynamics, and it is what the chaos diagnostics consume.
SampledPath integrate_chatter(const SwitchedField& field, const Vec& start, double dt,
                              double horizon, int record_stride = 1);

}  // namespace learndyn
