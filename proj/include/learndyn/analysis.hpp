#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "learndyn/filippov.hpp"
#include "learndyn/fluid.hpp"
#include "learndyn/game.hpp"
#include "learndyn/util.hpp"

namespace learndyn {

// ---------------------------------------------------------------------------
// Contribution-game closed forms (symmetric 2-D reduction)

struct PDSteadyStateReport {
  double g = 0, epsilon = 0, gamma = 0;
  Vec q_eq_D;                    // (Q_C, Q_D)
  std::optional<Vec> q_eq_C;     // symmetric pseudo-steady-state, iff it exists
  double epsilon_threshold = 0;  // eps_bar(g)
  std::optional<double> tau_at_C;
  bool exists_C = false;
};

double epsilon_threshold(double g);  // 1 - sqrt((2-g)/g)

PDSteadyStateReport pd_steady_states(double g, double epsilon, double gamma);

/// Affine pieces of the symmetric 2-D reduction, state (Q_C, Q_D).
struct SymmetricPieces {
  Mat A_C, A_D;
  Vec b_C, b_D;
};
SymmetricPieces symmetric_pd_pieces(double g, double epsilon, double gamma, double alpha);

/// Scalar sliding field on the symmetric diagonal, evaluated at Q_C = Q_D = q.
double symmetric_sliding_rate(double g, double epsilon, double gamma, double alpha, double q);

/// Switched view of the symmetric 2-D reduction (one 2-action block).
SwitchedField symmetric_pd_field(double g, double epsilon, double gamma, double alpha);

/// Symmetric 2-D reduction for the general normalized game (payoffs 1, 0, x, y).
SwitchedField symmetric_general_pd_field(double x, double y, double epsilon, double gamma,
                                         double alpha);

// ---------------------------------------------------------------------------
// General-parameter region (normalized payoffs)

struct RegionVerdict {
  double x = 0, y = 0, epsilon = 0;
  bool inside = false;
  std::array<double, 3> slacks{};  // x upper bound, y lower, y upper
};

RegionVerdict pd_region_general(double x, double y, double epsilon);

// ---------------------------------------------------------------------------
// Basins of attraction

struct BasinMap {
  std::vector<Vec> points;
  std::vector<int> labels;  // index into `targets`; -1 unresolved
  std::vector<Vec> targets;
};

BasinMap basins(const SwitchedField& field, const std::vector<Vec>& inits,
                const std::vector<Vec>& targets, double radius, const IntegrateOptions& opt);

// ---------------------------------------------------------------------------
// Bertrand stationary structure (two-price model, gamma = 0)

enum class Updating { async, sync };

struct BertrandReport {
  Updating updating;
  double competitive_value = 0;      // stationary estimate of the low price
  double collusive_value = 0;        // stationary estimate of the high price (async)
  bool collusive_set_exists = false; // async: frozen-off-action stationary set
  Vec sync_attractor;                // sync: global attractor (Q_low, Q_high)
  std::vector<int> grid_predicted;   // grid model: surviving price indices
};

BertrandReport bertrand_structure(BertrandModel model, Updating updating);

// ---------------------------------------------------------------------------
// Coupling-rate witnesses (constant-rate greedy reinforcers, U(theta, r) = r - theta)

struct CouplingWitness {
  double alpha = 0;   // learning weight of the greedy action
  double theta = 0;   // tied estimate at the pseudo-steady-state
  double tau = 0;     // local time on the cooperative side
  double residual = 0;
  double sliding_slack = 0;  // tau*U(CC) + (1-tau)*U(DD), must be <= 0
  bool regions_ok = false;   // U(DC) > U(CC) >= 0 > U(DD) > U(CD)
};

std::vector<CouplingWitness> find_coupling_rates(double x, double y, int tau_grid = 199);

/// 2-D switched field of the constant-rate greedy reinforcer pair used by the
/// witness construction (symmetric subspace, U(theta,r) = r - theta, V = 0).
SwitchedField coupling_witness_field(double x, double y, double alpha);

// ---------------------------------------------------------------------------
// Dominance learning

enum class VerifyMode { fluid, discrete };

/// Per-agent verdict that the dominant action's estimate becomes and stays
/// maximal (fluid mode integrates; discrete mode simulates).
std::vector<bool> verify_dominance_learning(const Game& game,
                                            const std::vector<ReinforcerSpec>& specs,
                                            const ActionProfile& dominant, VerifyMode mode,
                                            uint64_t seed = 1);

// ---------------------------------------------------------------------------
// Chaos diagnostics (4-D asymmetric system)

struct ChaosReport {
  double divergence_slope = 0;   // least-squares slope of log10 separation
  double saturation_time = 0;
  double min_separation = 0;
  double max_separation = 0;
  double orders_grown = 0;       // log10(max/min) within the growth window
  double center_occupancy = 0;   // fraction of time with both |Q_C - Q_D| <= cell
  bool truncated = false;
};

/// Integrates a base and a perturbed trajectory with the chattering
/// integrator, fits the exponential growth rate of their separation over the
/// window between the pre-saturation minimum and the first time separation
/// reaches 1% of the attractor diameter, and accumulates occupancy of the
/// center cell in difference space. The step must be fine enough that a
/// branch decision near a switching surface can feel the perturbation;
/// coarse steps quantize those decisions and the two runs merge.
ChaosReport chaos_diagnostics(const SwitchedField& field4, const Vec& init, double perturbation,
                              double horizon, double cell = 0.2, double dt = 1e-4);

}  // namespace learndyn
