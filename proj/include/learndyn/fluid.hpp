#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include <nlohmann/json.hpp>

#include "learndyn/game.hpp"
#include "learndyn/reinforcer.hpp"
#include "learndyn/util.hpp"

namespace learndyn {

/// One greedy action per agent. Each label names a maximal continuity domain
/// of the stacked estimate space.
using DomainLabel = std::vector<int>;

struct FieldPiece {
  DomainLabel label;
  bool affine = false;
  Mat A;
  Vec b;
  std::function<Vec(const Vec&)> eval_fn;  // set iff !affine

  Vec eval(const Vec& theta) const {
    if (affine) return A.apply(theta) + b;
    return eval_fn(theta);
  }
};

/// Generic switched-system view consumed by the hybrid integrator. The state
/// splits into per-block estimate vectors; a label picks the greedy action of
/// each block and thereby one smooth field.
struct SwitchedField {
  int dim = 0;
  std::vector<int> block_offset;
  std::vector<int> block_dim;
  std::function<Vec(const Vec&, const DomainLabel&)> eval;

  int blocks() const { return int(block_dim.size()); }

  /// Greedy action per block, ties toward the lower index.
  DomainLabel label_of(const Vec& theta) const {
    DomainLabel lab(blocks());
    for (int b = 0; b < blocks(); ++b) {
      int best = 0;
      for (int a = 1; a < block_dim[b]; ++a)
        if (theta[block_offset[b] + a] > theta[block_offset[b] + best]) best = a;
      lab[b] = best;
    }
    return lab;
  }

  double entry(const Vec& theta, int block, int action) const {
    return theta[block_offset[block] + action];
  }
};

/// Piecewise-affine (or piecewise-smooth, for custom reinforcers) fluid field
/// of a profile of separable reinforcers playing a game. Pieces are built
/// lazily per visited domain and cached; copies share the cache.
class PiecewiseField {
 public:
  Game game;
  std::vector<ReinforcerSpec> specs;
  int dim = 0;
  std::vector<int> block_offset;
  std::vector<int> block_dim;

  const FieldPiece& piece(const DomainLabel& label) const;
  Vec eval(const Vec& theta, const DomainLabel& label) const { return piece(label).eval(theta); }
  DomainLabel greedy_label(const Vec& theta) const;
  SwitchedField switched() const;

  /// Matrices/vectors per domain label. Builds every piece when the number of
  /// domains is small; otherwise exports only the pieces already visited.
  nlohmann::json to_json() const;

 private:
  struct Cache {
    std::mutex mu;
    std::map<DomainLabel, FieldPiece> pieces;
  };
  FieldPiece build_piece(const DomainLabel& label) const;
  std::shared_ptr<Cache> cache_ = std::make_shared<Cache>();
};

/// Requires every spec separable and exact expected payoffs on the game.
/// Expectations over opponents are computed by exact enumeration of action
/// profiles, never by sampling.
PiecewiseField build_field(const Game& game, const std::vector<ReinforcerSpec>& specs);

struct FieldCheckReport {
  Vec mean_dev;   // sample mean of one-step updates minus field value
  Vec std_err;    // per-component standard error
  double max_abs_dev = 0;
  double max_sigmas = 0;
  int samples = 0;
};

/// Monte Carlo check that the field equals the expected one-step discrete
/// update at an interior point of its continuity domain.
FieldCheckReport verify_field_monte_carlo(const PiecewiseField& field, const Vec& point,
                                          int samples, uint64_t seed);

struct JumpPath {
  std::vector<double> t;        // arrival times, t[0] = 0
  std::vector<Vec> theta;       // state after the jump at t[k]
};

/// Poissonized, scaled jump process: clock rate n, each round's update divided
/// by n. The n=1 path visits the state sequence of the discrete simulator
/// under the same seed.
JumpPath simulate_scaled_process(const Game& game, const std::vector<ReinforcerSpec>& specs,
                                 int n, double horizon, uint64_t seed,
                                 const std::vector<Vec>& init);

}  // namespace learndyn
