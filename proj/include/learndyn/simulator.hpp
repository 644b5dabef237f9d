#pragma once

#include <functional>
#include <vector>

#include <nlohmann/json.hpp>

#include "learndyn/game.hpp"
#include "learndyn/reinforcer.hpp"
#include "learndyn/util.hpp"

namespace learndyn {

struct EpisodeConfig {
  long iterations = 100000;
  uint64_t seed = 1;
  long record_window = 0;    // 0: trailing 20% of iterations
  long snapshot_stride = 100;

  long window(long iters) const {
    long w = record_window > 0 ? record_window : iters / 5;
    return std::min(w, iters);
  }
};

struct EpisodeResult {
  std::vector<std::vector<Vec>> theta_trace;  // per agent, sampled at the stride
  std::vector<long> snapshot_iters;
  std::vector<long> window_counts;  // per profile, trailing window
  std::vector<long> total_counts;   // per profile, full run
  std::vector<int> learned_actions;  // per agent; -1 when argmax does not persist
  Vec local_time;  // per agent: fraction of window with theta[0] >= theta[1] (2 actions)
  std::vector<Vec> final_theta;
  long iterations = 0;
  bool diverged = false;

  bool nash_played_majority(const Game& game, const ActionProfile& nash) const;
};

EpisodeResult run_episode(const Game& game, const std::vector<ReinforcerSpec>& specs,
                          const EpisodeConfig& config);

enum class LearnVerdict { learned, not_learned, undetermined };

/// "Learned" iff the action is in the argmax set at every recorded point.
LearnVerdict detect_learning(const std::vector<Vec>& trace_window, int action);

struct SweepCell {
  nlohmann::json params;
  int seeds = 0;
  int failures = 0;
  double nash_fraction = 0;
  double mean_local_time = 0;
  double se_local_time = 0;
  double learned_fraction = 0;  // all agents persisted on some action
};

struct SweepResult {
  std::vector<SweepCell> cells;
  std::string csv() const;
};

/// Runs seeds_per_cell episodes per grid point, in parallel. `make` builds the
/// game and agent specs for one grid point; `nash` is the profile whose
/// majority play defines the "learned Nash" fraction (empty: skip).
SweepResult sweep(
    const std::function<std::pair<Game, std::vector<ReinforcerSpec>>(const nlohmann::json&)>& make,
    const std::vector<nlohmann::json>& grid, int seeds_per_cell, const EpisodeConfig& base,
    const ActionProfile& nash, int jobs = 0);

}  // namespace learndyn
