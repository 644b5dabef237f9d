#pragma once

#include <functional>
#include <optional>
#include <random>
#include <vector>

#include <nlohmann/json.hpp>

#include "learndyn/game.hpp"
#include "learndyn/util.hpp"

namespace learndyn {

enum class UpdateFamily { q_async, q_sync, separable_custom };

/// Custom separable update family: fluid increment per action is
/// alpha_a(theta) * [U(theta_a, E r(a)) + V(theta)]. Monotonicity of U
/// (increasing in reward, decreasing in theta_a) is validated numerically
/// when the spec is constructed through validate().
struct SeparableCustom {
  std::function<double(double theta_a, double expected_reward)> U;
  std::function<double(const Vec& theta)> V;
  // alpha_a given the greedy action; taking the greedy action explicitly keeps
  // the rates evaluable on either side of an argmax tie.
  std::function<Vec(const Vec& theta, int greedy)> rates;
  // Sampling box used for the numeric monotonicity check.
  double theta_lo = -10, theta_hi = 10;
  double reward_lo = -10, reward_hi = 10;
};

struct ReinforcerSpec {
  UpdateFamily family = UpdateFamily::q_async;
  double alpha = 0.05;
  double gamma = 0.9;
  double epsilon = 0.1;
  std::optional<Vec> init;           // explicit initial theta; else optimistic rule
  bool deterministic_ties = false;   // debug only: break argmax ties toward low index
  std::optional<SeparableCustom> custom;

  void validate() const;
  bool synchronous() const { return family == UpdateFamily::q_sync; }
};

struct AgentState {
  Vec theta;
  int last_action = -1;
  std::mt19937_64 rng;
};

/// Optimistic default initialization: (max stage payoff)/(1-gamma) + 1.
Vec initial_theta(const ReinforcerSpec& spec, const Game& game, int player);

std::vector<int> argmax_set(const Vec& theta);

/// epsilon-greedy action distribution: mass (1-eps) split uniformly over the
/// argmax set plus eps/d uniformly over all actions.
Vec policy_egreedy(const Vec& theta, double epsilon);

int sample_action(const Vec& theta, const ReinforcerSpec& spec, std::mt19937_64& rng);

/// Asynchronous Q update: only the played entry moves.
Vec q_update_async(const Vec& theta, int action, double reward, const ReinforcerSpec& spec);

/// Synchronous Q update: every entry moves with its own counterfactual reward.
Vec q_update_sync(const Vec& theta, const Vec& counterfactual_rewards,
                  const ReinforcerSpec& spec);

/// Effective per-action learning rates, normalized to sum to 1.
Vec relative_learning_rate(const ReinforcerSpec& spec, const Vec& theta);

nlohmann::json spec_to_json(const ReinforcerSpec& spec);
ReinforcerSpec spec_from_json(const nlohmann::json& j);

}  // namespace learndyn
