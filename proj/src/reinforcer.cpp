#include "learndyn/reinforcer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace learndyn {

void ReinforcerSpec::validate() const {
  if (!(alpha > 0 && alpha < 1)) throw std::invalid_argument("alpha must lie in (0,1)");
  if (!(gamma >= 0 && gamma < 1)) throw std::invalid_argument("gamma must lie in [0,1)");
  if (!(epsilon >= 0 && epsilon <= 1)) throw std::invalid_argument("epsilon must lie in [0,1]");
  if (family == UpdateFamily::separable_custom) {
    if (!custom) throw std::invalid_argument("separable_custom requires a custom family");
    // Numeric check of the Def-5 monotonicity: U increasing in reward,
    // decreasing in theta_a, sampled over the declared box.
    const auto& c = *custom;
    const int n = 7;
    const double h = 1e-5;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        double th = c.theta_lo + (c.theta_hi - c.theta_lo) * i / (n - 1);
        double r = c.reward_lo + (c.reward_hi - c.reward_lo) * j / (n - 1);
        if (c.U(th, r + h) - c.U(th, r) <= 0)
          throw std::invalid_argument("custom U is not increasing in expected reward");
        if (c.U(th + h, r) - c.U(th, r) >= 0)
          throw std::invalid_argument("custom U is not decreasing in theta");
      }
    }
  }
}

Vec initial_theta(const ReinforcerSpec& spec, const Game& game, int player) {
  int d = game.num_actions(player);
  if (spec.init) {
    if (int(spec.init->size()) != d) throw std::invalid_argument("init size mismatch");
    return *spec.init;
  }
  double v = game.max_payoff() / (1.0 - spec.gamma) + 1.0;
  return Vec(d, v);
}

std::vector<int> argmax_set(const Vec& theta) {
  if (theta.empty()) throw std::invalid_argument("empty theta");
  double m = *std::max_element(theta.begin(), theta.end());
  std::vector<int> out;
  for (int i = 0; i < int(theta.size()); ++i)
    if (theta[i] == m) out.push_back(i);
  return out;
}

Vec policy_egreedy(const Vec& theta, double epsilon) {
  if (theta.empty()) throw std::invalid_argument("empty theta");
  const int d = int(theta.size());
  auto best = argmax_set(theta);
  Vec p(d, epsilon / d);
  for (int a : best) p[a] += (1.0 - epsilon) / best.size();
  return p;
}

int sample_action(const Vec& theta, const ReinforcerSpec& spec, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const int d = int(theta.size());
  if (unif(rng) < spec.epsilon) {
    std::uniform_int_distribution<int> pick(0, d - 1);
    return pick(rng);
  }
  auto best = argmax_set(theta);
  if (best.size() == 1 || spec.deterministic_ties) return best.front();
  std::uniform_int_distribution<size_t> pick(0, best.size() - 1);
  return best[pick(rng)];
}

Vec q_update_async(const Vec& theta, int action, double reward, const ReinforcerSpec& spec) {
  if (action < 0 || action >= int(theta.size())) throw std::invalid_argument("bad action");
  if (!std::isfinite(reward)) throw std::invalid_argument("non-finite reward");
  Vec next = theta;
  double vmax = *std::max_element(theta.begin(), theta.end());
  next[action] = theta[action] + spec.alpha * (reward + spec.gamma * vmax - theta[action]);
  return next;
}

Vec q_update_sync(const Vec& theta, const Vec& counterfactual_rewards,
                  const ReinforcerSpec& spec) {
  if (counterfactual_rewards.size() != theta.size())
    throw std::invalid_argument("counterfactual reward vector length mismatch");
  Vec next = theta;
  double vmax = *std::max_element(theta.begin(), theta.end());
  for (size_t a = 0; a < theta.size(); ++a)
    next[a] = theta[a] + spec.alpha * (counterfactual_rewards[a] + spec.gamma * vmax - theta[a]);
  return next;
}

Vec relative_learning_rate(const ReinforcerSpec& spec, const Vec& theta) {
  Vec rates;
  switch (spec.family) {
    case UpdateFamily::q_async: {
      Vec p = policy_egreedy(theta, spec.epsilon);
      rates = spec.alpha * p;
      break;
    }
    case UpdateFamily::q_sync:
      rates.assign(theta.size(), spec.alpha);
      break;
    case UpdateFamily::separable_custom:
      rates = spec.custom->rates(theta, argmax_set(theta).front());
      break;
  }
  double total = 0;
  for (double r : rates) total += r;
  if (total <= 0) throw std::invalid_argument("all-zero learning rates");
  for (double& r : rates) r /= total;
  return rates;
}

nlohmann::json spec_to_json(const ReinforcerSpec& spec) {
  nlohmann::json j;
  switch (spec.family) {
    case UpdateFamily::q_async: j["family"] = "q_async"; break;
    case UpdateFamily::q_sync: j["family"] = "q_sync"; break;
    case UpdateFamily::separable_custom: j["family"] = "separable_custom"; break;
  }
  j["alpha"] = spec.alpha;
  j["gamma"] = spec.gamma;
  j["epsilon"] = spec.epsilon;
  if (spec.init) j["init"] = *spec.init;
  return j;
}

ReinforcerSpec spec_from_json(const nlohmann::json& j) {
  ReinforcerSpec s;
  std::string fam = j.value("family", "q_async");
  if (fam == "q_async")
    s.family = UpdateFamily::q_async;
  else if (fam == "q_sync")
    s.family = UpdateFamily::q_sync;
  else
    throw std::invalid_argument("custom families are not config-loadable: " + fam);
  s.alpha = j.value("alpha", 0.05);
  s.gamma = j.value("gamma", 0.9);
  s.epsilon = j.value("epsilon", 0.1);
  if (j.contains("init")) s.init = j.at("init").get<Vec>();
  s.validate();
  return s;
}

}  // namespace learndyn
