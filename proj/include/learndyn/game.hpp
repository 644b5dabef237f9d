#pragma once

#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "learndyn/util.hpp"

namespace learndyn {

using ActionProfile = std::vector<int>;

/// Finite normal-form game. Payoffs are either deterministic (table) or
/// stochastic (sampler plus a closed-form expected-payoff table, required
/// whenever a fluid limit is to be built on top of the game).
struct Game {
  std::vector<std::vector<std::string>> action_labels;  // per player
  bool stochastic = false;

  // Expected payoff table, flat over profiles, then player. Always present for
  // deterministic games; present for stochastic ones when a closed form exists.
  std::optional<Vec> expected_table;

  // Sampler for stochastic payoffs. Null for deterministic games.
  std::function<Vec(const ActionProfile&, std::mt19937_64&)> sampler;

  std::string family;      // "contribution", "general_pd", "bertrand", "keyword", ...
  nlohmann::json params;   // family parameters, for serialization

  int players() const { return int(action_labels.size()); }
  int num_actions(int i) const { return int(action_labels[i].size()); }

  size_t profile_index(const ActionProfile& a) const {
    size_t idx = 0;
    for (int i = 0; i < players(); ++i) idx = idx * num_actions(i) + size_t(a[i]);
    return idx;
  }
  size_t num_profiles() const {
    size_t n = 1;
    for (int i = 0; i < players(); ++i) n *= num_actions(i);
    return n;
  }

  bool has_expected() const { return expected_table.has_value(); }

  Vec expected_payoff(const ActionProfile& a) const {
    if (!expected_table) throw std::runtime_error("game has no exact expected payoffs");
    size_t base = profile_index(a) * players();
    return Vec(expected_table->begin() + base, expected_table->begin() + base + players());
  }

  /// Realized payoff for a pure profile. Draws from `rng` iff stochastic.
  Vec payoff(const ActionProfile& a, std::mt19937_64& rng) const {
    if (stochastic) return sampler(a, rng);
    return expected_payoff(a);
  }

  double max_payoff() const;
  double min_payoff() const;
};

struct ContributionGameParams {
  double g;  // growth factor in (1,2)
};

struct GeneralPDParams {
  double x;  // defection temptation in (1,2)
  double y;  // mutual-defection payoff in (0,1)
};

enum class BertrandModel { simple, grid };

struct BertrandParams {
  BertrandModel model = BertrandModel::simple;
  Vec price_grid;        // filled by defaults when empty
  double marginal_cost = 0.0;
  double demand_intercept = 3.0;  // simple model only
};

struct KeywordAuctionParams {
  // Rows: advertiser A, B; columns: keywords a, m, b.
  double ctr[2][3] = {{1.0, 0.6, 0.2}, {0.2, 0.6, 1.0}};
  double value_lo = 1.0, value_hi = 2.0;
  double reserve = 1.0;
};

// Action index conventions: contribution/general PD use 0 = C, 1 = D.
// Keyword game actions are subsets of {a,m,b} as bitmasks 0..7 (bit k = keyword k).

Game make_contribution_game(double g);
Game make_general_pd(double x, double y);
Game make_bertrand(const BertrandParams& params);
Game make_keyword_game(const KeywordAuctionParams& params = {});

/// Canonical 100-point Bertrand price grid, 0.01 + k * (9.99/99). The two
/// pure-rationalizable prices sit at indices 20 and 21.
Vec bertrand_price_grid();
BertrandParams bertrand_simple_params();
BertrandParams bertrand_grid_params();

/// Dominance notion used for elimination.
///  strict : strictly dominated by a pure strategy at every opponent profile.
///  thick  : strictly dominated in expectation against every totally mixed
///           opponent profile, i.e. weakly dominated with at least one strict
///           instance. This is the notion effectively delivered by thickness
///           (full-support play in the limit).
enum class DominanceMode { strict, thick };

/// Iterated elimination, removing every dominated action each round.
/// Order-independent for strict dominance.
std::vector<std::vector<int>> pure_iesds(const Game& game,
                                         DominanceMode mode = DominanceMode::strict);

/// Applies a specific deletion sequence of (player, action) pairs; throws if a
/// requested deletion is not dominated at that stage.
std::vector<std::vector<int>> pure_iesds_order(
    const Game& game, const std::vector<std::pair<int, int>>& deletions,
    DominanceMode mode = DominanceMode::strict);

/// Union of survivors over all deletion orders (an action is
/// pure-rationalizable if SOME order keeps it). Exhaustive search with
/// memoization; only feasible for small games. For strict dominance this
/// equals pure_iesds by order independence.
std::vector<std::vector<int>> pure_iesds_all_orders(
    const Game& game, DominanceMode mode = DominanceMode::strict);

nlohmann::json game_to_json(const Game& game);
Game game_from_json(const nlohmann::json& j);

}  // namespace learndyn
