#include "learndyn/game.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

namespace learndyn {

namespace {

Game make_deterministic_2x2(std::vector<std::string> labels, const double table[2][2][2],
                            std::string family, nlohmann::json params) {
  Game g;
  g.action_labels = {labels, labels};
  g.family = std::move(family);
  g.params = std::move(params);
  Vec t(4 * 2);
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int p = 0; p < 2; ++p) t[(size_t(a) * 2 + b) * 2 + p] = table[a][b][p];
  g.expected_table = std::move(t);
  return g;
}

}  // namespace

double Game::max_payoff() const {
  if (!expected_table) throw std::runtime_error("max_payoff needs expected payoffs");
  return *std::max_element(expected_table->begin(), expected_table->end());
}

double Game::min_payoff() const {
  if (!expected_table) throw std::runtime_error("min_payoff needs expected payoffs");
  return *std::min_element(expected_table->begin(), expected_table->end());
}

Game make_contribution_game(double g) {
  if (!(g > 1.0 && g < 2.0)) throw std::invalid_argument("contribution game requires 1 < g < 2");
  const double t[2][2][2] = {
      {{2 * g, 2 * g}, {g, 2 + g}},
      {{2 + g, g}, {2, 2}},
  };
  return make_deterministic_2x2({"C", "D"}, t, "contribution", {{"g", g}});
}

Game make_general_pd(double x, double y) {
  if (!(x > 1.0 && x < 2.0 && y > 0.0 && y < 1.0))
    throw std::invalid_argument("general PD requires 1 < x < 2 and 0 < y < 1");
  const double t[2][2][2] = {
      {{1, 1}, {0, x}},
      {{x, 0}, {y, y}},
  };
  return make_deterministic_2x2({"C", "D"}, t, "general_pd", {{"x", x}, {"y", y}});
}

Vec bertrand_price_grid() {
  Vec grid(100);
  for (int k = 0; k < 100; ++k) grid[k] = 0.01 + k * (9.99 / 99.0);
  return grid;
}

BertrandParams bertrand_simple_params() {
  BertrandParams p;
  p.model = BertrandModel::simple;
  p.price_grid = {0.5, 2.0};
  p.marginal_cost = 0.0;
  p.demand_intercept = 3.0;
  return p;
}

BertrandParams bertrand_grid_params() {
  BertrandParams p;
  p.model = BertrandModel::grid;
  p.price_grid = bertrand_price_grid();
  p.marginal_cost = 2.0;
  return p;
}

Game make_bertrand(const BertrandParams& params) {
  BertrandParams p = params;
  if (p.price_grid.empty())
    p = (p.model == BertrandModel::simple) ? bertrand_simple_params() : bertrand_grid_params();
  if (p.price_grid.empty()) throw std::invalid_argument("empty price grid");
  if (!std::is_sorted(p.price_grid.begin(), p.price_grid.end()) ||
      std::adjacent_find(p.price_grid.begin(), p.price_grid.end()) != p.price_grid.end())
    throw std::invalid_argument("price grid must be sorted and distinct");

  Game g;
  std::vector<std::string> labels;
  for (double price : p.price_grid) {
    std::ostringstream os;
    os << price;
    labels.push_back(os.str());
  }
  g.action_labels = {labels, labels};
  g.family = "bertrand";
  g.params = {{"model", p.model == BertrandModel::simple ? "simple" : "grid"},
              {"marginal_cost", p.marginal_cost},
              {"demand_intercept", p.demand_intercept},
              {"prices", p.price_grid}};

  const int n = int(p.price_grid.size());
  Vec table(size_t(n) * n * 2);
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      double pa = p.price_grid[a], pb = p.price_grid[b];
      double profit_a, profit_b;
      if (p.model == BertrandModel::simple) {
        double demand = p.demand_intercept - std::min(pa, pb);
        if (pa < pb) {
          profit_a = pa * demand;
          profit_b = 0;
        } else if (pb < pa) {
          profit_a = 0;
          profit_b = pb * demand;
        } else {
          profit_a = pa * demand / 2;
          profit_b = profit_a;
        }
      } else {
        auto unit_profit = [&](double own, double other) {
          if (own < other) return own - p.marginal_cost;
          if (own == other) return (own - p.marginal_cost) / 2;
          return 0.0;
        };
        profit_a = unit_profit(pa, pb);
        profit_b = unit_profit(pb, pa);
      }
      table[(size_t(a) * n + b) * 2 + 0] = profit_a;
      table[(size_t(a) * n + b) * 2 + 1] = profit_b;
    }
  }
  g.expected_table = std::move(table);
  return g;
}

Game make_keyword_game(const KeywordAuctionParams& params) {
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 3; ++j)
      if (!(params.ctr[i][j] > 0 && params.ctr[i][j] <= 1))
        throw std::invalid_argument("CTR entries must lie in (0,1]");

  Game g;
  std::vector<std::string> labels;
  const char* kw = "amb";
  for (int mask = 0; mask < 8; ++mask) {
    std::string s;
    for (int j = 0; j < 3; ++j)
      if (mask & (1 << j)) s += kw[j];
    labels.push_back(s.empty() ? "-" : s);
  }
  g.action_labels = {labels, labels};
  g.stochastic = true;
  g.family = "keyword";
  g.params = {{"reserve", params.reserve},
              {"value_lo", params.value_lo},
              {"value_hi", params.value_hi}};

  KeywordAuctionParams p = params;
  g.sampler = [p](const ActionProfile& prof, std::mt19937_64& rng) -> Vec {
    std::uniform_real_distribution<double> val(p.value_lo, p.value_hi);
    // All six values are drawn every round regardless of the bid sets, so the
    // stream consumption is profile-independent.
    double v[2][3];
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 3; ++j) v[i][j] = val(rng);
    Vec pay(2, 0.0);
    for (int j = 0; j < 3; ++j) {
      bool bid_a = prof[0] & (1 << j), bid_b = prof[1] & (1 << j);
      if (bid_a && bid_b) {
        // Value ties (measure zero) go to advertiser A.
        int winner = (v[0][j] >= v[1][j]) ? 0 : 1;
        double price = std::max(v[1 - winner][j], p.reserve);
        pay[winner] += p.ctr[winner][j] * (v[winner][j] - price);
      } else if (bid_a || bid_b) {
        int winner = bid_a ? 0 : 1;
        pay[winner] += p.ctr[winner][j] * (v[winner][j] - p.reserve);
      }
    }
    return pay;
  };

  // Closed-form expectations with U[1,2] draws and reserve 1:
  // contested keyword pays E[(v_i - v_j)^+] = 1/6, solo pays E[v - 1] = 1/2.
  Vec table(size_t(8) * 8 * 2, 0.0);
  for (int a = 0; a < 8; ++a) {
    for (int b = 0; b < 8; ++b) {
      double ea = 0, eb = 0;
      for (int j = 0; j < 3; ++j) {
        bool bid_a = a & (1 << j), bid_b = b & (1 << j);
        if (bid_a && bid_b) {
          ea += p.ctr[0][j] / 6.0;
          eb += p.ctr[1][j] / 6.0;
        } else if (bid_a) {
          ea += p.ctr[0][j] / 2.0;
        } else if (bid_b) {
          eb += p.ctr[1][j] / 2.0;
        }
      }
      table[(size_t(a) * 8 + b) * 2 + 0] = ea;
      table[(size_t(a) * 8 + b) * 2 + 1] = eb;
    }
  }
  g.expected_table = std::move(table);
  return g;
}

namespace {

// 2-player dominance helpers on restricted action sets.
double payoff2(const Game& g, int player, int own, int other) {
  ActionProfile prof(2);
  prof[player] = own;
  prof[1 - player] = other;
  return g.expected_payoff(prof)[player];
}

bool dominates(const Game& g, int player, int dom, int sub, const std::vector<int>& opp,
               DominanceMode mode) {
  bool some_strict = false;
  for (int o : opp) {
    double d = payoff2(g, player, dom, o), s = payoff2(g, player, sub, o);
    if (mode == DominanceMode::strict) {
      if (!(d > s)) return false;
    } else {
      if (d < s) return false;
      if (d > s) some_strict = true;
    }
  }
  return mode == DominanceMode::strict || some_strict;
}

bool is_dominated(const Game& g, int player, int act, const std::vector<int>& own,
                  const std::vector<int>& opp, DominanceMode mode) {
  for (int d : own)
    if (d != act && dominates(g, player, d, act, opp, mode)) return true;
  return false;
}

}  // namespace

std::vector<std::vector<int>> pure_iesds(const Game& game, DominanceMode mode) {
  if (game.players() != 2) throw std::invalid_argument("pure_iesds supports 2-player games");
  std::vector<std::vector<int>> surv(2);
  for (int i = 0; i < 2; ++i)
    for (int a = 0; a < game.num_actions(i); ++a) surv[i].push_back(a);

  bool changed = true;
  while (changed) {
    changed = false;
    for (int i = 0; i < 2; ++i) {
      std::vector<int> keep;
      for (int a : surv[i])
        if (!is_dominated(game, i, a, surv[i], surv[1 - i], mode))
          keep.push_back(a);
      if (keep.size() != surv[i].size()) {
        surv[i] = keep;
        changed = true;
      }
    }
  }
  return surv;
}

std::vector<std::vector<int>> pure_iesds_order(const Game& game,
                                               const std::vector<std::pair<int, int>>& deletions,
                                               DominanceMode mode) {
  std::vector<std::vector<int>> surv(2);
  for (int i = 0; i < 2; ++i)
    for (int a = 0; a < game.num_actions(i); ++a) surv[i].push_back(a);
  for (auto [player, act] : deletions) {
    auto it = std::find(surv[player].begin(), surv[player].end(), act);
    if (it == surv[player].end()) throw std::invalid_argument("action already deleted");
    if (!is_dominated(game, player, act, surv[player], surv[1 - player], mode))
      throw std::invalid_argument("requested deletion is not dominated at this stage");
    surv[player].erase(it);
  }
  return surv;
}

namespace {

using SurvKey = std::pair<uint64_t, uint64_t>;

void all_orders_dfs(const Game& g, std::vector<int> s0, std::vector<int> s1, DominanceMode mode,
                    std::set<SurvKey>& seen, std::vector<std::vector<int>>& out) {
  auto key = [](const std::vector<int>& v) {
    uint64_t m = 0;
    for (int a : v) m |= (1ULL << a);
    return m;
  };
  if (!seen.insert({key(s0), key(s1)}).second) return;

  std::vector<std::pair<int, int>> candidates;
  const std::vector<int>* surv[2] = {&s0, &s1};
  for (int i = 0; i < 2; ++i)
    for (int a : *surv[i])
      if (is_dominated(g, i, a, *surv[i], *surv[1 - i], mode)) candidates.push_back({i, a});

  if (candidates.empty()) {
    for (int a : s0) out[0].push_back(a);
    for (int a : s1) out[1].push_back(a);
    return;
  }
  for (auto [i, a] : candidates) {
    std::vector<int> n0 = s0, n1 = s1;
    auto& v = (i == 0) ? n0 : n1;
    v.erase(std::find(v.begin(), v.end(), a));
    all_orders_dfs(g, std::move(n0), std::move(n1), mode, seen, out);
  }
}

}  // namespace

std::vector<std::vector<int>> pure_iesds_all_orders(const Game& game, DominanceMode mode) {
  // Strict pure dominance is order-independent, so the simultaneous procedure
  // already gives the union over orders.
  if (mode == DominanceMode::strict) return pure_iesds(game, mode);
  if (game.num_actions(0) > 12 || game.num_actions(1) > 12)
    throw std::invalid_argument("all-orders enumeration is limited to small games");
  std::vector<int> s0(game.num_actions(0)), s1(game.num_actions(1));
  std::iota(s0.begin(), s0.end(), 0);
  std::iota(s1.begin(), s1.end(), 0);
  std::set<SurvKey> seen;
  std::vector<std::vector<int>> out(2);
  all_orders_dfs(game, s0, s1, mode, seen, out);
  for (auto& v : out) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  }
  return out;
}

nlohmann::json game_to_json(const Game& game) {
  nlohmann::json j;
  j["players"] = game.players();
  j["action_labels"] = game.action_labels;
  j["stochastic"] = game.stochastic;
  if (!game.family.empty()) {
    j["family"] = game.family;
    j["params"] = game.params;
  }
  if (game.expected_table) j["expected_payoffs"] = *game.expected_table;
  return j;
}

Game game_from_json(const nlohmann::json& j) {
  std::string family = j.value("family", "");
  if (family == "contribution") return make_contribution_game(j.at("params").at("g").get<double>());
  if (family == "general_pd")
    return make_general_pd(j.at("params").at("x").get<double>(),
                           j.at("params").at("y").get<double>());
  if (family == "bertrand") {
    BertrandParams p;
    p.model = j.at("params").at("model") == "simple" ? BertrandModel::simple : BertrandModel::grid;
    p.price_grid = j.at("params").at("prices").get<Vec>();
    p.marginal_cost = j.at("params").at("marginal_cost").get<double>();
    p.demand_intercept = j.at("params").value("demand_intercept", 3.0);
    return make_bertrand(p);
  }
  if (family == "keyword") return make_keyword_game();
  // Raw table-backed game.
  Game g;
  g.action_labels = j.at("action_labels").get<std::vector<std::vector<std::string>>>();
  g.expected_table = j.at("expected_payoffs").get<Vec>();
  return g;
}

}  // namespace learndyn
