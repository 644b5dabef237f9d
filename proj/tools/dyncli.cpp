// Command-line front end: runs scenario configs and emits CSV/JSON data files
// plus a manifest with content hashes, so a run can be reproduced and checked
// byte for byte.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "learndyn/analysis.hpp"
#include "learndyn/filippov.hpp"
#include "learndyn/fluid.hpp"
#include "learndyn/game.hpp"
#include "learndyn/mechanisms.hpp"
#include "learndyn/simulator.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace learndyn;

namespace {

constexpr const char* kVersion = "0.1.0";

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IOError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Bundled scenario catalog

struct Scenario {
  const char* name;
  const char* description;
  const char* config;  // JSON text
};

const Scenario kScenarios[] = {
    {"fig2_sweep", "independent-learning sweep over the growth factor; Nash fraction per cell",
     R"({
  "name": "fig2_sweep",
  "mode": "sweep",
  "game": {"family": "contribution", "g": 1.8},
  "agents": [
    {"family": "q_async", "alpha": 0.05, "gamma": 0.9, "epsilon": 0.1},
    {"family": "q_async", "alpha": 0.05, "gamma": 0.9, "epsilon": 0.1}
  ],
  "grid": [{"g": 1.1}, {"g": 1.2}, {"g": 1.3}, {"g": 1.4}, {"g": 1.5},
           {"g": 1.6}, {"g": 1.7}, {"g": 1.8}, {"g": 1.9}],
  "nash": [1, 1],
  "run": {"iterations": 20000, "seed": 1, "seeds_per_cell": 10}
})"},
    {"fig3_traces", "estimate traces of two asynchronous learners in the contribution game",
     R"({
  "name": "fig3_traces",
  "mode": "simulate",
  "game": {"family": "contribution", "g": 1.8},
  "agents": [
    {"family": "q_async", "alpha": 0.05, "gamma": 0.9, "epsilon": 0.1},
    {"family": "q_async", "alpha": 0.05, "gamma": 0.9, "epsilon": 0.1}
  ],
  "run": {"iterations": 100000, "seed": 1, "seeds": 1, "snapshot_stride": 100},
  "record_traces": true
})"},
    {"fig4_fields", "piecewise-affine fluid field pieces and sample hybrid trajectories",
     R"({
  "name": "fig4_fields",
  "mode": "fluid",
  "game": {"family": "contribution", "g": 1.8},
  "agents": [
    {"family": "q_async", "alpha": 0.05, "gamma": 0.9, "epsilon": 0.1},
    {"family": "q_async", "alpha": 0.05, "gamma": 0.9, "epsilon": 0.1}
  ],
  "inits": [[30.0, 30.0, 30.0, 30.0], [38.0, 34.0, 38.0, 34.0], [20.0, 24.0, 20.0, 24.0]],
  "horizon": 2000.0
})"},
    {"fig5_basins", "basin map of the symmetric two-dimensional reduction",
     R"({
  "name": "fig5_basins",
  "mode": "basins",
  "game": {"family": "contribution", "g": 1.8},
  "agents": [
    {"family": "q_async", "alpha": 0.05, "gamma": 0.9, "epsilon": 0.1},
    {"family": "q_async", "alpha": 0.05, "gamma": 0.9, "epsilon": 0.1}
  ],
  "grid": {"lo": 0.0, "hi": 40.0, "n": 21},
  "radius": 0.5,
  "horizon": 20000.0
})"},
    {"fig8_localtime", "discrete cooperation local time against the analytic value",
     R"({
  "name": "fig8_localtime",
  "mode": "simulate",
  "game": {"family": "contribution", "g": 1.8},
  "agents": [
    {"family": "q_async", "alpha": 0.05, "gamma": 0.9, "epsilon": 0.1},
    {"family": "q_async", "alpha": 0.05, "gamma": 0.9, "epsilon": 0.1}
  ],
  "run": {"iterations": 100000, "seed": 1, "seeds": 20},
  "record_traces": false
})"},
    {"fig9_chaos", "separation growth and center-cell occupancy of the 4-D system",
     R"({
  "name": "fig9_chaos",
  "mode": "chaos",
  "game": {"family": "contribution", "g": 1.8},
  "agents": [
    {"family": "q_async", "alpha": 0.05, "gamma": 0.9, "epsilon": 0.1},
    {"family": "q_async", "alpha": 0.05, "gamma": 0.9, "epsilon": 0.1}
  ],
  "init": [34.0, 34.5, 35.5, 34.8],
  "perturbation": 1e-10,
  "horizon": 16000.0,
  "cell": 0.2,
  "dt": 0.0001
})"},
    {"fig10_bertrand", "two-price Bertrand stationary structure, asynchronous and synchronous",
     R"({
  "name": "fig10_bertrand",
  "mode": "bertrand",
  "game": {"family": "bertrand_simple"},
  "agents": [
    {"family": "q_async", "alpha": 0.05, "gamma": 0.0, "epsilon": 0.1},
    {"family": "q_async", "alpha": 0.05, "gamma": 0.0, "epsilon": 0.1}
  ]
})"},
    {"fig6_7_keywords", "keyword-auction learners: dominant play vs market splitting",
     R"({
  "name": "fig6_7_keywords",
  "mode": "simulate",
  "game": {"family": "keyword"},
  "agents": [
    {"family": "q_async", "alpha": 0.005, "gamma": 0.9, "epsilon": 0.01},
    {"family": "q_async", "alpha": 0.005, "gamma": 0.9, "epsilon": 0.01}
  ],
  "run": {"iterations": 500000, "seed": 1, "seeds": 50},
  "record_traces": false
})"},
    {"appendixD_region", "existence region of the boundary rest point in normalized payoffs",
     R"({
  "name": "appendixD_region",
  "mode": "region",
  "xs": [1.2, 1.5, 1.8],
  "ys": [0.2, 0.5, 0.8],
  "epsilons": [0.1, 0.3, 0.5]
})"},
    {"vcg_demo", "two-slot auction: payments, pivot feedback, counterfactual payoffs",
     R"({
  "name": "vcg_demo",
  "mode": "mechanisms",
  "bids_tenths": [50, 40, 30, 10]
})"},
};

const Scenario* find_scenario(const std::string& name) {
  for (const auto& s : kScenarios)
    if (name == s.name) return &s;
  return nullptr;
}

// ---------------------------------------------------------------------------
// Deterministic formatting

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Row-oriented table that serializes to CSV or JSON.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  void add(std::vector<std::string> row) { rows.push_back(std::move(row)); }

  std::string csv() const {
    std::ostringstream os;
    for (size_t c = 0; c < columns.size(); ++c) os << (c ? "," : "") << columns[c];
    os << "\n";
    for (const auto& r : rows) {
      for (size_t c = 0; c < r.size(); ++c) os << (c ? "," : "") << r[c];
      os << "\n";
    }
    return os.str();
  }

  json to_json() const {
    json rows_j = json::array();
    for (const auto& r : rows) {
      json obj = json::object();
      for (size_t c = 0; c < r.size() && c < columns.size(); ++c) obj[columns[c]] = r[c];
      rows_j.push_back(obj);
    }
    return rows_j;
  }
};

struct Emitter {
  fs::path outdir;
  std::string format = "csv";
  std::vector<std::pair<std::string, uint64_t>> files;

  void write_text(const std::string& name, const std::string& content) {
    std::error_code ec;
    fs::create_directories(outdir, ec);
    if (ec) throw IOError("cannot create output directory " + outdir.string());
    std::ofstream out(outdir / name, std::ios::binary);
    if (!out) throw IOError("cannot open " + (outdir / name).string());
    out << content;
    if (!out) throw IOError("write failed for " + (outdir / name).string());
    files.emplace_back(name, fnv1a64(content));
  }

  void write_json(const std::string& name, const json& j) { write_text(name, j.dump(2) + "\n"); }

  void write_table(const std::string& stem, const Table& t) {
    if (format == "json")
      write_json(stem + ".json", t.to_json());
    else
      write_text(stem + ".csv", t.csv());
  }

  void manifest(const std::string& scenario, uint64_t config_hash, uint64_t seed) {
    json m;
    m["tool_version"] = kVersion;
    m["scenario"] = scenario;
    char hx[20];
    std::snprintf(hx, sizeof hx, "%016llx", (unsigned long long)config_hash);
    m["config_hash"] = hx;
    m["seed"] = seed;
    json fj = json::array();
    for (const auto& [n, h] : files) {
      std::snprintf(hx, sizeof hx, "%016llx", (unsigned long long)h);
      fj.push_back({{"name", n}, {"fnv1a64", hx}});
    }
    m["files"] = fj;
    write_json("manifest.json", m);
  }
};

// ---------------------------------------------------------------------------
// Config parsing

template <typename T>
T require(const json& j, const std::string& key) {
  if (!j.contains(key)) throw ConfigError("missing required field \"" + key + "\"");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("field \"" + key + "\" has the wrong type");
  }
}

template <typename T>
T get_or(const json& j, const std::string& key, T def) {
  if (!j.contains(key)) return def;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("field \"" + key + "\" has the wrong type");
  }
}

Game parse_game(const json& cfg) {
  if (!cfg.contains("game")) throw ConfigError("missing required field \"game\"");
  const json& g = cfg.at("game");
  std::string family = require<std::string>(g, "family");
  if (family == "contribution") return make_contribution_game(require<double>(g, "g"));
  if (family == "general_pd")
    return make_general_pd(require<double>(g, "x"), require<double>(g, "y"));
  if (family == "bertrand_simple") return make_bertrand(bertrand_simple_params());
  if (family == "bertrand_grid") return make_bertrand(bertrand_grid_params());
  if (family == "keyword") return make_keyword_game();
  throw ConfigError("unknown game family \"" + family + "\"");
}

std::vector<ReinforcerSpec> parse_agents(const json& cfg, const Game& game) {
  if (!cfg.contains("agents")) throw ConfigError("missing required field \"agents\"");
  const json& arr = cfg.at("agents");
  if (!arr.is_array() || int(arr.size()) != game.players())
    throw ConfigError("\"agents\" must list one spec per player");
  std::vector<ReinforcerSpec> specs;
  for (const auto& a : arr) {
    ReinforcerSpec s;
    std::string fam = get_or<std::string>(a, "family", "q_async");
    if (fam == "q_async")
      s.family = UpdateFamily::q_async;
    else if (fam == "q_sync")
      s.family = UpdateFamily::q_sync;
    else
      throw ConfigError("unknown agent family \"" + fam + "\"");
    s.alpha = get_or<double>(a, "alpha", s.alpha);
    s.gamma = get_or<double>(a, "gamma", s.gamma);
    s.epsilon = get_or<double>(a, "epsilon", s.epsilon);
    if (a.contains("init")) s.init = a.at("init").get<Vec>();
    try {
      s.validate();
    } catch (const std::exception& e) {
      throw ConfigError(std::string("invalid agent spec: ") + e.what());
    }
    specs.push_back(std::move(s));
  }
  return specs;
}

// First agent's (epsilon, gamma, alpha); used by the symmetric-reduction modes.
std::array<double, 3> symmetric_rates(const std::vector<ReinforcerSpec>& specs) {
  return {specs.at(0).epsilon, specs.at(0).gamma, specs.at(0).alpha};
}

// ---------------------------------------------------------------------------
// Modes

void run_simulate(const json& cfg, uint64_t seed_override, Emitter& em) {
  Game game = parse_game(cfg);
  auto specs = parse_agents(cfg, game);
  const json& run = cfg.contains("run") ? cfg.at("run") : json::object();
  EpisodeConfig base;
  base.iterations = get_or<long>(run, "iterations", base.iterations);
  base.seed = seed_override ? seed_override : get_or<uint64_t>(run, "seed", 1);
  base.snapshot_stride = get_or<long>(run, "snapshot_stride", base.snapshot_stride);
  base.record_window = get_or<long>(run, "record_window", 0);
  int seeds = get_or<int>(run, "seeds", 1);
  if (seeds < 1 || base.iterations < 1) throw ConfigError("\"seeds\" and \"iterations\" must be positive");
  bool traces = get_or<bool>(cfg, "record_traces", seeds == 1);

  Table summary;
  summary.columns = {"seed", "iterations", "diverged"};
  for (int i = 0; i < game.players(); ++i) {
    summary.columns.push_back("learned_" + std::to_string(i));
    summary.columns.push_back("final_argmax_" + std::to_string(i));
    summary.columns.push_back("local_time_" + std::to_string(i));
  }
  Table trace;
  trace.columns = {"seed", "iter", "agent"};
  int max_actions = 0;
  for (int i = 0; i < game.players(); ++i) max_actions = std::max(max_actions, game.num_actions(i));
  for (int a = 0; a < max_actions; ++a) trace.columns.push_back("theta_" + std::to_string(a));

  int split = 0, all_dominant = 0;
  double local_sum = 0, local_sq = 0;
  long local_n = 0;
  for (int s = 0; s < seeds; ++s) {
    EpisodeConfig cfgk = base;
    cfgk.seed = base.seed + uint64_t(s);
    EpisodeResult res = run_episode(game, specs, cfgk);
    if (res.diverged) throw NumericalError("episode diverged at seed " + std::to_string(cfgk.seed));
    std::vector<std::string> row{std::to_string(cfgk.seed), std::to_string(res.iterations),
                                 res.diverged ? "1" : "0"};
    std::vector<int> finals;
    for (int i = 0; i < game.players(); ++i) {
      const Vec& th = res.final_theta[i];
      int fin = int(std::max_element(th.begin(), th.end()) - th.begin());
      finals.push_back(fin);
      row.push_back(std::to_string(res.learned_actions[i]));
      row.push_back(std::to_string(fin));
      row.push_back(i < int(res.local_time.size()) ? fmt(res.local_time[i]) : "");
      if (i < int(res.local_time.size())) {
        local_sum += res.local_time[i];
        local_sq += res.local_time[i] * res.local_time[i];
        local_n++;
      }
    }
    summary.add(row);
    if (game.family == "keyword" && game.players() == 2) {
      int mA = finals[0], mB = finals[1];
      if (mA == 7 && mB == 7) all_dominant++;
      else if ((mA | mB) == 7 && ((mA & mB) == 0 || (mA & mB) == 2)) split++;
    }
    if (traces) {
      for (size_t k = 0; k < res.snapshot_iters.size(); ++k)
        for (int i = 0; i < game.players(); ++i) {
          std::vector<std::string> tr{std::to_string(cfgk.seed),
                                      std::to_string(res.snapshot_iters[k]), std::to_string(i)};
          for (double v : res.theta_trace[i][k]) tr.push_back(fmt(v));
          trace.add(tr);
        }
    }
  }
  em.write_table("summary", summary);
  if (traces) em.write_table("traces", trace);

  json extra;
  if (local_n > 0) {
    double mean = local_sum / double(local_n);
    extra["mean_local_time"] = mean;
    extra["var_local_time"] = local_sq / double(local_n) - mean * mean;
    if (game.family == "contribution") {
      auto [eps, gamma, alpha] = symmetric_rates(specs);
      (void)alpha;
      auto ss = pd_steady_states(game.params.at("g").get<double>(), eps, gamma);
      if (ss.tau_at_C) extra["analytic_tau"] = *ss.tau_at_C;
    }
  }
  if (game.family == "keyword") {
    extra["all_keywords"] = all_dominant;
    extra["market_split"] = split;
    extra["other"] = seeds - all_dominant - split;
  }
  if (!extra.empty()) em.write_json("aggregate.json", extra);
}

void run_sweep(const json& cfg, uint64_t seed_override, int jobs, Emitter& em) {
  Game proto = parse_game(cfg);
  auto specs = parse_agents(cfg, proto);
  if (proto.family != "contribution")
    throw ConfigError("sweep mode currently supports the contribution family");
  if (!cfg.contains("grid") || !cfg.at("grid").is_array())
    throw ConfigError("sweep mode needs a \"grid\" array of parameter objects");
  std::vector<json> grid = cfg.at("grid").get<std::vector<json>>();
  ActionProfile nash = get_or<ActionProfile>(cfg, "nash", {});
  const json& run = cfg.contains("run") ? cfg.at("run") : json::object();
  EpisodeConfig base;
  base.iterations = get_or<long>(run, "iterations", 20000);
  base.seed = seed_override ? seed_override : get_or<uint64_t>(run, "seed", 1);
  int spc = get_or<int>(run, "seeds_per_cell", 10);

  auto make = [&specs](const json& cell) {
    return std::make_pair(make_contribution_game(cell.at("g").get<double>()), specs);
  };
  SweepResult res = sweep(make, grid, spc, base, nash, jobs);
  em.write_text("sweep.csv", res.csv());

  // monotone-trend summary: Nash fraction per cell in grid order
  json jc = json::array();
  for (const auto& c : res.cells)
    jc.push_back({{"params", c.params},
                  {"seeds", c.seeds},
                  {"nash_fraction", c.nash_fraction},
                  {"mean_local_time", c.mean_local_time}});
  em.write_json("cells.json", jc);
}

void run_fluid(const json& cfg, Emitter& em) {
  Game game = parse_game(cfg);
  auto specs = parse_agents(cfg, game);
  PiecewiseField pf = build_field(game, specs);
  em.write_json("field.json", pf.to_json());

  if (cfg.contains("inits")) {
    auto inits = cfg.at("inits").get<std::vector<Vec>>();
    double horizon = get_or<double>(cfg, "horizon", 2000.0);
    IntegrateOptions opt;
    opt.horizon = horizon;
    Table traj;
    traj.columns = {"init", "t"};
    for (int d = 0; d < pf.dim; ++d) traj.columns.push_back("q_" + std::to_string(d));
    json endpoints = json::array();
    for (size_t k = 0; k < inits.size(); ++k) {
      if (int(inits[k].size()) != pf.dim) throw ConfigError("init has wrong dimension");
      HybridTrajectory tr = integrate(pf.switched(), inits[k], opt);
      if (tr.diverged) throw NumericalError("trajectory diverged");
      for (const auto& seg : tr.segments)
        for (size_t j = 0; j < seg.t.size(); ++j) {
          std::vector<std::string> row{std::to_string(k), fmt(seg.t[j])};
          for (double v : seg.states[j]) row.push_back(fmt(v));
          traj.add(row);
        }
      json events = json::array();
      for (const auto& ev : tr.events) events.push_back({{"t", ev.t}, {"what", ev.what}});
      endpoints.push_back({{"init", inits[k]},
                           {"final_state", tr.final_state},
                           {"final_time", tr.final_time},
                           {"final_mode", tr.final_mode},
                           {"steady", tr.steady},
                           {"pseudo", tr.pseudo},
                           {"unresolved_corner", tr.unresolved_corner},
                           {"events", events}});
    }
    em.write_table("trajectories", traj);
    em.write_json("endpoints.json", endpoints);
  }
}

void run_steady(const json& cfg, Emitter& em) {
  Game game = parse_game(cfg);
  auto specs = parse_agents(cfg, game);
  if (game.family != "contribution")
    throw ConfigError("steady mode needs the contribution family");
  double g = game.params.at("g").get<double>();
  auto [eps, gamma, alpha] = symmetric_rates(specs);
  auto ss = pd_steady_states(g, eps, gamma);
  json j;
  j["g"] = g;
  j["epsilon"] = eps;
  j["gamma"] = gamma;
  j["epsilon_threshold"] = ss.epsilon_threshold;
  j["q_eq_D"] = ss.q_eq_D;
  if (ss.q_eq_C) {
    j["q_eq_C"] = *ss.q_eq_C;
    j["tau"] = *ss.tau_at_C;
    j["sliding_rate_at_C"] = symmetric_sliding_rate(g, eps, gamma, alpha, (*ss.q_eq_C)[0]);
  }
  j["exists_C"] = ss.exists_C;
  em.write_json("steady.json", j);
}

void run_basins(const json& cfg, Emitter& em) {
  Game game = parse_game(cfg);
  auto specs = parse_agents(cfg, game);
  if (game.family != "contribution")
    throw ConfigError("basins mode needs the contribution family");
  double g = game.params.at("g").get<double>();
  auto [eps, gamma, alpha] = symmetric_rates(specs);
  const json& grid = cfg.contains("grid") ? cfg.at("grid") : json::object();
  double lo = require<double>(grid, "lo"), hi = require<double>(grid, "hi");
  int n = require<int>(grid, "n");
  if (n < 2 || hi <= lo) throw ConfigError("basins grid needs n >= 2 and hi > lo");
  double radius = get_or<double>(cfg, "radius", 0.5);

  auto ss = pd_steady_states(g, eps, gamma);
  std::vector<Vec> targets{ss.q_eq_D};
  if (ss.q_eq_C) targets.push_back(*ss.q_eq_C);

  std::vector<Vec> inits;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      inits.push_back({lo + (hi - lo) * i / (n - 1), lo + (hi - lo) * j / (n - 1)});

  SwitchedField field = symmetric_pd_field(g, eps, gamma, alpha);
  IntegrateOptions opt;
  opt.horizon = get_or<double>(cfg, "horizon", 20000.0);
  BasinMap map = basins(field, inits, targets, radius, opt);

  Table t;
  t.columns = {"q_c", "q_d", "label"};
  for (size_t k = 0; k < map.points.size(); ++k)
    t.add({fmt(map.points[k][0]), fmt(map.points[k][1]), std::to_string(map.labels[k])});
  em.write_table("basins", t);
  json j;
  j["targets"] = map.targets;
  em.write_json("targets.json", j);
}

void run_chaos(const json& cfg, Emitter& em) {
  Game game = parse_game(cfg);
  auto specs = parse_agents(cfg, game);
  PiecewiseField pf = build_field(game, specs);
  Vec init = require<Vec>(cfg, "init");
  if (int(init.size()) != pf.dim) throw ConfigError("chaos init has wrong dimension");
  double pert = get_or<double>(cfg, "perturbation", 1e-10);
  double horizon = get_or<double>(cfg, "horizon", 16000.0);
  double cell = get_or<double>(cfg, "cell", 0.2);
  double dt = get_or<double>(cfg, "dt", 1e-4);
  ChaosReport rep = chaos_diagnostics(pf.switched(), init, pert, horizon, cell, dt);
  if (rep.truncated) throw NumericalError("separation trace left the representable range");
  json j;
  j["divergence_slope"] = rep.divergence_slope;
  j["saturation_time"] = rep.saturation_time;
  j["min_separation"] = rep.min_separation;
  j["max_separation"] = rep.max_separation;
  j["orders_grown"] = rep.orders_grown;
  j["center_occupancy"] = rep.center_occupancy;
  em.write_json("chaos.json", j);
}

void run_bertrand(const json& cfg, Emitter& em) {
  Game game = parse_game(cfg);
  BertrandModel model =
      game.params.at("model").get<std::string>() == "grid" ? BertrandModel::grid
                                                           : BertrandModel::simple;
  json j;
  for (Updating upd : {Updating::async, Updating::sync}) {
    BertrandReport rep = bertrand_structure(model, upd);
    json r;
    r["competitive_value"] = rep.competitive_value;
    if (upd == Updating::async) {
      r["collusive_value"] = rep.collusive_value;
      r["collusive_set_exists"] = rep.collusive_set_exists;
    } else {
      r["attractor"] = rep.sync_attractor;
    }
    if (!rep.grid_predicted.empty()) {
      r["surviving_indices"] = rep.grid_predicted;
      Vec prices;
      for (int k : rep.grid_predicted) prices.push_back(bertrand_price_grid()[k]);
      r["surviving_prices"] = prices;
    }
    j[upd == Updating::async ? "async" : "sync"] = r;
  }
  em.write_json("bertrand.json", j);
}

void run_region(const json& cfg, Emitter& em) {
  Vec xs = require<Vec>(cfg, "xs");
  Vec ys = require<Vec>(cfg, "ys");
  Vec eps = require<Vec>(cfg, "epsilons");
  Table t;
  t.columns = {"x", "y", "epsilon", "inside", "slack_x", "slack_y_lo", "slack_y_hi"};
  for (double x : xs)
    for (double y : ys)
      for (double e : eps) {
        RegionVerdict v = pd_region_general(x, y, e);
        t.add({fmt(x), fmt(y), fmt(e), v.inside ? "1" : "0", fmt(v.slacks[0]), fmt(v.slacks[1]),
               fmt(v.slacks[2])});
      }
  em.write_table("region", t);
}

void run_mechanisms(const json& cfg, Emitter& em) {
  std::vector<int> bids = require<std::vector<int>>(cfg, "bids_tenths");
  VcgOutcome out = vcg_two_slot(bids);
  json j;
  j["bids_tenths"] = bids;
  j["ranking"] = out.ranking;
  j["winners"] = {out.winners[0], out.winners[1]};
  j["payments"] = out.payments;
  json fb = json::array();
  for (const auto& f : out.feedback)
    fb.push_back({{"p1", f.p1}, {"i1", f.i1}, {"p2", f.p2}, {"i2", f.i2}});
  j["feedback"] = fb;
  em.write_json("auction.json", j);

  // counterfactual payoff table, reconstructed from feedback alone
  Table t;
  t.columns = {"agent", "deviation_tenths", "payoff", "matches_rerun"};
  for (size_t i = 0; i < bids.size(); ++i)
    for (int dev = 0; dev <= 100; dev += 10) {
      long rec = counterfactual_reconstruct(int(i), out.feedback[i], bids[i], dev);
      long rr = vcg_rerun_payoff(bids, int(i), bids[i], dev);
      t.add({std::to_string(i), std::to_string(dev), std::to_string(rec),
             rec == rr ? "1" : "0"});
    }
  em.write_table("counterfactuals", t);

  // privacy frontier of a minimal strategy-proof example: a single-item
  // second-price auction with two agents and two value types
  FiniteMechanism mech;
  mech.type_counts = {2, 2};
  mech.outcomes = 4;  // (winner, price) pairs: A@lo, A@hi... encoded 0..3
  // types: 0 = low value (1), 1 = high value (2); winner pays opponent's bid;
  // ties to agent 0. Outcomes: 0 = A wins pay 1, 1 = A wins pay 2,
  // 2 = B wins pay 1, 3 = B wins pay 2.
  mech.f = {0, 2, 0, 1};  // profiles (a,b): (0,0) (0,1) (1,0) (1,1)
  mech.utilities = {Vec{0, 1, -1, 0, 0, 0, 0, 0}, Vec{0, 0, 0, 0, 0, 1, -1, 0}};
  mech.validate();
  json mj;
  mj["mechanism"] = mechanism_to_json(mech);
  mj["strategy_proof"] = is_strategy_proof(mech).strategy_proof;
  for (int agent = 0; agent < 2; ++agent) {
    FeedbackPolicy canon = canonical_max_policy(mech, agent);
    mj["canonical_policy_agent" + std::to_string(agent)] = policy_to_json(canon);
  }
  em.write_json("feedback_policies.json", mj);
}

int run_config(const json& cfg, const std::string& cfg_text, const fs::path& outdir,
               uint64_t seed_override, int jobs, const std::string& format) {
  std::string mode = require<std::string>(cfg, "mode");
  std::string name = get_or<std::string>(cfg, "name", "scenario");
  Emitter em;
  em.outdir = outdir;
  em.format = format;
  if (mode == "simulate")
    run_simulate(cfg, seed_override, em);
  else if (mode == "sweep")
    run_sweep(cfg, seed_override, jobs, em);
  else if (mode == "fluid")
    run_fluid(cfg, em);
  else if (mode == "steady")
    run_steady(cfg, em);
  else if (mode == "basins")
    run_basins(cfg, em);
  else if (mode == "chaos")
    run_chaos(cfg, em);
  else if (mode == "bertrand")
    run_bertrand(cfg, em);
  else if (mode == "region")
    run_region(cfg, em);
  else if (mode == "mechanisms")
    run_mechanisms(cfg, em);
  else
    throw ConfigError("unknown mode \"" + mode + "\"");
  uint64_t seed = seed_override;
  if (!seed && cfg.contains("run")) seed = get_or<uint64_t>(cfg.at("run"), "seed", 0);
  em.manifest(name, fnv1a64(cfg_text), seed);
  return 0;
}

// Validate every bundled scenario parses and has the mode-required fields.
// Parsing only; no computation.
void validate_bundled() {
  for (const auto& s : kScenarios) {
    json cfg = json::parse(s.config);
    std::string mode = require<std::string>(cfg, "mode");
    if (mode != "region" && mode != "mechanisms") {
      Game g = parse_game(cfg);
      parse_agents(cfg, g);
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Learning-dynamics toolkit: simulation, fluid limits, hybrid integration, "
               "closed-form analysis, and mechanism feedback design"};
  app.require_subcommand(1);

  auto* list_cmd = app.add_subcommand("list", "List bundled scenario configs");
  bool list_json = false;
  list_cmd->add_flag("--json", list_json, "Print the catalog as JSON");

  auto* show_cmd = app.add_subcommand("show", "Print one bundled config");
  std::string show_name;
  show_cmd->add_option("name", show_name, "Scenario name")->required();

  auto* dump_cmd = app.add_subcommand("dump", "Write all bundled configs to a directory");
  std::string dump_dir = "scenarios";
  dump_cmd->add_option("--out", dump_dir, "Target directory");

  auto* run_cmd = app.add_subcommand("run", "Run a scenario config");
  std::string config_arg, out_dir, format = "csv";
  uint64_t seed_override = 0;
  int jobs = 0;
  run_cmd->add_option("--config", config_arg, "Config file path or bundled scenario name")
      ->required();
  run_cmd->add_option("--out", out_dir, "Output directory (default out/<name>)");
  run_cmd->add_option("--seed", seed_override, "Override the base seed");
  run_cmd->add_option("--jobs", jobs, "Worker bound for sweeps (0 = hardware)");
  run_cmd->add_option("--format", format, "Table format")
      ->check(CLI::IsMember({"csv", "json"}));

  CLI11_PARSE(app, argc, argv);

  try {
    if (*list_cmd) {
      validate_bundled();
      if (list_json) {
        json j = json::array();
        for (const auto& s : kScenarios)
          j.push_back({{"name", s.name}, {"description", s.description}});
        std::printf("%s\n", j.dump(2).c_str());
      } else {
        for (const auto& s : kScenarios) std::printf("%-18s %s\n", s.name, s.description);
      }
      return 0;
    }
    if (*show_cmd) {
      const Scenario* s = find_scenario(show_name);
      if (!s) throw ConfigError("no bundled scenario named \"" + show_name + "\"");
      std::printf("%s\n", s->config);
      return 0;
    }
    if (*dump_cmd) {
      fs::create_directories(dump_dir);
      for (const auto& s : kScenarios) {
        std::ofstream out(fs::path(dump_dir) / (std::string(s.name) + ".json"));
        if (!out) throw IOError("cannot write into " + dump_dir);
        out << s.config << "\n";
      }
      std::printf("wrote %zu configs to %s\n", std::size(kScenarios), dump_dir.c_str());
      return 0;
    }
    if (*run_cmd) {
      std::string text;
      std::string name = config_arg;
      if (const Scenario* s = find_scenario(config_arg)) {
        text = s->config;
      } else {
        std::ifstream in(config_arg, std::ios::binary);
        if (!in) throw IOError("cannot read config " + config_arg);
        std::ostringstream ss;
        ss << in.rdbuf();
        text = ss.str();
      }
      json cfg;
      try {
        cfg = json::parse(text);
      } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
      }
      name = get_or<std::string>(cfg, "name", "scenario");
      fs::path outdir = out_dir.empty() ? fs::path("out") / name : fs::path(out_dir);
      return run_config(cfg, text, outdir, seed_override, jobs, format);
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return 3;
  } catch (const IOError& e) {
    std::fprintf(stderr, "i/o error: %s\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return 3;
  }
  return 0;
}
