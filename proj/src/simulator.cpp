#include "learndyn/simulator.hpp"

#include <atomic>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace learndyn {

bool EpisodeResult::nash_played_majority(const Game& game, const ActionProfile& nash) const {
  long n = total_counts[game.profile_index(nash)];
  return 2 * n > iterations;
}

EpisodeResult run_episode(const Game& game, const std::vector<ReinforcerSpec>& specs,
                          const EpisodeConfig& config) {
  const int n = game.players();
  if (int(specs.size()) != n) throw std::invalid_argument("one spec per player");
  for (const auto& s : specs) {
    s.validate();
    if (s.family == UpdateFamily::separable_custom)
      throw std::invalid_argument("discrete simulation supports the Q families only");
  }

  std::vector<std::mt19937_64> agent_rng;
  for (int i = 0; i < n; ++i) agent_rng.push_back(make_stream(config.seed, uint64_t(i) + 1));
  auto payoff_rng = make_stream(config.seed, 100);

  std::vector<Vec> theta(n);
  for (int i = 0; i < n; ++i) theta[i] = initial_theta(specs[i], game, i);

  const long iters = config.iterations;
  const long window = config.window(iters);
  const long win_start = iters - window;

  EpisodeResult res;
  res.iterations = iters;
  res.theta_trace.resize(n);
  res.window_counts.assign(game.num_profiles(), 0);
  res.total_counts.assign(game.num_profiles(), 0);
  res.local_time.assign(n, 0.0);
  bool two_action = true;
  for (int i = 0; i < n; ++i) two_action = two_action && game.num_actions(i) == 2;

  ActionProfile prof(n);
  for (long k = 0; k < iters; ++k) {
    if (k % config.snapshot_stride == 0) {
      res.snapshot_iters.push_back(k);
      for (int i = 0; i < n; ++i) res.theta_trace[i].push_back(theta[i]);
    }
    if (k >= win_start && two_action)
      for (int i = 0; i < n; ++i)
        if (theta[i][0] >= theta[i][1]) res.local_time[i] += 1.0;

    for (int i = 0; i < n; ++i) prof[i] = sample_action(theta[i], specs[i], agent_rng[i]);
    Vec r = game.payoff(prof, payoff_rng);

    size_t pi = game.profile_index(prof);
    res.total_counts[pi]++;
    if (k >= win_start) res.window_counts[pi]++;

    for (int i = 0; i < n; ++i) {
      const auto& spec = specs[i];
      if (spec.family == UpdateFamily::q_async) {
        theta[i] = q_update_async(theta[i], prof[i], r[i], spec);
      } else {
        // counterfactual rewards with opponents' realized actions held fixed;
        // stochastic games fall back to exact expected payoffs
        Vec cf(theta[i].size());
        ActionProfile p2 = prof;
        for (size_t a = 0; a < theta[i].size(); ++a) {
          p2[i] = int(a);
          cf[a] = game.expected_payoff(p2)[i];
        }
        theta[i] = q_update_sync(theta[i], cf, spec);
      }
      for (double v : theta[i])
        if (!std::isfinite(v)) {
          res.diverged = true;
          res.final_theta = theta;
          return res;
        }
    }
  }

  for (int i = 0; i < n; ++i) res.local_time[i] /= double(window);
  res.final_theta = theta;

  // argmax persistence over the snapshots inside the window
  res.learned_actions.assign(n, -1);
  for (int i = 0; i < n; ++i) {
    std::vector<Vec> tail;
    for (size_t k = 0; k < res.snapshot_iters.size(); ++k)
      if (res.snapshot_iters[k] >= win_start) tail.push_back(res.theta_trace[i][k]);
    tail.push_back(theta[i]);
    int cand = argmax_set(theta[i]).front();
    if (detect_learning(tail, cand) == LearnVerdict::learned) res.learned_actions[i] = cand;
  }
  return res;
}

LearnVerdict detect_learning(const std::vector<Vec>& trace_window, int action) {
  if (trace_window.empty()) throw std::invalid_argument("empty trace");
  for (const auto& th : trace_window) {
    auto best = argmax_set(th);
    bool in = false;
    for (int a : best) in = in || a == action;
    if (!in) return LearnVerdict::not_learned;
  }
  return LearnVerdict::learned;
}

std::string SweepResult::csv() const {
  std::ostringstream os;
  os << "params,seeds,failures,nash_fraction,mean_local_time,se_local_time,learned_fraction\n";
  for (const auto& c : cells) {
    std::string p = c.params.dump();
    for (auto& ch : p)
      if (ch == ',') ch = ';';
    os << p << "," << c.seeds << "," << c.failures << "," << c.nash_fraction << ","
       << c.mean_local_time << "," << c.se_local_time << "," << c.learned_fraction << "\n";
  }
  return os.str();
}

SweepResult sweep(
    const std::function<std::pair<Game, std::vector<ReinforcerSpec>>(const nlohmann::json&)>& make,
    const std::vector<nlohmann::json>& grid, int seeds_per_cell, const EpisodeConfig& base,
    const ActionProfile& nash, int jobs) {
  if (grid.empty()) throw std::invalid_argument("empty parameter grid");
  if (jobs <= 0) jobs = int(std::thread::hardware_concurrency());
  if (jobs <= 0) jobs = 1;

  struct Task {
    size_t cell;
    int seed_idx;
  };
  std::vector<Task> tasks;
  for (size_t c = 0; c < grid.size(); ++c)
    for (int s = 0; s < seeds_per_cell; ++s) tasks.push_back({c, s});

  struct Outcome {
    bool failed = false;
    bool nash = false;
    bool learned = false;
    double local_time = 0;
  };
  std::vector<Outcome> out(tasks.size());
  std::atomic<size_t> next{0};

  auto worker = [&]() {
    while (true) {
      size_t k = next.fetch_add(1);
      if (k >= tasks.size()) break;
      const Task& task = tasks[k];
      auto [game, specs] = make(grid[task.cell]);
      EpisodeConfig cfg = base;
      cfg.seed = base.seed + uint64_t(task.cell) * 1000003ULL + uint64_t(task.seed_idx);
      EpisodeResult r = run_episode(game, specs, cfg);
      Outcome& o = out[k];
      o.failed = r.diverged;
      if (!r.diverged) {
        if (!nash.empty()) o.nash = r.nash_played_majority(game, nash);
        o.learned = true;
        for (int a : r.learned_actions) o.learned = o.learned && a >= 0;
        double lt = 0;
        for (double v : r.local_time) lt += v;
        o.local_time = lt / double(r.local_time.size());
      }
    }
  };
  std::vector<std::thread> pool;
  for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
  for (auto& th : pool) th.join();

  SweepResult res;
  for (size_t c = 0; c < grid.size(); ++c) {
    SweepCell cell;
    cell.params = grid[c];
    double sum = 0, sumsq = 0;
    int ok = 0, nash_n = 0, learned_n = 0;
    for (size_t k = 0; k < tasks.size(); ++k) {
      if (tasks[k].cell != c) continue;
      cell.seeds++;
      if (out[k].failed) {
        cell.failures++;
        continue;
      }
      ok++;
      if (out[k].nash) nash_n++;
      if (out[k].learned) learned_n++;
      sum += out[k].local_time;
      sumsq += out[k].local_time * out[k].local_time;
    }
    if (ok > 0) {
      cell.nash_fraction = double(nash_n) / ok;
      cell.learned_fraction = double(learned_n) / ok;
      cell.mean_local_time = sum / ok;
      double var = std::max(0.0, sumsq / ok - cell.mean_local_time * cell.mean_local_time);
      cell.se_local_time = ok > 1 ? std::sqrt(var / ok) : 0.0;
    }
    res.cells.push_back(std::move(cell));
  }
  return res;
}

}  // namespace learndyn
