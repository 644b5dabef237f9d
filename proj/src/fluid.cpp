#include "learndyn/fluid.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace learndyn {

namespace {

// Action distribution of agent j inside the domain where its greedy action is
// `greedy`. Custom separable reinforcers are greedy policies: point mass.
Vec domain_policy(const ReinforcerSpec& spec, int d, int greedy) {
  if (spec.family == UpdateFamily::separable_custom) {
    Vec p(d, 0.0);
    p[greedy] = 1.0;
    return p;
  }
  Vec p(d, spec.epsilon / d);
  p[greedy] += 1.0 - spec.epsilon;
  return p;
}

// E_{pi_{-i}}[ r^i(a, .) ] for every own action a, by exact enumeration of
// opponent profiles.
Vec expected_rewards(const Game& game, const std::vector<Vec>& policies, int i) {
  const int n = game.players();
  const int d = game.num_actions(i);
  Vec out(d, 0.0);
  ActionProfile prof(n, 0);
  for (int a = 0; a < d; ++a) {
    prof[i] = a;
    // odometer over the opponents
    std::vector<int> opp;
    for (int j = 0; j < n; ++j)
      if (j != i) opp.push_back(j);
    for (int j : opp) prof[j] = 0;
    double acc = 0;
    while (true) {
      double w = 1.0;
      for (int j : opp) w *= policies[j][prof[j]];
      if (w > 0) acc += w * game.expected_payoff(prof)[i];
      int k = int(opp.size()) - 1;
      while (k >= 0) {
        if (++prof[opp[k]] < game.num_actions(opp[k])) break;
        prof[opp[k]] = 0;
        --k;
      }
      if (k < 0) break;
    }
    out[a] = acc;
  }
  return out;
}

}  // namespace

FieldPiece PiecewiseField::build_piece(const DomainLabel& label) const {
  const int n = game.players();
  std::vector<Vec> policies(n);
  bool all_q = true;
  for (int j = 0; j < n; ++j) {
    policies[j] = domain_policy(specs[j], game.num_actions(j), label[j]);
    if (specs[j].family == UpdateFamily::separable_custom) all_q = false;
  }
  std::vector<Vec> er(n);
  for (int i = 0; i < n; ++i) er[i] = expected_rewards(game, policies, i);

  FieldPiece pc;
  pc.label = label;
  if (all_q) {
    pc.affine = true;
    pc.A = Mat(dim, dim);
    pc.b = Vec(dim, 0.0);
    for (int i = 0; i < n; ++i) {
      const auto& s = specs[i];
      for (int a = 0; a < block_dim[i]; ++a) {
        double rate = s.alpha;
        if (s.family == UpdateFamily::q_async) rate *= policies[i][a];
        int row = block_offset[i] + a;
        pc.A(row, row) += -rate;
        pc.A(row, block_offset[i] + label[i]) += rate * s.gamma;
        pc.b[row] = rate * er[i][a];
      }
    }
  } else {
    pc.affine = false;
    auto specs_c = specs;
    auto off = block_offset;
    auto bd = block_dim;
    int dim_c = dim;
    pc.eval_fn = [specs_c, er, label, off, bd, dim_c](const Vec& theta) {
      Vec out(dim_c, 0.0);
      for (size_t i = 0; i < specs_c.size(); ++i) {
        const auto& s = specs_c[i];
        Vec block(theta.begin() + off[i], theta.begin() + off[i] + bd[i]);
        if (s.family == UpdateFamily::separable_custom) {
          Vec rates = s.custom->rates(block, label[i]);
          double v = s.custom->V(block);
          for (int a = 0; a < bd[i]; ++a)
            out[off[i] + a] = rates[a] * (s.custom->U(block[a], er[i][a]) + v);
        } else {
          for (int a = 0; a < bd[i]; ++a) {
            double rate = s.alpha;
            if (s.family == UpdateFamily::q_async) {
              double pol = s.epsilon / bd[i] + (a == label[i] ? 1.0 - s.epsilon : 0.0);
              rate *= pol;
            }
            out[off[i] + a] = rate * (er[i][a] + s.gamma * block[label[i]] - block[a]);
          }
        }
      }
      return out;
    };
  }
  return pc;
}

const FieldPiece& PiecewiseField::piece(const DomainLabel& label) const {
  std::lock_guard<std::mutex> lock(cache_->mu);
  auto it = cache_->pieces.find(label);
  if (it == cache_->pieces.end()) it = cache_->pieces.emplace(label, build_piece(label)).first;
  return it->second;
}

DomainLabel PiecewiseField::greedy_label(const Vec& theta) const {
  DomainLabel lab(block_dim.size());
  for (size_t b = 0; b < block_dim.size(); ++b) {
    int best = 0;
    for (int a = 1; a < block_dim[b]; ++a)
      if (theta[block_offset[b] + a] > theta[block_offset[b] + best]) best = a;
    lab[b] = best;
  }
  return lab;
}

SwitchedField PiecewiseField::switched() const {
  SwitchedField f;
  f.dim = dim;
  f.block_offset = block_offset;
  f.block_dim = block_dim;
  PiecewiseField self = *this;  // shares the piece cache
  f.eval = [self](const Vec& theta, const DomainLabel& label) { return self.eval(theta, label); };
  return f;
}

nlohmann::json PiecewiseField::to_json() const {
  size_t total = 1;
  for (int d : block_dim) total *= size_t(d);
  if (total <= 4096) {
    DomainLabel lab(block_dim.size(), 0);
    while (true) {
      piece(lab);
      int k = int(lab.size()) - 1;
      while (k >= 0) {
        if (++lab[k] < block_dim[k]) break;
        lab[k] = 0;
        --k;
      }
      if (k < 0) break;
    }
  }
  nlohmann::json pieces = nlohmann::json::array();
  std::lock_guard<std::mutex> lock(cache_->mu);
  for (const auto& [lab, pc] : cache_->pieces) {
    nlohmann::json j;
    j["label"] = lab;
    j["affine"] = pc.affine;
    if (pc.affine) {
      nlohmann::json rows = nlohmann::json::array();
      for (int r = 0; r < pc.A.rows; ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (int c = 0; c < pc.A.cols; ++c) row.push_back(pc.A(r, c));
        rows.push_back(row);
      }
      j["A"] = rows;
      j["b"] = pc.b;
    }
    pieces.push_back(j);
  }
  nlohmann::json out;
  out["dim"] = dim;
  out["block_dim"] = block_dim;
  out["pieces"] = pieces;
  return out;
}

PiecewiseField build_field(const Game& game, const std::vector<ReinforcerSpec>& specs) {
  if (int(specs.size()) != game.players()) throw std::invalid_argument("one spec per player");
  if (!game.has_expected())
    throw std::invalid_argument("fluid construction needs exact expected payoffs");
  for (const auto& s : specs) s.validate();
  PiecewiseField f;
  f.game = game;
  f.specs = specs;
  f.dim = 0;
  for (int i = 0; i < game.players(); ++i) {
    f.block_offset.push_back(f.dim);
    f.block_dim.push_back(game.num_actions(i));
    f.dim += game.num_actions(i);
  }
  return f;
}

FieldCheckReport verify_field_monte_carlo(const PiecewiseField& field, const Vec& point,
                                          int samples, uint64_t seed) {
  const Game& game = field.game;
  const int n = game.players();
  DomainLabel label = field.greedy_label(point);
  // interior check: strict argmax per block
  for (int b = 0; b < n; ++b)
    for (int a = 0; a < field.block_dim[b]; ++a)
      if (a != label[b] &&
          point[field.block_offset[b] + a] >= point[field.block_offset[b] + label[b]])
        throw std::invalid_argument("point is on a greedy boundary");
  for (const auto& s : field.specs)
    if (s.family == UpdateFamily::separable_custom)
      throw std::invalid_argument("Monte Carlo check supports the Q families only");

  std::vector<std::mt19937_64> agent_rng;
  for (int i = 0; i < n; ++i) agent_rng.push_back(make_stream(seed, uint64_t(i) + 1));
  auto payoff_rng = make_stream(seed, 100);

  Vec sum(field.dim, 0.0), sumsq(field.dim, 0.0);
  ActionProfile prof(n);
  for (int s = 0; s < samples; ++s) {
    for (int i = 0; i < n; ++i) {
      Vec block(point.begin() + field.block_offset[i],
                point.begin() + field.block_offset[i] + field.block_dim[i]);
      prof[i] = sample_action(block, field.specs[i], agent_rng[i]);
    }
    Vec r = game.payoff(prof, payoff_rng);
    for (int i = 0; i < n; ++i) {
      const auto& spec = field.specs[i];
      Vec block(point.begin() + field.block_offset[i],
                point.begin() + field.block_offset[i] + field.block_dim[i]);
      Vec next;
      if (spec.family == UpdateFamily::q_async) {
        next = q_update_async(block, prof[i], r[i], spec);
      } else {
        Vec cf(field.block_dim[i]);
        ActionProfile p2 = prof;
        for (int a = 0; a < field.block_dim[i]; ++a) {
          p2[i] = a;
          cf[a] = game.expected_payoff(p2)[i];
        }
        next = q_update_sync(block, cf, spec);
      }
      for (int a = 0; a < field.block_dim[i]; ++a) {
        double d = next[a] - block[a];
        sum[field.block_offset[i] + a] += d;
        sumsq[field.block_offset[i] + a] += d * d;
      }
    }
  }

  Vec f = field.eval(point, label);
  FieldCheckReport rep;
  rep.samples = samples;
  rep.mean_dev.resize(field.dim);
  rep.std_err.resize(field.dim);
  for (int k = 0; k < field.dim; ++k) {
    double mean = sum[k] / samples;
    double var = std::max(0.0, sumsq[k] / samples - mean * mean);
    rep.mean_dev[k] = mean - f[k];
    rep.std_err[k] = std::sqrt(var / samples);
    rep.max_abs_dev = std::max(rep.max_abs_dev, std::abs(rep.mean_dev[k]));
    if (rep.std_err[k] > 0)
      rep.max_sigmas = std::max(rep.max_sigmas, std::abs(rep.mean_dev[k]) / rep.std_err[k]);
    else if (std::abs(rep.mean_dev[k]) > 1e-12)
      rep.max_sigmas = std::numeric_limits<double>::infinity();
  }
  return rep;
}

JumpPath simulate_scaled_process(const Game& game, const std::vector<ReinforcerSpec>& specs,
                                 int n, double horizon, uint64_t seed,
                                 const std::vector<Vec>& init) {
  if (n < 1) throw std::invalid_argument("scaling index must be >= 1");
  const int np = game.players();
  std::vector<std::mt19937_64> agent_rng;
  for (int i = 0; i < np; ++i) agent_rng.push_back(make_stream(seed, uint64_t(i) + 1));
  auto payoff_rng = make_stream(seed, 100);
  auto clock_rng = make_stream(seed, 200);
  std::exponential_distribution<double> arrival{double(n)};

  std::vector<Vec> theta = init;
  JumpPath path;
  auto flat = [&]() {
    Vec v;
    for (const auto& b : theta) v.insert(v.end(), b.begin(), b.end());
    return v;
  };
  path.t.push_back(0.0);
  path.theta.push_back(flat());

  double t = 0;
  ActionProfile prof(np);
  while (true) {
    t += arrival(clock_rng);
    if (t > horizon) break;
    for (int i = 0; i < np; ++i) prof[i] = sample_action(theta[i], specs[i], agent_rng[i]);
    Vec r = game.payoff(prof, payoff_rng);
    for (int i = 0; i < np; ++i) {
      const auto& spec = specs[i];
      Vec next;
      if (spec.family == UpdateFamily::q_async) {
        next = q_update_async(theta[i], prof[i], r[i], spec);
      } else if (spec.family == UpdateFamily::q_sync) {
        Vec cf(theta[i].size());
        ActionProfile p2 = prof;
        for (size_t a = 0; a < theta[i].size(); ++a) {
          p2[i] = int(a);
          cf[a] = game.expected_payoff(p2)[i];
        }
        next = q_update_sync(theta[i], cf, spec);
      } else {
        throw std::invalid_argument("jump process supports the Q families only");
      }
      for (size_t a = 0; a < theta[i].size(); ++a)
        theta[i][a] += (next[a] - theta[i][a]) / double(n);
    }
    path.t.push_back(t);
    path.theta.push_back(flat());
  }
  return path;
}

}  // namespace learndyn
