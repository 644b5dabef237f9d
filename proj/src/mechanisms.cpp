#include "learndyn/mechanisms.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <numeric>
#include <stdexcept>

namespace learndyn {

int FiniteMechanism::num_profiles() const {
  int n = 1;
  for (int c : type_counts) n *= c;
  return n;
}

int FiniteMechanism::profile_index(const std::vector<int>& types) const {
  int idx = 0;
  for (size_t i = 0; i < type_counts.size(); ++i) idx = idx * type_counts[i] + types[i];
  return idx;
}

int FiniteMechanism::opp_profiles(int agent) const {
  int n = 1;
  for (size_t i = 0; i < type_counts.size(); ++i)
    if (int(i) != agent) n *= type_counts[i];
  return n;
}

int FiniteMechanism::outcome_vs(int agent, int own, int opp) const {
  std::vector<int> types(type_counts.size());
  for (int i = int(type_counts.size()) - 1; i >= 0; --i) {
    if (i == agent) continue;
    types[i] = opp % type_counts[i];
    opp /= type_counts[i];
  }
  types[agent] = own;
  return f[profile_index(types)];
}

void FiniteMechanism::validate() const {
  if (type_counts.empty() || outcomes <= 0) throw std::invalid_argument("empty mechanism");
  for (int c : type_counts)
    if (c <= 0) throw std::invalid_argument("empty type space");
  if (int(f.size()) != num_profiles()) throw std::invalid_argument("f not total");
  for (int x : f)
    if (x < 0 || x >= outcomes) throw std::invalid_argument("outcome out of range");
  if (int(utilities.size()) != agents()) throw std::invalid_argument("utilities not total");
  for (size_t i = 0; i < utilities.size(); ++i)
    if (int(utilities[i].size()) != outcomes * type_counts[i])
      throw std::invalid_argument("utility table size mismatch");
}

OutcomeQuotient outcome_quotient(const FiniteMechanism& mech, int agent) {
  OutcomeQuotient q;
  q.agent = agent;
  q.class_of.assign(mech.outcomes, -1);
  for (int x = 0; x < mech.outcomes; ++x) {
    for (size_t c = 0; c < q.classes.size(); ++c) {
      int rep = q.classes[c][0];
      bool same = true;
      for (int t = 0; t < mech.type_counts[agent]; ++t)
        same = same && mech.util(agent, x, t) == mech.util(agent, rep, t);
      if (same) {
        q.class_of[x] = int(c);
        q.classes[c].push_back(x);
        break;
      }
    }
    if (q.class_of[x] < 0) {
      q.class_of[x] = int(q.classes.size());
      q.classes.push_back({x});
    }
  }
  return q;
}

SPReport is_strategy_proof(const FiniteMechanism& mech) {
  mech.validate();
  SPReport rep;
  for (int i = 0; i < mech.agents(); ++i) {
    int m = mech.opp_profiles(i);
    for (int opp = 0; opp < m; ++opp)
      for (int own = 0; own < mech.type_counts[i]; ++own) {
        double truthful = mech.util(i, mech.outcome_vs(i, own, opp), own);
        for (int dev = 0; dev < mech.type_counts[i]; ++dev)
          if (mech.util(i, mech.outcome_vs(i, dev, opp), own) > truthful) {
            rep.strategy_proof = false;
            rep.agent = i;
            rep.own_type = own;
            rep.deviation = dev;
            rep.opp_profile = opp;
            return rep;
          }
      }
  }
  return rep;
}

std::vector<int> menu(const FiniteMechanism& mech, int agent, int opp_profile) {
  OutcomeQuotient q = outcome_quotient(mech, agent);
  std::vector<int> out;
  for (int own = 0; own < mech.type_counts[agent]; ++own)
    out.push_back(q.class_of[mech.outcome_vs(agent, own, opp_profile)]);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

int FeedbackPolicy::cell_of(int opp) const {
  for (size_t c = 0; c < cells.size(); ++c)
    for (int e : cells[c])
      if (e == opp) return int(c);
  return -1;
}

namespace {

void normalize(std::vector<std::vector<int>>& cells) {
  for (auto& c : cells) std::sort(c.begin(), c.end());
  std::sort(cells.begin(), cells.end());
}

}  // namespace

FeedbackPolicy make_policy(const FiniteMechanism& mech, int agent,
                           const std::vector<std::vector<int>>& cells_in) {
  int m = mech.opp_profiles(agent);
  std::vector<std::vector<int>> cells = cells_in;
  normalize(cells);
  std::vector<int> seen(m, 0);
  for (const auto& c : cells)
    for (int e : c) {
      if (e < 0 || e >= m || seen[e]) throw std::invalid_argument("not a partition");
      seen[e] = 1;
    }
  for (int s : seen)
    if (!s) throw std::invalid_argument("not a partition");

  FeedbackPolicy p;
  p.agent = agent;
  p.cells = cells;
  OutcomeQuotient q = outcome_quotient(mech, agent);
  int nt = mech.type_counts[agent];
  p.factor.assign(size_t(nt) * cells.size(), -1);
  p.valid = true;
  for (size_t c = 0; c < cells.size() && p.valid; ++c)
    for (int own = 0; own < nt && p.valid; ++own) {
      for (int e : cells[c]) {
        int cls = q.class_of[mech.outcome_vs(agent, own, e)];
        int& g = p.factor[size_t(own) * cells.size() + c];
        if (g < 0)
          g = cls;
        else if (g != cls)
          p.valid = false;
      }
    }
  if (!p.valid) p.factor.clear();
  return p;
}

FeedbackPolicy canonical_max_policy(const FiniteMechanism& mech, int agent) {
  OutcomeQuotient q = outcome_quotient(mech, agent);
  int m = mech.opp_profiles(agent);
  int nt = mech.type_counts[agent];
  std::map<std::vector<int>, std::vector<int>> groups;
  for (int opp = 0; opp < m; ++opp) {
    std::vector<int> key(nt);
    for (int own = 0; own < nt; ++own) key[own] = q.class_of[mech.outcome_vs(agent, own, opp)];
    groups[key].push_back(opp);
  }
  std::vector<std::vector<int>> cells;
  for (auto& [k, v] : groups) cells.push_back(v);
  return make_policy(mech, agent, cells);
}

FeedbackPolicy menu_set_policy(const FiniteMechanism& mech, int agent) {
  int m = mech.opp_profiles(agent);
  std::map<std::vector<int>, std::vector<int>> groups;
  for (int opp = 0; opp < m; ++opp) groups[menu(mech, agent, opp)].push_back(opp);
  std::vector<std::vector<int>> cells;
  for (auto& [k, v] : groups) cells.push_back(v);
  return make_policy(mech, agent, cells);
}

namespace {

// p coarsens q: every q-cell lies inside one p-cell.
bool coarsens(const FeedbackPolicy& p, const FeedbackPolicy& q) {
  for (const auto& qc : q.cells) {
    int pc = p.cell_of(qc[0]);
    for (int e : qc)
      if (p.cell_of(e) != pc) return false;
  }
  return true;
}

}  // namespace

PrivacyOrder privacy_compare(const FeedbackPolicy& p, const FeedbackPolicy& q) {
  if (p.agent != q.agent) throw std::invalid_argument("policies for different agents");
  bool pq = coarsens(p, q), qp = coarsens(q, p);
  if (pq && qp) return PrivacyOrder::equal;
  if (pq) return PrivacyOrder::more_private;
  if (qp) return PrivacyOrder::less_private;
  return PrivacyOrder::incomparable;
}

namespace {

std::vector<std::vector<int>> partition_meet(const std::vector<std::vector<int>>& a,
                                             const std::vector<std::vector<int>>& b) {
  std::map<std::pair<int, int>, std::vector<int>> groups;
  auto cell_of = [](const std::vector<std::vector<int>>& cells, int e) {
    for (size_t c = 0; c < cells.size(); ++c)
      for (int x : cells[c])
        if (x == e) return int(c);
    return -1;
  };
  for (size_t c = 0; c < a.size(); ++c)
    for (int e : a[c]) groups[{int(c), cell_of(b, e)}].push_back(e);
  std::vector<std::vector<int>> out;
  for (auto& [k, v] : groups) out.push_back(v);
  return out;
}

std::vector<std::vector<int>> partition_join(const std::vector<std::vector<int>>& a,
                                             const std::vector<std::vector<int>>& b, int n) {
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  auto merge_cells = [&](const std::vector<std::vector<int>>& cells) {
    for (const auto& c : cells)
      for (size_t k = 1; k < c.size(); ++k) parent[find(c[k])] = find(c[0]);
  };
  merge_cells(a);
  merge_cells(b);
  std::map<int, std::vector<int>> groups;
  for (int e = 0; e < n; ++e) groups[find(e)].push_back(e);
  std::vector<std::vector<int>> out;
  for (auto& [k, v] : groups) out.push_back(v);
  return out;
}

}  // namespace

std::pair<FeedbackPolicy, FeedbackPolicy> lattice_meet_join(const FiniteMechanism& mech,
                                                            const FeedbackPolicy& p,
                                                            const FeedbackPolicy& q) {
  if (p.agent != q.agent) throw std::invalid_argument("policies for different agents");
  int n = mech.opp_profiles(p.agent);
  FeedbackPolicy meet = make_policy(mech, p.agent, partition_meet(p.cells, q.cells));
  FeedbackPolicy join = make_policy(mech, p.agent, partition_join(p.cells, q.cells, n));
  if (!join.valid) {
    // descend to the valid sublattice (= refinements of the canonical policy)
    FeedbackPolicy canon = canonical_max_policy(mech, p.agent);
    join = make_policy(mech, p.agent, partition_meet(join.cells, canon.cells));
  }
  return {meet, join};
}

std::vector<std::vector<std::vector<int>>> all_partitions(int n) {
  if (n < 1 || n > 10) throw std::invalid_argument("partition enumeration supports 1..10");
  std::vector<std::vector<std::vector<int>>> out;
  std::vector<std::vector<int>> cur;
  std::function<void(int)> rec = [&](int e) {
    if (e == n) {
      out.push_back(cur);
      return;
    }
    for (auto& c : cur) {
      c.push_back(e);
      rec(e + 1);
      c.pop_back();
    }
    cur.push_back({e});
    rec(e + 1);
    cur.pop_back();
  };
  rec(0);
  return out;
}

FeedbackPolicy brute_force_max_policy(const FiniteMechanism& mech, int agent) {
  int n = mech.opp_profiles(agent);
  std::vector<FeedbackPolicy> valid;
  for (const auto& cells : all_partitions(n)) {
    FeedbackPolicy p = make_policy(mech, agent, cells);
    if (p.valid) valid.push_back(p);
  }
  for (const auto& p : valid) {
    bool greatest = true;
    for (const auto& q : valid) {
      PrivacyOrder ord = privacy_compare(p, q);
      greatest = greatest && (ord == PrivacyOrder::more_private || ord == PrivacyOrder::equal);
    }
    if (greatest) return p;
  }
  throw std::runtime_error("no greatest valid policy");
}

nlohmann::json mechanism_to_json(const FiniteMechanism& mech) {
  nlohmann::json j;
  j["type_counts"] = mech.type_counts;
  j["outcomes"] = mech.outcomes;
  j["f"] = mech.f;
  j["utilities"] = mech.utilities;
  return j;
}

nlohmann::json policy_to_json(const FeedbackPolicy& p) {
  nlohmann::json j;
  j["agent"] = p.agent;
  j["cells"] = p.cells;
  j["valid"] = p.valid;
  if (p.valid) j["factor"] = p.factor;
  return j;
}

// ---------------------------------------------------------------------------

VcgOutcome vcg_two_slot(const std::vector<int>& bids) {
  const int n = int(bids.size());
  if (n < 3) throw std::invalid_argument("need at least three bidders");
  for (int b : bids)
    if (b < 0 || b > 100) throw std::invalid_argument("bid off the price grid");
  VcgOutcome out;
  out.ranking.resize(n);
  std::iota(out.ranking.begin(), out.ranking.end(), 0);
  std::sort(out.ranking.begin(), out.ranking.end(), [&](int a, int b) {
    if (bids[a] != bids[b]) return bids[a] > bids[b];
    return a < b;
  });
  out.winners = {out.ranking[0], out.ranking[1]};
  int v2 = bids[out.ranking[1]], v3 = bids[out.ranking[2]];
  out.payments.assign(n, 0);
  out.payments[out.winners[0]] = 80L * v3 + 20L * v2;
  out.payments[out.winners[1]] = 80L * v3;
  out.feedback.resize(n);
  for (int k = 0; k < n; ++k) {
    VcgFeedback fb;
    for (int r : out.ranking) {
      if (r == k) continue;
      if (fb.i1 < 0) {
        fb.p1 = bids[r];
        fb.i1 = r;
      } else if (fb.i2 < 0) {
        fb.p2 = bids[r];
        fb.i2 = r;
        break;
      }
    }
    out.feedback[k] = fb;
  }
  return out;
}

long counterfactual_reconstruct(int agent, const VcgFeedback& fb, int value_tenths,
                                int dev_tenths) {
  auto beats_me = [&](int price, int idx) {
    return price > dev_tenths || (price == dev_tenths && idx < agent);
  };
  int nb = int(beats_me(fb.p1, fb.i1)) + int(beats_me(fb.p2, fb.i2));
  if (nb == 0) return 100L * value_tenths - (80L * fb.p2 + 20L * fb.p1);
  if (nb == 1) return 80L * (value_tenths - fb.p2);
  return 0;
}

long vcg_rerun_payoff(const std::vector<int>& bids, int agent, int value_tenths,
                      int dev_tenths) {
  std::vector<int> b = bids;
  b[agent] = dev_tenths;
  VcgOutcome out = vcg_two_slot(b);
  if (out.winners[0] == agent) return 100L * value_tenths - out.payments[agent];
  if (out.winners[1] == agent) return 80L * value_tenths - out.payments[agent];
  return 0;
}

}  // namespace learndyn
