#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "learndyn/util.hpp"

namespace learndyn {

/// Finite direct mechanism: report profiles map to outcomes; each agent has a
/// type-dependent utility table over outcomes.
struct FiniteMechanism {
  std::vector<int> type_counts;         // |types_i| per agent
  int outcomes = 0;                     // |X|
  std::vector<int> f;                   // profile-major (agent 0 most significant) -> outcome
  std::vector<Vec> utilities;           // per agent, flat u[x * types_i + type]

  int agents() const { return int(type_counts.size()); }
  int num_profiles() const;
  int profile_index(const std::vector<int>& types) const;
  /// Opponent-profile index for `agent` (mixed radix over the other agents).
  int opp_profiles(int agent) const;
  int outcome(const std::vector<int>& types) const { return f[profile_index(types)]; }
  /// Outcome when `agent` reports `own` against opponent profile `opp`.
  int outcome_vs(int agent, int own, int opp) const;
  double util(int agent, int x, int type) const {
    return utilities[agent][size_t(x) * type_counts[agent] + type];
  }
  void validate() const;
};

/// Partition of X by agent-indistinguishability: x ~ y iff the agent's utility
/// rows agree for every own type.
struct OutcomeQuotient {
  int agent = 0;
  std::vector<int> class_of;             // per outcome, class id
  std::vector<std::vector<int>> classes;
};

OutcomeQuotient outcome_quotient(const FiniteMechanism& mech, int agent);

struct SPReport {
  bool strategy_proof = true;
  int agent = -1, own_type = -1, deviation = -1, opp_profile = -1;  // witness if false
};

SPReport is_strategy_proof(const FiniteMechanism& mech);

/// Sorted set of agent-outcome class ids reachable by deviations at `opp`.
std::vector<int> menu(const FiniteMechanism& mech, int agent, int opp_profile);

/// Partition of the opponent-profile space through which the agent's outcome
/// map factors. `factor` is set iff valid: factor[own * cells + c] = class id.
struct FeedbackPolicy {
  int agent = 0;
  std::vector<std::vector<int>> cells;  // partition of opponent profiles
  bool valid = false;
  std::vector<int> factor;

  int cell_of(int opp) const;
};

FeedbackPolicy make_policy(const FiniteMechanism& mech, int agent,
                           const std::vector<std::vector<int>>& cells);

/// Coarsest valid policy: groups opponent profiles with identical outcome maps
/// own-type -> agent-outcome class (the pointwise menu function).
FeedbackPolicy canonical_max_policy(const FiniteMechanism& mech, int agent);

/// Partition by equal menu *sets* (may be invalid for some mechanisms).
FeedbackPolicy menu_set_policy(const FiniteMechanism& mech, int agent);

enum class PrivacyOrder { more_private, less_private, equal, incomparable };

/// Coarser partitions reveal less. p more private than q iff p coarsens q.
PrivacyOrder privacy_compare(const FeedbackPolicy& p, const FeedbackPolicy& q);

/// meet: coarsest common refinement; join: finest common coarsening. If the
/// raw join breaks factorization it is re-refined against the canonical
/// maximal policy, which is the join inside the valid sublattice.
std::pair<FeedbackPolicy, FeedbackPolicy> lattice_meet_join(const FiniteMechanism& mech,
                                                            const FeedbackPolicy& p,
                                                            const FeedbackPolicy& q);

/// All partitions of {0..n-1} (Bell enumeration, n <= 10).
std::vector<std::vector<std::vector<int>>> all_partitions(int n);

/// Privacy-maximal valid policy by exhaustive search over partitions.
FeedbackPolicy brute_force_max_policy(const FiniteMechanism& mech, int agent);

nlohmann::json mechanism_to_json(const FiniteMechanism& mech);
nlohmann::json policy_to_json(const FeedbackPolicy& p);

// ---------------------------------------------------------------------------
// Two-slot second-price ad auction. Monetary values in integer tenths; payoffs
// in exact integer traffic*tenths units. Slot 1 gets 100 units of traffic,
// slot 2 gets 80. Ties break toward the smaller agent index.

struct VcgFeedback {
  int p1 = 0, i1 = -1;  // highest opponent bid (tenths) and its holder
  int p2 = 0, i2 = -1;  // second-highest opponent bid and its holder
};

struct VcgOutcome {
  std::vector<int> ranking;   // agent indices, best first
  std::array<int, 2> winners{};
  std::vector<long> payments; // per agent, 0 for losers
  std::vector<VcgFeedback> feedback;
};

VcgOutcome vcg_two_slot(const std::vector<int>& bids_tenths);

/// Payoff of `agent` (value in tenths) when deviating to `dev_tenths`,
/// computed from the feedback alone.
long counterfactual_reconstruct(int agent, const VcgFeedback& fb, int value_tenths,
                                int dev_tenths);

/// Same payoff by rerunning the auction with the deviated bid.
long vcg_rerun_payoff(const std::vector<int>& bids_tenths, int agent, int value_tenths,
                      int dev_tenths);

}  // namespace learndyn
