#pragma once

// Exact finite-horizon MDP for minimum-distortion scheduling, solved by
// backward induction over the states reachable from a start state.
//
// State: the status matrix at a given stage t in [1, theta + 1].
// Action: a maximal independent set of the conflict graph of that state.
// Reward: expected distortion reduction, sum over scheduled vertices of
//         delta_{k,l} * (1 - eps_{i,k}).
// Value:  V(s, t) = max_a [ r(s, a) + sum_s' P_a(s, s') V(s', t + 1) ], V(., theta + 1) = 0.

#include "idnc/core_model.hpp"
#include "idnc/errors.hpp"
#include "idnc/idnc_graph.hpp"
#include "idnc/scheduling.hpp"

#include <cmath>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

namespace idnc {

struct MdpOptions {
  /// Largest conflict graph whose maximal independent sets are enumerated as actions.
  std::size_t vertex_cap = 40;
  /// Largest number of distinct reachable states.
  std::size_t state_cap = 200000;
};

struct TransitionOutcome {
  StatusMatrix next;
  double probability;
};

using TransitionDistribution = std::vector<TransitionOutcome>;

/// Action space of a state: every maximal independent set of its graph
/// (a single empty action when the graph is empty).
inline std::vector<IndependentSet> actions(const IdncGraph& g, const MdpOptions& options = {}) {
  try {
    return enumerate_maximal_independent_sets(g, {options.vertex_cap, 0});
  } catch (const GuardExceeded& e) {
    throw GuardExceeded(std::string("MDP instance too large: ") + e.what());
  }
}

inline std::vector<IndependentSet> actions(const StatusMatrix& f, const ConnectivityMatrix& y,
                                           const MdpOptions& options = {}) {
  return actions(build_graph(y, f), options);
}

/// One outcome per pattern of successes among the targeted devices; outcomes of
/// zero probability (perfect or dead links) are dropped.
inline TransitionDistribution transition(const IdncGraph& g, const IndependentSet& a) {
  const auto& members = a.members();
  if (members.size() > 30) throw GuardExceeded("too many targeted devices in one action");
  TransitionDistribution out;
  const std::uint64_t patterns = std::uint64_t{1} << members.size();
  for (std::uint64_t mask = 0; mask < patterns; ++mask) {
    double p = 1.0;
    StatusMatrix next = g.status();
    for (std::size_t j = 0; j < members.size(); ++j) {
      const Vertex& v = g.vertex(members[j]);
      const double success = g.connectivity().reception(v.tx, v.rx);
      if ((mask >> j) & 1U) {
        p *= success;
        next.mark_received(v.rx, v.pkt);
      } else {
        p *= 1.0 - success;
      }
    }
    if (p > 0.0) out.push_back({std::move(next), p});
  }
  return out;
}

inline TransitionDistribution transition(const StatusMatrix& f, const IndependentSet& a,
                                         const ConnectivityMatrix& y) {
  return transition(build_graph(y, f), a);
}

inline double expected_reward(const IdncGraph& g, const IndependentSet& a,
                              const ImportanceMatrix& delta) {
  double r = 0.0;
  for (std::size_t v : a) {
    const Vertex& x = g.vertex(v);
    r += delta(x.rx, x.pkt) * g.connectivity().reception(x.tx, x.rx);
  }
  return r;
}

/// Optimal value and action per (state, stage). Actions index into
/// build_graph(y, state).
class ValuePolicyTable {
public:
  struct Entry {
    double value = 0.0;
    IndependentSet action;
  };

  ValuePolicyTable() = default;
  ValuePolicyTable(int theta, std::size_t m, std::size_t n) : theta_(theta), m_(m), n_(n) {}

  int theta() const noexcept { return theta_; }
  std::size_t size() const noexcept { return entries_.size(); }
  std::size_t reachable_states() const noexcept { return distinct_states_; }

  const Entry* find(std::uint64_t state, int stage) const {
    auto it = entries_.find(key(state, stage));
    return it == entries_.end() ? nullptr : &it->second;
  }
  const Entry* find(const StatusMatrix& f, int stage) const { return find(f.pack(), stage); }

  double value(const StatusMatrix& f, int stage) const {
    const Entry* e = find(f, stage);
    if (e == nullptr) throw std::out_of_range("state not in the value table");
    return e->value;
  }

  template <class Fn>
  void for_each(Fn&& fn) const {
    for (const auto& [k, e] : entries_) fn(StatusMatrix::unpack(k.first, m_, n_), k.second, e);
  }

private:
  friend ValuePolicyTable backward_induction(const StatusMatrix&, int, const ConnectivityMatrix&,
                                             const ImportanceMatrix&, const MdpOptions&);

  using Key = std::pair<std::uint64_t, int>;
  struct KeyHash {
    std::size_t operator()(const Key& k) const noexcept {
      return std::hash<std::uint64_t>{}(k.first * 0x9E3779B97F4A7C15ULL ^
                                        static_cast<std::uint64_t>(k.second));
    }
  };
  static Key key(std::uint64_t state, int stage) { return {state, stage}; }

  int theta_ = 0;
  std::size_t m_ = 0;
  std::size_t n_ = 0;
  std::size_t distinct_states_ = 0;
  std::unordered_map<Key, Entry, KeyHash> entries_;
};

namespace detail {

struct MdpStateInfo {
  std::vector<IndependentSet> actions;
  std::vector<double> rewards;
  std::vector<std::vector<std::pair<std::uint64_t, double>>> outcomes;
};

inline MdpStateInfo expand_state(const StatusMatrix& f, const ConnectivityMatrix& y,
                                 const ImportanceMatrix& delta, const MdpOptions& options) {
  MdpStateInfo info;
  const IdncGraph g = build_graph(y, f);
  info.actions = actions(g, options);
  for (const auto& a : info.actions) {
    info.rewards.push_back(expected_reward(g, a, delta));
    std::vector<std::pair<std::uint64_t, double>> outs;
    double mass = 0.0;
    for (auto& o : transition(g, a)) {
      mass += o.probability;
      outs.emplace_back(o.next.pack(), o.probability);
    }
    if (std::abs(mass - 1.0) > 1e-12) {
      throw InvariantViolation("transition probabilities sum to " + std::to_string(mass));
    }
    info.outcomes.push_back(std::move(outs));
  }
  return info;
}

} // namespace detail

/// Solves the MDP from `start` with `theta` slots. The table covers every
/// (state, stage) reachable from (start, 1), plus the terminal stage theta + 1.
inline ValuePolicyTable backward_induction(const StatusMatrix& start, int theta,
                                           const ConnectivityMatrix& y,
                                           const ImportanceMatrix& delta,
                                           const MdpOptions& options = {}) {
  check_dimensions(y, start);
  check_dimensions(start, delta);
  if (theta < 0) throw ConfigError("theta must be nonnegative");
  const std::size_t cells = start.devices() * start.packets();
  if (cells > 64) {
    throw GuardExceeded("MDP instance too large: M*N = " + std::to_string(cells) +
                        " status entries (limit 64)");
  }
  const std::size_t m = start.devices();
  const std::size_t n = start.packets();

  ValuePolicyTable table(theta, m, n);
  std::unordered_map<std::uint64_t, detail::MdpStateInfo> info;
  std::unordered_set<std::uint64_t> seen;

  // Forward pass: reachable states per stage, in discovery order.
  std::vector<std::vector<std::uint64_t>> layers(static_cast<std::size_t>(theta) + 2);
  layers[1].push_back(start.pack());
  seen.insert(start.pack());
  for (int t = 1; t <= theta; ++t) {
    std::unordered_set<std::uint64_t> next_seen;
    auto& next = layers[static_cast<std::size_t>(t) + 1];
    for (std::uint64_t s : layers[static_cast<std::size_t>(t)]) {
      auto it = info.find(s);
      if (it == info.end()) {
        it = info.emplace(s, detail::expand_state(StatusMatrix::unpack(s, m, n), y, delta, options)).first;
      }
      for (const auto& outs : it->second.outcomes)
        for (const auto& [succ, p] : outs) {
          (void)p;
          if (next_seen.insert(succ).second) next.push_back(succ);
          if (seen.insert(succ).second && seen.size() > options.state_cap) {
            throw GuardExceeded("MDP instance too large: more than " +
                                std::to_string(options.state_cap) + " reachable states");
          }
        }
    }
  }
  table.distinct_states_ = seen.size();

  // Backward pass.
  for (std::uint64_t s : layers[static_cast<std::size_t>(theta) + 1])
    table.entries_[ValuePolicyTable::key(s, theta + 1)] = {0.0, {}};
  for (int t = theta; t >= 1; --t) {
    for (std::uint64_t s : layers[static_cast<std::size_t>(t)]) {
      const auto& si = info.at(s);
      double best = 0.0;
      std::size_t best_action = 0;
      for (std::size_t a = 0; a < si.actions.size(); ++a) {
        double q = si.rewards[a];
        for (const auto& [succ, p] : si.outcomes[a])
          q += p * table.entries_.at(ValuePolicyTable::key(succ, t + 1)).value;
        if (a == 0 || (q > best && !detail::nearly_equal(q, best))) {
          best = q;
          best_action = a;
        }
      }
      table.entries_[ValuePolicyTable::key(s, t)] = {best, si.actions[best_action]};
    }
  }
  return table;
}

/// Replays a solved table. Fails if the episode reaches a state the table does
/// not cover.
class MdpScheduler final : public Scheduler {
public:
  explicit MdpScheduler(ValuePolicyTable table) : table_(std::move(table)) {}

  std::string name() const override { return "mdp"; }

  IndependentSet select(const SlotState& s, const IdncGraph& g) override {
    if (g.empty()) return {};
    if (s.clock.theta() != table_.theta()) {
      throw InvariantViolation("MDP table was solved for a different deadline");
    }
    const auto* e = table_.find(s.f, s.clock.slot());
    if (e == nullptr) {
      throw InvariantViolation("episode reached a state outside the solved MDP table");
    }
    return e->action;
  }

  const ValuePolicyTable& table() const noexcept { return table_; }

private:
  ValuePolicyTable table_;
};

/// Solves on demand from whatever state it is asked about and memoizes by
/// (state, remaining slots), which is all the optimal value depends on for a
/// fixed network. The cache resets when the network or importance changes.
class OnlineMdpScheduler final : public Scheduler {
public:
  explicit OnlineMdpScheduler(MdpOptions options = {}) : options_(options) {}

  std::string name() const override { return "mdp"; }

  IndependentSet select(const SlotState& s, const IdncGraph& g) override {
    if (g.empty()) return {};
    if (!(s.y == y_) || s.delta.rows() != delta_rows_) {
      cache_.clear();
      y_ = s.y;
      delta_rows_ = s.delta.rows();
    }
    const int q = s.clock.remaining();
    const std::uint64_t state = s.f.pack();
    auto it = cache_.find({state, q});
    if (it == cache_.end()) {
      const ValuePolicyTable table = backward_induction(s.f, q, s.y, s.delta, options_);
      table.for_each([&](const StatusMatrix& f, int stage, const ValuePolicyTable::Entry& e) {
        cache_.emplace(std::make_pair(f.pack(), q - stage + 1), e.action);
      });
      it = cache_.find({state, q});
    }
    return it->second;
  }

private:
  struct KeyHash {
    std::size_t operator()(const std::pair<std::uint64_t, int>& k) const noexcept {
      return std::hash<std::uint64_t>{}(k.first * 0x9E3779B97F4A7C15ULL ^
                                        static_cast<std::uint64_t>(k.second));
    }
  };

  MdpOptions options_;
  ConnectivityMatrix y_;
  std::vector<std::vector<double>> delta_rows_;
  std::unordered_map<std::pair<std::uint64_t, int>, IndependentSet, KeyHash> cache_;
};

} // namespace idnc
