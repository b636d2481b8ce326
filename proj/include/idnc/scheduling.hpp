#pragma once

// Per-slot scheduling policies over the conflict graph: the two-stage TS-MIS
// heuristic (critical devices by expected distortion reduction, then
// non-critical devices by deadline probability) and the PCB and FCD baselines.

#include "idnc/core_model.hpp"
#include "idnc/errors.hpp"
#include "idnc/idnc_graph.hpp"

#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace idnc {

/// Inputs of one scheduling decision.
struct SlotState {
  const ConnectivityMatrix& y;
  const StatusMatrix& f;
  const ImportanceMatrix& delta;
  SessionClock clock;
};

// ---------------------------------------------------------------------------
// Completion-time probabilities
// ---------------------------------------------------------------------------

/// P[T = w + x]: a device missing w packets, targeted every slot over a channel
/// with erasure eps_bar, finishes after exactly w + x slots (negative binomial).
inline double completion_pmf(std::size_t w, std::size_t x, double eps_bar) {
  if (w == 0) throw std::invalid_argument("completion_pmf needs w >= 1");
  if (!(eps_bar >= 0.0 && eps_bar <= 1.0)) {
    throw std::invalid_argument("erasure probability must lie in [0, 1]");
  }
  if (eps_bar >= 1.0) return 0.0;
  // C(w + x - 1, x), accumulated as a product of ratios.
  double binom = 1.0;
  for (std::size_t j = 1; j <= x; ++j)
    binom *= static_cast<double>(w - 1 + j) / static_cast<double>(j);
  return binom * std::pow(eps_bar, static_cast<double>(x)) *
         std::pow(1.0 - eps_bar, static_cast<double>(w));
}

/// P[T <= q] for w missing packets; 1 when w = 0 and 0 when q < w.
inline double completion_cdf(std::size_t w, long q, double eps_bar) {
  if (w == 0) return 1.0;
  if (q < static_cast<long>(w)) return 0.0;
  double sum = 0.0;
  const auto slack = static_cast<std::size_t>(q - static_cast<long>(w));
  for (std::size_t x = 0; x <= slack; ++x) sum += completion_pmf(w, x, eps_bar);
  return std::min(sum, 1.0);
}

struct DeadlineProbability {
  double value = 1.0;
  /// (device, factor) for each non-critical device.
  std::vector<std::pair<DeviceId, double>> terms;
};

namespace detail {

inline double deadline_factor(const ConnectivityMatrix& y, std::size_t wants, long q, DeviceId k) {
  auto eps = try_average_erasure(y, k);
  if (!eps) return wants == 0 ? 1.0 : 0.0;
  return completion_cdf(wants, q, *eps);
}

} // namespace detail

/// Upper bound on the probability that every non-critical device completes
/// within the remaining Q slots, assuming each is targeted in every slot.
inline DeadlineProbability all_noncritical_deadline_prob(const SlotState& s) {
  DeadlineProbability out;
  const long q = s.clock.remaining();
  for (DeviceId k : non_critical_set(s.f, s.clock)) {
    const double factor = detail::deadline_factor(s.y, s.f.wants_count(k), q, k);
    out.terms.emplace_back(k, factor);
    out.value *= factor;
  }
  return out;
}

/// Same bound evaluated from slot t + 1 (Q - 1 slots left) after targeting the
/// given vertices: a targeted device k served over link (i, k) drops to W_k - 1
/// with probability 1 - eps_{i,k}. Ignored non-critical devices keep W_k.
inline double successor_deadline_prob(const std::vector<Vertex>& targeted, const SlotState& s) {
  const long q_next = s.clock.remaining() - 1;
  const DeviceSet noncritical = non_critical_set(s.f, s.clock);
  std::vector<const Vertex*> by_device(s.f.devices(), nullptr);
  for (const Vertex& v : targeted) {
    if (!std::binary_search(noncritical.begin(), noncritical.end(), v.rx)) {
      throw std::invalid_argument("successor_deadline_prob: " + to_string(v) +
                                  " does not target a non-critical device");
    }
    by_device[v.rx] = &v;
  }
  double p = 1.0;
  for (DeviceId k : noncritical) {
    const std::size_t w = s.f.wants_count(k);
    const double stay = detail::deadline_factor(s.y, w, q_next, k);
    if (const Vertex* v = by_device[k]) {
      const double eps = s.y.erasure(v->tx, k);
      const double advance = detail::deadline_factor(s.y, w - 1, q_next, k);
      p *= advance * (1.0 - eps) + stay * eps;
    } else {
      p *= stay;
    }
  }
  return p;
}

inline double successor_deadline_prob(const IdncGraph& g, const IndependentSet& kappa,
                                      const SlotState& s) {
  std::vector<Vertex> vs;
  vs.reserve(kappa.size());
  for (std::size_t v : kappa) vs.push_back(g.vertex(v));
  return successor_deadline_prob(vs, s);
}

// ---------------------------------------------------------------------------
// Stage selectors
// ---------------------------------------------------------------------------

/// delta_{rx,pkt} * (1 - eps_{tx,rx}) for every vertex: expected distortion
/// reduction if the vertex is scheduled.
inline std::vector<double> expected_reduction_weights(const IdncGraph& g,
                                                      const ImportanceMatrix& delta) {
  std::vector<double> w(g.size());
  for (std::size_t v = 0; v < g.size(); ++v) {
    const Vertex& x = g.vertex(v);
    w[v] = delta(x.rx, x.pkt) * g.connectivity().reception(x.tx, x.rx);
  }
  return w;
}

/// Max expected distortion reduction over the critical graph. Indices refer to graph_c.
inline IndependentSet select_critical_mis(const IdncGraph& graph_c, const ImportanceMatrix& delta,
                                          const SelectionOptions& options = {}) {
  if (graph_c.empty()) return {};
  const auto w = expected_reduction_weights(graph_c, delta);
  return max_weight_independent_set(graph_c, w, options);
}

namespace detail {

/// P[T_w <= q] - P[T_{w+1} <= q]: the probability of exactly w successes in q
/// Bernoulli(1 - eps_bar) trials. Computed directly so that differences of
/// deadline factors close to 1 do not cancel.
inline double completion_step(std::size_t w, long q, double eps_bar) {
  if (q < 0 || static_cast<long>(w) > q) return 0.0;
  const double p = 1.0 - eps_bar;
  const auto n = static_cast<double>(q);
  const auto k = static_cast<double>(w);
  if (eps_bar <= 0.0) return w == static_cast<std::size_t>(q) ? 1.0 : 0.0;
  if (p <= 0.0) return w == 0 ? 1.0 : 0.0;
  const double log_choose = std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
  return std::exp(log_choose + k * std::log(p) + (n - k) * std::log(eps_bar));
}

} // namespace detail

/// log of the factor by which targeting each vertex of graph_a multiplies the
/// successor deadline probability. The objective is a product over devices and
/// each device is targeted at most once, so the best set maximizes the sum of
/// these gains.
inline std::vector<double> noncritical_log_gains(const IdncGraph& graph_a, const SlotState& s) {
  // Stand-in for an infinite gain: a device that can only finish if served now.
  constexpr double must_serve = 1e4;
  const long q_next = s.clock.remaining() - 1;
  std::vector<double> gain(graph_a.size());
  for (std::size_t v = 0; v < graph_a.size(); ++v) {
    const Vertex& x = graph_a.vertex(v);
    const std::size_t w = s.f.wants_count(x.rx);
    const auto eps_bar = try_average_erasure(s.y, x.rx);
    if (!eps_bar || w == 0) continue;
    const double stay = completion_cdf(w, q_next, *eps_bar);
    const double lift = s.y.reception(x.tx, x.rx) * detail::completion_step(w - 1, q_next, *eps_bar);
    if (stay > 0.0) {
      gain[v] = std::log1p(lift / stay);
    } else if (lift > 0.0) {
      gain[v] = must_serve;
    }
  }
  return gain;
}

/// Maximal independent set of the reduced non-critical graph maximizing the
/// successor deadline probability. Indices refer to graph_a.
inline IndependentSet select_noncritical_mis(const IdncGraph& graph_a, const SlotState& s,
                                             const SelectionOptions& options = {}) {
  if (graph_a.empty()) return {};
  return max_weight_independent_set(graph_a, noncritical_log_gains(graph_a, s), options);
}

// ---------------------------------------------------------------------------
// Policies
// ---------------------------------------------------------------------------

/// Two-stage selection. Returns indices into g, which must be build_graph(s.y, s.f).
inline IndependentSet ts_mis_select(const SlotState& s, const IdncGraph& g,
                                    const SelectionOptions& options = {}) {
  const DeviceSet critical = critical_set(s.f, s.clock);
  // Only the critical part of the partition is needed; the non-critical stage
  // works on the subgraph left compatible with the critical choice.
  std::vector<std::size_t> crit;
  for (std::size_t v = 0; v < g.size(); ++v)
    if (std::binary_search(critical.begin(), critical.end(), g.vertex(v).rx)) crit.push_back(v);

  IndependentSet kappa_c;
  if (!crit.empty()) {
    const IdncGraph graph_c = g.induced(crit);
    kappa_c = graph_c.lift(select_critical_mis(graph_c, s.delta, options));
  }

  const IdncGraph reduced = conflict_free_subgraph(g, kappa_c, [&](const Vertex& v) {
    return !std::binary_search(critical.begin(), critical.end(), v.rx);
  });
  IndependentSet kappa_a;
  if (!reduced.empty()) kappa_a = reduced.lift(select_noncritical_mis(reduced, s, options));

  std::vector<std::size_t> all(kappa_c.begin(), kappa_c.end());
  all.insert(all.end(), kappa_a.begin(), kappa_a.end());
  return IndependentSet(std::move(all));
}

inline IndependentSet ts_mis_select(const SlotState& s, const SelectionOptions& options = {}) {
  return ts_mis_select(s, build_graph(s.y, s.f), options);
}

/// Serve as many devices as possible; ties go to the larger sum of link
/// reception probabilities.
inline IndependentSet pcb_select(const SlotState& s, const IdncGraph& g,
                                 const SelectionOptions& options = {}) {
  (void)s;
  if (g.empty()) return {};
  auto reception = [&](std::size_t v) {
    return g.connectivity().reception(g.vertex(v).tx, g.vertex(v).rx);
  };
  if (options.exact_for(g)) {
    const auto sets = enumerate_maximal_independent_sets(g, options.enumeration());
    const IndependentSet* best = nullptr;
    double best_sum = 0.0;
    for (const auto& k : sets) {
      double sum = 0.0;
      for (std::size_t v : k) sum += reception(v);
      if (best == nullptr || k.size() > best->size() ||
          (k.size() == best->size() && sum > best_sum && !detail::nearly_equal(sum, best_sum))) {
        best = &k;
        best_sum = sum;
      }
    }
    return *best;
  }
  // Minimum residual degree first, then higher reception, then lower index.
  Bitset alive(g.size());
  alive.set();
  std::vector<std::size_t> chosen;
  while (alive.any()) {
    std::size_t pick = Bitset::npos;
    std::size_t pick_degree = 0;
    for (auto v = alive.find_first(); v != Bitset::npos; v = alive.find_next(v)) {
      const std::size_t d = (g.neighbours(v) & alive).count();
      if (pick == Bitset::npos || d < pick_degree ||
          (d == pick_degree && reception(v) > reception(pick))) {
        pick = v;
        pick_degree = d;
      }
    }
    chosen.push_back(pick);
    alive -= g.neighbours(pick);
    alive.reset(pick);
  }
  return IndependentSet(std::move(chosen));
}

/// Single transmitter per slot: for each device, the max expected distortion
/// reduction over its own vertices; best transmitter wins, lowest index on ties.
inline IndependentSet fcd_select(const SlotState& s, const IdncGraph& g,
                                 const SelectionOptions& options = {}) {
  if (g.empty()) return {};
  IndependentSet best;
  double best_weight = -1.0;
  std::size_t start = 0;
  while (start < g.size()) {
    const DeviceId tx = g.vertex(start).tx;
    std::size_t stop = start;
    std::vector<std::size_t> own;
    while (stop < g.size() && g.vertex(stop).tx == tx) own.push_back(stop++);
    const IdncGraph sub = g.induced(own);
    const auto w = expected_reduction_weights(sub, s.delta);
    const IndependentSet local = max_weight_independent_set(sub, w, options);
    const double weight = set_weight(local, w);
    if (weight > best_weight && !detail::nearly_equal(weight, best_weight)) {
      best_weight = weight;
      std::vector<std::size_t> picked;
      for (std::size_t i : local) picked.push_back(own[i]);
      best = IndependentSet(std::move(picked));
    }
    start = stop;
  }
  return best;
}

// ---------------------------------------------------------------------------
// Scheduler interface
// ---------------------------------------------------------------------------

class Scheduler {
public:
  virtual ~Scheduler() = default;
  virtual std::string name() const = 0;
  /// g is build_graph(s.y, s.f); the result indexes into g.
  virtual IndependentSet select(const SlotState& s, const IdncGraph& g) = 0;
};

class TsMisScheduler final : public Scheduler {
public:
  explicit TsMisScheduler(SelectionOptions options = {}) : options_(options) {}
  std::string name() const override { return "tsmis"; }
  IndependentSet select(const SlotState& s, const IdncGraph& g) override {
    return ts_mis_select(s, g, options_);
  }

private:
  SelectionOptions options_;
};

class PcbScheduler final : public Scheduler {
public:
  explicit PcbScheduler(SelectionOptions options = {}) : options_(options) {}
  std::string name() const override { return "pcb"; }
  IndependentSet select(const SlotState& s, const IdncGraph& g) override {
    return pcb_select(s, g, options_);
  }

private:
  SelectionOptions options_;
};

class FcdScheduler final : public Scheduler {
public:
  explicit FcdScheduler(SelectionOptions options = {}) : options_(options) {}
  std::string name() const override { return "fcd"; }
  IndependentSet select(const SlotState& s, const IdncGraph& g) override {
    return fcd_select(s, g, options_);
  }

private:
  SelectionOptions options_;
};

/// "tsmis", "pcb" or "fcd"; nullptr for anything else ("mdp" lives in mdp.hpp).
inline std::unique_ptr<Scheduler> make_heuristic_scheduler(std::string_view name,
                                                           const SelectionOptions& options) {
  if (name == "tsmis") return std::make_unique<TsMisScheduler>(options);
  if (name == "pcb") return std::make_unique<PcbScheduler>(options);
  if (name == "fcd") return std::make_unique<FcdScheduler>(options);
  return nullptr;
}

} // namespace idnc
