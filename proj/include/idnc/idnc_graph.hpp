#pragma once

// Unified IDNC conflict graph. A vertex (tx, rx, pkt) is a candidate transmission
// of packet pkt from device tx to neighbour rx; edges join pairs that cannot be
// scheduled in the same slot, either because the XOR combination would not be
// instantly decodable (coding conflicts C1, C2) or because the transmissions
// would collide or a device would have to send and listen at once
// (transmission conflicts C3, C4, C5). Independent sets are conflict-free slot
// decisions.

#include "idnc/core_model.hpp"
#include "idnc/errors.hpp"

#include <boost/dynamic_bitset.hpp>

#include <algorithm>
#include <bit>
#include <compare>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace idnc {

struct Vertex {
  DeviceId tx = 0;
  DeviceId rx = 0;
  PacketId pkt = 0;

  friend auto operator<=>(const Vertex&, const Vertex&) = default;
};

/// "v(i,k,l)" with 1-based device and packet numbers.
inline std::string to_string(const Vertex& v) {
  return "v(" + std::to_string(v.tx + 1) + "," + std::to_string(v.rx + 1) + "," +
         std::to_string(v.pkt + 1) + ")";
}

enum class ConflictRule { C1 = 1, C2, C3, C4, C5 };

inline std::string_view to_string(ConflictRule rule) {
  switch (rule) {
  case ConflictRule::C1: return "C1";
  case ConflictRule::C2: return "C2";
  case ConflictRule::C3: return "C3";
  case ConflictRule::C4: return "C4";
  case ConflictRule::C5: return "C5";
  }
  return "?";
}

/// SCM and GSM snapshot a graph was built from.
struct GraphContext {
  ConnectivityMatrix y;
  StatusMatrix f;
};

/// First rule among C1..C5 that makes a and b conflict, or nullopt.
///
/// C1/C2 only apply between vertices of the same transmitter, since an XOR
/// combination is formed per transmitter. For C4 the coverage zones exclude the
/// two transmitters themselves: a transmitter inside the other's zone is only a
/// problem when it is also targeted, which C5 already names.
inline std::optional<ConflictRule> conflict_rule(const GraphContext& ctx, const Vertex& a,
                                                 const Vertex& b) {
  if (a == b) return std::nullopt;
  if (a.tx == b.tx) {
    if (a.rx == b.rx) {
      if (a.pkt != b.pkt) return ConflictRule::C1;
      return std::nullopt;
    }
    if (a.pkt != b.pkt && (!ctx.f.holds(b.rx, a.pkt) || !ctx.f.holds(a.rx, b.pkt))) {
      return ConflictRule::C2;
    }
    return std::nullopt;
  }
  if (a.rx == b.rx) return ConflictRule::C3;
  auto in_both = [&](DeviceId k) {
    return k != a.tx && k != b.tx && ctx.y.connected(a.tx, k) && ctx.y.connected(b.tx, k);
  };
  if (in_both(a.rx) || in_both(b.rx)) return ConflictRule::C4;
  if (a.tx == b.rx || b.tx == a.rx) return ConflictRule::C5;
  return std::nullopt;
}

/// A set of vertex indices, kept sorted ascending.
class IndependentSet {
public:
  IndependentSet() = default;
  explicit IndependentSet(std::vector<std::size_t> members) : members_(std::move(members)) {
    std::sort(members_.begin(), members_.end());
    members_.erase(std::unique(members_.begin(), members_.end()), members_.end());
  }

  const std::vector<std::size_t>& members() const noexcept { return members_; }
  std::size_t size() const noexcept { return members_.size(); }
  bool empty() const noexcept { return members_.empty(); }
  bool contains(std::size_t v) const {
    return std::binary_search(members_.begin(), members_.end(), v);
  }
  auto begin() const { return members_.begin(); }
  auto end() const { return members_.end(); }

  friend auto operator<=>(const IndependentSet&, const IndependentSet&) = default;

private:
  std::vector<std::size_t> members_;
};

using Bitset = boost::dynamic_bitset<std::uint64_t>;

struct Edge {
  std::size_t u;
  std::size_t v;
  ConflictRule rule;
};

class IdncGraph {
public:
  IdncGraph() = default;

  std::size_t size() const noexcept { return vertices_.size(); }
  bool empty() const noexcept { return vertices_.empty(); }

  const std::vector<Vertex>& vertices() const noexcept { return vertices_; }
  const Vertex& vertex(std::size_t i) const { return vertices_[i]; }

  bool adjacent(std::size_t u, std::size_t v) const { return adjacency_[u][v]; }
  const Bitset& neighbours(std::size_t u) const { return adjacency_[u]; }
  const std::vector<Bitset>& adjacency() const noexcept { return adjacency_; }
  std::size_t degree(std::size_t u) const { return adjacency_[u].count(); }

  /// Rule tag of edge (u, v), re-derived from the endpoints.
  std::optional<ConflictRule> edge_rule(std::size_t u, std::size_t v) const {
    if (!adjacent(u, v)) return std::nullopt;
    return conflict_rule(*context_, vertices_[u], vertices_[v]);
  }

  std::vector<Edge> edges() const {
    std::vector<Edge> out;
    for (std::size_t u = 0; u < size(); ++u) {
      for (auto v = adjacency_[u].find_next(u); v != Bitset::npos; v = adjacency_[u].find_next(v)) {
        out.push_back({u, v, *edge_rule(u, v)});
      }
    }
    return out;
  }

  /// Index of vertex i in the graph originally built by build_graph.
  std::size_t origin(std::size_t i) const { return origin_[i]; }

  std::optional<std::size_t> find(const Vertex& v) const {
    auto it = std::lower_bound(vertices_.begin(), vertices_.end(), v);
    if (it == vertices_.end() || *it != v) return std::nullopt;
    return static_cast<std::size_t>(it - vertices_.begin());
  }

  const ConnectivityMatrix& connectivity() const { return context_->y; }
  const StatusMatrix& status() const { return context_->f; }
  const GraphContext& context() const { return *context_; }

  /// Induced subgraph on `keep` (indices into this graph, ascending).
  IdncGraph induced(std::span<const std::size_t> keep) const {
    IdncGraph out;
    out.context_ = context_;
    out.vertices_.reserve(keep.size());
    out.origin_.reserve(keep.size());
    for (std::size_t i : keep) {
      out.vertices_.push_back(vertices_[i]);
      out.origin_.push_back(origin_[i]);
    }
    out.adjacency_.assign(keep.size(), Bitset(keep.size()));
    for (std::size_t a = 0; a < keep.size(); ++a) {
      const Bitset& row = adjacency_[keep[a]];
      for (std::size_t b = a + 1; b < keep.size(); ++b)
        if (row[keep[b]]) {
          out.adjacency_[a].set(b);
          out.adjacency_[b].set(a);
        }
    }
    return out;
  }

  /// Maps a set of this graph's indices to indices of the root graph.
  IndependentSet lift(const IndependentSet& s) const {
    std::vector<std::size_t> out;
    out.reserve(s.size());
    for (std::size_t i : s) out.push_back(origin_[i]);
    return IndependentSet(std::move(out));
  }

private:
  friend IdncGraph build_graph(const ConnectivityMatrix& y, const StatusMatrix& f);

  std::shared_ptr<const GraphContext> context_ = std::make_shared<GraphContext>();
  std::vector<Vertex> vertices_;
  std::vector<Bitset> adjacency_;
  std::vector<std::size_t> origin_;
};

/// Local status matrix of device i: GSM restricted to rows in the coverage zone
/// of i and columns in the Has set of i.
struct LocalStatusMatrix {
  DeviceSet rows;
  PacketSet columns;
  std::vector<std::vector<int>> entries;
};

inline LocalStatusMatrix build_lsm(const ConnectivityMatrix& y, const StatusMatrix& f,
                                   DeviceId i) {
  check_dimensions(y, f);
  LocalStatusMatrix lsm;
  lsm.rows = coverage_zone(y, i);
  lsm.columns = has_set(f, i);
  for (DeviceId k : lsm.rows) {
    std::vector<int> row;
    row.reserve(lsm.columns.size());
    for (PacketId l : lsm.columns) row.push_back(f.missing(k, l) ? 1 : 0);
    lsm.entries.push_back(std::move(row));
  }
  return lsm;
}

/// Builds the conflict graph. Vertices are ordered by (tx, rx, pkt).
inline IdncGraph build_graph(const ConnectivityMatrix& y, const StatusMatrix& f) {
  check_dimensions(y, f);
  IdncGraph g;
  g.context_ = std::make_shared<const GraphContext>(GraphContext{y, f});

  const std::size_t m = f.devices();
  const std::size_t n = f.packets();
  for (DeviceId i = 0; i < m; ++i)
    for (DeviceId k = 0; k < m; ++k) {
      if (k == i || !y.connected(i, k)) continue;
      for (PacketId l = 0; l < n; ++l)
        if (f.holds(i, l) && f.missing(k, l)) g.vertices_.push_back({i, k, l});
    }

  const std::size_t size = g.vertices_.size();
  g.origin_.resize(size);
  for (std::size_t i = 0; i < size; ++i) g.origin_[i] = i;
  g.adjacency_.assign(size, Bitset(size));

  // Vertex masks by transmitter, receiver and packet, so that each row is a
  // union of masks instead of a scan over all pairs.
  std::vector<Bitset> by_tx(m, Bitset(size)), by_rx(m, Bitset(size)), by_pkt(n, Bitset(size));
  std::vector<Bitset> tx_near(m, Bitset(size)), rx_near(m, Bitset(size));
  std::vector<Bitset> rx_lacks(n, Bitset(size)), pkt_lacked_by(m, Bitset(size));
  for (std::size_t v = 0; v < size; ++v) {
    const Vertex& b = g.vertices_[v];
    by_tx[b.tx].set(v);
    by_rx[b.rx].set(v);
    by_pkt[b.pkt].set(v);
    for (PacketId l = 0; l < n; ++l)
      if (f.missing(b.rx, l)) rx_lacks[l].set(v);
    for (DeviceId k = 0; k < m; ++k) {
      if (y.connected(b.tx, k)) tx_near[k].set(v);
      if (y.connected(k, b.rx)) rx_near[k].set(v);
      if (f.missing(k, b.pkt)) pkt_lacked_by[k].set(v);
    }
  }

  // Same predicate as conflict_rule without the tag bookkeeping.
  Bitset other(size);
  for (std::size_t u = 0; u < size; ++u) {
    const Vertex& a = g.vertices_[u];
    Bitset& row = g.adjacency_[u];
    row = rx_lacks[a.pkt];
    row |= pkt_lacked_by[a.rx];
    row -= by_pkt[a.pkt];
    row |= by_rx[a.rx];
    row &= by_tx[a.tx];
    other = by_rx[a.rx];
    other |= by_rx[a.tx];
    other |= by_tx[a.rx];
    other |= tx_near[a.rx];
    other |= rx_near[a.tx];
    other -= by_tx[a.tx];
    row |= other;
    row.reset(u);
  }
  return g;
}

inline bool is_independent(const IdncGraph& g, const IndependentSet& s) {
  for (std::size_t a = 0; a < s.size(); ++a) {
    if (s.members()[a] >= g.size()) return false;
    for (std::size_t b = a + 1; b < s.size(); ++b)
      if (g.adjacent(s.members()[a], s.members()[b])) return false;
  }
  return true;
}

/// Independent and no vertex outside s can be added.
inline bool is_maximal(const IdncGraph& g, const IndependentSet& s) {
  if (!is_independent(g, s)) return false;
  Bitset blocked(g.size());
  for (std::size_t v : s) {
    blocked |= g.neighbours(v);
    blocked.set(v);
  }
  return blocked.all();
}

/// Targeted devices of s, in vertex order.
inline DeviceSet targeted_devices(const IdncGraph& g, const IndependentSet& s) {
  DeviceSet out;
  for (std::size_t v : s) out.push_back(g.vertex(v).rx);
  std::sort(out.begin(), out.end());
  return out;
}

inline DeviceSet transmitting_devices(const IdncGraph& g, const IndependentSet& s) {
  DeviceSet out;
  for (std::size_t v : s) out.push_back(g.vertex(v).tx);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

struct EnumerationOptions {
  /// Graphs larger than this are refused; at most 64.
  std::size_t vertex_cap = 40;
  /// Zero means unlimited.
  std::size_t set_cap = 0;
};

namespace detail {

struct BronKerbosch {
  std::vector<std::uint64_t> compatible; // complement-graph neighbourhoods
  std::vector<std::uint64_t> found;
  std::size_t set_cap = 0;

  void run(std::uint64_t r, std::uint64_t p, std::uint64_t x) {
    if (p == 0 && x == 0) {
      found.push_back(r);
      if (set_cap != 0 && found.size() > set_cap) {
        throw GuardExceeded("more than " + std::to_string(set_cap) +
                            " maximal independent sets");
      }
      return;
    }
    // Pivot maximizing |P ∩ N(u)| keeps the branching small.
    std::uint64_t px = p | x;
    int best = -1;
    std::uint64_t pivot_nbrs = 0;
    while (px != 0) {
      const int u = std::countr_zero(px);
      px &= px - 1;
      const int c = std::popcount(p & compatible[static_cast<std::size_t>(u)]);
      if (c > best) {
        best = c;
        pivot_nbrs = compatible[static_cast<std::size_t>(u)];
      }
    }
    std::uint64_t candidates = p & ~pivot_nbrs;
    while (candidates != 0) {
      const int v = std::countr_zero(candidates);
      const std::uint64_t bit = std::uint64_t{1} << v;
      candidates &= candidates - 1;
      const std::uint64_t nv = compatible[static_cast<std::size_t>(v)];
      run(r | bit, p & nv, x & nv);
      p &= ~bit;
      x |= bit;
    }
  }
};

inline bool nearly_equal(double a, double b) {
  const double scale = std::max({1.0, std::abs(a), std::abs(b)});
  return std::abs(a - b) <= 1e-12 * scale;
}

} // namespace detail

/// All maximal independent sets of the graph given by symmetric adjacency rows
/// (Bron–Kerbosch with pivoting on the complement graph). Each set is sorted
/// and the list is in lexicographic order. An empty graph has exactly one
/// maximal independent set, the empty one.
inline std::vector<IndependentSet>
enumerate_maximal_independent_sets(const std::vector<Bitset>& adjacency,
                                   const EnumerationOptions& options = {}) {
  const std::size_t n = adjacency.size();
  const std::size_t cap = std::min<std::size_t>(options.vertex_cap, 64);
  if (n > cap) {
    throw GuardExceeded("graph has " + std::to_string(n) +
                        " vertices, above the exact enumeration cap of " + std::to_string(cap) +
                        "; use the greedy selection strategy");
  }
  const std::uint64_t all = n == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << n) - 1;

  detail::BronKerbosch bk;
  bk.set_cap = options.set_cap;
  bk.compatible.resize(n);
  for (std::size_t u = 0; u < n; ++u) {
    if (adjacency[u].size() != n) throw std::invalid_argument("adjacency rows must be n wide");
    std::uint64_t adj = 0;
    for (auto v = adjacency[u].find_first(); v != Bitset::npos; v = adjacency[u].find_next(v))
      adj |= std::uint64_t{1} << v;
    bk.compatible[u] = all & ~adj & ~(std::uint64_t{1} << u);
  }
  bk.run(0, all, 0);

  std::vector<IndependentSet> out;
  out.reserve(bk.found.size());
  for (std::uint64_t mask : bk.found) {
    std::vector<std::size_t> members;
    while (mask != 0) {
      members.push_back(static_cast<std::size_t>(std::countr_zero(mask)));
      mask &= mask - 1;
    }
    out.emplace_back(std::move(members));
  }
  std::sort(out.begin(), out.end(), [](const IndependentSet& a, const IndependentSet& b) {
    return a.members() < b.members();
  });
  return out;
}

inline std::vector<IndependentSet>
enumerate_maximal_independent_sets(const IdncGraph& g, const EnumerationOptions& options = {}) {
  return enumerate_maximal_independent_sets(g.adjacency(), options);
}

enum class SelectionStrategy {
  exact,     ///< enumerate every maximal independent set; refuses graphs above the cap
  greedy,    ///< add the best feasible vertex until the set is maximal
  automatic, ///< exact up to the cap, greedy beyond it
};

inline std::optional<SelectionStrategy> parse_strategy(std::string_view name) {
  if (name == "exact") return SelectionStrategy::exact;
  if (name == "greedy") return SelectionStrategy::greedy;
  if (name == "auto") return SelectionStrategy::automatic;
  return std::nullopt;
}

struct SelectionOptions {
  SelectionStrategy strategy = SelectionStrategy::exact;
  std::size_t vertex_cap = 40;

  bool exact_for(const IdncGraph& g) const {
    switch (strategy) {
    case SelectionStrategy::exact: return true;
    case SelectionStrategy::greedy: return false;
    case SelectionStrategy::automatic: return g.size() <= std::min<std::size_t>(vertex_cap, 64);
    }
    return true;
  }

  EnumerationOptions enumeration() const { return {vertex_cap, 0}; }
};

inline double set_weight(const IndependentSet& s, std::span<const double> weights) {
  double sum = 0.0;
  for (std::size_t v : s) sum += weights[v];
  return sum;
}

/// Scans enumerated sets in lexicographic order and keeps the best under
/// (higher score, then larger cardinality); earlier sets win full ties.
/// `score` returns a double.
template <class ScoreFn>
IndependentSet best_of(const std::vector<IndependentSet>& sets, ScoreFn&& score) {
  IndependentSet best;
  double best_score = 0.0;
  bool have = false;
  for (const auto& s : sets) {
    const double value = score(s);
    if (!have || (value > best_score && !detail::nearly_equal(value, best_score)) ||
        (detail::nearly_equal(value, best_score) && s.size() > best.size())) {
      best = s;
      best_score = value;
      have = true;
    }
  }
  return best;
}

/// Greedy maximal independent set: visit vertices by descending priority
/// (ascending index on ties) and keep each one that is still feasible.
inline IndependentSet greedy_independent_set(const IdncGraph& g,
                                             std::span<const double> priority) {
  std::vector<std::size_t> order(g.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return priority[a] > priority[b]; });
  Bitset blocked(g.size());
  std::vector<std::size_t> chosen;
  for (std::size_t v : order) {
    if (blocked[v]) continue;
    chosen.push_back(v);
    blocked |= g.neighbours(v);
    blocked.set(v);
  }
  return IndependentSet(std::move(chosen));
}

/// Greedy vertex search: repeatedly take the feasible vertex with the largest
/// weight times the total weight it leaves feasible (its own included), then
/// drop its neighbours. A vertex compatible with many heavy vertices beats a
/// slightly heavier one that blocks them. Ties go to the vertex leaving more
/// vertices feasible, then to the lower index.
inline IndependentSet greedy_vertex_search(const IdncGraph& g, std::span<const double> weights) {
  const std::size_t n = g.size();
  Bitset alive(n);
  alive.set();
  Bitset room(n);
  std::vector<std::size_t> chosen;
  while (alive.any()) {
    std::size_t pick = Bitset::npos;
    double pick_score = 0.0;
    std::size_t pick_room = 0;
    for (auto v = alive.find_first(); v != Bitset::npos; v = alive.find_next(v)) {
      room = alive;
      room -= g.neighbours(v);
      double room_weight = 0.0;
      std::size_t room_size = 0;
      for (auto u = room.find_first(); u != Bitset::npos; u = room.find_next(u)) {
        room_weight += weights[u];
        ++room_size;
      }
      const double score = weights[v] * room_weight;
      if (pick == Bitset::npos || score > pick_score ||
          (score == pick_score && room_size > pick_room)) {
        pick = v;
        pick_score = score;
        pick_room = room_size;
      }
    }
    chosen.push_back(pick);
    alive -= g.neighbours(pick);
    alive.reset(pick);
  }
  std::sort(chosen.begin(), chosen.end());
  return IndependentSet(std::move(chosen));
}

/// Maximum-weight maximal independent set. Ties go to the larger set, then to
/// the lexicographically smallest member sequence. Beyond the exact cap the
/// greedy vertex search is used.
inline IndependentSet max_weight_independent_set(const IdncGraph& g,
                                                 std::span<const double> weights,
                                                 const SelectionOptions& options = {}) {
  if (weights.size() != g.size()) throw ConfigError("one weight per vertex is required");
  for (double w : weights)
    if (!std::isfinite(w) || w < 0.0) throw ConfigError("vertex weights must be finite and >= 0");
  if (g.empty()) return {};
  if (!options.exact_for(g)) return greedy_vertex_search(g, weights);
  const auto sets = enumerate_maximal_independent_sets(g, options.enumeration());
  return best_of(sets, [&](const IndependentSet& s) { return set_weight(s, weights); });
}

/// Induced subgraph on vertices v with keep(v), v not in `chosen`, and v not
/// adjacent to any member of `chosen`. Indices refer to g.
inline IdncGraph conflict_free_subgraph(const IdncGraph& g, const IndependentSet& chosen,
                                        const std::function<bool(const Vertex&)>& keep) {
  Bitset blocked(g.size());
  for (std::size_t v : chosen) {
    blocked |= g.neighbours(v);
    blocked.set(v);
  }
  std::vector<std::size_t> kept;
  for (std::size_t v = 0; v < g.size(); ++v)
    if (!blocked[v] && (!keep || keep(g.vertex(v)))) kept.push_back(v);
  return g.induced(kept);
}

/// (critical graph, non-critical graph): vertices split by whether their
/// targeted device is critical.
inline std::pair<IdncGraph, IdncGraph> partition_by_criticality(const IdncGraph& g,
                                                                const DeviceSet& critical) {
  std::vector<std::size_t> crit;
  std::vector<std::size_t> rest;
  for (std::size_t v = 0; v < g.size(); ++v) {
    if (std::binary_search(critical.begin(), critical.end(), g.vertex(v).rx)) {
      crit.push_back(v);
    } else {
      rest.push_back(v);
    }
  }
  return {g.induced(crit), g.induced(rest)};
}

} // namespace idnc
