#pragma once

#include "idnc/core_model.hpp"
#include "idnc/idnc_graph.hpp"
#include "idnc/random.hpp"

#include <vector>

namespace fixtures {

// Four devices on a line, R1 - R2 - R3 - R4.
inline idnc::ConnectivityMatrix line4() {
  return idnc::ConnectivityMatrix::from_rows(
      {{1, 0.84, 0, 0}, {0.84, 1, 0.75, 0}, {0, 0.75, 1, 0.91}, {0, 0, 0.91, 1}});
}

// R1 holds P3, R2 holds P1, R3 holds P1 and P2, R4 holds P2.
inline idnc::StatusMatrix golden_status() {
  return idnc::StatusMatrix::from_rows({{1, 1, 0}, {0, 1, 1}, {0, 0, 1}, {1, 0, 1}});
}

inline idnc::ImportanceMatrix ones(std::size_t m, std::size_t n) {
  return idnc::ImportanceMatrix::replicate(m, std::vector<double>(n, 1.0));
}

/// Random symmetric SCM. Each link is present with probability `density`;
/// present links get a reception probability drawn from `levels`.
inline idnc::ConnectivityMatrix random_scm(std::size_t m, double density, idnc::rng::Generator& gen,
                                           const std::vector<double>& levels = {0.5, 0.7, 0.9, 1.0}) {
  idnc::ConnectivityMatrix y(m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t k = i + 1; k < m; ++k)
      if (gen.uniform() < density) y.set_link(i, k, levels[gen.below(levels.size())]);
  return y;
}

/// Random GSM where every packet is held by at least one device.
inline idnc::StatusMatrix random_gsm(std::size_t m, std::size_t n, double miss, idnc::rng::Generator& gen) {
  std::vector<std::vector<int>> rows(m, std::vector<int>(n, 0));
  for (std::size_t l = 0; l < n; ++l) {
    for (std::size_t k = 0; k < m; ++k) rows[k][l] = gen.uniform() < miss ? 1 : 0;
    rows[gen.below(m)][l] = 0;
  }
  return idnc::StatusMatrix::from_rows(rows);
}

/// Erdos-Renyi adjacency rows.
inline std::vector<idnc::Bitset> random_adjacency(std::size_t n, double p, idnc::rng::Generator& gen) {
  std::vector<idnc::Bitset> adj(n, idnc::Bitset(n));
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = u + 1; v < n; ++v)
      if (gen.uniform() < p) {
        adj[u].set(v);
        adj[v].set(u);
      }
  return adj;
}

inline std::vector<std::vector<bool>> to_matrix(const std::vector<idnc::Bitset>& adj) {
  std::vector<std::vector<bool>> out(adj.size(), std::vector<bool>(adj.size(), false));
  for (std::size_t u = 0; u < adj.size(); ++u)
    for (std::size_t v = 0; v < adj.size(); ++v) out[u][v] = adj[u][v];
  return out;
}

inline std::vector<std::vector<std::size_t>> members(const std::vector<idnc::IndependentSet>& sets) {
  std::vector<std::vector<std::size_t>> out;
  for (const auto& s : sets) out.push_back(s.members());
  return out;
}

} // namespace fixtures
