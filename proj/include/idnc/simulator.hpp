#pragma once

// Episode engine: draws a scenario, runs theta D2D slots through Bernoulli
// erasure channels under a scheduler, and aggregates Monte-Carlo statistics.
// Every episode checks its own invariants and throws InvariantViolation when
// one breaks.

#include "idnc/core_model.hpp"
#include "idnc/errors.hpp"
#include "idnc/idnc_graph.hpp"
#include "idnc/random.hpp"
#include "idnc/scheduling.hpp"
#include "idnc/video_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace idnc {

enum class TopologyMode {
  per_run, ///< every episode draws its own connectivity matrix
  fixed,   ///< one connectivity matrix per master seed
};

struct ScenarioConfig {
  std::size_t m = 4;
  GopModel gop = default_gop();
  int theta = 7;
  /// Target connectivity index; nullopt requests a full mesh.
  std::optional<double> target_connectivity;
  double connectivity_tolerance = 0.02;
  std::pair<double, double> reception_range{0.65, 0.9};
  std::pair<double, double> side_info_range{0.45, 0.55};
  std::uint64_t seed = 1;
  TopologyMode topology = TopologyMode::per_run;
  /// Explicit connectivity matrix; overrides generation.
  std::optional<ConnectivityMatrix> scm;
  /// Explicit initial status matrix; overrides side-information sampling.
  std::optional<StatusMatrix> gsm;

  void validate() const {
    if (m == 0) throw ConfigError("scenario needs at least one device");
    if (theta < 0) throw ConfigError("theta must be nonnegative");
    const auto [lo, hi] = reception_range;
    if (!(lo > 0.0 && lo <= hi && hi <= 1.0)) {
      throw ConfigError("reception_range must satisfy 0 < lo <= hi <= 1");
    }
    const auto [a, b] = side_info_range;
    if (!(a > 0.0 && a <= b && b < 1.0)) {
      throw ConfigError("side_info_range must satisfy 0 < lo <= hi < 1");
    }
    if (target_connectivity && !(*target_connectivity > 0.0 && *target_connectivity <= 1.0)) {
      throw ConfigError("target_connectivity must lie in (0, 1]");
    }
    if (scm) {
      scm->validate();
      if (scm->devices() != m) throw ConfigError("scm size does not match m");
    }
    if (gsm) {
      gsm->validate();
      if (gsm->devices() != m) throw ConfigError("gsm row count does not match m");
      if (gsm->packets() != gop.packets()) {
        throw ConfigError("gsm has " + std::to_string(gsm->packets()) +
                          " packets but the GOP has " + std::to_string(gop.packets()));
      }
    }
  }
};

/// Random connected topology: a random spanning tree, then random extra links
/// until the connectivity index is within tolerance of the target. Link
/// probabilities are uniform in reception_range. Two devices always get their
/// single link whatever the target.
inline ConnectivityMatrix generate_scm(const ScenarioConfig& cfg, rng::Generator& gen) {
  const std::size_t m = cfg.m;
  const auto [lo, hi] = cfg.reception_range;
  if (m == 0) throw ConfigError("scenario needs at least one device");
  if (m == 1) return ConnectivityMatrix(1);

  const double cells = static_cast<double>(m * m);
  const double tol = cfg.connectivity_tolerance;
  constexpr int attempts = 64;
  for (int attempt = 0; attempt < attempts; ++attempt) {
    ConnectivityMatrix y(m);
    std::vector<DeviceId> order(m);
    for (std::size_t i = 0; i < m; ++i) order[i] = i;
    gen.shuffle(order);
    for (std::size_t j = 1; j < m; ++j)
      y.set_link(order[j], order[gen.below(j)], gen.uniform(lo, hi));

    std::vector<std::pair<DeviceId, DeviceId>> candidates;
    for (DeviceId i = 0; i < m; ++i)
      for (DeviceId k = i + 1; k < m; ++k)
        if (!y.connected(i, k)) candidates.emplace_back(i, k);
    gen.shuffle(candidates);

    if (!cfg.target_connectivity) {
      for (auto [i, k] : candidates) y.set_link(i, k, gen.uniform(lo, hi));
      return y;
    }
    if (m == 2) return y;

    const double target = *cfg.target_connectivity;
    double index = connectivity_index(y);
    if (std::abs(index - target) <= tol) return y;
    if (index > target + tol) continue;
    for (auto [i, k] : candidates) {
      double p = gen.uniform(lo, hi);
      if (index + 2.0 * p / cells > target + tol) {
        // Land on the target with an in-range probability, or skip this pair.
        p = (target - index) * cells / 2.0;
        if (p < lo || p > hi) continue;
      }
      y.set_link(i, k, p);
      index = connectivity_index(y);
      if (std::abs(index - target) <= tol) return y;
    }
  }
  throw ConfigError("cannot reach connectivity index " + std::to_string(*cfg.target_connectivity) +
                    " with " + std::to_string(m) + " devices and reception range [" +
                    std::to_string(lo) + ", " + std::to_string(hi) + "]");
}

/// Side information after the broadcast phase: each device holds a uniform
/// random subset whose size is uniform over the integers in
/// [ceil(a N), floor(b N)]; packets nobody holds go to a random device.
inline StatusMatrix seed_initial_gsm(const ScenarioConfig& cfg, rng::Generator& gen) {
  const std::size_t m = cfg.m;
  const std::size_t n = cfg.gop.packets();
  const auto [a, b] = cfg.side_info_range;
  auto lo = static_cast<std::size_t>(std::ceil(a * static_cast<double>(n) - 1e-9));
  auto hi = static_cast<std::size_t>(std::floor(b * static_cast<double>(n) + 1e-9));
  if (lo > hi) {
    // No integer in the range: use the nearest count to the midpoint.
    const auto mid = std::llround(0.5 * (a + b) * static_cast<double>(n));
    lo = hi = static_cast<std::size_t>(std::clamp<long long>(mid, 1, static_cast<long long>(n)));
  }
  StatusMatrix f(m, n);
  std::vector<PacketId> pool(n);
  for (DeviceId k = 0; k < m; ++k) {
    const std::size_t count = lo + static_cast<std::size_t>(gen.below(hi - lo + 1));
    for (std::size_t i = 0; i < n; ++i) pool[i] = i;
    for (std::size_t i = 0; i < count; ++i) {
      std::swap(pool[i], pool[i + static_cast<std::size_t>(gen.below(n - i))]);
      f.mark_received(k, pool[i]);
    }
  }
  for (PacketId l = 0; l < n; ++l) {
    bool held = false;
    for (DeviceId k = 0; k < m && !held; ++k) held = f.holds(k, l);
    if (!held) f.mark_received(static_cast<DeviceId>(gen.below(m)), l);
  }
  return f;
}

struct ConflictReport {
  struct Violation {
    Vertex a;
    Vertex b;
    ConflictRule rule;
  };
  std::vector<Violation> violations;
  std::string error; // out-of-range members

  bool ok() const { return violations.empty() && error.empty(); }

  std::string message() const {
    if (!error.empty()) return error;
    std::string out;
    for (const auto& v : violations) {
      if (!out.empty()) out += "; ";
      out += to_string(v.a) + " -- " + to_string(v.b) + " violates " + std::string(to_string(v.rule));
    }
    return out.empty() ? "ok" : out;
  }
};

inline ConflictReport validate_conflict_free(const IndependentSet& kappa, const IdncGraph& g) {
  ConflictReport report;
  for (std::size_t v : kappa) {
    if (v >= g.size()) {
      report.error = "vertex index " + std::to_string(v) + " is not in the graph";
      return report;
    }
  }
  const auto& members = kappa.members();
  for (std::size_t a = 0; a < members.size(); ++a)
    for (std::size_t b = a + 1; b < members.size(); ++b)
      if (auto rule = g.edge_rule(members[a], members[b])) {
        report.violations.push_back({g.vertex(members[a]), g.vertex(members[b]), *rule});
      }
  return report;
}

/// Channel draws of one slot.
struct ChannelDraws {
  std::uint64_t episode_seed = 0;
  std::size_t slot = 0;

  double uniform(DeviceId rx) const { return rng::channel_uniform(episode_seed, slot, rx); }
};

struct TargetOutcome {
  Vertex vertex;
  bool received = false;
};

struct SlotResult {
  StatusMatrix f;
  std::vector<TargetOutcome> outcomes;
};

/// Each scheduled vertex (i, k, l) is received with probability 1 - eps_{i,k};
/// a success clears f[k][l].
inline SlotResult apply_slot(const StatusMatrix& f, const IndependentSet& kappa,
                             const IdncGraph& g, const ChannelDraws& draws) {
  SlotResult out{f, {}};
  for (std::size_t v : kappa) {
    const Vertex& x = g.vertex(v);
    const bool ok = draws.uniform(x.rx) < g.connectivity().reception(x.tx, x.rx);
    if (ok) out.f.mark_received(x.rx, x.pkt);
    out.outcomes.push_back({x, ok});
  }
  return out;
}

/// Fully drawn episode inputs.
struct Scenario {
  ConnectivityMatrix y;
  StatusMatrix initial;
  ImportanceMatrix delta;
  GopModel gop;
  int theta = 0;
};

inline ConnectivityMatrix fixed_topology(const ScenarioConfig& cfg) {
  if (cfg.scm) return *cfg.scm;
  rng::Generator gen(rng::derive(cfg.seed, rng::Stream::topology));
  return generate_scm(cfg, gen);
}

inline std::uint64_t episode_seed(std::uint64_t master, std::size_t index) {
  return rng::derive(master, rng::Stream::episode, index);
}

/// Draws the scenario of one episode. `topology` (if given) replaces generation.
inline Scenario make_scenario(const ScenarioConfig& cfg, std::uint64_t episode_seed,
                              const ConnectivityMatrix* topology = nullptr) {
  Scenario s{ConnectivityMatrix{}, StatusMatrix{}, ImportanceMatrix{}, cfg.gop, cfg.theta};
  if (topology != nullptr) {
    s.y = *topology;
  } else if (cfg.scm) {
    s.y = *cfg.scm;
  } else {
    rng::Generator gen(rng::derive(episode_seed, rng::Stream::topology));
    s.y = generate_scm(cfg, gen);
  }
  if (cfg.gsm) {
    s.initial = *cfg.gsm;
  } else {
    rng::Generator gen(rng::derive(episode_seed, rng::Stream::side_info));
    s.initial = seed_initial_gsm(cfg, gen);
  }
  s.delta = importance_matrix(cfg.gop, cfg.m);
  return s;
}

struct SlotRecord {
  int slot = 0;
  std::vector<TargetOutcome> outcomes;
  std::uint64_t status_digest = 0;
  double mean_distortion = 0.0; // after the slot
};

struct EpisodeTranscript {
  std::vector<SlotRecord> slots;
  StatusMatrix initial;
  StatusMatrix final_status;
  std::vector<double> initial_distortion;
  std::vector<double> final_distortion;
  double final_mean_distortion = 0.0;
  QualityReport quality;
};

/// FNV-1a over the status entries.
inline std::uint64_t status_digest(const StatusMatrix& f) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (DeviceId k = 0; k < f.devices(); ++k)
    for (PacketId l = 0; l < f.packets(); ++l) {
      h ^= f.missing(k, l) ? 1U : 0U;
      h *= 0x100000001B3ULL;
    }
  return h;
}

inline EpisodeTranscript run_episode(const Scenario& sc, Scheduler& scheduler,
                                     std::uint64_t episode_seed) {
  const std::size_t m = sc.initial.devices();
  EpisodeTranscript tr;
  tr.initial = sc.initial;
  for (DeviceId k = 0; k < m; ++k)
    tr.initial_distortion.push_back(individual_distortion(sc.initial, sc.delta, k));

  StatusMatrix f = sc.initial;
  std::vector<double> current = tr.initial_distortion;
  std::vector<double> realized(m, 0.0);

  for (int t = 1; t <= sc.theta; ++t) {
    if (f.complete()) break;
    const SessionClock clock(sc.theta, t);
    const IdncGraph g = build_graph(sc.y, f);
    const SlotState state{sc.y, f, sc.delta, clock};
    const IndependentSet kappa = scheduler.select(state, g);

    const ConflictReport report = validate_conflict_free(kappa, g);
    if (!report.ok()) {
      throw InvariantViolation(scheduler.name() + " scheduled a conflicting set in slot " +
                               std::to_string(t) + ": " + report.message());
    }
    const DeviceSet targets = targeted_devices(g, kappa);
    for (DeviceId tx : transmitting_devices(g, kappa)) {
      if (std::binary_search(targets.begin(), targets.end(), tx)) {
        throw InvariantViolation(detail::device_label(tx) + " both transmits and listens in slot " +
                                 std::to_string(t));
      }
    }

    SlotResult res = apply_slot(f, kappa, g, ChannelDraws{episode_seed, static_cast<std::size_t>(t)});
    if (!res.f.descends_from(f)) {
      throw InvariantViolation("status matrix lost a received packet in slot " + std::to_string(t));
    }
    for (const auto& o : res.outcomes)
      if (o.received) realized[o.vertex.rx] += sc.delta(o.vertex.rx, o.vertex.pkt);
    for (DeviceId k = 0; k < m; ++k) {
      const double d = individual_distortion(res.f, sc.delta, k);
      if (d > current[k] + 1e-9) {
        throw InvariantViolation("distortion of " + detail::device_label(k) + " increased in slot " +
                                 std::to_string(t));
      }
      current[k] = d;
    }
    f = std::move(res.f);
    tr.slots.push_back({t, std::move(res.outcomes), status_digest(f), mean_distortion(f, sc.delta)});
  }

  for (DeviceId k = 0; k < m; ++k) {
    if (std::abs(current[k] - (tr.initial_distortion[k] - realized[k])) > 1e-9) {
      throw InvariantViolation("final distortion of " + detail::device_label(k) +
                               " does not match the realized reductions");
    }
  }
  tr.final_status = f;
  tr.final_distortion = current;
  tr.final_mean_distortion = mean_distortion(f, sc.delta);
  tr.quality = quality_report(sc.gop, f, sc.delta);
  return tr;
}

inline EpisodeTranscript run_episode(const ScenarioConfig& cfg, Scheduler& scheduler,
                                     std::uint64_t episode_seed) {
  const Scenario sc = make_scenario(cfg, episode_seed);
  return run_episode(sc, scheduler, episode_seed);
}

struct AggregateResult {
  std::string scheduler;
  std::size_t runs = 0;
  double mean_distortion = 0.0;
  double std_distortion = 0.0;
  double mean_psnr = 0.0;
  double std_psnr = 0.0;
  /// std_psnr / sqrt(runs).
  double stderr_psnr = 0.0;
  double min_psnr = 0.0;
  double max_psnr = 0.0;
  /// Devices that ended with l decoded layers, l = 0..L, summed over runs.
  std::vector<std::size_t> histogram;
  /// Final mean distortion of each run, in run order.
  std::vector<double> run_distortion;
  /// Mean PSNR of each run, in run order.
  std::vector<double> run_psnr;
};

namespace detail {

inline std::pair<double, double> mean_and_stddev(const std::vector<double>& xs) {
  if (xs.empty()) return {0.0, 0.0};
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  if (xs.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(xs.size() - 1))};
}

} // namespace detail

using TranscriptSink =
    std::function<void(const std::string& scheduler, std::size_t run, const Scenario&,
                       const EpisodeTranscript&)>;

/// Paired Monte-Carlo run: episode i uses the same scenario and the same channel
/// draws for every scheduler. Results are in scheduler order.
inline std::vector<AggregateResult> monte_carlo(const ScenarioConfig& cfg,
                                                const std::vector<Scheduler*>& schedulers,
                                                std::size_t runs,
                                                const TranscriptSink& sink = {}) {
  if (runs == 0) throw ConfigError("runs must be at least 1");
  cfg.validate();
  std::optional<ConnectivityMatrix> topology;
  if (cfg.topology == TopologyMode::fixed) topology = fixed_topology(cfg);

  std::vector<AggregateResult> out(schedulers.size());
  for (std::size_t s = 0; s < schedulers.size(); ++s) {
    out[s].scheduler = schedulers[s]->name();
    out[s].runs = runs;
    out[s].histogram.assign(cfg.gop.layers() + 1, 0);
  }
  for (std::size_t run = 0; run < runs; ++run) {
    const std::uint64_t seed = episode_seed(cfg.seed, run);
    const Scenario sc = make_scenario(cfg, seed, topology ? &*topology : nullptr);
    for (std::size_t s = 0; s < schedulers.size(); ++s) {
      const EpisodeTranscript tr = run_episode(sc, *schedulers[s], seed);
      out[s].run_distortion.push_back(tr.final_mean_distortion);
      out[s].run_psnr.push_back(tr.quality.mean_psnr);
      for (std::size_t layers : tr.quality.decoded_layers) ++out[s].histogram[layers];
      if (sink) sink(out[s].scheduler, run, sc, tr);
    }
  }
  for (auto& r : out) {
    std::tie(r.mean_distortion, r.std_distortion) = detail::mean_and_stddev(r.run_distortion);
    std::tie(r.mean_psnr, r.std_psnr) = detail::mean_and_stddev(r.run_psnr);
    r.stderr_psnr = r.std_psnr / std::sqrt(static_cast<double>(runs));
    r.min_psnr = *std::min_element(r.run_psnr.begin(), r.run_psnr.end());
    r.max_psnr = *std::max_element(r.run_psnr.begin(), r.run_psnr.end());
  }
  return out;
}

inline AggregateResult monte_carlo(const ScenarioConfig& cfg, Scheduler& scheduler,
                                   std::size_t runs) {
  return monte_carlo(cfg, std::vector<Scheduler*>{&scheduler}, runs).front();
}

} // namespace idnc
