#pragma once

// Experiment front end shared by the idnc_sim tool and its tests: config
// loading, graph inspection, Monte-Carlo sweeps with CSV output, MDP solving.

#include "idnc/core_model.hpp"
#include "idnc/errors.hpp"
#include "idnc/idnc_graph.hpp"
#include "idnc/mdp.hpp"
#include "idnc/scheduling.hpp"
#include "idnc/serialization.hpp"
#include "idnc/simulator.hpp"
#include "idnc/video_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace idnc {

enum class SweepAxis { theta, connectivity, devices };

inline SweepAxis parse_axis(const std::string& s) {
  if (s == "theta") return SweepAxis::theta;
  if (s == "connectivity") return SweepAxis::connectivity;
  if (s == "devices") return SweepAxis::devices;
  throw ConfigError("unknown sweep axis \"" + s + "\" (expected theta, connectivity or devices)");
}

inline const char* to_string(SweepAxis a) {
  switch (a) {
  case SweepAxis::theta: return "theta";
  case SweepAxis::connectivity: return "connectivity";
  case SweepAxis::devices: return "devices";
  }
  return "?";
}

struct SweepSpec {
  SweepAxis axis = SweepAxis::theta;
  std::vector<double> values;
};

inline const std::vector<std::string>& scheduler_names() {
  static const std::vector<std::string> names{"tsmis", "pcb", "fcd", "mdp"};
  return names;
}

struct ExperimentSpec {
  ScenarioConfig scenario;
  std::vector<std::string> schedulers{"tsmis"};
  std::optional<SweepSpec> sweep;
  std::size_t runs = 100;
  SelectionOptions selection{SelectionStrategy::automatic, 40};
  MdpOptions mdp;
  std::string out;
  bool dump_transcripts = false;

  void validate() const {
    scenario.validate();
    if (schedulers.empty()) throw ConfigError("at least one scheduler is required");
    for (const auto& s : schedulers)
      if (std::find(scheduler_names().begin(), scheduler_names().end(), s) == scheduler_names().end())
        throw ConfigError("unknown scheduler \"" + s + "\" (expected tsmis, pcb, fcd or mdp)");
    if (runs == 0) throw ConfigError("runs must be at least 1");
    if (selection.vertex_cap == 0 || selection.vertex_cap > 64)
      throw ConfigError("exact_vertex_cap must lie in [1, 64]");
    if (sweep) {
      if (sweep->values.empty()) throw ConfigError("sweep needs at least one value");
      if (!std::is_sorted(sweep->values.begin(), sweep->values.end()))
        throw ConfigError("sweep values must be sorted ascending");
      if (sweep->axis == SweepAxis::connectivity && scenario.scm)
        throw ConfigError("cannot sweep connectivity with an explicit scm");
      if (sweep->axis == SweepAxis::devices && (scenario.scm || scenario.gsm))
        throw ConfigError("cannot sweep devices with an explicit scm or gsm");
      for (double v : sweep->values) {
        if (sweep->axis != SweepAxis::connectivity && (v < 0 || v != std::floor(v)))
          throw ConfigError(std::string("sweep values for ") + to_string(sweep->axis) +
                            " must be nonnegative integers");
      }
    }
  }
};

/// "axis=v1,v2,..."
inline SweepSpec parse_sweep_flag(const std::string& flag) {
  const auto eq = flag.find('=');
  if (eq == std::string::npos) throw ConfigError("--sweep expects <axis>=<v1,v2,...>");
  SweepSpec s;
  s.axis = parse_axis(flag.substr(0, eq));
  std::stringstream list(flag.substr(eq + 1));
  std::string item;
  while (std::getline(list, item, ',')) {
    try {
      std::size_t used = 0;
      s.values.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("bad sweep value \"" + item + "\"");
    }
  }
  return s;
}

inline std::vector<std::string> split_names(const std::string& list) {
  std::vector<std::string> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

/// Config file layout:
///   {"scenario": {...}, "schedulers": ["tsmis", "pcb"],
///    "sweep": {"axis": "theta", "values": [5, 7]}, "runs": 1000,
///    "selection": "auto", "exact_vertex_cap": 40,
///    "mdp": {"vertex_cap": 40, "state_cap": 200000}, "out": "results.csv"}
inline ExperimentSpec experiment_from_json(const json& j, const std::filesystem::path& base = {}) {
  const std::string where = "config";
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  ExperimentSpec spec;
  if (j.contains("scenario")) spec.scenario = scenario_from_json(j.at("scenario"), base);
  if (j.contains("schedulers"))
    spec.schedulers = detail::field<std::vector<std::string>>(j, "schedulers", where);
  if (j.contains("sweep")) {
    const json& s = j.at("sweep");
    SweepSpec sweep;
    sweep.axis = parse_axis(detail::field<std::string>(s, "axis", "sweep"));
    sweep.values = detail::field<std::vector<double>>(s, "values", "sweep");
    spec.sweep = sweep;
  }
  if (j.contains("runs")) spec.runs = detail::field<std::size_t>(j, "runs", where);
  if (j.contains("selection")) {
    auto s = parse_strategy(detail::field<std::string>(j, "selection", where));
    if (!s) throw ConfigError("selection must be exact, greedy or auto");
    spec.selection.strategy = *s;
  }
  if (j.contains("exact_vertex_cap"))
    spec.selection.vertex_cap = detail::field<std::size_t>(j, "exact_vertex_cap", where);
  if (j.contains("mdp")) {
    const json& m = j.at("mdp");
    if (m.contains("vertex_cap")) spec.mdp.vertex_cap = detail::field<std::size_t>(m, "vertex_cap", "mdp");
    if (m.contains("state_cap")) spec.mdp.state_cap = detail::field<std::size_t>(m, "state_cap", "mdp");
  }
  if (j.contains("out")) spec.out = detail::field<std::string>(j, "out", where);
  return spec;
}

inline ExperimentSpec load_experiment(const std::filesystem::path& path) {
  return experiment_from_json(load_json_file(path), path.parent_path());
}

inline std::unique_ptr<Scheduler> make_scheduler(const std::string& name, const ExperimentSpec& spec) {
  if (name == "mdp") return std::make_unique<OnlineMdpScheduler>(spec.mdp);
  auto s = make_heuristic_scheduler(name, spec.selection);
  if (!s) throw ConfigError("unknown scheduler \"" + name + "\"");
  return s;
}

namespace detail {

inline std::string format_set(const IdncGraph& g, const IndependentSet& s) {
  std::string out = "{";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ", ";
    out += to_string(g.vertex(s.members()[i]));
  }
  return out + "}";
}

inline std::string format_double(const char* fmt, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

/// SCM and GSM of the first episode of the spec's scenario.
inline std::pair<ConnectivityMatrix, StatusMatrix> first_state(const ScenarioConfig& cfg) {
  cfg.validate();
  std::optional<ConnectivityMatrix> topology;
  if (cfg.topology == TopologyMode::fixed) topology = fixed_topology(cfg);
  Scenario sc = make_scenario(cfg, episode_seed(cfg.seed, 0), topology ? &*topology : nullptr);
  return {std::move(sc.y), std::move(sc.initial)};
}

} // namespace detail

/// Vertices, edges with rule tags, and every maximal independent set.
inline std::string graph_dump(const ExperimentSpec& spec) {
  auto [y, f] = detail::first_state(spec.scenario);
  check_dimensions(y, f);
  const IdncGraph g = build_graph(y, f);
  std::ostringstream os;
  if (g.empty()) {
    os << "empty graph\n";
    return os.str();
  }
  os << "vertices " << g.size() << "\n";
  for (const auto& v : g.vertices()) os << to_string(v) << "\n";
  const auto edges = g.edges();
  os << "edges " << edges.size() << "\n";
  for (const auto& e : edges)
    os << to_string(g.vertex(e.u)) << " -- " << to_string(g.vertex(e.v)) << " " << to_string(e.rule) << "\n";
  const auto sets = enumerate_maximal_independent_sets(g, spec.selection.enumeration());
  os << "maximal_independent_sets " << sets.size() << "\n";
  for (std::size_t i = 0; i < sets.size(); ++i)
    os << "k" << (i + 1) << " = " << detail::format_set(g, sets[i]) << "\n";
  return os.str();
}

inline const char* csv_header() {
  return "sweep_variable,scheduler,runs,mean_psnr,std_psnr,mean_distortion";
}

/// One CSV row per (axis value, scheduler); schedulers share every episode's
/// scenario and channel draws. Without a sweep the first column is "-".
inline std::string run_sweep(const ExperimentSpec& spec, std::ostream* transcripts = nullptr) {
  spec.validate();
  std::vector<std::unique_ptr<Scheduler>> owned;
  std::vector<Scheduler*> schedulers;
  for (const auto& name : spec.schedulers) {
    owned.push_back(make_scheduler(name, spec));
    schedulers.push_back(owned.back().get());
  }

  std::vector<std::pair<std::string, ScenarioConfig>> cells;
  if (!spec.sweep) {
    cells.emplace_back("-", spec.scenario);
  } else {
    for (double v : spec.sweep->values) {
      ScenarioConfig cfg = spec.scenario;
      std::string label;
      switch (spec.sweep->axis) {
      case SweepAxis::theta:
        cfg.theta = static_cast<int>(v);
        label = std::to_string(cfg.theta);
        break;
      case SweepAxis::connectivity:
        cfg.target_connectivity = v;
        label = detail::format_double("%.6g", v);
        break;
      case SweepAxis::devices:
        cfg.m = static_cast<std::size_t>(v);
        label = std::to_string(cfg.m);
        break;
      }
      cells.emplace_back(label, cfg);
    }
  }

  std::ostringstream csv;
  csv << csv_header() << "\n";
  for (const auto& [label, cfg] : cells) {
    TranscriptSink sink;
    if (transcripts != nullptr) {
      sink = [&, label = label](const std::string& name, std::size_t run, const Scenario&,
                                const EpisodeTranscript& tr) {
        *transcripts << "# cell " << label << " scheduler " << name << " run " << run << "\n";
        for (const auto& slot : tr.slots) {
          *transcripts << "slot " << slot.slot << ":";
          for (const auto& o : slot.outcomes)
            *transcripts << " " << to_string(o.vertex) << (o.received ? "+" : "-");
          *transcripts << " digest=" << std::hex << slot.status_digest << std::dec
                       << " mean_distortion=" << detail::format_double("%.6f", slot.mean_distortion)
                       << "\n";
        }
        *transcripts << "final mean_psnr=" << detail::format_double("%.6f", tr.quality.mean_psnr)
                     << " mean_distortion=" << detail::format_double("%.6f", tr.final_mean_distortion)
                     << "\n";
      };
    }
    const auto results = monte_carlo(cfg, schedulers, spec.runs, sink);
    for (const auto& r : results) {
      csv << label << "," << r.scheduler << "," << r.runs << ","
          << detail::format_double("%.6f", r.mean_psnr) << ","
          << detail::format_double("%.6f", r.std_psnr) << ","
          << detail::format_double("%.6f", r.mean_distortion) << "\n";
    }
  }
  return csv.str();
}

/// Optimal expected distortion reduction from the scenario's first state, the
/// optimal first action and the table size.
inline std::string mdp_solve(const ExperimentSpec& spec) {
  auto [y, f] = detail::first_state(spec.scenario);
  check_dimensions(y, f);
  if (f.packets() != spec.scenario.gop.packets()) {
    throw ConfigError("gsm has " + std::to_string(f.packets()) + " packets but the GOP has " +
                      std::to_string(spec.scenario.gop.packets()));
  }
  const ImportanceMatrix delta = importance_matrix(spec.scenario.gop, f.devices());
  const ValuePolicyTable table = backward_induction(f, spec.scenario.theta, y, delta, spec.mdp);
  const auto* entry = table.find(f, 1);
  const IdncGraph g = build_graph(y, f);
  std::ostringstream os;
  os << "value " << detail::format_double("%.12g", entry ? entry->value : 0.0) << "\n";
  os << "first_action " << (entry ? detail::format_set(g, entry->action) : std::string("{}")) << "\n";
  os << "reachable_states " << table.reachable_states() << "\n";
  os << "table_entries " << table.size() << "\n";
  return os.str();
}

} // namespace idnc
