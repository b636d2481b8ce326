#pragma once

// JSON encoding of the model types. Matrices are arrays of rows with explicit
// dimension fields; probabilities are decimals.
//
//   ConnectivityMatrix: {"m": 4, "y": [[1, 0.84, 0, 0], ...]}
//   StatusMatrix:       {"m": 4, "n": 3, "f": [[1, 1, 0], ...]}
//   ImportanceMatrix:   {"m": 4, "n": 3, "delta": [[...], ...]}
//   GopModel:           {"layers": 4, "packets_per_layer": [8, 3, 3, 3],
//                        "psnr_table": [20, 28, 31, 33.5, 35.64], "rate": 360000}

#include "idnc/core_model.hpp"
#include "idnc/errors.hpp"
#include "idnc/simulator.hpp"
#include "idnc/video_model.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace idnc {

using json = nlohmann::json;

namespace detail {

template <class T>
T field(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) {
    throw ConfigError(where + ": missing field \"" + key + "\"");
  }
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + ": field \"" + key + "\" has the wrong type (" + e.what() + ")");
  }
}

template <class T>
std::vector<std::vector<T>> rows_of(const json& j, const std::string& where) {
  try {
    return j.get<std::vector<std::vector<T>>>();
  } catch (const json::exception&) {
    throw ConfigError(where + ": expected an array of numeric rows");
  }
}

} // namespace detail

inline json to_json_value(const ConnectivityMatrix& y) {
  return json{{"m", y.devices()}, {"y", y.rows()}};
}

inline json to_json_value(const StatusMatrix& f) {
  return json{{"m", f.devices()}, {"n", f.packets()}, {"f", f.rows()}};
}

inline json to_json_value(const ImportanceMatrix& d) {
  return json{{"m", d.devices()}, {"n", d.packets()}, {"delta", d.rows()}};
}

inline json to_json_value(const GopModel& g) {
  json j{{"layers", g.layers()},
         {"packets_per_layer", g.packets_per_layer()},
         {"psnr_table", g.psnr_table()}};
  if (g.rate()) j["rate"] = *g.rate();
  return j;
}

/// Accepts {"m", "y"} or a bare array of rows.
inline ConnectivityMatrix connectivity_from_json(const json& j) {
  const std::string where = "connectivity matrix";
  const json& rows = j.is_array() ? j : j.contains("y") ? j.at("y") : j;
  auto out = ConnectivityMatrix::from_rows(detail::rows_of<double>(rows, where));
  if (j.is_object() && j.contains("m") && detail::field<std::size_t>(j, "m", where) != out.devices()) {
    throw ConfigError(where + ": \"m\" does not match the number of rows");
  }
  return out;
}

/// Accepts {"m", "n", "f"} or a bare array of rows.
inline StatusMatrix status_from_json(const json& j) {
  const std::string where = "status matrix";
  const json& rows = j.is_array() ? j : j.contains("f") ? j.at("f") : j;
  auto out = StatusMatrix::from_rows(detail::rows_of<int>(rows, where));
  if (j.is_object()) {
    if (j.contains("m") && detail::field<std::size_t>(j, "m", where) != out.devices())
      throw ConfigError(where + ": \"m\" does not match the number of rows");
    if (j.contains("n") && detail::field<std::size_t>(j, "n", where) != out.packets())
      throw ConfigError(where + ": \"n\" does not match the row length");
  }
  return out;
}

inline ImportanceMatrix importance_from_json(const json& j) {
  const std::string where = "importance matrix";
  const json& rows = j.is_array() ? j : j.contains("delta") ? j.at("delta") : j;
  return ImportanceMatrix::from_rows(detail::rows_of<double>(rows, where));
}

inline GopModel gop_from_json(const json& j) {
  const std::string where = "gop";
  auto ppl = detail::field<std::vector<std::size_t>>(j, "packets_per_layer", where);
  auto table = detail::field<std::vector<double>>(j, "psnr_table", where);
  std::optional<double> rate;
  if (j.contains("rate") && !j.at("rate").is_null()) rate = detail::field<double>(j, "rate", where);
  GopModel g(std::move(ppl), std::move(table), rate);
  if (j.contains("layers") && detail::field<std::size_t>(j, "layers", where) != g.layers()) {
    throw ConfigError("gop: \"layers\" does not match packets_per_layer");
  }
  return g;
}

/// Parses JSON text; syntax errors report line and column.
inline json parse_json(const std::string& text, const std::string& source = "<input>") {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1;
    std::size_t column = 1;
    const std::size_t stop = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    for (std::size_t i = 0; i < stop; ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    throw ConfigError(source + ":" + std::to_string(line) + ":" + std::to_string(column) +
                      ": JSON syntax error: " + e.what());
  }
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline json load_json_file(const std::filesystem::path& path) {
  return parse_json(read_text_file(path), path.string());
}

inline TopologyMode parse_topology(const std::string& s) {
  if (s == "per_run") return TopologyMode::per_run;
  if (s == "fixed") return TopologyMode::fixed;
  throw ConfigError("topology must be \"per_run\" or \"fixed\"");
}

/// Scenario block of a config file. Relative "gop_file" paths resolve against `base`.
inline ScenarioConfig scenario_from_json(const json& j, const std::filesystem::path& base = {}) {
  const std::string where = "scenario";
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  ScenarioConfig cfg;
  if (j.contains("gop")) cfg.gop = gop_from_json(j.at("gop"));
  if (j.contains("gop_file")) {
    const auto path = base / detail::field<std::string>(j, "gop_file", where);
    cfg.gop = gop_from_json(load_json_file(path));
  }
  if (j.contains("scm")) cfg.scm = connectivity_from_json(j.at("scm"));
  if (j.contains("gsm")) cfg.gsm = status_from_json(j.at("gsm"));
  if (j.contains("m")) {
    cfg.m = detail::field<std::size_t>(j, "m", where);
  } else if (cfg.scm) {
    cfg.m = cfg.scm->devices();
  } else if (cfg.gsm) {
    cfg.m = cfg.gsm->devices();
  }
  if (j.contains("theta")) cfg.theta = detail::field<int>(j, "theta", where);
  if (j.contains("target_connectivity")) {
    const json& t = j.at("target_connectivity");
    if (t.is_string() && t.get<std::string>() == "full") {
      cfg.target_connectivity.reset();
    } else {
      cfg.target_connectivity = detail::field<double>(j, "target_connectivity", where);
    }
  }
  if (j.contains("connectivity_tolerance"))
    cfg.connectivity_tolerance = detail::field<double>(j, "connectivity_tolerance", where);
  if (j.contains("reception_range"))
    cfg.reception_range = detail::field<std::pair<double, double>>(j, "reception_range", where);
  if (j.contains("side_info_range"))
    cfg.side_info_range = detail::field<std::pair<double, double>>(j, "side_info_range", where);
  if (j.contains("seed")) cfg.seed = detail::field<std::uint64_t>(j, "seed", where);
  if (j.contains("topology")) cfg.topology = parse_topology(detail::field<std::string>(j, "topology", where));
  return cfg;
}

} // namespace idnc
