#pragma once

// JSONL trace files. Line 1 is a header
//   {"delta_small": "1", "T": "60", "delta_sample": "5", "actions": [...]}
// and every further line one segment
//   {"t_min": "5/2", "atoms": {"oload_1": false, ...}}
// Times are exact rationals written as strings.

#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <string>

#include "json.hpp"
#include "sampleguard/simulator.hpp"
#include "sampleguard/trace.hpp"

namespace sampleguard {

struct TraceFile {
  DenseTrace dense;
  std::optional<Duration> delta_sample;
  nlohmann::json actions;  // passed through untouched when present
};

namespace detail {

inline Duration json_rational(const nlohmann::json& j, const char* key) {
  if (!j.contains(key)) throw Error(ErrorCode::InvalidTrace, std::string("missing '") + key + "'");
  const auto& v = j.at(key);
  if (v.is_string()) return parse_duration(v.get<std::string>());
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return Duration(v.get<std::int64_t>());
  throw Error(ErrorCode::InvalidTrace, std::string("'") + key + "' must be a rational string");
}

}  // namespace detail

inline TraceFile read_trace(std::istream& in) {
  TraceFile tf;
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
      if (!have_header) {
        tf.dense.resolution = detail::json_rational(j, "delta_small");
        tf.dense.horizon = detail::json_rational(j, "T");
        if (j.contains("delta_sample")) tf.delta_sample = detail::json_rational(j, "delta_sample");
        if (j.contains("actions")) tf.actions = j.at("actions");
        have_header = true;
        continue;
      }
      DenseTrace::Segment seg{detail::json_rational(j, "t_min"), {}};
      for (const auto& [name, value] : j.at("atoms").items()) seg.atoms[name] = value.get<bool>();
      tf.dense.segments.push_back(std::move(seg));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::InvalidTrace, "line " + std::to_string(lineno) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(ErrorCode::InvalidTrace, "line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (!have_header) throw Error(ErrorCode::InvalidTrace, "empty trace file");
  tf.dense.validate();
  return tf;
}

inline TraceFile read_trace_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open trace file '" + path + "'");
  return read_trace(in);
}

inline nlohmann::json to_json(const Action& a) {
  if (a.kind == Action::Kind::Noop) return {{"kind", "noop"}};
  return {{"kind", "set_line"}, {"line", a.line}, {"in_service", a.in_service}};
}

inline void write_trace(std::ostream& out, const DenseTrace& dense, const std::optional<Duration>& delta_sample,
                        const nlohmann::json& actions = nullptr) {
  nlohmann::json header = {{"delta_small", dense.resolution.str()}, {"T", dense.horizon.str()}};
  if (delta_sample) header["delta_sample"] = delta_sample->str();
  if (!actions.is_null()) header["actions"] = actions;
  out << header.dump() << '\n';
  for (const auto& seg : dense.segments) {
    nlohmann::json atoms(seg.atoms);
    out << nlohmann::json{{"t_min", seg.start.str()}, {"atoms", atoms}}.dump() << '\n';
  }
}

inline void write_episode(std::ostream& out, const EpisodeRecord& rec) {
  nlohmann::json actions = nlohmann::json::array();
  for (const auto& ta : rec.actions) {
    auto j = to_json(ta.action);
    j["t_min"] = ta.time.str();
    actions.push_back(j);
  }
  write_trace(out, rec.dense, rec.sampled.delta, actions);
}

}  // namespace sampleguard
