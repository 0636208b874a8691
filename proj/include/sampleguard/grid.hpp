#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "sampleguard/duration.hpp"
#include "sampleguard/error.hpp"

namespace sampleguard {

enum class NodeKind { Generator, Consumer };

/// Bounded random walk around `base_mw`, clamped to [0, 2 * base_mw].
struct Profile {
  double base_mw = 0.0;
  double jitter_mw = 0.0;
  double ramp_mw_per_min = 0.0;
};

struct GridNode {
  std::uint32_t id = 0;
  NodeKind kind = NodeKind::Consumer;
  Profile profile;
};

struct GridLine {
  std::uint32_t id = 0;
  std::uint32_t from = 0;
  std::uint32_t to = 0;
  double susceptance = 1.0;  // per unit
  double capacity_mw = 1.0;
};

struct GridSpec {
  std::vector<GridNode> nodes;
  std::vector<GridLine> lines;
  Duration gamma_recovery{30};
  Duration tau_trip{15};
  std::uint32_t slack = 0;

  std::optional<std::size_t> node_index(std::uint32_t id) const {
    for (std::size_t i = 0; i < nodes.size(); ++i)
      if (nodes[i].id == id) return i;
    return std::nullopt;
  }

  std::optional<std::size_t> line_index(std::uint32_t id) const {
    for (std::size_t i = 0; i < lines.size(); ++i)
      if (lines[i].id == id) return i;
    return std::nullopt;
  }

  bool is_consumer(std::uint32_t id) const {
    auto i = node_index(id);
    return i && nodes[*i].kind == NodeKind::Consumer;
  }

  void validate() const {
    auto bad = [](const std::string& why) { return Error(ErrorCode::InvalidGrid, why); };
    std::set<std::uint32_t> node_ids, line_ids;
    bool has_generator = false;
    for (const auto& n : nodes) {
      if (!node_ids.insert(n.id).second) throw bad("duplicate node id " + std::to_string(n.id));
      if (n.kind == NodeKind::Generator) has_generator = true;
      if (n.profile.base_mw < 0 || n.profile.jitter_mw < 0 || n.profile.ramp_mw_per_min < 0)
        throw bad("node " + std::to_string(n.id) + " has a negative profile parameter");
    }
    if (!has_generator) throw bad("grid has no generator");
    for (const auto& l : lines) {
      if (!line_ids.insert(l.id).second) throw bad("duplicate line id " + std::to_string(l.id));
      if (!node_ids.count(l.from) || !node_ids.count(l.to))
        throw bad("line " + std::to_string(l.id) + " references an unknown node");
      if (l.from == l.to) throw bad("line " + std::to_string(l.id) + " is a self loop");
      if (!(l.susceptance > 0)) throw bad("line " + std::to_string(l.id) + " needs susceptance > 0");
      if (!(l.capacity_mw > 0)) throw bad("line " + std::to_string(l.id) + " needs capacity > 0");
    }
    if (!gamma_recovery.is_positive()) throw bad("gamma_recovery must be positive");
    if (!tau_trip.is_positive()) throw bad("tau_trip must be positive");
    auto s = node_index(slack);
    if (!s || nodes[*s].kind != NodeKind::Generator) throw bad("slack must name a generator");
  }
};

namespace detail {

inline Duration json_duration(const nlohmann::json& j, const char* key) {
  const auto& v = j.at(key);
  if (v.is_string()) return parse_duration(v.get<std::string>());
  if (v.is_number_integer()) {
    auto i = v.get<std::int64_t>();
    if (i < 0) throw Error(ErrorCode::Duration, std::string(key) + " is negative");
    return Duration(i);
  }
  // Decimal numbers are read through their shortest text form to stay exact.
  return parse_duration(v.dump());
}

}  // namespace detail

inline GridSpec grid_from_json(const nlohmann::json& j) {
  GridSpec g;
  try {
    for (const auto& n : j.at("nodes")) {
      GridNode node;
      node.id = n.at("id").get<std::uint32_t>();
      auto kind = n.at("kind").get<std::string>();
      if (kind == "generator")
        node.kind = NodeKind::Generator;
      else if (kind == "consumer")
        node.kind = NodeKind::Consumer;
      else
        throw Error(ErrorCode::InvalidGrid, "unknown node kind '" + kind + "'");
      node.profile.base_mw = n.at("base_mw").get<double>();
      node.profile.jitter_mw = n.value("jitter_mw", 0.0);
      node.profile.ramp_mw_per_min = n.value("ramp_mw_per_min", 0.0);
      g.nodes.push_back(node);
    }
    for (const auto& l : j.at("lines")) {
      GridLine line;
      line.id = l.at("id").get<std::uint32_t>();
      line.from = l.at("from").get<std::uint32_t>();
      line.to = l.at("to").get<std::uint32_t>();
      line.susceptance = l.at("susceptance").get<double>();
      line.capacity_mw = l.at("capacity_mw").get<double>();
      g.lines.push_back(line);
    }
    g.gamma_recovery = detail::json_duration(j, "gamma_recovery_min");
    g.tau_trip = detail::json_duration(j, "tau_trip_min");
    g.slack = j.at("slack").get<std::uint32_t>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidGrid, e.what());
  }
  g.validate();
  return g;
}

inline nlohmann::json to_json(const GridSpec& g) {
  nlohmann::json j;
  j["nodes"] = nlohmann::json::array();
  for (const auto& n : g.nodes)
    j["nodes"].push_back({{"id", n.id},
                          {"kind", n.kind == NodeKind::Generator ? "generator" : "consumer"},
                          {"base_mw", n.profile.base_mw},
                          {"jitter_mw", n.profile.jitter_mw},
                          {"ramp_mw_per_min", n.profile.ramp_mw_per_min}});
  j["lines"] = nlohmann::json::array();
  for (const auto& l : g.lines)
    j["lines"].push_back({{"id", l.id},
                          {"from", l.from},
                          {"to", l.to},
                          {"susceptance", l.susceptance},
                          {"capacity_mw", l.capacity_mw}});
  j["gamma_recovery_min"] = g.gamma_recovery.str();
  j["tau_trip_min"] = g.tau_trip.str();
  j["slack"] = g.slack;
  return j;
}

inline GridSpec load_grid(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open grid file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidGrid, path + ": " + e.what());
  }
  return grid_from_json(j);
}

/// Connected components over in-service lines; label per node index, labels
/// numbered 0.. in order of their smallest node index.
inline std::vector<std::size_t> island_labels(const GridSpec& spec, const std::vector<bool>& in_service) {
  std::vector<std::size_t> parent(spec.nodes.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (std::size_t l = 0; l < spec.lines.size(); ++l) {
    if (!in_service[l]) continue;
    std::size_t a = find(*spec.node_index(spec.lines[l].from));
    std::size_t b = find(*spec.node_index(spec.lines[l].to));
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
  std::vector<std::size_t> label(spec.nodes.size());
  std::vector<std::size_t> root_label(spec.nodes.size(), SIZE_MAX);
  std::size_t next = 0;
  for (std::size_t i = 0; i < spec.nodes.size(); ++i) {
    std::size_t r = find(i);
    if (root_label[r] == SIZE_MAX) root_label[r] = next++;
    label[i] = root_label[r];
  }
  return label;
}

/// DC power flow. `injections` is indexed like `spec.nodes` (generation
/// positive, consumption negative); the result is indexed like `spec.lines`
/// and oriented from -> to.
///
/// Each island is solved separately with its angle reference at the
/// designated slack if present, else at its first generator; that node
/// absorbs any residual mismatch. Islands without a generator are outages
/// and carry no flow.
inline std::vector<double> flow_solve(const GridSpec& spec, const std::vector<bool>& in_service,
                                      const std::vector<double>& injections) {
  if (in_service.size() != spec.lines.size() || injections.size() != spec.nodes.size())
    throw Error(ErrorCode::Domain, "topology or injection vector has the wrong size");
  std::vector<double> flows(spec.lines.size(), 0.0);
  auto label = island_labels(spec, in_service);
  std::size_t n_islands = label.empty() ? 0 : *std::max_element(label.begin(), label.end()) + 1;
  std::size_t slack_index = *spec.node_index(spec.slack);

  for (std::size_t isl = 0; isl < n_islands; ++isl) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < label.size(); ++i)
      if (label[i] == isl) members.push_back(i);
    if (members.size() < 2) continue;

    std::optional<std::size_t> ref;
    if (label[slack_index] == isl) ref = slack_index;
    for (std::size_t i : members)
      if (!ref && spec.nodes[i].kind == NodeKind::Generator) ref = i;
    if (!ref) continue;

    // Position of each member in the reduced system; the reference is dropped.
    std::vector<long> pos(spec.nodes.size(), -1);
    long dim = 0;
    for (std::size_t i : members)
      if (i != *ref) pos[i] = dim++;

    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(dim, dim);
    Eigen::VectorXd p(dim);
    for (std::size_t i : members)
      if (pos[i] >= 0) p(pos[i]) = injections[i];
    for (std::size_t l = 0; l < spec.lines.size(); ++l) {
      if (!in_service[l]) continue;
      std::size_t u = *spec.node_index(spec.lines[l].from);
      if (label[u] != isl) continue;
      std::size_t v = *spec.node_index(spec.lines[l].to);
      double s = spec.lines[l].susceptance;
      if (pos[u] >= 0) b(pos[u], pos[u]) += s;
      if (pos[v] >= 0) b(pos[v], pos[v]) += s;
      if (pos[u] >= 0 && pos[v] >= 0) {
        b(pos[u], pos[v]) -= s;
        b(pos[v], pos[u]) -= s;
      }
    }
    Eigen::LDLT<Eigen::MatrixXd> ldlt(b);
    if (ldlt.info() != Eigen::Success) throw Error(ErrorCode::SingularSystem, "island susceptance matrix is singular");
    Eigen::VectorXd theta = ldlt.solve(p);
    if (!theta.allFinite()) throw Error(ErrorCode::SingularSystem, "non-finite bus angles");

    for (std::size_t l = 0; l < spec.lines.size(); ++l) {
      if (!in_service[l]) continue;
      std::size_t u = *spec.node_index(spec.lines[l].from);
      if (label[u] != isl) continue;
      std::size_t v = *spec.node_index(spec.lines[l].to);
      double tu = pos[u] >= 0 ? theta(pos[u]) : 0.0;
      double tv = pos[v] >= 0 ? theta(pos[v]) : 0.0;
      flows[l] = spec.lines[l].susceptance * (tu - tv);
    }
  }
  return flows;
}

}  // namespace sampleguard
