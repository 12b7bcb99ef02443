#pragma once

// JSON serialization of topologies and channel lists. The grammar is strict:
// every object is checked against its allowed key set and `schema` must be 1,
// so stale or misspelled fields fail loudly instead of silently defaulting.
//
// topology file
//   {"schema": 1,
//    "stages": [["ideal", {"kind": "dephasing", "p0": 0.1,
//                          "vacuum": {"mode": "micro"}}], ...],
//    "boundaries": [[{"kind": "transit", "in": 0, "out": 0},
//                    {"kind": "divide", "in": 1, "outs": [1, 2]},
//                    {"kind": "recombine", "ins": [1, 2], "outs": [1, -1],
//                     "discard": [false, true]}], ...],
//    "bob_retained": [0, 1]}
// channels file
//   {"schema": 1, "channels": [<segment spec>, ...]}
// vacuum spec: {"mode": "micro"} or {"mode": "alpha0", "value": 0.8};
// omitted vacuum means micro. Discarded recombine ports carry out = -1.

#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "pathweave/channels.hpp"
#include "pathweave/netgraph.hpp"

namespace pathweave {

using json = nlohmann::ordered_json;

namespace iodetail {

inline void check_keys(const json& j, const std::vector<std::string>& allowed,
                       const std::string& where) {
  if (!j.is_object()) throw std::invalid_argument(where + ": expected an object");
  for (const auto& item : j.items()) {
    bool ok = false;
    for (const std::string& k : allowed) ok = ok || item.key() == k;
    if (!ok) throw std::invalid_argument(where + ": unknown field \"" + item.key() + "\"");
  }
}

inline const json& need(const json& j, const char* key, const std::string& where) {
  const auto it = j.find(key);
  if (it == j.end()) throw std::invalid_argument(where + ": missing field \"" + key + "\"");
  return *it;
}

inline void check_schema(const json& j, const std::string& where) {
  const json& s = need(j, "schema", where);
  if (!s.is_number_integer() || s.get<int>() != 1)
    throw std::invalid_argument(where + ": schema must be 1");
}

}  // namespace iodetail

inline json vacuum_to_json(const VacuumSpec& v) {
  json j;
  switch (v.mode) {
    case VacuumSpec::Mode::micro:
      j["mode"] = "micro";
      break;
    case VacuumSpec::Mode::scalar_alpha0:
      j["mode"] = "alpha0";
      j["value"] = v.alpha0;
      break;
    case VacuumSpec::Mode::explicit_amplitudes:
      throw std::invalid_argument("vacuum_to_json: explicit amplitudes are not serializable");
  }
  return j;
}

inline VacuumSpec vacuum_from_json(const json& j, const std::string& where) {
  const std::string mode = iodetail::need(j, "mode", where).get<std::string>();
  if (mode == "micro") {
    iodetail::check_keys(j, {"mode"}, where);
    return VacuumSpec::micro();
  }
  if (mode == "alpha0") {
    iodetail::check_keys(j, {"mode", "value"}, where);
    return VacuumSpec::scalar(iodetail::need(j, "value", where).get<double>());
  }
  throw std::invalid_argument(where + ": vacuum mode must be \"micro\" or \"alpha0\"");
}

inline json segment_to_json(const SegmentSpec& s) {
  if (s.ideal) return json("ideal");
  json j;
  j["kind"] = noise_kind_name(s.kind);
  j["p0"] = s.p0;
  j["vacuum"] = vacuum_to_json(s.vacuum);
  return j;
}

inline SegmentSpec segment_from_json(const json& j, const std::string& where) {
  if (j.is_string()) {
    if (j.get<std::string>() == "ideal") return SegmentSpec{};
    throw std::invalid_argument(where + ": the only string segment is \"ideal\"");
  }
  iodetail::check_keys(j, {"kind", "p0", "vacuum"}, where);
  SegmentSpec s;
  s.ideal = false;
  const std::string kind = iodetail::need(j, "kind", where).get<std::string>();
  const auto parsed = parse_noise_kind(kind);
  if (!parsed) throw std::invalid_argument(where + ": unknown channel kind \"" + kind + "\"");
  s.kind = *parsed;
  s.p0 = iodetail::need(j, "p0", where).get<double>();
  s.vacuum = j.contains("vacuum") ? vacuum_from_json(j["vacuum"], where + ".vacuum")
                                  : VacuumSpec::micro();
  return s;
}

inline json node_to_json(const BoundaryNode& n) {
  json j;
  switch (n.kind) {
    case NodeKind::transit:
      j["kind"] = "transit";
      j["in"] = n.in[0];
      j["out"] = n.out[0];
      break;
    case NodeKind::divide:
      j["kind"] = "divide";
      j["in"] = n.in[0];
      j["outs"] = {n.out[0], n.out[1]};
      break;
    case NodeKind::recombine:
      j["kind"] = "recombine";
      j["ins"] = {n.in[0], n.in[1]};
      j["outs"] = {n.out[0], n.out[1]};
      j["discard"] = {n.discard[0], n.discard[1]};
      break;
  }
  return j;
}

inline BoundaryNode node_from_json(const json& j, const std::string& where) {
  const std::string kind = iodetail::need(j, "kind", where).get<std::string>();
  auto pair_of = [&where](const json& a, const char* what) -> std::array<int, 2> {
    if (!a.is_array() || a.size() != 2)
      throw std::invalid_argument(where + ": \"" + what + "\" must hold exactly two entries");
    return {a[0].get<int>(), a[1].get<int>()};
  };
  if (kind == "transit") {
    iodetail::check_keys(j, {"kind", "in", "out"}, where);
    return BoundaryNode::transit(iodetail::need(j, "in", where).get<int>(),
                                 iodetail::need(j, "out", where).get<int>());
  }
  if (kind == "divide") {
    iodetail::check_keys(j, {"kind", "in", "outs"}, where);
    const std::array<int, 2> outs = pair_of(iodetail::need(j, "outs", where), "outs");
    return BoundaryNode::divide(iodetail::need(j, "in", where).get<int>(), outs[0], outs[1]);
  }
  if (kind == "recombine") {
    iodetail::check_keys(j, {"kind", "ins", "outs", "discard"}, where);
    const json& dj = iodetail::need(j, "discard", where);
    if (!dj.is_array() || dj.size() != 2)
      throw std::invalid_argument(where + ": \"discard\" must hold exactly two entries");
    return BoundaryNode::recombine(pair_of(iodetail::need(j, "ins", where), "ins"),
                                   pair_of(iodetail::need(j, "outs", where), "outs"),
                                   {dj[0].get<bool>(), dj[1].get<bool>()});
  }
  throw std::invalid_argument(where + ": node kind must be transit, divide, or recombine");
}

inline json topology_to_json(const NetworkTopology& t) {
  json j;
  j["schema"] = 1;
  j["stages"] = json::array();
  for (const std::vector<SegmentSpec>& stage : t.stages) {
    json js = json::array();
    for (const SegmentSpec& s : stage) js.push_back(segment_to_json(s));
    j["stages"].push_back(std::move(js));
  }
  j["boundaries"] = json::array();
  for (const std::vector<BoundaryNode>& b : t.boundaries) {
    json jb = json::array();
    for (const BoundaryNode& n : b) jb.push_back(node_to_json(n));
    j["boundaries"].push_back(std::move(jb));
  }
  j["bob_retained"] = t.bob_retained;
  return j;
}

inline NetworkTopology topology_from_json(const json& j) {
  iodetail::check_keys(j, {"schema", "stages", "boundaries", "bob_retained"}, "topology");
  iodetail::check_schema(j, "topology");
  NetworkTopology t;
  const json& stages = iodetail::need(j, "stages", "topology");
  if (!stages.is_array()) throw std::invalid_argument("topology: \"stages\" must be an array");
  for (size_t l = 0; l < stages.size(); ++l) {
    const json& stage = stages[l];
    if (!stage.is_array())
      throw std::invalid_argument("topology: each stage must be an array of segments");
    std::vector<SegmentSpec> segs;
    for (size_t s = 0; s < stage.size(); ++s)
      segs.push_back(segment_from_json(
          stage[s], "stages[" + std::to_string(l) + "][" + std::to_string(s) + "]"));
    t.stages.push_back(std::move(segs));
  }
  const json& bounds = iodetail::need(j, "boundaries", "topology");
  if (!bounds.is_array()) throw std::invalid_argument("topology: \"boundaries\" must be an array");
  for (size_t l = 0; l < bounds.size(); ++l) {
    const json& b = bounds[l];
    if (!b.is_array())
      throw std::invalid_argument("topology: each boundary must be an array of nodes");
    std::vector<BoundaryNode> nodes;
    for (size_t n = 0; n < b.size(); ++n)
      nodes.push_back(node_from_json(
          b[n], "boundaries[" + std::to_string(l) + "][" + std::to_string(n) + "]"));
    t.boundaries.push_back(std::move(nodes));
  }
  t.bob_retained = iodetail::need(j, "bob_retained", "topology").get<std::vector<int>>();
  return t;
}

inline json channels_to_json(const std::vector<SegmentSpec>& chs) {
  json j;
  j["schema"] = 1;
  j["channels"] = json::array();
  for (const SegmentSpec& s : chs) j["channels"].push_back(segment_to_json(s));
  return j;
}

inline std::vector<SegmentSpec> channels_from_json(const json& j) {
  iodetail::check_keys(j, {"schema", "channels"}, "channels");
  iodetail::check_schema(j, "channels");
  const json& arr = iodetail::need(j, "channels", "channels");
  if (!arr.is_array() || arr.empty())
    throw std::invalid_argument("channels: \"channels\" must be a non-empty array");
  std::vector<SegmentSpec> out;
  for (size_t i = 0; i < arr.size(); ++i)
    out.push_back(segment_from_json(arr[i], "channels[" + std::to_string(i) + "]"));
  return out;
}

inline json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open " + path);
  json j;
  in >> j;
  return j;
}

inline NetworkTopology load_topology(const std::string& path) {
  return topology_from_json(load_json_file(path));
}

inline std::vector<SegmentSpec> load_channels(const std::string& path) {
  return channels_from_json(load_json_file(path));
}

}  // namespace pathweave
