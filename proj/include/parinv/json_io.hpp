#pragma once

#include <fstream>

#include <nlohmann/json.hpp>

#include "invert.hpp"

namespace parinv {

/* On-disk formats. Node ids are 1-based in files, dense 0-based in memory.
 *
 * graph:   {"nodes":[{"id":1,"kind":"value:input:a"},...],
 *           "edges":[[src,srcSlot,dst,dstSlot],...]}
 * program: {"format":"parinv-program","version":1,"totalized":bool,
 *           "forward":graph,"inverse":graph,"layout":{...},
 *           "port_map":[[fn,fs,in,is],...],"pins":[...],"reductions":[...]}
 * values:  {"x":1.5,"flag":true,"v":{"shape":[2],"data":[1.0,2.0]}}
 */

using Json = nlohmann::ordered_json;

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/* ------------------------------ values ------------------------------ */

inline Json value_to_json(const Value& v) {
  if (v.is_real()) return Json(v.real());
  if (v.is_int()) return Json(v.integer());
  if (v.is_bool()) return Json(v.boolean());
  if (v.is_tensor()) {
    Json j;
    j["shape"] = v.tensor().shape;
    j["data"] = v.tensor().data;
    return j;
  }
  throw ParseError("⊥ has no serialized form");
}

inline Value value_from_json(const Json& j) {
  if (j.is_number_float()) return Value(j.get<double>());
  if (j.is_number_integer()) return Value(j.get<std::int64_t>());
  if (j.is_boolean()) return Value(j.get<bool>());
  if (j.is_array()) { // rank-1 shorthand
    Tensor t;
    t.shape = {static_cast<std::int64_t>(j.size())};
    for (const auto& e : j) t.data.push_back(e.get<double>());
    return Value(std::move(t));
  }
  if (j.is_object() && j.contains("shape") && j.contains("data")) {
    Tensor t;
    t.shape = j.at("shape").get<Shape>();
    t.data = j.at("data").get<std::vector<double>>();
    if (shape_numel(t.shape) != static_cast<std::int64_t>(t.data.size()))
      throw ParseError("tensor data length does not match shape");
    return Value(std::move(t));
  }
  throw ParseError("unrecognized value: " + j.dump());
}

inline Json values_to_json(const std::map<std::string, Value>& m) {
  Json j = Json::object();
  for (const auto& [k, v] : m) j[k] = value_to_json(v);
  return j;
}

inline std::map<std::string, Value> values_from_json(const Json& j) {
  if (!j.is_object()) throw ParseError("expected an object of named values");
  std::map<std::string, Value> m;
  for (const auto& [k, v] : j.items()) m[k] = value_from_json(v);
  return m;
}

/* ------------------------------ graphs ------------------------------ */

namespace detail {

inline std::string const_literal(const Value& v) {
  if (v.is_real()) return format_real_literal(v.real());
  if (v.is_int()) return std::to_string(v.integer());
  if (v.is_bool()) return v.boolean() ? "true" : "false";
  const Tensor& t = v.tensor();
  std::string s = "[";
  for (std::size_t i = 0; i < t.shape.size(); ++i)
    s += (i ? "," : "") + std::to_string(t.shape[i]);
  s += "]{";
  for (std::size_t i = 0; i < t.data.size(); ++i)
    s += (i ? "," : "") + format_double(t.data[i]);
  return s + "}";
}

inline Value parse_const_literal(const std::string& s) {
  if (s == "true") return Value(true);
  if (s == "false") return Value(false);
  if (!s.empty() && s[0] == '[') {
    auto close = s.find(']');
    auto open = s.find('{', close);
    if (close == std::string::npos || open == std::string::npos || s.back() != '}')
      throw ParseError("bad tensor literal '" + s + "'");
    Tensor t;
    auto split = [](const std::string& str, auto&& f) {
      std::size_t at = 0;
      while (at < str.size()) {
        auto comma = str.find(',', at);
        if (comma == std::string::npos) comma = str.size();
        f(str.substr(at, comma - at));
        at = comma + 1;
      }
    };
    split(s.substr(1, close - 1),
          [&](const std::string& p) { t.shape.push_back(parse_int(p)); });
    split(s.substr(open + 1, s.size() - open - 2),
          [&](const std::string& p) { t.data.push_back(parse_double(p)); });
    if (shape_numel(t.shape) != static_cast<std::int64_t>(t.data.size()))
      throw ParseError("tensor literal data does not match shape: '" + s + "'");
    return Value(std::move(t));
  }
  if (s.find('.') != std::string::npos || s.find('e') != std::string::npos ||
      s.find("inf") != std::string::npos || s.find("nan") != std::string::npos)
    return Value(parse_double(s));
  return Value(parse_int(s));
}

inline std::string node_kind_string(const Graph& g, NodeId n) {
  if (g.is_op(n)) return g.kind(n).spelling();
  const ValueLabel& l = g.label(n);
  switch (l.tag) {
    case ValueLabel::Tag::Input: return "value:input:" + l.name;
    case ValueLabel::Tag::Constant: return "value:const:" + const_literal(l.value);
    case ValueLabel::Tag::Output: return "value:output:" + l.name;
    case ValueLabel::Tag::Internal: return "value:internal";
  }
  throw ParseError("unreachable");
}

} // namespace detail

inline Json graph_to_json(const Graph& g) {
  Json nodes = Json::array();
  for (NodeId n = 0; n < g.node_count(); ++n)
    nodes.push_back({{"id", n + 1}, {"kind", detail::node_kind_string(g, n)}});
  Json edges = Json::array();
  for (const auto& e : g.edges())
    edges.push_back({e.src + 1, e.src_slot, e.dst + 1, e.dst_slot});
  return Json{{"nodes", std::move(nodes)}, {"edges", std::move(edges)}};
}

inline Graph graph_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("nodes") || !j.contains("edges"))
    throw ParseError("graph needs \"nodes\" and \"edges\"");

  struct Rec {
    std::int64_t id;
    std::string kind;
  };
  std::vector<Rec> recs;
  for (const auto& n : j.at("nodes"))
    recs.push_back({n.at("id").get<std::int64_t>(), n.at("kind").get<std::string>()});
  std::sort(recs.begin(), recs.end(), [](const Rec& a, const Rec& b) { return a.id < b.id; });
  for (std::size_t i = 0; i < recs.size(); ++i)
    if (recs[i].id != static_cast<std::int64_t>(i) + 1)
      throw ParseError("node ids must be 1..N without gaps");

  GraphBuilder b;
  struct Sugar { // op:neg -> sub(0,·), op:exp -> pow(e,·)
    NodeId op;
    Prim prim;
    double lhs;
  };
  std::vector<Sugar> sugars;
  for (const auto& r : recs) {
    if (r.kind.rfind("op:", 0) == 0) {
      if (r.kind == "op:neg" || r.kind == "op:exp") {
        NodeId o = b.add_op_node(OpKind::forward(
            r.kind == "op:neg" ? Prim::Sub : Prim::Pow));
        sugars.push_back({o, r.kind == "op:neg" ? Prim::Sub : Prim::Pow,
                          r.kind == "op:neg" ? 0.0 : std::exp(1.0)});
        continue;
      }
      try {
        b.add_op_node(OpKind::parse(r.kind));
      } catch (const std::invalid_argument& e) {
        throw ParseError(e.what());
      }
      continue;
    }
    if (r.kind.rfind("value:", 0) != 0)
      throw ParseError("unknown node kind '" + r.kind + "'");
    std::string rest = r.kind.substr(6);
    if (rest == "internal") {
      b.internal();
    } else if (rest.rfind("input:", 0) == 0) {
      b.input(rest.substr(6));
    } else if (rest.rfind("output:", 0) == 0) {
      b.add_value(ValueLabel{ValueLabel::Tag::Output, rest.substr(7), Value::undef()});
    } else if (rest.rfind("const:", 0) == 0) {
      b.constant(detail::parse_const_literal(rest.substr(6)));
    } else {
      throw ParseError("unknown node kind '" + r.kind + "'");
    }
  }
  for (const auto& e : j.at("edges")) {
    if (!e.is_array() || e.size() != 4)
      throw ParseError("edge must be [src,srcSlot,dst,dstSlot]");
    auto id = [&](std::size_t i) {
      std::int64_t raw = e.at(i).get<std::int64_t>();
      if (raw < 1 || raw > static_cast<std::int64_t>(recs.size()))
        throw ParseError("edge references node " + std::to_string(raw));
      return static_cast<NodeId>(raw - 1);
    };
    b.add_edge(id(0), e.at(1).get<int>(), id(2), e.at(3).get<int>());
  }
  // desugar: the file treats these as 1-in/1-out; shift the data input to
  // slot 2 and the result to slot 3, then feed slot 1 the implied constant
  for (const auto& s : sugars) {
    for (auto& e : b.edges()) {
      if (e.dst == s.op && e.dst_slot == 1) e.dst_slot = 2;
      if (e.src == s.op && e.src_slot == 2) e.src_slot = 3;
    }
    NodeId c = b.constant(Value(s.lhs));
    b.add_edge(c, kValueOutSlot, s.op, 1);
  }
  return b.build();
}

/* ------------------------------ programs ------------------------------ */

inline Json program_to_json(const InverseProgram& ip) {
  Json j;
  j["format"] = "parinv-program";
  j["version"] = 1;
  j["totalized"] = ip.totalized;
  j["forward"] = graph_to_json(ip.forward);
  j["inverse"] = graph_to_json(ip.inverse);

  Json slots = Json::array();
  for (std::size_t s = 0; s < ip.layout.slot_nodes.size(); ++s)
    slots.push_back({{"node", ip.layout.slot_nodes[s] + 1},
                     {"space", ip.layout.slot_spaces[s].spelling()},
                     {"original", ip.layout.slot_original[s]}});
  Json entries = Json::array();
  for (const auto& e : ip.layout.entries) {
    Json spaces = Json::array();
    for (const auto& d : e.spaces) spaces.push_back(d.spelling());
    entries.push_back({{"op", e.inv_op + 1},
                       {"origin", e.origin_node + 1},
                       {"origin_kind", e.origin_kind.spelling()},
                       {"ports", e.port_indexes},
                       {"spaces", std::move(spaces)}});
  }
  j["layout"] = Json{{"slots", std::move(slots)}, {"entries", std::move(entries)}};

  Json pm = Json::array();
  for (const auto& p : ip.port_map)
    pm.push_back({p.fwd_node + 1, p.fwd_slot, p.inv_node + 1, p.inv_slot});
  j["port_map"] = std::move(pm);

  Json pins = Json::array();
  for (const auto& p : ip.pins)
    pins.push_back({{"output", p.inv_output + 1},
                    {"name", p.name},
                    {"expected", value_to_json(p.expected)},
                    {"const", p.fwd_const + 1}});
  j["pins"] = std::move(pins);

  Json reds = Json::array();
  for (const auto& r : ip.reductions)
    reds.push_back({{"slot", r.original_slot},
                    {"node", r.slot_node + 1},
                    {"expr", r.expr}});
  j["reductions"] = std::move(reds);
  j["pre_reduction_slots"] = ip.pre_reduction_slots;
  return j;
}

inline InverseProgram program_from_json(const Json& j) {
  if (!j.is_object() || j.value("format", "") != "parinv-program")
    throw ParseError("not a parinv-program bundle");
  if (j.value("version", 0) != 1)
    throw ParseError("unsupported program version");

  InverseProgram ip;
  ip.totalized = j.at("totalized").get<bool>();
  ip.forward = graph_from_json(j.at("forward"));
  ip.inverse = graph_from_json(j.at("inverse"));
  ip.pre_reduction_slots = j.value("pre_reduction_slots", std::size_t{0});

  auto node_id = [&](const Json& v, const Graph& g) {
    std::int64_t raw = v.get<std::int64_t>();
    if (raw < 1 || raw > static_cast<std::int64_t>(g.node_count()))
      throw ParseError("node id " + std::to_string(raw) + " out of range");
    return static_cast<NodeId>(raw - 1);
  };
  auto domain = [](const Json& v) {
    try {
      return Domain::parse(v.get<std::string>());
    } catch (const std::invalid_argument& e) {
      throw ParseError(e.what());
    }
  };

  const Json& layout = j.at("layout");
  for (const auto& s : layout.at("slots")) {
    ip.layout.slot_nodes.push_back(node_id(s.at("node"), ip.inverse));
    ip.layout.slot_spaces.push_back(domain(s.at("space")));
    ip.layout.slot_original.push_back(s.at("original").get<std::size_t>());
  }
  std::size_t at = 0;
  for (const auto& e : layout.at("entries")) {
    LayoutEntry le;
    le.inv_op = node_id(e.at("op"), ip.inverse);
    le.origin_node = node_id(e.at("origin"), ip.forward);
    try {
      le.origin_kind = OpKind::parse(e.at("origin_kind").get<std::string>());
    } catch (const std::invalid_argument& ex) {
      throw ParseError(ex.what());
    }
    le.port_indexes = e.at("ports").get<std::vector<int>>();
    for (const auto& d : e.at("spaces")) le.spaces.push_back(domain(d));
    if (le.spaces.size() != le.port_indexes.size())
      throw ParseError("layout entry spaces/ports length mismatch");
    le.start = at;
    at += le.spaces.size();
    le.end = at;
    ip.layout.entries.push_back(std::move(le));
  }
  if (at != ip.layout.slot_nodes.size())
    throw ParseError("layout entries do not cover the slot list");

  for (const auto& p : j.at("port_map")) {
    if (!p.is_array() || p.size() != 4) throw ParseError("bad port_map row");
    ip.port_map.push_back({node_id(p.at(0), ip.forward), p.at(1).get<int>(),
                           node_id(p.at(2), ip.inverse), p.at(3).get<int>()});
  }
  for (const auto& p : j.at("pins"))
    ip.pins.push_back({node_id(p.at("output"), ip.inverse),
                       p.at("name").get<std::string>(),
                       value_from_json(p.at("expected")),
                       node_id(p.at("const"), ip.forward)});
  for (const auto& r : j.at("reductions"))
    ip.reductions.push_back({r.at("slot").get<std::size_t>(),
                             node_id(r.at("node"), ip.inverse),
                             r.at("expr").get<std::string>()});
  return ip;
}

/* ------------------------------ files ------------------------------ */

inline Json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  Json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  return j;
}

inline void save_json(const std::string& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write '" + path + "'");
  out << j.dump(2) << '\n';
}

} // namespace parinv
