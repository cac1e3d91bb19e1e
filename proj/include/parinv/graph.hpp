#pragma once

#include <map>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "kinds.hpp"
#include "value.hpp"

namespace parinv {

/* ====================== bipartite dataflow IR ======================
 *
 * Programs are bipartite multigraphs: op nodes alternate with value nodes.
 * Ports are (node, slot) pairs with 1-based slots; an op with m inputs and
 * n outputs uses slots 1..m for inputs and m+1..m+n for outputs. Value
 * nodes use the fixed convention slot 1 = producer side, slot 2 = consumer
 * side (a value may feed any number of consumers from slot 2, but receives
 * at most one producer edge on slot 1).
 */

using NodeId = std::uint32_t;
inline constexpr NodeId kNoNode = static_cast<NodeId>(-1);

struct PortRef {
  NodeId node = kNoNode;
  int slot = 0;
  bool operator==(const PortRef&) const = default;
  auto operator<=>(const PortRef&) const = default;
};

struct ValueLabel {
  enum class Tag { Input, Constant, Output, Internal };
  Tag tag = Tag::Internal;
  std::string name;  // Input/Output
  Value value;       // Constant
  bool operator==(const ValueLabel&) const = default;
};

struct Node {
  enum class Type { Op, Value };
  Type type = Type::Value;
  OpKind kind;      // ops
  ValueLabel label; // values
  bool operator==(const Node&) const = default;
};

struct Edge {
  NodeId src = kNoNode;
  int src_slot = 0;
  NodeId dst = kNoNode;
  int dst_slot = 0;
  bool operator==(const Edge&) const = default;
};

inline constexpr int kValueInSlot = 1;
inline constexpr int kValueOutSlot = 2;

/* ====================== validation ====================== */

struct Issue {
  enum class Code {
    NonBipartiteEdge,
    BadSlot,
    ValueFanInViolation,
    OpPortConflict,
    DanglingOpPort,
    UnlabeledSourceValue,
    UnlabeledSinkValue,
    SourceLabelConflict,
    OutputWithConsumer,
    DuplicateName,
    CycleDetected,
    BadNode,
  };
  Code code;
  NodeId node = kNoNode;
  std::string message;
};

inline std::string_view issue_code_name(Issue::Code c) {
  switch (c) {
  case Issue::Code::NonBipartiteEdge: return "NonBipartiteEdge";
  case Issue::Code::BadSlot: return "BadSlot";
  case Issue::Code::ValueFanInViolation: return "ValueFanInViolation";
  case Issue::Code::OpPortConflict: return "OpPortConflict";
  case Issue::Code::DanglingOpPort: return "DanglingOpPort";
  case Issue::Code::UnlabeledSourceValue: return "UnlabeledSourceValue";
  case Issue::Code::UnlabeledSinkValue: return "UnlabeledSinkValue";
  case Issue::Code::SourceLabelConflict: return "SourceLabelConflict";
  case Issue::Code::OutputWithConsumer: return "OutputWithConsumer";
  case Issue::Code::DuplicateName: return "DuplicateName";
  case Issue::Code::CycleDetected: return "CycleDetected";
  case Issue::Code::BadNode: return "BadNode";
  }
  return "?";
}

class ValidationError : public std::runtime_error {
public:
  explicit ValidationError(std::vector<Issue> issues)
      : std::runtime_error(render(issues)), issues_(std::move(issues)) {}
  const std::vector<Issue>& issues() const { return issues_; }

private:
  static std::string render(const std::vector<Issue>& issues) {
    std::string s = "graph validation failed:";
    for (const auto& i : issues) {
      s += "\n  [";
      s += issue_code_name(i.code);
      s += "] ";
      if (i.node != kNoNode) s += "node " + std::to_string(i.node) + ": ";
      s += i.message;
    }
    return s;
  }
  std::vector<Issue> issues_;
};

/* ====================== graph ====================== */

class Graph {
public:
  friend class GraphBuilder;

  std::size_t node_count() const { return nodes_.size(); }
  const Node& node(NodeId id) const { return nodes_.at(id); }
  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<Edge>& edges() const { return edges_; }

  bool is_op(NodeId id) const { return nodes_[id].type == Node::Type::Op; }
  bool is_value(NodeId id) const { return nodes_[id].type == Node::Type::Value; }
  const OpKind& kind(NodeId id) const { return nodes_[id].kind; }
  const ValueLabel& label(NodeId id) const { return nodes_[id].label; }

  // input value node per op input slot, slot order
  std::span<const NodeId> op_inputs(NodeId op) const { return op_io_[op].ins; }
  // output value node per op output slot, slot order
  std::span<const NodeId> op_outputs(NodeId op) const { return op_io_[op].outs; }

  // producing port of a value node, or {kNoNode, 0} for sources
  PortRef value_producer(NodeId v) const { return value_io_[v].producer; }
  // consuming op ports of a value node, edge order
  std::span<const PortRef> value_consumers(NodeId v) const {
    return value_io_[v].consumers;
  }

  // op nodes in dependency order (deterministic: smallest ready id first)
  const std::vector<NodeId>& ops_topo() const { return ops_topo_; }

  const std::vector<NodeId>& input_nodes() const { return inputs_; }
  const std::vector<NodeId>& output_nodes() const { return outputs_; }
  const std::vector<NodeId>& constant_nodes() const { return constants_; }
  std::size_t op_node_count() const { return op_count_; }
  std::size_t value_node_count() const { return nodes_.size() - op_count_; }

  NodeId input_by_name(std::string_view name) const {
    auto it = input_names_.find(std::string(name));
    return it == input_names_.end() ? kNoNode : it->second;
  }
  NodeId output_by_name(std::string_view name) const {
    auto it = output_names_.find(std::string(name));
    return it == output_names_.end() ? kNoNode : it->second;
  }

  // structural equality: nodes and edge lists, derived caches ignored
  bool operator==(const Graph& o) const {
    return nodes_ == o.nodes_ && edges_ == o.edges_;
  }

private:
  struct OpIO {
    std::vector<NodeId> ins, outs;
  };
  struct ValueIO {
    PortRef producer{kNoNode, 0};
    std::vector<PortRef> consumers;
  };

  std::vector<Node> nodes_;
  std::vector<Edge> edges_;
  std::vector<OpIO> op_io_;
  std::vector<ValueIO> value_io_;
  std::vector<NodeId> ops_topo_;
  std::vector<NodeId> inputs_, outputs_, constants_;
  std::map<std::string, NodeId> input_names_, output_names_;
  std::size_t op_count_ = 0;
};

/* ====================== builder ====================== */

class GraphBuilder {
public:
  GraphBuilder() = default;

  // start from an existing graph (passes clone, edit, rebuild)
  static GraphBuilder from(const Graph& g) {
    GraphBuilder b;
    b.nodes_ = g.nodes();
    b.edges_ = g.edges();
    b.dead_.assign(b.nodes_.size(), false);
    return b;
  }

  /* ---- raw construction ---- */

  NodeId add_value(ValueLabel label) {
    nodes_.push_back(Node{Node::Type::Value, OpKind{}, std::move(label)});
    dead_.push_back(false);
    return static_cast<NodeId>(nodes_.size() - 1);
  }

  NodeId add_op_node(OpKind kind) {
    nodes_.push_back(Node{Node::Type::Op, std::move(kind), ValueLabel{}});
    dead_.push_back(false);
    return static_cast<NodeId>(nodes_.size() - 1);
  }

  void add_edge(NodeId src, int src_slot, NodeId dst, int dst_slot) {
    edges_.push_back(Edge{src, src_slot, dst, dst_slot});
  }

  /* ---- labeled values ---- */

  NodeId input(std::string name) {
    return add_value({ValueLabel::Tag::Input, std::move(name), Value{}});
  }
  NodeId constant(Value v) {
    return add_value({ValueLabel::Tag::Constant, "", std::move(v)});
  }
  NodeId internal() { return add_value({ValueLabel::Tag::Internal, "", Value{}}); }

  // relabel an existing value node as a named output
  void output(NodeId v, std::string name) {
    nodes_.at(v).label = {ValueLabel::Tag::Output, std::move(name), Value{}};
  }

  void relabel(NodeId v, ValueLabel label) { nodes_.at(v).label = std::move(label); }

  /* ---- ops over values ---- */

  // creates the op plus one Internal value per output slot
  std::vector<NodeId> op(OpKind kind, std::span<const NodeId> ins) {
    int m = in_arity(kind);
    int n = out_arity(kind);
    if (static_cast<int>(ins.size()) != m)
      throw std::invalid_argument("op '" + kind.spelling() + "' expects " +
                                  std::to_string(m) + " inputs, got " +
                                  std::to_string(ins.size()));
    NodeId o = add_op_node(kind);
    for (int i = 0; i < m; ++i)
      add_edge(ins[i], kValueOutSlot, o, i + 1);
    std::vector<NodeId> outs;
    outs.reserve(n);
    for (int j = 0; j < n; ++j) {
      NodeId v = internal();
      add_edge(o, m + 1 + j, v, kValueInSlot);
      outs.push_back(v);
    }
    return outs;
  }

  std::vector<NodeId> op(OpKind kind, std::initializer_list<NodeId> ins) {
    return op(std::move(kind), std::span<const NodeId>(ins.begin(), ins.size()));
  }

  NodeId op1(OpKind kind, std::initializer_list<NodeId> ins) {
    return op(std::move(kind), ins).at(0);
  }

  NodeId add(NodeId a, NodeId b) { return op1(OpKind::forward(Prim::Add), {a, b}); }
  NodeId sub(NodeId a, NodeId b) { return op1(OpKind::forward(Prim::Sub), {a, b}); }
  NodeId mul(NodeId a, NodeId b) { return op1(OpKind::forward(Prim::Mul), {a, b}); }
  NodeId div(NodeId a, NodeId b) { return op1(OpKind::forward(Prim::Div), {a, b}); }
  NodeId pow(NodeId a, NodeId b) { return op1(OpKind::forward(Prim::Pow), {a, b}); }
  NodeId log(NodeId base, NodeId arg) {
    return op1(OpKind::forward(Prim::Log), {base, arg});
  }
  NodeId abs(NodeId a) { return op1(OpKind::forward(Prim::Abs), {a}); }
  NodeId min(NodeId a, NodeId b) { return op1(OpKind::forward(Prim::Min), {a, b}); }
  NodeId max(NodeId a, NodeId b) { return op1(OpKind::forward(Prim::Max), {a, b}); }
  NodeId cos(NodeId a) { return op1(OpKind::forward(Prim::Cos), {a}); }
  NodeId sin(NodeId a) { return op1(OpKind::forward(Prim::Sin), {a}); }
  NodeId tan(NodeId a) { return op1(OpKind::forward(Prim::Tan), {a}); }
  NodeId gt(NodeId a, NodeId b) { return op1(OpKind::forward(Prim::Gt), {a, b}); }
  NodeId lt(NodeId a, NodeId b) { return op1(OpKind::forward(Prim::Lt), {a, b}); }
  NodeId eq(NodeId a, NodeId b) { return op1(OpKind::forward(Prim::Eq), {a, b}); }
  NodeId and_(NodeId a, NodeId b) { return op1(OpKind::forward(Prim::And), {a, b}); }
  NodeId or_(NodeId a, NodeId b) { return op1(OpKind::forward(Prim::Or), {a, b}); }
  NodeId xor_(NodeId a, NodeId b) { return op1(OpKind::forward(Prim::Xor), {a, b}); }
  NodeId select(NodeId a, NodeId b, NodeId cond) {
    return op1(OpKind::forward(Prim::Select), {a, b, cond});
  }
  NodeId clip(NodeId a, double lo, double hi) {
    return op1(OpKind::clip(lo, hi), {a});
  }
  std::vector<NodeId> dupl(NodeId a, int n) { return op(OpKind::dupl(n), {a}); }
  NodeId gathernd(NodeId x, NodeId idx) {
    return op1(OpKind::forward(Prim::GatherNd), {x, idx});
  }
  NodeId scatter(NodeId z, NodeId idx, NodeId shape) {
    return op1(OpKind::forward(Prim::Scatter), {z, idx, shape});
  }
  NodeId reshape(NodeId x, NodeId shape) {
    return op1(OpKind::forward(Prim::Reshape), {x, shape});
  }

  // sugar: desugared at construction so every graph uses table kinds only
  NodeId neg(NodeId a) { return sub(constant(Value(0.0)), a); }
  NodeId exp(NodeId a) { return pow(constant(Value(std::numbers::e)), a); }

  /* ---- edits used by passes ---- */

  const std::vector<Node>& nodes() const { return nodes_; }
  std::vector<Edge>& edges() { return edges_; }
  const OpKind& kind_of(NodeId id) const { return nodes_.at(id).kind; }

  void mark_dead(NodeId id) { dead_.at(id) = true; }

  /* ---- finalize ---- */

  // Validates and freezes. Dead nodes are dropped and ids recompacted in
  // order; `remap` (old id -> new id, kNoNode for dropped) is filled when
  // provided. Throws ValidationError when invariants fail.
  Graph build(std::vector<NodeId>* remap = nullptr) const {
    Graph g;
    std::vector<NodeId> map(nodes_.size(), kNoNode);
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      if (dead_[i]) continue;
      map[i] = static_cast<NodeId>(g.nodes_.size());
      g.nodes_.push_back(nodes_[i]);
    }
    for (const auto& e : edges_) {
      if (e.src >= nodes_.size() || e.dst >= nodes_.size() ||
          map[e.src] == kNoNode || map[e.dst] == kNoNode)
        throw std::logic_error("edge references a dropped or invalid node");
      g.edges_.push_back(Edge{map[e.src], e.src_slot, map[e.dst], e.dst_slot});
    }
    if (remap) *remap = std::move(map);

    auto issues = index_and_validate(g);
    if (!issues.empty()) throw ValidationError(std::move(issues));
    return g;
  }

  // non-throwing validation (diagnostics only; graph is discarded)
  std::vector<Issue> validate() const {
    Graph g;
    g.nodes_ = nodes_;
    g.edges_ = edges_;
    for (std::size_t i = 0; i < nodes_.size(); ++i)
      if (dead_[i])
        return {Issue{Issue::Code::BadNode, static_cast<NodeId>(i),
                      "dead node present during validate()"}};
    return index_and_validate(g);
  }

private:
  static std::vector<Issue> index_and_validate(Graph& g) {
    std::vector<Issue> issues;
    auto bad = [&](Issue::Code c, NodeId n, std::string m) {
      issues.push_back(Issue{c, n, std::move(m)});
    };

    const auto N = g.nodes_.size();
    g.op_io_.assign(N, {});
    g.value_io_.assign(N, {});
    g.op_count_ = 0;

    for (NodeId i = 0; i < N; ++i) {
      const Node& n = g.nodes_[i];
      if (n.type == Node::Type::Op) {
        ++g.op_count_;
        int m = in_arity(n.kind);
        int nn = out_arity(n.kind);
        if (m < 1 || nn < 1)
          bad(Issue::Code::BadNode, i,
              "op kind '" + n.kind.spelling() + "' has degenerate arity");
        g.op_io_[i].ins.assign(static_cast<std::size_t>(std::max(m, 0)), kNoNode);
        g.op_io_[i].outs.assign(static_cast<std::size_t>(std::max(nn, 0)), kNoNode);
      }
    }

    for (const Edge& e : g.edges_) {
      const Node& s = g.nodes_[e.src];
      const Node& d = g.nodes_[e.dst];
      if ((s.type == Node::Type::Op) == (d.type == Node::Type::Op)) {
        bad(Issue::Code::NonBipartiteEdge, e.src,
            "edge to node " + std::to_string(e.dst) +
                " connects two nodes of the same class");
        continue;
      }
      if (s.type == Node::Type::Op) {
        // op output port -> value input port
        int m = in_arity(s.kind), nn = out_arity(s.kind);
        if (e.src_slot <= m || e.src_slot > m + nn) {
          bad(Issue::Code::BadSlot, e.src,
              "slot " + std::to_string(e.src_slot) +
                  " is not an output port of '" + s.kind.spelling() + "'");
          continue;
        }
        if (e.dst_slot != kValueInSlot) {
          bad(Issue::Code::BadSlot, e.dst,
              "value node consumes on slot 1, edge uses slot " +
                  std::to_string(e.dst_slot));
          continue;
        }
        int j = e.src_slot - m - 1;
        if (g.op_io_[e.src].outs[j] != kNoNode) {
          bad(Issue::Code::OpPortConflict, e.src,
              "output slot " + std::to_string(e.src_slot) + " feeds two values");
          continue;
        }
        g.op_io_[e.src].outs[j] = e.dst;
        if (g.value_io_[e.dst].producer.node != kNoNode) {
          bad(Issue::Code::ValueFanInViolation, e.dst,
              "value receives more than one producer edge");
          continue;
        }
        g.value_io_[e.dst].producer = PortRef{e.src, e.src_slot};
      } else {
        // value output port -> op input port
        if (e.src_slot != kValueOutSlot) {
          bad(Issue::Code::BadSlot, e.src,
              "value node produces on slot 2, edge uses slot " +
                  std::to_string(e.src_slot));
          continue;
        }
        int m = in_arity(d.kind);
        if (e.dst_slot < 1 || e.dst_slot > m) {
          bad(Issue::Code::BadSlot, e.dst,
              "slot " + std::to_string(e.dst_slot) +
                  " is not an input port of '" + d.kind.spelling() + "'");
          continue;
        }
        if (g.op_io_[e.dst].ins[e.dst_slot - 1] != kNoNode) {
          bad(Issue::Code::OpPortConflict, e.dst,
              "input slot " + std::to_string(e.dst_slot) + " fed twice");
          continue;
        }
        g.op_io_[e.dst].ins[e.dst_slot - 1] = e.src;
        g.value_io_[e.src].consumers.push_back(PortRef{e.dst, e.dst_slot});
      }
    }
    if (!issues.empty()) return issues;

    for (NodeId i = 0; i < N; ++i) {
      const Node& n = g.nodes_[i];
      if (n.type == Node::Type::Op) {
        for (std::size_t s = 0; s < g.op_io_[i].ins.size(); ++s)
          if (g.op_io_[i].ins[s] == kNoNode)
            bad(Issue::Code::DanglingOpPort, i,
                "input slot " + std::to_string(s + 1) + " of '" +
                    n.kind.spelling() + "' is unconnected");
        for (std::size_t s = 0; s < g.op_io_[i].outs.size(); ++s)
          if (g.op_io_[i].outs[s] == kNoNode)
            bad(Issue::Code::DanglingOpPort, i,
                "output slot " +
                    std::to_string(in_arity(n.kind) + 1 + s) + " of '" +
                    n.kind.spelling() + "' is unconnected");
        continue;
      }
      const bool has_producer = g.value_io_[i].producer.node != kNoNode;
      const bool has_consumer = !g.value_io_[i].consumers.empty();
      switch (n.label.tag) {
      case ValueLabel::Tag::Input:
        if (has_producer)
          bad(Issue::Code::SourceLabelConflict, i,
              "input '" + n.label.name + "' has a producer");
        if (!has_consumer)
          bad(Issue::Code::UnlabeledSinkValue, i,
              "input '" + n.label.name + "' has no consumers");
        g.inputs_.push_back(i);
        if (!g.input_names_.emplace(n.label.name, i).second)
          bad(Issue::Code::DuplicateName, i,
              "duplicate input name '" + n.label.name + "'");
        break;
      case ValueLabel::Tag::Constant:
        if (has_producer)
          bad(Issue::Code::SourceLabelConflict, i, "constant has a producer");
        if (!has_consumer)
          bad(Issue::Code::UnlabeledSinkValue, i,
              "constant has no consumers (dead constant)");
        g.constants_.push_back(i);
        break;
      case ValueLabel::Tag::Output:
        if (!has_producer)
          bad(Issue::Code::UnlabeledSourceValue, i,
              "output '" + n.label.name + "' has no producer");
        if (has_consumer)
          bad(Issue::Code::OutputWithConsumer, i,
              "output '" + n.label.name + "' feeds another op");
        g.outputs_.push_back(i);
        if (!g.output_names_.emplace(n.label.name, i).second)
          bad(Issue::Code::DuplicateName, i,
              "duplicate output name '" + n.label.name + "'");
        break;
      case ValueLabel::Tag::Internal:
        if (!has_producer)
          bad(Issue::Code::UnlabeledSourceValue, i,
              "internal value has no producer");
        if (!has_consumer)
          bad(Issue::Code::UnlabeledSinkValue, i,
              "internal value has no consumers");
        break;
      }
    }
    if (!issues.empty()) return issues;

    // Kahn over op nodes, smallest ready id first
    std::vector<int> pending(N, 0);
    for (NodeId i = 0; i < N; ++i)
      if (g.nodes_[i].type == Node::Type::Op)
        for (NodeId v : g.op_io_[i].ins)
          if (g.value_io_[v].producer.node != kNoNode) ++pending[i];
    std::set<NodeId> ready;
    for (NodeId i = 0; i < N; ++i)
      if (g.nodes_[i].type == Node::Type::Op && pending[i] == 0) ready.insert(i);
    while (!ready.empty()) {
      NodeId o = *ready.begin();
      ready.erase(ready.begin());
      g.ops_topo_.push_back(o);
      for (NodeId v : g.op_io_[o].outs)
        for (const PortRef& c : g.value_io_[v].consumers)
          if (--pending[c.node] == 0) ready.insert(c.node);
    }
    if (g.ops_topo_.size() != g.op_count_)
      bad(Issue::Code::CycleDetected, kNoNode,
        "dataflow contains a cycle (" + std::to_string(g.ops_topo_.size()) +
            " of " + std::to_string(g.op_count_) + " ops orderable)");

    return issues;
  }

  std::vector<Node> nodes_;
  std::vector<Edge> edges_;
  std::vector<bool> dead_;
};

} // namespace parinv
