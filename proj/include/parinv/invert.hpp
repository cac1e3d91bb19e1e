#pragma once

#include <map>
#include <string>
#include <vector>

#include "graph.hpp"
#include "propagate.hpp"

namespace parinv {

/* ====================== mechanical graph inversion ======================
 *
 * The inverse of a program is another graph in the same IR: op labels turn
 * into inverse op labels, edges reverse through each op's port map, input
 * and output labels swap, and every port left unconnected by the reversal
 * becomes a θ input. Value reuse must be made explicit by insert_dupl
 * before inverting, so each value has at most one consumer and the reversed
 * graph keeps fan-in 1.
 */

struct LayoutEntry {
  NodeId inv_op = kNoNode;
  std::size_t start = 0, end = 0; // [start, end) in the flat θ vector
  std::vector<Domain> spaces;     // per surviving slot
  std::vector<int> port_indexes;  // θ port index within the op, per slot
  OpKind origin_kind;             // forward kind this inverse came from
  NodeId origin_node = kNoNode;   // forward op node
};

struct ThetaLayout {
  std::vector<LayoutEntry> entries;       // inverse dependency order
  std::vector<NodeId> slot_nodes;         // slot -> θ value node (inverse graph)
  std::vector<Domain> slot_spaces;        // slot -> parameter space
  std::vector<std::size_t> slot_original; // slot -> index before reduction
  std::size_t total() const { return slot_nodes.size(); }
};

struct PortMapEntry {
  NodeId fwd_node = kNoNode;
  int fwd_slot = 0;
  NodeId inv_node = kNoNode;
  int inv_slot = 0;
};

/* A forward constant consumed by a kind without a reduced variant comes
 * back out of the inverse as a reserved output; runs compare it against the
 * expected value (exact when strict, a loss tap when totalized). */
struct Pin {
  NodeId inv_output = kNoNode; // "$pin:k" output node in the inverse graph
  std::string name;
  Value expected;
  NodeId fwd_const = kNoNode; // forward value node it recovers
};

// One eliminated slot: its value is now computed into `slot_node` (the old
// θ node, rewired to a γ subgraph or relabeled constant) by the reducer.
struct ReductionStep {
  std::size_t original_slot = 0;
  NodeId slot_node = kNoNode;
  std::string expr; // human-readable γ
};

struct InverseProgram {
  Graph forward;
  Graph inverse;
  ThetaLayout layout;
  std::vector<PortMapEntry> port_map;
  std::vector<Pin> pins;
  bool totalized = false;
  std::size_t pre_reduction_slots = 0;
  std::vector<ReductionStep> reductions;
};

/* ---------------------- dupl normalization ---------------------- */

// Explicit fan-out: every non-constant value with k > 1 consumers feeds a
// Dupl(k) whose copies take over its edges, in original edge order. Graphs
// without reuse come back structurally unchanged.
inline Graph insert_dupl(const Graph& g) {
  GraphBuilder b = GraphBuilder::from(g);
  const NodeId n = static_cast<NodeId>(g.node_count());
  for (NodeId v = 0; v < n; ++v) {
    if (!g.is_value(v)) continue;
    if (g.label(v).tag == ValueLabel::Tag::Constant) continue;
    auto consumers = g.value_consumers(v);
    if (consumers.size() < 2) continue;

    int fan = static_cast<int>(consumers.size());
    NodeId d = b.add_op_node(OpKind::dupl(fan));
    b.add_edge(v, kValueOutSlot, d, 1);
    int copy = 0;
    for (auto& e : b.edges()) {
      if (e.src != v || e.dst == d) continue;
      NodeId u = b.internal();
      b.add_edge(d, 1 + 1 + copy, u, kValueInSlot);
      e.src = u;
      ++copy;
    }
  }
  return b.build();
}

/* ---------------------- inversion ---------------------- */

namespace detail {

inline void reject(ExecError::Code c, const std::string& msg) {
  throw ExecError(c, msg);
}

// degenerate constants make the forward op constant or everywhere-⊥;
// their reduced inverse has no usable form
inline void check_const_operand(Prim p, int slot, const Value& cv) {
  auto bad = [&](const std::string& why) {
    reject(ExecError::Code::UnsupportedKind,
           "constant operand makes '" + std::string(prim_name(p)) +
               "' degenerate: " + why);
  };
  if (!cv.is_numeric()) return;
  double c = cv.as_double();
  switch (p) {
  case Prim::Mul:
    if (c == 0.0) bad("multiplication by 0");
    break;
  case Prim::Div:
    if (c == 0.0) bad(slot == 1 ? "constant 0 numerator" : "division by 0");
    break;
  case Prim::Pow:
    if (slot == 1 && (!(c > 0.0) || c == 1.0)) bad("base outside ℝ>0 \\ {1}");
    if (slot == 2 && c == 0.0) bad("exponent 0");
    break;
  case Prim::Log:
    if (slot == 1 && (!(c > 0.0) || c == 1.0)) bad("base outside ℝ>0 \\ {1}");
    if (slot == 2 && (!(c > 0.0) || c == 1.0))
      bad("argument outside ℝ>0 \\ {1}");
    break;
  default:
    break;
  }
}

} // namespace detail

inline InverseProgram invert(const Graph& g, const Annotations& ann) {
  const NodeId N = static_cast<NodeId>(g.node_count());

  /* pre-checks */
  for (NodeId i = 0; i < N; ++i) {
    if (g.is_op(i)) {
      if (!g.kind(i).is_forward())
        detail::reject(ExecError::Code::UnsupportedKind,
                       "invert expects forward kinds, found '" +
                           g.kind(i).spelling() + "'");
      continue;
    }
    if (g.label(i).tag != ValueLabel::Tag::Constant &&
        g.value_consumers(i).size() > 1)
      detail::reject(ExecError::Code::InvalidArgument,
                     "value node " + std::to_string(i) +
                         " has fan-out; apply insert_dupl first");
    if (ann[i].known && ann[i].known->is_undefined())
      detail::reject(ExecError::Code::UnsupportedKind,
                     "constant subgraph evaluates to ⊥ at node " +
                         std::to_string(i));
    if (ann[i].known && g.label(i).tag == ValueLabel::Tag::Output)
      detail::reject(ExecError::Code::UnsupportedKind,
                     "output '" + g.label(i).name +
                         "' is constant; nothing to invert");
  }

  auto known = [&](NodeId v) { return ann[v].known.has_value(); };

  /* ops whose inputs are all known fold away: their outputs are inverse
   * constants and the op contributes no inverse node */
  std::vector<bool> folded(N, false);
  for (NodeId i = 0; i < N; ++i) {
    if (!g.is_op(i)) continue;
    auto ins = g.op_inputs(i);
    folded[i] = std::all_of(ins.begin(), ins.end(), known);
  }

  GraphBuilder b;
  std::vector<NodeId> map(N, kNoNode);

  /* mirror value nodes */
  for (NodeId v = 0; v < N; ++v) {
    if (!g.is_value(v)) continue;
    const ValueLabel& l = g.label(v);
    switch (l.tag) {
    case ValueLabel::Tag::Input:
      map[v] = b.add_value({ValueLabel::Tag::Output, l.name, Value{}});
      break;
    case ValueLabel::Tag::Output:
      map[v] = b.add_value({ValueLabel::Tag::Input, l.name, Value{}});
      break;
    case ValueLabel::Tag::Constant:
      map[v] = b.constant(l.value);
      break;
    case ValueLabel::Tag::Internal:
      map[v] = known(v) ? b.constant(*ann[v].known) : b.internal();
      break;
    }
  }

  struct OpRecord {
    NodeId inv_op;
    NodeId fwd_op;
    OpKind fwd_kind;
    std::vector<NodeId> thetas;
  };
  std::vector<OpRecord> records;
  std::vector<PortMapEntry> port_map;
  std::vector<Pin> pins;

  /* mirror ops */
  for (NodeId o = 0; o < N; ++o) {
    if (!g.is_op(o) || folded[o]) continue;
    const OpKind& fk = g.kind(o);
    auto ins = g.op_inputs(o);
    auto outs = g.op_outputs(o);
    const int m = static_cast<int>(ins.size());

    OpKind ik = OpKind::inverse(fk.prim);
    ik.dupl_n = fk.dupl_n;
    ik.clip_lo = fk.clip_lo;
    ik.clip_hi = fk.clip_hi;

    // which forward input slots ride along as inverse constant inputs
    std::vector<int> carried;
    switch (fk.prim) {
    case Prim::GatherNd: {
      if (!known(ins[1]) || !ann[ins[1]].known->is_tensor())
        detail::reject(ExecError::Code::UnsupportedKind,
                       "gathernd requires constant indices");
      const auto& xs = ann[ins[0]].shape;
      if (!xs || xs->size() != 1)
        detail::reject(ExecError::Code::UnsupportedKind,
                       "gathernd requires a rank-1 data operand of known shape");
      auto idx = detail::index_list(ann[ins[1]].known->tensor());
      if (!idx)
        detail::reject(ExecError::Code::UnsupportedKind,
                       "gathernd indices must be integral");
      std::vector<bool> seen(static_cast<std::size_t>((*xs)[0]), false);
      for (auto i : *idx) {
        if (i < 0 || i >= (*xs)[0] || seen[static_cast<std::size_t>(i)])
          detail::reject(ExecError::Code::UnsupportedKind,
                         "gathernd indices must be unique and in range");
        seen[static_cast<std::size_t>(i)] = true;
      }
      ik.aux_len = (*xs)[0];
      ik.aux_nidx = static_cast<std::int64_t>(idx->size());
      carried = {1};
      break;
    }
    case Prim::Scatter: {
      if (!known(ins[1]) || !ann[ins[1]].known->is_tensor() ||
          !known(ins[2]) || !ann[ins[2]].known->is_tensor())
        detail::reject(ExecError::Code::UnsupportedKind,
                       "scatter requires constant indices and shape");
      auto idx = detail::index_list(ann[ins[1]].known->tensor());
      auto dims = detail::index_list(ann[ins[2]].known->tensor());
      if (!idx || !dims || dims->size() != 1)
        detail::reject(ExecError::Code::UnsupportedKind,
                       "scatter indices/shape must be integral and rank-1");
      std::vector<bool> seen(static_cast<std::size_t>((*dims)[0]), false);
      for (auto i : *idx) {
        if (i < 0 || i >= (*dims)[0] || seen[static_cast<std::size_t>(i)])
          detail::reject(ExecError::Code::UnsupportedKind,
                         "scatter indices must be unique and in range");
        seen[static_cast<std::size_t>(i)] = true;
      }
      carried = {1, 2};
      break;
    }
    case Prim::Reshape: {
      if (!known(ins[1]))
        detail::reject(ExecError::Code::UnsupportedKind,
                       "reshape requires a constant shape");
      const auto& xs = ann[ins[0]].shape;
      if (!xs || xs->size() != 1)
        detail::reject(ExecError::Code::UnsupportedKind,
                       "reshape requires a rank-1 data operand of known shape");
      ik.aux_len = (*xs)[0];
      break;
    }
    default: {
      if (const_reducible(fk.prim)) {
        for (int i = 0; i < m; ++i) {
          if (!known(ins[i])) continue;
          detail::check_const_operand(fk.prim, i + 1, *ann[ins[i]].known);
          ik.const_mask |= 1u << i;
          carried.push_back(i);
        }
      }
      break;
    }
    }

    NodeId io = b.add_op_node(ik);
    const int n_y = static_cast<int>(outs.size());
    const int n_c = inverse_const_inputs(ik);
    const int n_t = theta_count(ik);
    const int n_in = n_y + n_c + n_t;

    // forward outputs feed the inverse as its leading inputs
    for (int j = 0; j < n_y; ++j) {
      b.add_edge(map[outs[j]], kValueOutSlot, io, j + 1);
      port_map.push_back({o, m + 1 + j, io, j + 1});
    }
    // carried constants
    for (int r = 0; r < static_cast<int>(carried.size()); ++r) {
      NodeId cv = ins[carried[static_cast<std::size_t>(r)]];
      b.add_edge(map[cv], kValueOutSlot, io, n_y + 1 + r);
      port_map.push_back({o, carried[static_cast<std::size_t>(r)] + 1, io, n_y + 1 + r});
    }
    // unconnected ports become parameters
    OpRecord rec{io, o, fk, {}};
    auto spaces = theta_spaces(ik);
    for (int t = 0; t < n_t; ++t) {
      NodeId tn = b.input("$p:" + std::to_string(o) + ":" + std::to_string(t));
      b.add_edge(tn, kValueOutSlot, io, n_y + n_c + 1 + t);
      rec.thetas.push_back(tn);
    }

    // non-constant forward inputs come back as inverse outputs
    int r = 0;
    for (int i = 0; i < m; ++i) {
      bool is_carried =
          std::find(carried.begin(), carried.end(), i) != carried.end();
      if (is_carried) continue;
      if (fk.prim == Prim::Reshape && i == 1) continue; // σ folded into kind
      int port = n_in + 1 + r;
      ++r;
      NodeId v = ins[i];
      if (known(v)) {
        std::string pname = "$pin:" + std::to_string(pins.size());
        NodeId pn = b.add_value({ValueLabel::Tag::Output, pname, Value{}});
        b.add_edge(io, port, pn, kValueInSlot);
        pins.push_back(Pin{pn, pname, *ann[v].known, v});
      } else {
        b.add_edge(io, port, map[v], kValueInSlot);
      }
      port_map.push_back({o, i + 1, io, port});
    }
    records.push_back(std::move(rec));
  }

  /* drop constants nothing consumes (folded producers, pinned users) */
  for (NodeId v = 0; v < N; ++v) {
    if (!g.is_value(v) || !known(v)) continue;
    bool used = false;
    for (const auto& e : b.edges())
      if (e.src == map[v]) used = true;
    if (!used) b.mark_dead(map[v]);
  }

  std::vector<NodeId> remap;
  InverseProgram ip;
  ip.forward = g;
  ip.inverse = b.build(&remap);

  for (auto& e : port_map) e.inv_node = remap[e.inv_node];
  for (auto& p : pins) p.inv_output = remap[p.inv_output];
  for (auto& rec : records) {
    rec.inv_op = remap[rec.inv_op];
    for (auto& t : rec.thetas) t = remap[t];
  }
  ip.port_map = std::move(port_map);
  ip.pins = std::move(pins);

  /* layout: θ slots in inverse dependency order */
  std::map<NodeId, const OpRecord*> by_op;
  for (const auto& rec : records) by_op[rec.inv_op] = &rec;
  for (NodeId o : ip.inverse.ops_topo()) {
    auto it = by_op.find(o);
    if (it == by_op.end() || it->second->thetas.empty()) continue;
    const OpRecord& rec = *it->second;
    LayoutEntry e;
    e.inv_op = o;
    e.start = ip.layout.slot_nodes.size();
    e.spaces = theta_spaces(ip.inverse.kind(o));
    e.origin_kind = rec.fwd_kind;
    e.origin_node = rec.fwd_op;
    for (std::size_t t = 0; t < rec.thetas.size(); ++t) {
      e.port_indexes.push_back(static_cast<int>(t));
      ip.layout.slot_nodes.push_back(rec.thetas[t]);
      ip.layout.slot_spaces.push_back(e.spaces[t]);
      ip.layout.slot_original.push_back(ip.layout.slot_nodes.size() - 1);
    }
    e.end = ip.layout.slot_nodes.size();
    ip.layout.entries.push_back(std::move(e));
  }
  ip.pre_reduction_slots = ip.layout.total();
  return ip;
}

} // namespace parinv
