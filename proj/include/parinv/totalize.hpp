#pragma once

#include "invert.hpp"

namespace parinv {

/* Make the parametric inverse total: splice a contraction op in front of
 * every inverse-op port whose feeding value is constrained (observation
 * domains like y > 0 for Pow⁻¹, and every non-trivial θ space). On-domain
 * values pass through contractions unchanged, so the strict semantics are
 * preserved exactly where they were defined; off-domain values get projected
 * to the nearest member and the projection distance feeds domain_loss.
 * Already-total programs are returned unchanged. */
inline InverseProgram totalize(const InverseProgram& ip) {
  if (ip.totalized) return ip;

  GraphBuilder b = GraphBuilder::from(ip.inverse);
  const Graph& g = ip.inverse;

  // port -> required domain, for every inverse op in the current graph
  struct Splice {
    NodeId op;
    int port;
    Domain dom;
  };
  std::vector<Splice> splices;
  for (NodeId o = 0; o < g.node_count(); ++o) {
    if (!g.is_op(o) || !g.kind(o).is_inverse()) continue;
    const OpKind& k = g.kind(o);
    auto val_doms = inverse_input_domains(k);
    for (std::size_t i = 0; i < val_doms.size(); ++i)
      if (!val_doms[i].trivial())
        splices.push_back({o, static_cast<int>(i) + 1, val_doms[i]});
    auto spaces = theta_spaces(k);
    int base = static_cast<int>(val_doms.size());
    for (std::size_t t = 0; t < spaces.size(); ++t)
      if (!spaces[t].trivial())
        splices.push_back({o, base + static_cast<int>(t) + 1, spaces[t]});
  }

  for (const auto& sp : splices) {
    NodeId c = b.add_op_node(OpKind::contract(sp.dom));
    NodeId v = b.internal();
    bool redirected = false;
    for (auto& e : b.edges()) {
      if (e.dst != sp.op || e.dst_slot != sp.port) continue;
      e.dst = c;
      e.dst_slot = 1;
      redirected = true;
      break;
    }
    if (!redirected)
      throw ExecError(ExecError::Code::InvalidArgument,
                      "totalize: port " + std::to_string(sp.port) + " of op " +
                          std::to_string(sp.op) + " is unwired");
    b.add_edge(c, 2, v, kValueInSlot);
    b.add_edge(v, kValueOutSlot, sp.op, sp.port);
  }

  InverseProgram out = ip;
  out.inverse = b.build(); // appends only; existing node ids are stable
  out.totalized = true;
  return out;
}

} // namespace parinv
