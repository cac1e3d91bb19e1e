#pragma once

#include <map>
#include <optional>

#include "invert.hpp"

namespace parinv {

/* Copy-merge ops and pinned constants force equalities between inverse-graph
 * values. Many hold for every y, so they over-determine θ: solving them
 * symbolically rewires the affected θ port to a computed value (γ) and drops
 * the slot from the search space.
 *
 * Symbolic domain: affine forms Σ qᵢ·atomᵢ + c where an atom is either a θ
 * slot or an inverse-graph value node treated as opaque. A value produced by
 * a strictly monotonic unary inverse (log_c, c^(·), (·)^(1/c)) keeps its
 * upstream affine behind a "peel" tag: two peeled values with the same tag
 * are equal iff their upstream forms are. */

struct Affine {
  // atom key: θ slot s ↦ -(s+1); value node id ↦ +id
  std::map<std::int64_t, double> terms;
  double c = 0.0;

  static std::int64_t theta_atom(std::size_t slot) {
    return -static_cast<std::int64_t>(slot) - 1;
  }
  static std::int64_t node_atom(NodeId v) { return static_cast<std::int64_t>(v); }

  static Affine constant(double k) { return Affine{{}, k}; }
  static Affine atom(std::int64_t key) { return Affine{{{key, 1.0}}, 0.0}; }

  bool is_constant() const { return terms.empty(); }

  Affine& operator+=(const Affine& o) {
    for (const auto& [k, q] : o.terms) terms[k] += q;
    c += o.c;
    prune();
    return *this;
  }
  Affine& operator-=(const Affine& o) {
    for (const auto& [k, q] : o.terms) terms[k] -= q;
    c -= o.c;
    prune();
    return *this;
  }
  Affine& scale(double s) {
    for (auto& [k, q] : terms) q *= s;
    c *= s;
    prune();
    return *this;
  }
  void prune() {
    for (auto it = terms.begin(); it != terms.end();)
      it = std::abs(it->second) < 1e-12 ? terms.erase(it) : std::next(it);
  }

  friend Affine operator+(Affine a, const Affine& b) { return a += b; }
  friend Affine operator-(Affine a, const Affine& b) { return a -= b; }
};

enum class Peel {
  None,
  LogBase, // value = log_c(upstream)
  ExpBase, // value = c^upstream
  Root,    // value = upstream^(1/c)
};

struct SymVal {
  Peel peel = Peel::None;
  double peel_const = 0.0;
  Affine aff;

  bool plain() const { return peel == Peel::None; }
  static SymVal opaque(NodeId v) { return {Peel::None, 0.0, Affine::atom(Affine::node_atom(v))}; }
};

struct EqConstraint {
  SymVal lhs, rhs;
  NodeId origin = kNoNode; // dupl op node or pin output node
  std::string note;
};

struct ConstraintSet {
  std::vector<EqConstraint> eqs;
  std::vector<SymVal> node_sym; // indexed by inverse node id
};

namespace detail {

inline std::optional<double> scalar_const(const Graph& g, NodeId v) {
  if (!g.is_value(v) || g.label(v).tag != ValueLabel::Tag::Constant)
    return std::nullopt;
  const Value& val = g.label(v).value;
  if (val.is_real() || val.is_int()) return val.as_double();
  return std::nullopt;
}

// mask 1 or 2 -> the carried constant's numeric value
inline double carried_const(const Graph& g, NodeId op, const OpKind& k) {
  int n_y = k.prim == Prim::Dupl ? k.dupl_n : 1;
  auto c = scalar_const(g, g.op_inputs(op)[n_y]);
  if (!c)
    throw ExecError(ExecError::Code::InvalidArgument,
                    "carried constant of op " + std::to_string(op) +
                        " is not a scalar");
  return *c;
}

} // namespace detail

inline ConstraintSet collect_constraints(const InverseProgram& ip) {
  const Graph& g = ip.inverse;
  ConstraintSet cs;
  cs.node_sym.assign(g.node_count(), SymVal{});

  std::map<NodeId, std::size_t> slot_of;
  for (std::size_t s = 0; s < ip.layout.slot_nodes.size(); ++s)
    slot_of[ip.layout.slot_nodes[s]] = s;

  for (NodeId v = 0; v < g.node_count(); ++v) {
    if (!g.is_value(v)) continue;
    switch (g.label(v).tag) {
      case ValueLabel::Tag::Input: {
        auto it = slot_of.find(v);
        cs.node_sym[v] = it != slot_of.end()
                             ? SymVal{Peel::None, 0.0,
                                      Affine::atom(Affine::theta_atom(it->second))}
                             : SymVal::opaque(v);
        break;
      }
      case ValueLabel::Tag::Constant: {
        auto c = detail::scalar_const(g, v);
        cs.node_sym[v] = c ? SymVal{Peel::None, 0.0, Affine::constant(*c)}
                           : SymVal::opaque(v);
        break;
      }
      default:
        cs.node_sym[v] = SymVal::opaque(v); // producers overwrite below
        break;
    }
  }

  for (NodeId o : g.ops_topo()) {
    const OpKind& k = g.kind(o);
    auto in_nodes = g.op_inputs(o);
    auto out_nodes = g.op_outputs(o);
    std::vector<SymVal> in;
    for (NodeId v : in_nodes) in.push_back(cs.node_sym[v]);
    auto opq = [&](std::size_t j) { return SymVal::opaque(out_nodes[j]); };
    auto set = [&](std::size_t j, SymVal s) { cs.node_sym[out_nodes[j]] = std::move(s); };
    for (std::size_t j = 0; j < out_nodes.size(); ++j) set(j, opq(j));

    auto lin = [&](std::size_t i) -> std::optional<Affine> {
      if (!in[i].plain()) return std::nullopt;
      return in[i].aff;
    };

    if (k.is_forward()) { // γ arithmetic from earlier eliminations
      auto a = lin(0);
      auto b = in.size() > 1 ? lin(1) : std::nullopt;
      switch (k.prim) {
        case Prim::Add:
          if (a && b) set(0, {Peel::None, 0.0, *a + *b});
          break;
        case Prim::Sub:
          if (a && b) set(0, {Peel::None, 0.0, *a - *b});
          break;
        case Prim::Mul:
          if (a && b && a->is_constant()) set(0, {Peel::None, 0.0, b->scale(a->c)});
          else if (a && b && b->is_constant()) set(0, {Peel::None, 0.0, a->scale(b->c)});
          break;
        case Prim::Div:
          if (a && b && b->is_constant() && b->c != 0.0)
            set(0, {Peel::None, 0.0, a->scale(1.0 / b->c)});
          break;
        default:
          break;
      }
      continue;
    }
    if (k.is_contract()) continue; // projection may move the value: opaque

    const std::uint32_t m = k.const_mask;
    switch (k.prim) {
      case Prim::Add: {
        if (m == 0) {
          if (auto y = lin(0); y && in[1].plain()) set(0, {Peel::None, 0.0, *y - in[1].aff});
          if (in[1].plain()) set(1, in[1]);
        } else if (auto y = lin(0)) {
          set(0, {Peel::None, 0.0, *y - Affine::constant(detail::carried_const(g, o, k))});
        }
        break;
      }
      case Prim::Sub: {
        if (m == 0) {
          if (auto y = lin(0); y && in[1].plain()) set(0, {Peel::None, 0.0, *y + in[1].aff});
          if (in[1].plain()) set(1, in[1]);
        } else if (auto y = lin(0)) {
          double c = detail::carried_const(g, o, k);
          set(0, m == 1 ? SymVal{Peel::None, 0.0, Affine::constant(c) - *y}
                        : SymVal{Peel::None, 0.0, *y + Affine::constant(c)});
        }
        break;
      }
      case Prim::Mul: {
        if (m != 0)
          if (auto y = lin(0))
            set(0, {Peel::None, 0.0, y->scale(1.0 / detail::carried_const(g, o, k))});
        break;
      }
      case Prim::Div: {
        if (m == 0) {
          if (in[1].plain()) set(1, in[1]);
        } else if (m == 2) {
          if (auto y = lin(0))
            set(0, {Peel::None, 0.0, y->scale(detail::carried_const(g, o, k))});
        }
        break;
      }
      case Prim::Pow: {
        if (m == 1) {
          if (auto y = lin(0))
            set(0, {Peel::LogBase, detail::carried_const(g, o, k), *y});
        } else if (m == 2) {
          if (auto y = lin(0))
            set(0, {Peel::Root, detail::carried_const(g, o, k), *y});
        }
        break;
      }
      case Prim::Log: {
        if (m == 0) {
          if (in[1].plain()) set(0, in[1]);
        } else if (m == 1) {
          if (auto y = lin(0))
            set(0, {Peel::ExpBase, detail::carried_const(g, o, k), *y});
        }
        break;
      }
      case Prim::Gt:
      case Prim::Lt:
      case Prim::Eq: {
        if (in[1].plain()) set(0, in[1]); // first θ survives both branches
        break;
      }
      case Prim::Dupl: {
        set(0, in[0]);
        for (int i = 0; i + 1 < k.dupl_n; ++i)
          cs.eqs.push_back({in[static_cast<std::size_t>(i)],
                            in[static_cast<std::size_t>(i) + 1], o, "copy"});
        break;
      }
      default:
        break; // selector- or nonlinearity-dependent: stays opaque
    }
  }

  for (const auto& p : ip.pins) {
    if (!(p.expected.is_real() || p.expected.is_int())) continue;
    cs.eqs.push_back({cs.node_sym[p.inv_output],
                      SymVal{Peel::None, 0.0, Affine::constant(p.expected.as_double())},
                      p.inv_output, "pin:" + p.name});
  }
  return cs;
}

/* ---------------------------- rendering ---------------------------- */

inline std::string render_affine(const Affine& a, const InverseProgram& ip) {
  const Graph& g = ip.inverse;
  auto atom_name = [&](std::int64_t key) -> std::string {
    if (key < 0) {
      NodeId n = ip.layout.slot_nodes[static_cast<std::size_t>(-key - 1)];
      return g.label(n).name;
    }
    NodeId v = static_cast<NodeId>(key);
    if (g.is_value(v) && !g.label(v).name.empty()) return g.label(v).name;
    return "n" + std::to_string(v);
  };
  std::vector<std::int64_t> keys;
  for (const auto& [k, q] : a.terms) keys.push_back(k);
  std::sort(keys.begin(), keys.end(), [](std::int64_t x, std::int64_t y) {
    if ((x < 0) != (y < 0)) return x < 0;   // θ atoms first
    return x < 0 ? x > y : x < y;           // θ by slot, nodes by id
  });
  std::string s;
  for (std::int64_t k : keys) {
    if (!s.empty()) s += " + ";
    s += format_double(a.terms.at(k)) + "*" + atom_name(k);
  }
  if (a.c != 0.0 || s.empty()) {
    if (!s.empty()) s += " + ";
    s += format_double(a.c);
  }
  return s;
}

inline std::string render_sym(const SymVal& s, const InverseProgram& ip) {
  std::string inner = render_affine(s.aff, ip);
  switch (s.peel) {
    case Peel::None: return inner;
    case Peel::LogBase:
      return "log_" + format_double(s.peel_const) + "(" + inner + ")";
    case Peel::ExpBase:
      return format_double(s.peel_const) + "^(" + inner + ")";
    case Peel::Root:
      return "(" + inner + ")^(1/" + format_double(s.peel_const) + ")";
  }
  return inner;
}

/* ---------------------------- elimination ---------------------------- */

namespace detail {

inline std::vector<std::vector<NodeId>> out_adjacency(const Graph& g) {
  std::vector<std::vector<NodeId>> adj(g.node_count());
  for (const auto& e : g.edges()) adj[e.src].push_back(e.dst);
  return adj;
}

inline bool reachable(const std::vector<std::vector<NodeId>>& adj, NodeId from,
                      NodeId to) {
  std::vector<bool> seen(adj.size(), false);
  std::vector<NodeId> stack{from};
  seen[from] = true;
  while (!stack.empty()) {
    NodeId n = stack.back();
    stack.pop_back();
    if (n == to) return true;
    for (NodeId m : adj[n])
      if (!seen[m]) {
        seen[m] = true;
        stack.push_back(m);
      }
  }
  return false;
}

// lhs == rhs reduced to one affine identity, peeling matched monotone wrappers
inline std::optional<Affine> equate(const SymVal& lhs, const SymVal& rhs) {
  if (lhs.peel != rhs.peel) return std::nullopt;
  if (lhs.peel != Peel::None && lhs.peel_const != rhs.peel_const)
    return std::nullopt;
  return lhs.aff - rhs.aff;
}

} // namespace detail

/* Eliminate one θ slot if some equality determines it; returns false when
 * no constraint is solvable. The solved slot's inverse port is rewired to a
 * γ subgraph computing the solution from y (and the remaining θ). */
inline bool eliminate_one(InverseProgram& ip) {
  ConstraintSet cs = collect_constraints(ip);
  const Graph& g = ip.inverse;
  auto adj = detail::out_adjacency(g);

  for (const auto& eq : cs.eqs) {
    auto diff = detail::equate(eq.lhs, eq.rhs);
    if (!diff || diff->terms.empty()) continue;

    // candidate θ slots, smallest first, with a cycle guard on node atoms
    for (const auto& [key, coeff] : diff->terms) {
      if (key >= 0) continue;
      std::size_t s = static_cast<std::size_t>(-key - 1);
      NodeId theta_node = ip.layout.slot_nodes[s];
      bool safe = true;
      for (const auto& [k2, q2] : diff->terms) {
        if (k2 == key || k2 < 0) continue;
        if (detail::reachable(adj, theta_node, static_cast<NodeId>(k2))) {
          safe = false;
          break;
        }
      }
      if (!safe) continue;

      // θ_s = Σ (-q/coeff)·atom + (-c/coeff)
      Affine sol = *diff;
      sol.terms.erase(key);
      sol.scale(-1.0 / coeff);

      std::string expr = render_affine(sol, ip);
      std::size_t original = ip.layout.slot_original[s];

      GraphBuilder b = GraphBuilder::from(g);
      if (sol.terms.empty()) {
        b.relabel(theta_node, ValueLabel{ValueLabel::Tag::Constant, "", Value(sol.c)});
      } else {
        std::vector<std::pair<NodeId, double>> terms;
        for (const auto& [k2, q2] : sol.terms)
          terms.push_back({k2 < 0 ? ip.layout.slot_nodes[static_cast<std::size_t>(-k2 - 1)]
                                  : static_cast<NodeId>(k2),
                           q2});
        auto manual = [&](Prim p, NodeId a, NodeId c2) {
          NodeId op = b.add_op_node(OpKind::forward(p));
          b.add_edge(a, kValueOutSlot, op, 1);
          b.add_edge(c2, kValueOutSlot, op, 2);
          b.add_edge(op, 3, theta_node, kValueInSlot);
        };
        if (terms.size() == 1 && sol.c == 0.0) {
          manual(Prim::Mul, terms[0].first, b.constant(Value(terms[0].second)));
        } else {
          std::vector<NodeId> parts;
          for (auto [vn, q] : terms)
            parts.push_back(b.mul(vn, b.constant(Value(q))));
          NodeId acc = parts[0];
          if (sol.c != 0.0) {
            for (std::size_t i = 1; i < parts.size(); ++i) acc = b.add(acc, parts[i]);
            manual(Prim::Add, acc, b.constant(Value(sol.c)));
          } else {
            for (std::size_t i = 1; i + 1 < parts.size(); ++i) acc = b.add(acc, parts[i]);
            manual(Prim::Add, acc, parts.back());
          }
        }
        b.relabel(theta_node, ValueLabel{ValueLabel::Tag::Internal, "", Value::undef()});
      }
      ip.inverse = b.build(); // appends only: node ids stay put

      for (auto& e : ip.layout.entries) {
        if (!(e.start <= s && s < e.end)) continue;
        std::size_t pos = s - e.start;
        e.spaces.erase(e.spaces.begin() + static_cast<std::ptrdiff_t>(pos));
        e.port_indexes.erase(e.port_indexes.begin() + static_cast<std::ptrdiff_t>(pos));
        break;
      }
      std::size_t at = 0;
      for (auto& e : ip.layout.entries) {
        e.start = at;
        at += e.spaces.size();
        e.end = at;
      }
      auto di = static_cast<std::ptrdiff_t>(s);
      ip.layout.slot_nodes.erase(ip.layout.slot_nodes.begin() + di);
      ip.layout.slot_spaces.erase(ip.layout.slot_spaces.begin() + di);
      ip.layout.slot_original.erase(ip.layout.slot_original.begin() + di);
      ip.reductions.push_back({original, theta_node, expr});
      return true;
    }
  }
  return false;
}

// fixpoint of eliminate_one; reduce before totalizing
inline InverseProgram eliminate_equalities(const InverseProgram& ip) {
  if (ip.totalized)
    throw ExecError(ExecError::Code::InvalidArgument,
                    "reduce the program before totalizing it");
  InverseProgram out = ip;
  std::size_t guard = out.layout.total() + 1;
  while (guard-- > 0 && eliminate_one(out)) {
  }
  return out;
}

} // namespace parinv
