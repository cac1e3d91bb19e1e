#pragma once

#include <functional>
#include <map>
#include <set>
#include <span>

#include "invert.hpp"

namespace parinv {

/* ====================== forward interpretation ====================== */

struct ForwardRun {
  std::map<std::string, Value> outputs;
  std::vector<Value> values; // per node id; ops keep Undefined placeholders
  bool all_defined = true;   // no ⊥ anywhere in the dataflow
};

inline ForwardRun run_forward(const Graph& g,
                              const std::map<std::string, Value>& inputs) {
  for (const auto& [name, v] : inputs) {
    if (g.input_by_name(name) == kNoNode)
      throw ExecError(ExecError::Code::InvalidArgument,
                      "no input named '" + name + "'");
    if (v.is_undefined())
      throw ExecError(ExecError::Code::InvalidArgument,
                      "input '" + name + "' is ⊥");
  }

  ForwardRun r;
  r.values.assign(g.node_count(), Value::undef());
  for (NodeId v : g.input_nodes()) {
    auto it = inputs.find(g.label(v).name);
    if (it == inputs.end())
      throw ExecError(ExecError::Code::MissingInput,
                      "input '" + g.label(v).name + "' not bound");
    r.values[v] = it->second;
  }
  for (NodeId v : g.constant_nodes()) r.values[v] = g.label(v).value;

  for (NodeId o : g.ops_topo()) {
    if (!g.kind(o).is_forward())
      throw ExecError(ExecError::Code::UnsupportedKind,
                      "run_forward on non-forward kind '" +
                          g.kind(o).spelling() + "'");
    std::vector<Value> ins;
    for (NodeId v : g.op_inputs(o)) ins.push_back(r.values[v]);
    auto outs = forward_eval(g.kind(o), ins);
    auto out_nodes = g.op_outputs(o);
    for (std::size_t j = 0; j < out_nodes.size(); ++j) {
      r.values[out_nodes[j]] = outs[j];
      if (outs[j].is_undefined()) r.all_defined = false;
    }
  }
  for (NodeId v : g.output_nodes()) r.outputs[g.label(v).name] = r.values[v];
  return r;
}

/* ====================== inverse interpretation ====================== */

struct TapReport {
  NodeId origin = kNoNode; // op node (contract/dupl/scatter) or pin output
  std::string label;
  double distance = 0.0;
};

struct LossReport {
  std::map<std::string, Value> outputs; // recovered forward inputs
  double domain_loss = 0.0;
  std::vector<TapReport> per_tap;
  double identity_loss = 0.0; // d(f(f⁻¹(y;θ)), y); +∞ if the re-run is ⊥
};

namespace detail {

inline std::pair<Value, double> contract_apply(const Domain& d, const Value& v) {
  if (v.is_undefined())
    return {v, std::numeric_limits<double>::infinity()};
  if (v.is_tensor()) {
    Tensor out = v.tensor();
    double dist = 0.0;
    for (auto& e : out.data) {
      dist += d.distance(e);
      e = d.contract(e);
    }
    return {Value(std::move(out)), dist};
  }
  return {d.contract_value(v), d.distance(v)};
}

} // namespace detail

/* Evaluate the inverse graph at (y, θ). The strict (untotalized) program
 * propagates ⊥ and reports it as NotTotalized; the totalized program always
 * produces values, accumulating every contraction, copy-disagreement, and
 * pin deviation into domain_loss. identity_loss re-runs the stored forward
 * program on the recovered inputs. */
inline LossReport run_inverse(const InverseProgram& ip,
                              const std::map<std::string, Value>& y,
                              std::span<const double> theta,
                              bool compute_identity = true) {
  const Graph& g = ip.inverse;
  if (theta.size() != ip.layout.total())
    throw ExecError(ExecError::Code::ArityMismatch,
                    "θ has " + std::to_string(theta.size()) + " slots, layout needs " +
                        std::to_string(ip.layout.total()));

  std::set<std::string> pin_names;
  for (const auto& p : ip.pins) pin_names.insert(p.name);

  for (const auto& [name, v] : y) {
    if (g.input_by_name(name) == kNoNode)
      throw ExecError(ExecError::Code::InvalidArgument,
                      "no observed output named '" + name + "'");
    if (v.is_undefined())
      throw ExecError(ExecError::Code::InvalidArgument,
                      "observation '" + name + "' is ⊥");
  }

  std::vector<Value> vals(g.node_count(), Value::undef());
  std::vector<bool> is_theta(g.node_count(), false);
  for (std::size_t s = 0; s < ip.layout.slot_nodes.size(); ++s) {
    vals[ip.layout.slot_nodes[s]] = Value(theta[s]);
    is_theta[ip.layout.slot_nodes[s]] = true;
  }
  for (NodeId v : g.input_nodes()) {
    if (is_theta[v]) continue;
    auto it = y.find(g.label(v).name);
    if (it == y.end())
      throw ExecError(ExecError::Code::MissingInput,
                      "observation '" + g.label(v).name + "' not bound");
    vals[v] = it->second;
  }
  for (NodeId v : g.constant_nodes()) vals[v] = g.label(v).value;

  LossReport rep;
  auto bot_hit = [&](NodeId at, const std::string& what) {
    if (!ip.totalized)
      throw ExecError(ExecError::Code::NotTotalized,
                      what + " at node " + std::to_string(at) +
                          "; totalize the program or adjust θ");
    throw ExecError(ExecError::Code::InvalidArgument,
                    "totalized program hit ⊥ (" + what + ") at node " +
                        std::to_string(at));
  };

  for (NodeId o : g.ops_topo()) {
    const OpKind& k = g.kind(o);
    std::vector<Value> ins;
    for (NodeId v : g.op_inputs(o)) ins.push_back(vals[v]);
    auto out_nodes = g.op_outputs(o);

    if (k.is_contract()) {
      auto [out, dist] = detail::contract_apply(k.target, ins[0]);
      vals[out_nodes[0]] = std::move(out);
      rep.per_tap.push_back({o, "contract:" + k.target.spelling(), dist});
      continue;
    }
    if (k.is_forward()) { // γ arithmetic introduced by reduction
      auto outs = forward_eval(k, ins);
      for (std::size_t j = 0; j < out_nodes.size(); ++j) {
        if (outs[j].is_undefined()) bot_hit(o, "γ computation undefined");
        vals[out_nodes[j]] = outs[j];
      }
      continue;
    }
    auto res = inverse_eval(k, ins, ip.totalized);
    if (!res.defined) bot_hit(o, "preimage miss in '" + k.spelling() + "'");
    for (std::size_t j = 0; j < out_nodes.size(); ++j)
      vals[out_nodes[j]] = res.outs[j];
    if (k.prim == Prim::Dupl || k.prim == Prim::Scatter)
      rep.per_tap.push_back(
          {o, k.prim == Prim::Dupl ? "copy-disagreement" : "scatter-residual",
           res.tap});
  }

  for (const auto& p : ip.pins) {
    const Value& got = vals[p.inv_output];
    double d = got.is_undefined() ? std::numeric_limits<double>::infinity()
                                  : metric(got, p.expected);
    /* the recovered constant travels through the same floating arithmetic as
     * everything else; agreement within roundoff counts as agreement */
    double scale = 1.0;
    if (p.expected.is_numeric())
      scale = std::max(1.0, std::abs(p.expected.as_double()));
    else if (p.expected.is_tensor())
      for (double e : p.expected.tensor().data)
        scale = std::max(scale, std::abs(e));
    if (!ip.totalized && d > 1e-9 * scale)
      throw ExecError(ExecError::Code::NotTotalized,
                      "recovered constant differs from '" + p.name + "'");
    rep.per_tap.push_back({p.inv_output, "pin:" + p.name, d});
  }

  for (const auto& t : rep.per_tap) rep.domain_loss += t.distance;

  for (NodeId v : g.output_nodes()) {
    const std::string& name = g.label(v).name;
    if (pin_names.count(name)) continue;
    rep.outputs[name] = vals[v];
  }

  if (compute_identity) {
    ForwardRun fr = run_forward(ip.forward, rep.outputs);
    double d2 = 0.0;
    bool ok = true;
    for (NodeId v : ip.forward.output_nodes()) {
      const std::string& name = ip.forward.label(v).name;
      const Value& re = fr.outputs.at(name);
      auto it = y.find(name);
      if (it == y.end())
        throw ExecError(ExecError::Code::MissingInput,
                        "observation '" + name + "' not bound");
      if (re.is_undefined()) {
        ok = false;
        break;
      }
      double d = metric(re, it->second);
      d2 += d * d;
    }
    rep.identity_loss =
        ok ? std::sqrt(d2) : std::numeric_limits<double>::infinity();
  }
  return rep;
}

/* ====================== θ extraction over programs ====================== */

struct Extraction {
  std::map<std::string, Value> y;
  std::vector<double> theta;
};

// Run the forward program on x, then read back per-op parameters so the
// inverse reproduces this exact execution: f̂⁻¹(f(x); θ̂(x)) = x.
inline Extraction extract_theta_program(const InverseProgram& ip,
                                        const std::map<std::string, Value>& inputs) {
  ForwardRun fr = run_forward(ip.forward, inputs);
  if (!fr.all_defined)
    throw ExecError(ExecError::Code::ForwardUndefined,
                    "forward execution is ⊥; extraction has no witness");
  Extraction ex;
  ex.y = fr.outputs;
  for (const auto& e : ip.layout.entries) {
    std::vector<Value> x, yv;
    for (NodeId v : ip.forward.op_inputs(e.origin_node))
      x.push_back(fr.values[v]);
    for (NodeId v : ip.forward.op_outputs(e.origin_node))
      yv.push_back(fr.values[v]);
    auto full = extract_theta(e.origin_kind,
                              ip.inverse.kind(e.inv_op).const_mask, x, yv);
    for (int j : e.port_indexes)
      ex.theta.push_back(full.at(static_cast<std::size_t>(j)));
  }
  return ex;
}

/* ====================== losses over recovered inputs ====================== */

using LossFn = std::function<double(const std::map<std::string, Value>&)>;

// Σ |x| over every scalar and tensor element (bools as 0/1)
inline LossFn abs_sum_loss() {
  return [](const std::map<std::string, Value>& xs) {
    double s = 0.0;
    for (const auto& [name, v] : xs) {
      if (v.is_undefined()) return std::numeric_limits<double>::infinity();
      if (v.is_tensor())
        for (double e : v.tensor().data) s += std::abs(e);
      else if (v.is_bool())
        s += v.boolean() ? 1.0 : 0.0;
      else
        s += std::abs(v.as_double());
    }
    return s;
  };
}

// Euclidean distance to a fixed target assignment
inline LossFn target_loss(std::map<std::string, Value> target) {
  return [target = std::move(target)](const std::map<std::string, Value>& xs) {
    double d2 = 0.0;
    for (const auto& [name, want] : target) {
      auto it = xs.find(name);
      if (it == xs.end())
        throw ExecError(ExecError::Code::MissingInput,
                        "loss target names unknown input '" + name + "'");
      double d = metric(it->second, want);
      d2 += d * d;
    }
    return std::sqrt(d2);
  };
}

} // namespace parinv
