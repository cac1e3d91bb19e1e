#pragma once

#include <map>
#include <optional>

#include "graph.hpp"
#include "primitives.hpp"

namespace parinv {

/* ====================== constant & shape propagation ======================
 *
 * Forward dataflow over a validated graph: values fed only by constants
 * fold to known values, and shapes flow from input hints and constant
 * tensors. Known-ness is what later lets the inverter emit the reduced,
 * parameter-free inverse variants, so running this first shrinks θ.
 */

struct Annotation {
  std::optional<Value> known; // constant-folded value (value nodes)
  std::optional<Shape> shape; // {} = scalar
};

using Annotations = std::vector<Annotation>;

namespace detail {

inline Shape value_shape(const Value& v) {
  if (v.is_tensor()) return v.tensor().shape;
  return {};
}

inline void shape_check(bool ok, NodeId op, const std::string& what) {
  if (!ok)
    throw ExecError(ExecError::Code::ShapeMismatch,
                    what + " (op node " + std::to_string(op) + ")");
}

} // namespace detail

inline Annotations propagate(const Graph& g,
                             const std::map<std::string, Shape>& input_shapes = {}) {
  Annotations ann(g.node_count());

  for (NodeId v : g.input_nodes()) {
    auto it = input_shapes.find(g.label(v).name);
    ann[v].shape = it != input_shapes.end() ? it->second : Shape{};
  }
  for (NodeId v : g.constant_nodes()) {
    ann[v].known = g.label(v).value;
    ann[v].shape = detail::value_shape(g.label(v).value);
  }

  for (NodeId o : g.ops_topo()) {
    const OpKind& k = g.kind(o);
    auto ins = g.op_inputs(o);
    auto outs = g.op_outputs(o);

    bool all_known = true;
    std::vector<Value> iv;
    for (NodeId v : ins) {
      if (!ann[v].known) {
        all_known = false;
        break;
      }
      iv.push_back(*ann[v].known);
    }
    if (all_known) {
      auto ov = forward_eval(k, iv);
      for (std::size_t j = 0; j < outs.size(); ++j) {
        ann[outs[j]].known = ov[j];
        if (!ov[j].is_undefined())
          ann[outs[j]].shape = detail::value_shape(ov[j]);
      }
      if (std::any_of(outs.begin(), outs.end(),
                      [&](NodeId v) { return ann[v].known->is_undefined(); }))
        continue; // shape unknown for folded-⊥; inversion rejects such ops
    }

    auto in_shape = [&](int i) -> const std::optional<Shape>& {
      return ann[ins[static_cast<std::size_t>(i)]].shape;
    };
    auto scalar_in = [&](int i) {
      detail::shape_check(!in_shape(i) || in_shape(i)->empty(), o,
                          "'" + k.spelling() + "' expects a scalar operand");
    };
    auto set_out = [&](int j, std::optional<Shape> s) {
      if (!ann[outs[static_cast<std::size_t>(j)]].shape)
        ann[outs[static_cast<std::size_t>(j)]].shape = std::move(s);
    };

    switch (k.prim) {
    case Prim::Add: case Prim::Sub: case Prim::Mul: case Prim::Div: {
      if (in_shape(0) && in_shape(1))
        detail::shape_check(*in_shape(0) == *in_shape(1), o,
                            "elementwise operands of differing shape");
      set_out(0, in_shape(0) ? in_shape(0) : in_shape(1));
      break;
    }
    case Prim::Dupl: {
      for (std::size_t j = 0; j < outs.size(); ++j)
        set_out(static_cast<int>(j), in_shape(0));
      break;
    }
    case Prim::GatherNd: {
      if (ann[ins[1]].known && ann[ins[1]].known->is_tensor())
        set_out(0, Shape{static_cast<std::int64_t>(
                      ann[ins[1]].known->tensor().data.size())});
      break;
    }
    case Prim::Scatter: {
      if (ann[ins[2]].known && ann[ins[2]].known->is_tensor()) {
        auto dims = detail::index_list(ann[ins[2]].known->tensor());
        if (dims && dims->size() == 1) set_out(0, Shape{(*dims)[0]});
      }
      break;
    }
    case Prim::Reshape: {
      if (ann[ins[1]].known && ann[ins[1]].known->is_tensor()) {
        auto dims = detail::index_list(ann[ins[1]].known->tensor());
        if (dims) set_out(0, *dims);
      }
      break;
    }
    case Prim::Select: {
      scalar_in(0);
      scalar_in(1);
      scalar_in(2);
      set_out(0, Shape{});
      break;
    }
    default: {
      // scalar-only kinds
      for (int i = 0; i < static_cast<int>(ins.size()); ++i) scalar_in(i);
      set_out(0, Shape{});
      break;
    }
    }
  }
  return ann;
}

} // namespace parinv
