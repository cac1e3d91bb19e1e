#pragma once

#include "constraints.hpp"
#include "propagate.hpp"
#include "totalize.hpp"

namespace parinv {

struct PipelineOptions {
  bool reduce = true;
  bool totalize = true;
  std::map<std::string, Shape> input_shapes;
};

// canonical flow: split fan-out, fold constants, invert, drop determined θ,
// then make the result total
inline InverseProgram prepare_program(const Graph& g0,
                                      const PipelineOptions& opt = {}) {
  Graph g = insert_dupl(g0);
  Annotations ann = propagate(g, opt.input_shapes);
  InverseProgram ip = invert(g, ann);
  if (opt.reduce) ip = eliminate_equalities(ip);
  if (opt.totalize) ip = parinv::totalize(ip);
  return ip;
}

} // namespace parinv
