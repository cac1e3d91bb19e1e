#pragma once

#include <sstream>

#include "pipeline.hpp"
#include "solve.hpp"

namespace parinv {

/* ------------------------- fixed benchmark graphs ------------------------- */

// planar arm with n unit links: x = Σ cos(φ₁+..+φᵢ), y = Σ sin(φ₁+..+φᵢ)
inline Graph ik_chain_graph(int n) {
  if (n < 2) throw std::invalid_argument("ik chain needs at least 2 links");
  GraphBuilder b;
  std::vector<NodeId> phi, sums;
  for (int i = 1; i <= n; ++i) phi.push_back(b.input("phi" + std::to_string(i)));
  sums.push_back(phi[0]);
  for (int i = 1; i < n; ++i) sums.push_back(b.add(sums.back(), phi[static_cast<std::size_t>(i)]));
  NodeId x = b.cos(sums[0]), y = b.sin(sums[0]);
  for (int i = 1; i < n; ++i) {
    x = b.add(x, b.cos(sums[static_cast<std::size_t>(i)]));
    y = b.add(y, b.sin(sums[static_cast<std::size_t>(i)]));
  }
  b.output(x, "x");
  b.output(y, "y");
  return b.build();
}

inline Graph ik3_graph() { return ik_chain_graph(3); }

// emission–absorption compositing along a ray of n segments:
//   C = Σᵢ cᵢ · exp(-(κ₁+..+κᵢ))
inline Graph render1d_graph(int n) {
  if (n < 1) throw std::invalid_argument("render1d needs at least 1 segment");
  GraphBuilder b;
  std::vector<NodeId> c, kap;
  for (int i = 1; i <= n; ++i) c.push_back(b.input("c" + std::to_string(i)));
  for (int i = 1; i <= n; ++i) kap.push_back(b.input("k" + std::to_string(i)));
  NodeId acc = kNoNode;
  NodeId prefix = kNoNode;
  for (int i = 0; i < n; ++i) {
    prefix = i == 0 ? kap[0] : b.add(prefix, kap[static_cast<std::size_t>(i)]);
    NodeId term = b.mul(c[static_cast<std::size_t>(i)], b.exp(b.neg(prefix)));
    acc = i == 0 ? term : b.add(acc, term);
  }
  b.output(acc, "C");
  return b.build();
}

/* ------------------------- random problem generator ------------------------- */

struct GeneratedProblem {
  Graph graph;
  std::map<std::string, Value> sample; // input draw with a defined forward run
};

namespace detail {

struct KindWeight {
  Prim prim;
  double w;
};

inline const std::vector<KindWeight>& gen_weights() {
  static const std::vector<KindWeight> t{
      {Prim::Add, 3.0}, {Prim::Sub, 3.0}, {Prim::Mul, 2.0}, {Prim::Min, 1.0},
      {Prim::Max, 1.0}, {Prim::Abs, 1.0}, {Prim::Cos, 1.0}, {Prim::Sin, 1.0},
      {Prim::Tan, 0.5}, {Prim::Div, 0.7}, {Prim::Pow, 0.3}, {Prim::Log, 0.3}};
  return t;
}

inline Prim pick_prim(Rng& rng) {
  double total = 0.0;
  for (const auto& kw : gen_weights()) total += kw.w;
  double r = rng.uniform(0.0, total);
  for (const auto& kw : gen_weights()) {
    if (r < kw.w) return kw.prim;
    r -= kw.w;
  }
  return Prim::Add;
}

// ranges that keep the inverse non-degenerate and the forward mostly defined
inline double safe_const(Rng& rng, Prim p, int slot) {
  double sign = rng.bernoulli(0.5) ? 1.0 : -1.0;
  switch (p) {
    case Prim::Div: return slot == 2 ? sign * rng.uniform(0.5, 2.5)
                                     : sign * rng.uniform(0.3, 2.0);
    case Prim::Mul: return sign * rng.uniform(0.3, 2.5);
    case Prim::Pow: return slot == 1 ? rng.uniform(1.2, 3.0)
                                     : sign * rng.uniform(0.3, 2.0);
    case Prim::Log: return slot == 1 ? rng.uniform(1.5, 4.0)
                                     : rng.uniform(0.5, 4.0);
    default: return rng.uniform(-2.0, 2.0);
  }
}

} // namespace detail

/* Draw a dataflow graph over the scalar numeric kinds plus one sample input
 * assignment whose forward run is fully defined. At most one operand per op
 * is a fresh constant (so nothing folds away), constants never join the
 * operand pool, and every input must end up consumed. */
inline GeneratedProblem gen_random(std::uint64_t seed, int n_ops,
                                   int n_inputs = 0) {
  if (n_ops < 1) throw std::invalid_argument("need at least one op");
  const int want_inputs =
      n_inputs > 0 ? n_inputs : std::max(2, std::min(4, n_ops / 3));

  for (std::uint64_t attempt = 0; attempt < 1000; ++attempt) {
    Rng rng(Rng::mix(seed, attempt));
    GraphBuilder b;
    std::vector<NodeId> pool;
    std::map<NodeId, int> uses;
    std::set<NodeId> input_ids;
    for (int i = 1; i <= want_inputs; ++i) {
      NodeId v = b.input("x" + std::to_string(i));
      pool.push_back(v);
      uses[v] = 0;
      input_ids.insert(v);
    }
    auto pick = [&]() {
      NodeId v = pool[static_cast<std::size_t>(
          rng.uniform_int(0, static_cast<std::int64_t>(pool.size()) - 1))];
      ++uses[v];
      return v;
    };

    NodeId last = kNoNode;
    for (int i = 0; i < n_ops; ++i) {
      Prim p = detail::pick_prim(rng);
      NodeId out;
      switch (p) {
        case Prim::Abs: out = b.abs(pick()); break;
        case Prim::Cos: out = b.cos(pick()); break;
        case Prim::Sin: out = b.sin(pick()); break;
        case Prim::Tan: out = b.tan(pick()); break;
        default: {
          int const_slot = rng.bernoulli(0.3) ? (rng.bernoulli(0.5) ? 1 : 2) : 0;
          NodeId a = const_slot == 1
                         ? b.constant(Value(detail::safe_const(rng, p, 1)))
                         : pick();
          NodeId c = const_slot == 2
                         ? b.constant(Value(detail::safe_const(rng, p, 2)))
                         : pick();
          switch (p) {
            case Prim::Add: out = b.add(a, c); break;
            case Prim::Sub: out = b.sub(a, c); break;
            case Prim::Mul: out = b.mul(a, c); break;
            case Prim::Div: out = b.div(a, c); break;
            case Prim::Pow: out = b.pow(a, c); break;
            case Prim::Log: out = b.log(a, c); break;
            case Prim::Min: out = b.min(a, c); break;
            default: out = b.max(a, c); break;
          }
        }
      }
      pool.push_back(out);
      uses[out] = 0;
      last = out;
    }

    bool inputs_ok = true;
    for (NodeId v : input_ids)
      if (uses[v] == 0) inputs_ok = false;
    if (!inputs_ok) continue;

    b.output(last, "y");
    int aux = 0;
    for (NodeId v : pool)
      if (v != last && uses[v] == 0)
        b.output(v, "aux" + std::to_string(++aux));
    Graph g = b.build();

    for (int draw = 0; draw < 20; ++draw) {
      std::map<std::string, Value> x;
      for (NodeId v : g.input_nodes())
        x[g.label(v).name] = Value(rng.normal(0.0, 1.5));
      ForwardRun fr = run_forward(g, x);
      if (!fr.all_defined) continue;
      bool finite = true;
      for (const auto& [name, out] : fr.outputs)
        if (!std::isfinite(out.as_double())) finite = false;
      if (finite) return {std::move(g), std::move(x)};
    }
  }
  throw ExecError(ExecError::Code::GenerationExhausted,
                  "no defined forward sample after 1000 graph attempts");
}

/* ------------------------- method comparison harness ------------------------- */

struct CompareRow {
  std::string problem, method, phase;
  double loss = 0.0;
};

struct CompareReport {
  std::vector<CompareRow> rows;

  std::string to_csv() const {
    std::ostringstream out;
    out << "problem,method,phase,loss\n";
    for (const auto& r : rows)
      out << r.problem << ',' << r.method << ',' << r.phase << ','
          << format_double(r.loss) << '\n';
    return out.str();
  }
};

/* Same budget, same loss, two parametrizations: search over θ through the
 * totalized inverse vs. direct search over the forward inputs. Reported loss
 * is each method's own objective (user loss plus its infeasibility term);
 * the ik3 success rows count runs whose re-run residual d(f(x̂),y) ≤ 0.05. */
inline CompareReport compare_harness(std::uint64_t seed, int n_random,
                                     const SolveConfig& base_cfg) {
  CompareReport rep;
  auto push = [&](const std::string& prob, const std::string& method,
                  const SolveResult& r) {
    for (double v : r.init_objectives) rep.rows.push_back({prob, method, "init", v});
    rep.rows.push_back({prob, method, "final", r.objective});
  };

  Graph ik = ik3_graph();
  InverseProgram ik_tot = prepare_program(ik);
  std::map<std::string, Value> proto{
      {"phi1", Value(0.0)}, {"phi2", Value(0.0)}, {"phi3", Value(0.0)}};

  int ok_theta = 0, ok_x = 0;
  const int ik_targets = 8;
  for (int t = 0; t < ik_targets; ++t) {
    Rng trng(Rng::mix(seed, 1000 + static_cast<std::uint64_t>(t)));
    std::map<std::string, Value> phi;
    for (int i = 1; i <= 3; ++i)
      phi["phi" + std::to_string(i)] =
          Value(trng.uniform(-3.141592653589793, 3.141592653589793));
    auto y = run_forward(ik, phi).outputs;

    SolveConfig cfg = base_cfg;
    cfg.seed = Rng::mix(seed, 17 + static_cast<std::uint64_t>(t));
    std::string prob = "ik3_t" + std::to_string(t);

    SolveResult rt = solve_theta(ik_tot, y, abs_sum_loss(), cfg);
    push(prob, "theta", rt);
    if (rt.identity_loss <= 0.05) ++ok_theta;

    SolveResult rx = solve_x_baseline(ik, y, abs_sum_loss(), cfg, proto);
    push(prob, "x", rx);
    if (rx.identity_loss <= 0.05) ++ok_x;
  }
  rep.rows.push_back({"ik3", "theta", "success_rate",
                      static_cast<double>(ok_theta) / ik_targets});
  rep.rows.push_back({"ik3", "x", "success_rate",
                      static_cast<double>(ok_x) / ik_targets});

  for (int i = 0; i < n_random; ++i) {
    auto gp = gen_random(Rng::mix(seed, 2000 + static_cast<std::uint64_t>(i)), 8);
    auto y = run_forward(gp.graph, gp.sample).outputs;
    InverseProgram tot = prepare_program(gp.graph);

    SolveConfig cfg = base_cfg;
    cfg.seed = Rng::mix(seed, 31 + static_cast<std::uint64_t>(i));
    std::string prob = "rand" + std::to_string(i);

    push(prob, "theta", solve_theta(tot, y, abs_sum_loss(), cfg));
    push(prob, "x", solve_x_baseline(gp.graph, y, abs_sum_loss(), cfg, gp.sample));
  }

  auto phase_rank = [](const std::string& p) {
    return p == "init" ? 0 : p == "final" ? 1 : 2;
  };
  std::stable_sort(rep.rows.begin(), rep.rows.end(),
                   [&](const CompareRow& a, const CompareRow& b2) {
                     if (a.problem != b2.problem) return a.problem < b2.problem;
                     if (a.method != b2.method) return a.method < b2.method;
                     return phase_rank(a.phase) < phase_rank(b2.phase);
                   });
  return rep;
}

} // namespace parinv
