#pragma once

#include "exec.hpp"
#include "rng.hpp"
#include "totalize.hpp"

namespace parinv {

struct SolveConfig {
  std::uint64_t seed = 0;
  int restarts = 16;
  int max_evals = 5000; // per restart
  double fd_h = 1e-6;
  int int_radius = 4; // integer slots are swept over [-K, K]
  double lambda_dm = 1.0;
  double init_sd = 1.0;
};

struct SolveResult {
  std::vector<double> theta; // baseline: flattened x
  double objective = std::numeric_limits<double>::infinity();
  double user_loss = std::numeric_limits<double>::infinity();
  double domain_loss = std::numeric_limits<double>::infinity();
  double identity_loss = std::numeric_limits<double>::infinity();
  std::map<std::string, Value> outputs;
  std::vector<std::pair<std::int64_t, double>> trajectory; // (eval#, new best)
  std::vector<double> init_objectives;                     // one per restart
  std::int64_t evals_used = 0;
};

namespace detail {

// objective value plus its infeasibility part (domain loss / fit residual)
struct Score {
  double total = std::numeric_limits<double>::infinity();
  double infeas = std::numeric_limits<double>::infinity();
};

/* Restarted local search over a mixed box. Each restart runs two phases:
 * first pure feasibility (drive the infeasibility term down, total as the
 * tie-break), then the full objective with infeasibility as the tie-break,
 * so plateaus where the two trade at par still drift toward feasible points.
 * Discrete coordinates take full candidate sweeps whenever the continuous
 * search (compass with per-coordinate adaptive steps plus one gradient probe
 * per round) stalls. Every restart consumes exactly cfg.max_evals
 * evaluations, so two methods under one config are budget-matched by
 * construction. */
class Minimizer {
 public:
  Minimizer(std::vector<Domain> spaces,
            std::function<Score(const std::vector<double>&)> obj,
            const SolveConfig& cfg)
      : spaces_(std::move(spaces)), obj_(std::move(obj)), cfg_(cfg) {}

  SolveResult run() {
    SolveResult res;
    if (spaces_.empty()) {
      Score s = safe_obj({});
      res.objective = s.total;
      res.evals_used = 1;
      res.trajectory.push_back({1, s.total});
      res.init_objectives.push_back(s.total);
      return res;
    }
    for (int r = 0; r < cfg_.restarts; ++r) restart(r, res);
    return res;
  }

 private:
  std::vector<Domain> spaces_;
  std::function<Score(const std::vector<double>&)> obj_;
  SolveConfig cfg_;
  std::int64_t global_evals_ = 0;
  int best_class_ = 1; // 0 once a near-feasible incumbent exists

  static int feas_class(const Score& s) { return s.infeas <= 1e-5 ? 0 : 1; }

  Score safe_obj(const std::vector<double>& x) {
    Score s = obj_(x);
    if (std::isnan(s.total)) s.total = std::numeric_limits<double>::infinity();
    if (std::isnan(s.infeas)) s.infeas = std::numeric_limits<double>::infinity();
    return s;
  }

  void restart(int r, SolveResult& res) {
    Rng rng(Rng::mix(cfg_.seed, static_cast<std::uint64_t>(r)));
    const std::size_t n = spaces_.size();
    std::vector<double> x(n);
    int seed_no = 0;
    auto draw = [&] {
      // cycle the spread so reseeds cover both tight and wide basins
      static constexpr double kSpread[4] = {1.0, 2.0, 0.5, 3.0};
      double sd = cfg_.init_sd * kSpread[seed_no++ & 3];
      for (std::size_t i = 0; i < n; ++i) {
        const Domain& d = spaces_[i];
        if (d.kind() == Domain::Kind::IntegerLine)
          x[i] = static_cast<double>(rng.uniform_int(-cfg_.int_radius, cfg_.int_radius));
        else if (d.kind() == Domain::Kind::FiniteSet)
          x[i] = d.members()[static_cast<std::size_t>(
              rng.uniform_int(0, static_cast<std::int64_t>(d.members().size()) - 1))];
        else
          x[i] = d.contract(rng.normal(0.0, sd));
      }
    };

    std::int64_t left = cfg_.max_evals;
    Score fx;
    auto eval = [&](const std::vector<double>& p) -> Score {
      if (left <= 0) return Score{};
      --left;
      ++global_evals_;
      ++res.evals_used;
      Score s = safe_obj(p);
      // near-feasible incumbents outrank infeasible ones no matter the total:
      // off-domain the outputs are contraction artifacts, not inverses
      int cls = feas_class(s);
      if (cls < best_class_ || (cls == best_class_ && s.total < res.objective)) {
        best_class_ = cls;
        res.objective = s.total;
        res.theta = p;
        res.trajectory.push_back({global_evals_, s.total});
      }
      return s;
    };

    bool feas_phase = true; // feasibility first, objective second
    auto better = [&](const Score& a, const Score& b) {
      double p1 = feas_phase ? a.infeas : a.total;
      double p2 = feas_phase ? b.infeas : b.total;
      double t1 = feas_phase ? a.total : a.infeas;
      double t2 = feas_phase ? b.total : b.infeas;
      double tol = 1e-12 * std::max(1.0, std::abs(p2));
      if (p1 < p2 - tol) return true;
      if (p1 > p2 + tol) return false;
      return t1 < t2 - tol;
    };

    std::vector<double> step(n);
    auto reset_steps = [&] {
      for (std::size_t i = 0; i < n; ++i)
        step[i] = 0.5 * std::max(1.0, std::abs(x[i]));
    };

    std::vector<std::size_t> cont, disc;
    for (std::size_t i = 0; i < n; ++i)
      (spaces_[i].discrete() ? disc : cont).push_back(i);

    // exact per-slot argmin over the candidate range
    auto discrete_sweep = [&] {
      bool any = false;
      for (std::size_t i : disc) {
        if (left <= 0) break;
        const Domain& d = spaces_[i];
        std::vector<double> cands;
        if (d.kind() == Domain::Kind::IntegerLine) {
          for (int k = -cfg_.int_radius; k <= cfg_.int_radius; ++k)
            cands.push_back(static_cast<double>(k));
        } else {
          cands = d.members();
        }
        Score best_v = fx;
        double best_c = x[i];
        for (double c : cands) {
          if (c == x[i] || left <= 0) continue;
          std::vector<double> p = x;
          p[i] = c;
          Score v = eval(p);
          if (better(v, best_v)) {
            best_v = v;
            best_c = c;
          }
        }
        if (best_c != x[i]) {
          x[i] = best_c;
          fx = best_v;
          any = true;
        }
      }
      return any;
    };

    // compass with per-coordinate step adaptation
    auto compass_pass = [&] {
      bool any = false;
      for (std::size_t i : cont) {
        if (left <= 0) break;
        bool hit = false;
        for (double sgn : {+1.0, -1.0}) {
          if (left <= 0) break;
          std::vector<double> p = x;
          p[i] = spaces_[i].contract(x[i] + sgn * step[i]);
          if (p[i] == x[i]) continue;
          Score v = eval(p);
          if (better(v, fx)) {
            x = p;
            fx = v;
            hit = true;
            break;
          }
        }
        if (hit) {
          step[i] = std::min(step[i] * 2.0, 1e3);
          any = true;
        } else {
          step[i] *= 0.5;
        }
      }
      return any;
    };

    auto gradient_probe = [&] {
      if (cont.empty() || left <= static_cast<std::int64_t>(cont.size()) + 3)
        return false;
      double base = feas_phase ? fx.infeas : fx.total;
      std::vector<double> g(cont.size(), 0.0);
      double gmax = 0.0;
      for (std::size_t j = 0; j < cont.size(); ++j) {
        std::size_t i = cont[j];
        double h = cfg_.fd_h * std::max(1.0, std::abs(x[i]));
        std::vector<double> p = x;
        p[i] = spaces_[i].contract(x[i] + h);
        double denom = p[i] - x[i];
        if (denom == 0.0) continue;
        Score v = eval(p);
        g[j] = ((feas_phase ? v.infeas : v.total) - base) / denom;
        gmax = std::max(gmax, std::abs(g[j]));
      }
      if (!(gmax > 0.0) || !std::isfinite(gmax)) return false;
      double smax = 0.0;
      for (std::size_t i : cont) smax = std::max(smax, step[i]);
      for (double alpha : {smax, smax / 4.0, smax / 16.0}) {
        if (left <= 0) break;
        std::vector<double> p = x;
        for (std::size_t j = 0; j < cont.size(); ++j) {
          std::size_t i = cont[j];
          p[i] = spaces_[i].contract(x[i] - alpha * g[j] / gmax);
        }
        Score v = eval(p);
        if (better(v, fx)) {
          x = p;
          fx = v;
          return true;
        }
      }
      return false;
    };

    auto used = [&] { return cfg_.max_evals - left; };

    // one bounded descent leg on the current phase value; stops on budget,
    // on convergence, or after rounds that only slide along plateaus
    auto run_leg = [&](bool feas, std::int64_t cap) {
      feas_phase = feas;
      const std::int64_t start = used();
      int idle = 0;
      while (left > 0 && used() - start < cap && idle < 10) {
        if (feas_phase && fx.infeas < 1e-10) break;
        double before_p = feas_phase ? fx.infeas : fx.total;
        bool moved = compass_pass();
        if (gradient_probe()) moved = true;
        if (!moved) moved = discrete_sweep();
        double after_p = feas_phase ? fx.infeas : fx.total;
        bool progress =
            after_p < before_p - 1e-12 * std::max(1.0, std::abs(before_p));
        idle = progress ? 0 : idle + 1;
        if (!moved && !progress) {
          double widest = 0.0;
          for (double s : step) widest = std::max(widest, s);
          if (widest < 1e-9) break;
        }
      }
    };

    // seed cycles: hunt for the feasible set first, refine the objective
    // along it once found, then reseed. While nothing feasible has turned
    // up, hold back a reserve so a y with no reachable preimage still gets
    // its best near-miss polished on the full objective.
    double best_dm = std::numeric_limits<double>::infinity();
    std::vector<double> best_dm_x;
    Score best_dm_fx;
    bool any_feasible = false;
    const std::int64_t reserve = std::min<std::int64_t>(1200, cfg_.max_evals / 4);

    // one seed cycle: tiered feasibility legs (abort hopeless seeds early,
    // finish promising ones with a fine-step polish), then an objective leg
    // along the feasible set if the seed got there
    auto cycle = [&] {
      reset_steps();
      discrete_sweep();
      run_leg(true, 400);
      if (fx.infeas <= 0.3) run_leg(true, 1100);
      if (fx.infeas > 1e-10 && fx.infeas <= 1e-3) {
        for (std::size_t i = 0; i < n; ++i)
          step[i] = std::max(1e-4, 1e-3 * std::abs(x[i]));
        run_leg(true, 2000);
      }
      if (fx.infeas < best_dm) {
        best_dm = fx.infeas;
        best_dm_x = x;
        best_dm_fx = fx;
      }
      if (fx.infeas <= 1e-5) {
        any_feasible = true;
        reset_steps();
        run_leg(false, 1000);
      }
    };

    draw();
    fx = eval(x);
    res.init_objectives.push_back(fx.total);
    bool fresh = true;
    while (fresh || left > (any_feasible ? 0 : reserve)) {
      if (!fresh) {
        draw();
        fx = eval(x);
      }
      fresh = false;
      cycle();
    }
    if (!any_feasible && left > 0 && !best_dm_x.empty()) {
      x = best_dm_x;
      fx = best_dm_fx;
      reset_steps();
      run_leg(false, left);
    }
    while (left > 0) { // leftover budget: keep hunting
      draw();
      fx = eval(x);
      cycle();
    }
  }
};

} // namespace detail

/* Pick θ for a totalized inverse: minimize loss(f̂⁻¹(y;θ)) + λ·L_dm(y;θ). */
inline SolveResult solve_theta(const InverseProgram& ip,
                               const std::map<std::string, Value>& y,
                               const LossFn& loss, const SolveConfig& cfg = {}) {
  if (!ip.totalized)
    throw ExecError(ExecError::Code::NotTotalized,
                    "solve_theta needs a totalized program");
  auto objective = [&](const std::vector<double>& th) {
    LossReport rep = run_inverse(ip, y, th, false);
    double dm = cfg.lambda_dm * rep.domain_loss;
    return detail::Score{loss(rep.outputs) + dm, rep.domain_loss};
  };
  detail::Minimizer m(ip.layout.slot_spaces, objective, cfg);
  SolveResult res = m.run();
  LossReport rep = run_inverse(ip, y, res.theta, true);
  res.user_loss = loss(rep.outputs);
  res.domain_loss = rep.domain_loss;
  res.identity_loss = rep.identity_loss;
  res.outputs = rep.outputs;
  return res;
}

/* Budget-matched baseline: search input space directly, minimizing
 * d(f(x), y) + loss(x). The prototype assignment supplies each input's type
 * and shape (its values are ignored). */
inline SolveResult solve_x_baseline(const Graph& fwd,
                                    const std::map<std::string, Value>& y,
                                    const LossFn& loss, const SolveConfig& cfg,
                                    const std::map<std::string, Value>& prototype) {
  struct Slot {
    std::string name;
    std::size_t offset = 0; // within a tensor
    bool tensor = false;
  };
  std::vector<Slot> slots;
  std::vector<Domain> spaces;
  std::map<std::string, Value> shape_of = prototype;
  for (NodeId v : fwd.input_nodes()) {
    const std::string& name = fwd.label(v).name;
    auto it = prototype.find(name);
    if (it == prototype.end())
      throw ExecError(ExecError::Code::MissingInput,
                      "prototype lacks input '" + name + "'");
    const Value& p = it->second;
    if (p.is_tensor()) {
      for (std::size_t i = 0; i < p.tensor().data.size(); ++i) {
        slots.push_back({name, i, true});
        spaces.push_back(Domain::real());
      }
    } else {
      slots.push_back({name, 0, false});
      spaces.push_back(p.is_bool()  ? Domain::boolean()
                       : p.is_int() ? Domain::integers()
                                    : Domain::real());
    }
  }

  auto unflatten = [&](const std::vector<double>& th) {
    std::map<std::string, Value> x;
    for (std::size_t i = 0; i < slots.size(); ++i) {
      const Slot& s = slots[i];
      const Value& p = shape_of.at(s.name);
      if (s.tensor) {
        if (!x.count(s.name))
          x[s.name] = Value(Tensor{p.tensor().shape,
                                   std::vector<double>(p.tensor().data.size(), 0.0)});
        Tensor t = x[s.name].tensor();
        t.data[s.offset] = th[i];
        x[s.name] = Value(std::move(t));
      } else if (p.is_bool()) {
        x[s.name] = Value(th[i] != 0.0);
      } else if (p.is_int()) {
        x[s.name] = Value(static_cast<std::int64_t>(std::llround(th[i])));
      } else {
        x[s.name] = Value(th[i]);
      }
    }
    return x;
  };

  auto residual = [&](const std::map<std::string, Value>& outs) {
    double d2 = 0.0;
    for (const auto& [name, want] : y) {
      auto it = outs.find(name);
      if (it == outs.end())
        throw ExecError(ExecError::Code::MissingInput,
                        "forward program has no output '" + name + "'");
      if (it->second.is_undefined())
        return std::numeric_limits<double>::infinity();
      double d = metric(it->second, want);
      d2 += d * d;
    }
    return std::sqrt(d2);
  };

  auto objective = [&](const std::vector<double>& th) {
    auto x = unflatten(th);
    ForwardRun fr = run_forward(fwd, x);
    double fit = residual(fr.outputs);
    return detail::Score{fit + loss(x), fit};
  };

  detail::Minimizer m(spaces, objective, cfg);
  SolveResult res = m.run();
  res.outputs = unflatten(res.theta);
  res.user_loss = loss(res.outputs);
  res.domain_loss = 0.0;
  res.identity_loss = residual(run_forward(fwd, res.outputs).outputs);
  return res;
}

} // namespace parinv
