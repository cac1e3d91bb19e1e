#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <span>

#include "domain.hpp"
#include "errors.hpp"
#include "kinds.hpp"
#include "value.hpp"

namespace parinv {

/* ====================== primitive semantics ======================
 *
 * Forward evaluation, parametric inverses, θ extraction and domain
 * distances for every op kind. Inverses follow the convention that a
 * selector [a, b]^c picks `a` when c holds.
 *
 * Partiality is a value: forward_eval returns ⊥ outside an op's effective
 * domain, and inverse_eval reports `defined = false` when the requested
 * preimage is empty (strict mode) instead of inventing one.
 */

namespace detail {

inline void want(bool cond, ExecError::Code code, const std::string& msg) {
  if (!cond) throw ExecError(code, msg);
}

inline double num(const Value& v, const char* who) {
  if (v.is_real()) return v.real();
  if (v.is_int()) return static_cast<double>(v.integer());
  throw ExecError(ExecError::Code::TypeMismatch,
                  std::string(who) + " expects a numeric scalar, got " +
                      v.type_name());
}

inline bool boolean(const Value& v, const char* who) {
  if (v.is_bool()) return v.boolean();
  throw ExecError(ExecError::Code::TypeMismatch,
                  std::string(who) + " expects a bool, got " + v.type_name());
}

inline const Tensor& tensor(const Value& v, const char* who) {
  if (v.is_tensor()) return v.tensor();
  throw ExecError(ExecError::Code::TypeMismatch,
                  std::string(who) + " expects a tensor, got " + v.type_name());
}

// rank-1 integral index list
inline std::optional<std::vector<std::int64_t>> index_list(const Tensor& t) {
  std::vector<std::int64_t> out;
  out.reserve(t.data.size());
  for (double v : t.data) {
    if (!std::isfinite(v) || v != std::nearbyint(v)) return std::nullopt;
    out.push_back(static_cast<std::int64_t>(v));
  }
  return out;
}

inline bool any_undefined(std::span<const Value> vs) {
  for (const auto& v : vs)
    if (v.is_undefined()) return true;
  return false;
}

} // namespace detail

/* ====================== forward evaluation ====================== */

// ⊥ inputs propagate to all outputs; domain misses yield ⊥.
inline std::vector<Value> forward_eval(const OpKind& k, std::span<const Value> ins) {
  using detail::boolean;
  using detail::num;
  using detail::tensor;

  detail::want(k.is_forward(), ExecError::Code::UnsupportedKind,
               "forward_eval on non-forward kind '" + k.spelling() + "'");
  detail::want(static_cast<int>(ins.size()) == in_arity(k),
               ExecError::Code::ArityMismatch,
               "'" + k.spelling() + "' expects " + std::to_string(in_arity(k)) +
                   " inputs");

  const int n_out = out_arity(k);
  auto undef = [&] { return std::vector<Value>(n_out, Value::undef()); };
  if (detail::any_undefined(ins)) return undef();

  auto one = [](Value v) { return std::vector<Value>{std::move(v)}; };

  // elementwise arithmetic shared by scalar and tensor operands
  auto arith = [&](auto f, bool (*ok)(double, double)) -> std::vector<Value> {
    if (ins[0].is_tensor() || ins[1].is_tensor()) {
      const Tensor& a = tensor(ins[0], "arith lhs");
      const Tensor& b = tensor(ins[1], "arith rhs");
      if (a.shape != b.shape)
        throw ExecError(ExecError::Code::ShapeMismatch,
                        "elementwise op on differing shapes");
      Tensor r{a.shape, {}};
      r.data.reserve(a.data.size());
      for (std::size_t i = 0; i < a.data.size(); ++i) {
        if (!ok(a.data[i], b.data[i])) return undef();
        r.data.push_back(f(a.data[i], b.data[i]));
      }
      return one(Value(std::move(r)));
    }
    double a = num(ins[0], "arith lhs");
    double b = num(ins[1], "arith rhs");
    if (!ok(a, b)) return undef();
    return one(Value(f(a, b)));
  };
  auto always = [](double, double) { return true; };

  switch (k.prim) {
  case Prim::Add:
    return arith([](double a, double b) { return a + b; }, always);
  case Prim::Sub:
    return arith([](double a, double b) { return a - b; }, always);
  case Prim::Mul:
    return arith([](double a, double b) { return a * b; }, always);
  case Prim::Div:
    return arith([](double a, double b) { return a / b; },
                 [](double, double b) { return b != 0.0; });
  case Prim::Pow: {
    double a = num(ins[0], "pow base");
    double b = num(ins[1], "pow exponent");
    if (!(a > 0.0)) return undef();
    return one(Value(std::pow(a, b)));
  }
  case Prim::Log: {
    double base = num(ins[0], "log base");
    double arg = num(ins[1], "log argument");
    if (!(base > 0.0) || base == 1.0 || !(arg > 0.0)) return undef();
    return one(Value(std::log(arg) / std::log(base)));
  }
  case Prim::Abs:
    return one(Value(std::abs(num(ins[0], "abs"))));
  case Prim::Min: {
    double a = num(ins[0], "min"), b = num(ins[1], "min");
    return one(Value(std::min(a, b)));
  }
  case Prim::Max: {
    double a = num(ins[0], "max"), b = num(ins[1], "max");
    return one(Value(std::max(a, b)));
  }
  case Prim::Cos:
    return one(Value(std::cos(num(ins[0], "cos"))));
  case Prim::Sin:
    return one(Value(std::sin(num(ins[0], "sin"))));
  case Prim::Tan:
    return one(Value(std::tan(num(ins[0], "tan"))));
  case Prim::Gt:
    return one(Value(num(ins[0], "gt") > num(ins[1], "gt")));
  case Prim::Lt:
    return one(Value(num(ins[0], "lt") < num(ins[1], "lt")));
  case Prim::Eq:
    return one(Value(num(ins[0], "eq") == num(ins[1], "eq")));
  case Prim::And:
    return one(Value(boolean(ins[0], "and") && boolean(ins[1], "and")));
  case Prim::Or:
    return one(Value(boolean(ins[0], "or") || boolean(ins[1], "or")));
  case Prim::Xor:
    return one(Value(boolean(ins[0], "xor") != boolean(ins[1], "xor")));
  case Prim::Dupl:
    return std::vector<Value>(static_cast<std::size_t>(k.dupl_n), ins[0]);
  case Prim::Select: {
    bool c = boolean(ins[2], "select condition");
    return one(c ? ins[0] : ins[1]);
  }
  case Prim::Clip: {
    double v = num(ins[0], "clip");
    return one(Value(std::clamp(v, k.clip_lo, k.clip_hi)));
  }
  case Prim::GatherNd: {
    const Tensor& x = tensor(ins[0], "gathernd data");
    const Tensor& it = tensor(ins[1], "gathernd indices");
    auto idx = detail::index_list(it);
    if (!idx) return undef();
    Tensor r{{static_cast<std::int64_t>(idx->size())}, {}};
    for (auto i : *idx) {
      if (i < 0 || i >= static_cast<std::int64_t>(x.data.size())) return undef();
      r.data.push_back(x.data[static_cast<std::size_t>(i)]);
    }
    return one(Value(std::move(r)));
  }
  case Prim::Scatter: {
    const Tensor& z = tensor(ins[0], "scatter data");
    const Tensor& it = tensor(ins[1], "scatter indices");
    const Tensor& sh = tensor(ins[2], "scatter shape");
    auto idx = detail::index_list(it);
    auto dims = detail::index_list(sh);
    if (!idx || !dims || dims->size() != 1) return undef();
    std::int64_t n = (*dims)[0];
    if (z.data.size() != idx->size()) return undef();
    Tensor r{{n}, std::vector<double>(static_cast<std::size_t>(n), 0.0)};
    std::vector<bool> seen(static_cast<std::size_t>(n), false);
    for (std::size_t kth = 0; kth < idx->size(); ++kth) {
      std::int64_t i = (*idx)[kth];
      if (i < 0 || i >= n || seen[static_cast<std::size_t>(i)]) return undef();
      seen[static_cast<std::size_t>(i)] = true;
      r.data[static_cast<std::size_t>(i)] = z.data[kth];
    }
    return one(Value(std::move(r)));
  }
  case Prim::Reshape: {
    const Tensor& x = tensor(ins[0], "reshape data");
    const Tensor& sh = tensor(ins[1], "reshape shape");
    auto dims = detail::index_list(sh);
    if (!dims) return undef();
    if (shape_numel(*dims) != static_cast<std::int64_t>(x.data.size()))
      return undef();
    Tensor r{*dims, x.data};
    return one(Value(std::move(r)));
  }
  }
  throw ExecError(ExecError::Code::UnsupportedKind, k.spelling());
}

/* ====================== inverse signatures ====================== */

// Parameter spaces of an inverse kind, slot order.
inline std::vector<Domain> theta_spaces(const OpKind& k) {
  detail::want(k.is_inverse(), ExecError::Code::UnsupportedKind,
               "theta_spaces on non-inverse kind");
  if (k.const_mask != 0) return {};
  switch (k.prim) {
  case Prim::Add: case Prim::Sub: return {Domain::real()};
  case Prim::Mul: return {Domain::nonzero(), Domain::boolean()};
  case Prim::Div: return {Domain::nonzero()};
  case Prim::Pow:
    return {Domain::positive_not_one(), Domain::boolean(), Domain::real()};
  case Prim::Log: return {Domain::positive_not_one()};
  case Prim::Abs: return {Domain::sign()};
  case Prim::Min: case Prim::Max:
    return {Domain::nonneg(), Domain::boolean()};
  case Prim::Cos: case Prim::Sin: case Prim::Tan: return {Domain::integers()};
  case Prim::Gt: case Prim::Lt: return {Domain::real(), Domain::positive()};
  case Prim::Eq: return {Domain::real(), Domain::nonzero()};
  case Prim::And: case Prim::Or:
    return {Domain::boolean(), Domain::boolean()};
  case Prim::Xor: return {Domain::boolean()};
  case Prim::Select: return {Domain::boolean(), Domain::real()};
  case Prim::Clip: return {Domain::nonneg()};
  case Prim::GatherNd:
    return std::vector<Domain>(static_cast<std::size_t>(theta_count(k)),
                               Domain::real());
  case Prim::Dupl: case Prim::Scatter: case Prim::Reshape: return {};
  }
  return {};
}

/* Required domains of an inverse op's value inputs (forward outputs first,
 * then carried constants). Trivial entries need no contraction; bool-typed
 * ports are exact by construction and stay trivial. */
inline std::vector<Domain> inverse_input_domains(const OpKind& k) {
  detail::want(k.is_inverse(), ExecError::Code::UnsupportedKind,
               "inverse_input_domains on non-inverse kind");
  int n_vals = (k.prim == Prim::Dupl ? k.dupl_n : 1) + inverse_const_inputs(k);
  std::vector<Domain> ds(static_cast<std::size_t>(n_vals), Domain::real());
  switch (k.prim) {
  case Prim::Pow:
    ds[0] = Domain::positive();
    break;
  case Prim::Log:
    if (k.const_mask == 0b10) ds[0] = Domain::nonzero();
    break;
  case Prim::Div:
    if (k.const_mask == 0b01) ds[0] = Domain::nonzero();
    break;
  case Prim::Abs:
    ds[0] = Domain::nonneg();
    break;
  case Prim::Cos: case Prim::Sin:
    ds[0] = Domain::interval(-1.0, 1.0);
    break;
  case Prim::Clip:
    ds[0] = Domain::interval(k.clip_lo, k.clip_hi);
    break;
  default:
    break;
  }
  return ds;
}

/* ====================== inverse evaluation ====================== */

struct InvEvalResult {
  bool defined = true;          // false = ⊥ (strict mode only)
  std::vector<Value> outs;      // non-constant forward inputs, slot order
  double tap = 0.0;             // intrinsic disagreement distance (total mode)
};

inline double forward_domain_distance(const OpKind& k,
                                      std::span<const Value> ins);

namespace detail {

inline InvEvalResult bot() { return InvEvalResult{false, {}, 0.0}; }

// mean of agreeing-or-not copies plus total disagreement distance
inline std::pair<Value, double> blend(std::span<const Value> xs) {
  bool all_equal = true;
  for (std::size_t i = 1; i < xs.size(); ++i)
    if (!(xs[i] == xs[0])) all_equal = false;
  if (all_equal) return {xs[0], 0.0};

  Value center;
  if (xs[0].is_bool()) {
    int trues = 0;
    for (const auto& v : xs) trues += boolean(v, "dupl copy") ? 1 : 0;
    center = Value(trues * 2 > static_cast<int>(xs.size()));
  } else if (xs[0].is_tensor()) {
    const Tensor& first = tensor(xs[0], "dupl copy");
    Tensor m{first.shape, std::vector<double>(first.data.size(), 0.0)};
    for (const auto& v : xs) {
      const Tensor& t = tensor(v, "dupl copy");
      if (t.shape != first.shape)
        throw ExecError(ExecError::Code::ShapeMismatch,
                        "dupl copies with differing shapes");
      for (std::size_t i = 0; i < t.data.size(); ++i) m.data[i] += t.data[i];
    }
    for (auto& d : m.data) d /= static_cast<double>(xs.size());
    center = Value(std::move(m));
  } else {
    double s = 0.0;
    for (const auto& v : xs) s += num(v, "dupl copy");
    center = Value(s / static_cast<double>(xs.size()));
  }
  double tap = 0.0;
  for (const auto& v : xs) tap += metric(v, center);
  return {center, tap};
}

} // namespace detail

/* Evaluate an inverse kind. `ins` = forward outputs, carried constants, θ
 * values (θ always Real). In strict mode (the untotalized program) any
 * violated θ-space or input-domain requirement yields ⊥; in total mode the
 * surrounding graph has already contracted those ports, and the kinds with
 * intrinsic joint constraints (dupl, scatter) blend instead of rejecting,
 * reporting the disagreement in `tap`. */
inline InvEvalResult inverse_eval(const OpKind& k, std::span<const Value> ins,
                                  bool total) {
  using detail::boolean;
  using detail::num;
  using detail::tensor;

  detail::want(k.is_inverse(), ExecError::Code::UnsupportedKind,
               "inverse_eval on non-inverse kind '" + k.spelling() + "'");
  detail::want(static_cast<int>(ins.size()) == in_arity(k),
               ExecError::Code::ArityMismatch,
               "'" + k.spelling() + "' expects " + std::to_string(in_arity(k)) +
                   " inputs");

  if (detail::any_undefined(ins)) return detail::bot();

  const int n_y = k.prim == Prim::Dupl ? k.dupl_n : 1;
  const int n_c = inverse_const_inputs(k);
  const int n_t = theta_count(k);
  std::span<const Value> ys = ins.subspan(0, static_cast<std::size_t>(n_y));
  std::span<const Value> cs =
      ins.subspan(static_cast<std::size_t>(n_y), static_cast<std::size_t>(n_c));
  std::span<const Value> ts = ins.subspan(
      static_cast<std::size_t>(n_y + n_c), static_cast<std::size_t>(n_t));

  // strict-mode membership checks
  if (!total) {
    auto doms = inverse_input_domains(k);
    for (int i = 0; i < n_y + n_c; ++i)
      if (!doms[static_cast<std::size_t>(i)].trivial() &&
          !doms[static_cast<std::size_t>(i)].contains(ins[static_cast<std::size_t>(i)]))
        return detail::bot();
    auto spaces = theta_spaces(k);
    for (int i = 0; i < n_t; ++i)
      if (!spaces[static_cast<std::size_t>(i)].contains(ts[static_cast<std::size_t>(i)]))
        return detail::bot();
  }

  auto th = [&](int i) { return num(ts[static_cast<std::size_t>(i)], "theta"); };
  auto flag = [&](int i) { return th(i) == 1.0; };
  auto ok = [](std::vector<Value> outs, double tap = 0.0) {
    return InvEvalResult{true, std::move(outs), tap};
  };

  InvEvalResult res = [&]() -> InvEvalResult {
  switch (k.prim) {
  case Prim::Add: {
    double y = num(ys[0], "inv add");
    if (k.const_mask != 0) return ok({Value(y - num(cs[0], "const"))});
    return ok({Value(y - th(0)), Value(th(0))});
  }
  case Prim::Sub: {
    double y = num(ys[0], "inv sub");
    if (k.const_mask == 0b01) return ok({Value(num(cs[0], "const") - y)});
    if (k.const_mask == 0b10) return ok({Value(y + num(cs[0], "const"))});
    return ok({Value(y + th(0)), Value(th(0))});
  }
  case Prim::Mul: {
    double y = num(ys[0], "inv mul");
    if (k.const_mask != 0) {
      double c = num(cs[0], "const");
      return ok({Value(y / c)});
    }
    double t1 = th(0);
    if (flag(1)) return ok({Value(y / t1), Value(t1)});
    return ok({Value(t1), Value(y / t1)});
  }
  case Prim::Div: {
    double y = num(ys[0], "inv div");
    if (k.const_mask == 0b01) return ok({Value(num(cs[0], "const") / y)});
    if (k.const_mask == 0b10) return ok({Value(y * num(cs[0], "const"))});
    return ok({Value(y * th(0)), Value(th(0))});
  }
  case Prim::Pow: {
    double y = num(ys[0], "inv pow");
    if (k.const_mask == 0b01) {
      double c = num(cs[0], "const");
      return ok({Value(std::log(y) / std::log(c))});
    }
    if (k.const_mask == 0b10) {
      double c = num(cs[0], "const");
      return ok({Value(std::pow(y, 1.0 / c))});
    }
    bool branch = y != 1.0 ? true : flag(1);
    if (branch) {
      double t1 = th(0);
      return ok({Value(t1), Value(std::log(y) / std::log(t1))});
    }
    return ok({Value(1.0), Value(th(2))});
  }
  case Prim::Log: {
    double y = num(ys[0], "inv log");
    if (k.const_mask == 0b01)
      return ok({Value(std::pow(num(cs[0], "const"), y))});
    if (k.const_mask == 0b10)
      return ok({Value(std::pow(num(cs[0], "const"), 1.0 / y))});
    double t = th(0);
    return ok({Value(t), Value(std::pow(t, y))});
  }
  case Prim::Abs: {
    double y = num(ys[0], "inv abs");
    return ok({Value(th(0) * y)});
  }
  case Prim::Min: {
    double y = num(ys[0], "inv min");
    double t1 = th(0);
    if (flag(1)) return ok({Value(y), Value(y + t1)});
    return ok({Value(y + t1), Value(y)});
  }
  case Prim::Max: {
    double y = num(ys[0], "inv max");
    double t1 = th(0);
    if (flag(1)) return ok({Value(y), Value(y - t1)});
    return ok({Value(y - t1), Value(y)});
  }
  case Prim::Cos: {
    double y = num(ys[0], "inv cos");
    double t = th(0);
    double sign = std::fmod(t, 2.0) == 0.0 ? 1.0 : -1.0;
    return ok({Value(2.0 * std::numbers::pi * std::ceil(t / 2.0) +
                     sign * std::acos(std::clamp(y, -1.0, 1.0)))});
  }
  case Prim::Sin: {
    double y = num(ys[0], "inv sin");
    double t = th(0);
    double sign = std::fmod(t, 2.0) == 0.0 ? 1.0 : -1.0;
    return ok({Value(std::numbers::pi * t +
                     sign * std::asin(std::clamp(y, -1.0, 1.0)))});
  }
  case Prim::Tan: {
    double y = num(ys[0], "inv tan");
    return ok({Value(std::numbers::pi * th(0) + std::atan(y))});
  }
  case Prim::Gt: {
    bool y = boolean(ys[0], "inv gt");
    double t1 = th(0), t2 = th(1);
    return ok({Value(t1), Value(y ? t1 - t2 : t1 + t2)});
  }
  case Prim::Lt: {
    bool y = boolean(ys[0], "inv lt");
    double t1 = th(0), t2 = th(1);
    return ok({Value(t1), Value(y ? t1 + t2 : t1 - t2)});
  }
  case Prim::Eq: {
    bool y = boolean(ys[0], "inv eq");
    double t1 = th(0), t2 = th(1);
    return ok({Value(t1), Value(y ? t1 : t1 + t2)});
  }
  case Prim::And: {
    bool y = boolean(ys[0], "inv and");
    bool t1 = flag(0), t2 = flag(1);
    if (y) return ok({Value(true), Value(true)});
    return ok({Value(t1 && t2), Value(t1 != t2)});
  }
  case Prim::Or: {
    bool y = boolean(ys[0], "inv or");
    bool t1 = flag(0), t2 = flag(1);
    if (!y) return ok({Value(false), Value(false)});
    return ok({Value(t1 || !t2), Value(t1 != t2)});
  }
  case Prim::Xor: {
    bool y = boolean(ys[0], "inv xor");
    bool t1 = flag(0);
    return ok({Value(t1), Value(t1 != y)});
  }
  case Prim::Dupl: {
    auto [center, tap] = detail::blend(ys);
    if (!total) {
      /* copies recovered along different arithmetic paths jitter in the
       * last ulps; treat agreement-within-roundoff as agreement (and return
       * the same mean the total variant would), ⊥ beyond it */
      double scale = 1.0;
      if (center.is_numeric())
        scale = std::max(1.0, std::abs(center.as_double()));
      else if (center.is_tensor())
        for (double e : center.tensor().data)
          scale = std::max(scale, std::abs(e));
      if (tap > 1e-9 * scale) return detail::bot();
      return ok({std::move(center)});
    }
    return ok({std::move(center)}, tap);
  }
  case Prim::Select: {
    double y = num(ys[0], "inv select");
    bool pick_a = flag(0);
    double other = th(1);
    if (pick_a) return ok({Value(y), Value(other), Value(true)});
    return ok({Value(other), Value(y), Value(false)});
  }
  case Prim::Clip: {
    double y = num(ys[0], "inv clip");
    double t = th(0);
    if (y == k.clip_lo && k.clip_lo != k.clip_hi) return ok({Value(y - t)});
    if (y == k.clip_hi) return ok({Value(y + t)});
    return ok({Value(y)});
  }
  case Prim::GatherNd: {
    const Tensor& y = tensor(ys[0], "inv gathernd");
    const Tensor& it = tensor(cs[0], "inv gathernd indices");
    auto idx = detail::index_list(it);
    if (!idx || static_cast<std::int64_t>(idx->size()) != k.aux_nidx ||
        static_cast<std::int64_t>(y.data.size()) != k.aux_nidx)
      throw ExecError(ExecError::Code::ShapeMismatch,
                      "inv gathernd: index or data length mismatch");
    Tensor x{{k.aux_len},
             std::vector<double>(static_cast<std::size_t>(k.aux_len), 0.0)};
    std::vector<bool> covered(static_cast<std::size_t>(k.aux_len), false);
    for (std::size_t i = 0; i < idx->size(); ++i) {
      std::int64_t at = (*idx)[i];
      if (at < 0 || at >= k.aux_len || covered[static_cast<std::size_t>(at)])
        throw ExecError(ExecError::Code::ShapeMismatch,
                        "inv gathernd: invalid or duplicate index");
      covered[static_cast<std::size_t>(at)] = true;
      x.data[static_cast<std::size_t>(at)] = y.data[i];
    }
    int t = 0;
    for (std::int64_t pos = 0; pos < k.aux_len; ++pos)
      if (!covered[static_cast<std::size_t>(pos)])
        x.data[static_cast<std::size_t>(pos)] = th(t++);
    return ok({Value(std::move(x))});
  }
  case Prim::Scatter: {
    const Tensor& y = tensor(ys[0], "inv scatter");
    const Tensor& it = tensor(cs[0], "inv scatter indices");
    auto idx = detail::index_list(it);
    if (!idx)
      throw ExecError(ExecError::Code::ShapeMismatch,
                      "inv scatter: non-integral indices");
    Tensor z{{static_cast<std::int64_t>(idx->size())}, {}};
    std::vector<bool> used(y.data.size(), false);
    for (auto i : *idx) {
      if (i < 0 || i >= static_cast<std::int64_t>(y.data.size()))
        throw ExecError(ExecError::Code::ShapeMismatch,
                        "inv scatter: index out of range");
      used[static_cast<std::size_t>(i)] = true;
      z.data.push_back(y.data[static_cast<std::size_t>(i)]);
    }
    double off = 0.0;
    for (std::size_t i = 0; i < y.data.size(); ++i)
      if (!used[i]) off += y.data[i] * y.data[i];
    double tap = std::sqrt(off);
    if (!total && tap != 0.0) return detail::bot();
    return ok({Value(std::move(z))}, tap);
  }
  case Prim::Reshape: {
    const Tensor& y = tensor(ys[0], "inv reshape");
    if (static_cast<std::int64_t>(y.data.size()) != k.aux_len)
      throw ExecError(ExecError::Code::ShapeMismatch,
                      "inv reshape: element count mismatch");
    Tensor x{{k.aux_len}, y.data};
    return ok({Value(std::move(x))});
  }
  }
  throw ExecError(ExecError::Code::UnsupportedKind, k.spelling());
  }();

  /* Representability guard (strict mode, scalar kinds): the selected preimage
   * must be a finite, full-precision point of the forward domain, else it is
   * no preimage at all. Doubles make this reachable (e.g. Log⁻¹ computing θ^y
   * can underflow to 0, which Log's forward domain excludes, or into the
   * subnormal band, where the handful of surviving bits no longer pins down a
   * preimage). Skipped when y itself is non-finite: such runs are already
   * outside the calibrated regime. */
  if (!total && res.defined && !array_prim(k.prim) && k.prim != Prim::Dupl) {
    bool y_finite = true;
    for (const auto& v : ys)
      if (v.is_numeric() && !std::isfinite(v.as_double())) y_finite = false;
    if (y_finite) {
      for (const auto& v : res.outs) {
        if (!v.is_numeric()) continue;
        double d = v.as_double();
        if (!std::isfinite(d)) return detail::bot();
        if (d != 0.0 && std::abs(d) < std::numeric_limits<double>::min())
          return detail::bot();
      }
      std::vector<Value> full;
      std::size_t oi = 0, ci = 0;
      for (int s = 0; s < forward_in_arity(k.prim); ++s)
        full.push_back((k.const_mask >> s) & 1u ? cs[ci++] : res.outs[oi++]);
      OpKind f = OpKind::forward(k.prim);
      f.clip_lo = k.clip_lo;
      f.clip_hi = k.clip_hi;
      if (forward_domain_distance(f, full) != 0.0) return detail::bot();
    }
  }
  return res;
}

/* ====================== θ extraction ====================== */

/* Given a forward execution (x, y) of kind `fwd` (mask selecting constant
 * slots of its reduced inverse variant), produce θ with
 * inverse(y; θ) = non-constant x, exactly where the parametrization admits
 * it. Comparisons hitting their measure-zero holes (Gt/Lt ties, Mul at
 * (0,0)) fall back to an in-space filler. */
inline std::vector<double> extract_theta(const OpKind& fwd, std::uint32_t mask,
                                         std::span<const Value> x,
                                         std::span<const Value> y) {
  using detail::boolean;
  using detail::num;

  OpKind inv = OpKind::inverse(fwd.prim, mask);
  inv.dupl_n = fwd.dupl_n;
  inv.clip_lo = fwd.clip_lo;
  inv.clip_hi = fwd.clip_hi;
  if (fwd.prim == Prim::GatherNd) {
    inv.aux_len = static_cast<std::int64_t>(x[0].tensor().data.size());
    inv.aux_nidx = static_cast<std::int64_t>(x[1].tensor().data.size());
  }
  if (theta_count(inv) == 0) return {};

  auto xv = [&](int i) { return num(x[static_cast<std::size_t>(i)], "x"); };

  switch (fwd.prim) {
  case Prim::Add: case Prim::Sub: case Prim::Div:
    return {xv(1)};
  case Prim::Mul: {
    double a = xv(0), b = xv(1);
    if (b != 0.0) return {b, 1.0};
    if (a != 0.0) return {a, 0.0};
    return {kDomainEps, 0.0}; // (0,0) is unreachable by this parametrization
  }
  case Prim::Pow: {
    double a = xv(0), b = xv(1);
    double yy = num(y[0], "y");
    if (yy != 1.0) return {a, 1.0, 0.0};
    if (a == 1.0) return {2.0, 0.0, b};
    return {a, 1.0, 0.0}; // y == 1 with a != 1 forces b == 0
  }
  case Prim::Log:
    return {xv(0)};
  case Prim::Abs:
    return {xv(0) < 0.0 ? -1.0 : 1.0};
  case Prim::Min: {
    double a = xv(0), b = xv(1);
    if (a <= b) return {b - a, 1.0};
    return {a - b, 0.0};
  }
  case Prim::Max: {
    double a = xv(0), b = xv(1);
    if (a >= b) return {a - b, 1.0};
    return {b - a, 0.0};
  }
  case Prim::Cos: case Prim::Sin: case Prim::Tan: {
    double target = xv(0);
    double guess = std::round(target / std::numbers::pi);
    double best_t = 0.0, best_d = std::numeric_limits<double>::infinity();
    for (double t = guess - 2.0; t <= guess + 2.0; t += 1.0) {
      Value out =
          inverse_eval(inv, std::array<Value, 2>{y[0], Value(t)}, true).outs[0];
      double d = std::abs(out.real() - target);
      if (d < best_d) {
        best_d = d;
        best_t = t;
      }
    }
    return {best_t};
  }
  case Prim::Gt: case Prim::Lt: {
    double a = xv(0), b = xv(1);
    double gap = std::abs(a - b);
    return {a, gap > 0.0 ? gap : kDomainEps};
  }
  case Prim::Eq: {
    double a = xv(0), b = xv(1);
    if (boolean(y[0], "y")) return {a, 1.0};
    return {a, b - a};
  }
  case Prim::And: case Prim::Or: case Prim::Xor: {
    // smallest (θ1, θ2) lexicographically that reproduces x
    int nt = theta_count(inv);
    for (int bits = 0; bits < (1 << nt); ++bits) {
      std::vector<Value> ins(y.begin(), y.end());
      std::vector<double> cand;
      for (int i = 0; i < nt; ++i) {
        // bit order chosen so enumeration is lexicographic in (θ1, θ2)
        double v = (bits >> (nt - 1 - i)) & 1 ? 1.0 : 0.0;
        cand.push_back(v);
        ins.emplace_back(v);
      }
      auto r = inverse_eval(inv, ins, true);
      if (!r.defined) continue;
      bool match = true;
      for (std::size_t i = 0; i < x.size(); ++i)
        if (!(r.outs[i] == x[i])) match = false;
      if (match) return cand;
    }
    throw ExecError(ExecError::Code::InvalidArgument,
                    "no boolean θ reproduces the given execution");
  }
  case Prim::Select: {
    bool c = boolean(x[2], "select cond");
    return {c ? 1.0 : 0.0, c ? xv(1) : xv(0)};
  }
  case Prim::Clip: {
    double v = xv(0);
    return {std::max({fwd.clip_lo - v, v - fwd.clip_hi, 0.0})};
  }
  case Prim::GatherNd: {
    const Tensor& data = x[0].tensor();
    auto idx = detail::index_list(x[1].tensor());
    detail::want(idx.has_value(), ExecError::Code::ShapeMismatch,
                 "gathernd extraction with non-integral indices");
    std::vector<bool> covered(data.data.size(), false);
    for (auto i : *idx) covered[static_cast<std::size_t>(i)] = true;
    std::vector<double> th;
    for (std::size_t i = 0; i < data.data.size(); ++i)
      if (!covered[i]) th.push_back(data.data[i]);
    return th;
  }
  default:
    return {};
  }
}

/* ====================== domain distances ====================== */

// Distance from concrete inputs to an op's effective domain (forward
// direction). 0 exactly on the domain; ∞ when undefined values appear.
inline double forward_domain_distance(const OpKind& k, std::span<const Value> ins) {
  using detail::num;
  if (detail::any_undefined(ins))
    return std::numeric_limits<double>::infinity();
  switch (k.prim) {
  case Prim::Div: {
    if (ins[1].is_tensor()) {
      double s = 0.0;
      for (double v : ins[1].tensor().data) s += Domain::nonzero().distance(v);
      return s;
    }
    return Domain::nonzero().distance(num(ins[1], "div divisor"));
  }
  case Prim::Pow:
    return Domain::positive().distance(num(ins[0], "pow base"));
  case Prim::Log:
    return Domain::positive_not_one().distance(num(ins[0], "log base")) +
           Domain::positive().distance(num(ins[1], "log argument"));
  case Prim::GatherNd: {
    const Tensor& x = detail::tensor(ins[0], "gathernd data");
    const Tensor& it = detail::tensor(ins[1], "gathernd indices");
    double hi = static_cast<double>(x.data.size()) - 1.0;
    double s = 0.0;
    for (double v : it.data) {
      double r = std::nearbyint(v);
      s += std::abs(v - r) + Domain::interval(0.0, hi).distance(r);
    }
    return s;
  }
  case Prim::Scatter: {
    const Tensor& it = detail::tensor(ins[1], "scatter indices");
    auto dims = detail::index_list(detail::tensor(ins[2], "scatter shape"));
    if (!dims || dims->size() != 1)
      return std::numeric_limits<double>::infinity();
    double hi = static_cast<double>((*dims)[0]) - 1.0;
    double s = 0.0;
    std::vector<std::int64_t> seen;
    for (double v : it.data) {
      double r = std::nearbyint(v);
      s += std::abs(v - r) + Domain::interval(0.0, hi).distance(r);
      auto ri = static_cast<std::int64_t>(r);
      for (auto p : seen)
        if (p == ri) s += 1.0;
      seen.push_back(ri);
    }
    return s;
  }
  case Prim::Reshape: {
    const Tensor& x = detail::tensor(ins[0], "reshape data");
    auto dims = detail::index_list(detail::tensor(ins[1], "reshape shape"));
    if (!dims) return std::numeric_limits<double>::infinity();
    return std::abs(static_cast<double>(shape_numel(*dims)) -
                    static_cast<double>(x.data.size()));
  }
  default:
    return 0.0;
  }
}

} // namespace parinv
