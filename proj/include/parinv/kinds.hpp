#pragma once

#include <bit>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "domain.hpp"
#include "numfmt.hpp"

namespace parinv {

/* ====================== op-kind vocabulary ====================== */

enum class Prim {
  Add, Sub, Mul, Div, Pow, Log,
  Abs, Min, Max,
  Cos, Sin, Tan,
  Gt, Lt, Eq,
  And, Or, Xor,
  Dupl, Select, Clip,
  GatherNd, Scatter, Reshape,
};

namespace detail {
struct PrimName {
  Prim prim;
  std::string_view name;
};
inline constexpr PrimName kPrimNames[] = {
    {Prim::Add, "add"},         {Prim::Sub, "sub"},
    {Prim::Mul, "mul"},         {Prim::Div, "div"},
    {Prim::Pow, "pow"},         {Prim::Log, "log"},
    {Prim::Abs, "abs"},         {Prim::Min, "min"},
    {Prim::Max, "max"},         {Prim::Cos, "cos"},
    {Prim::Sin, "sin"},         {Prim::Tan, "tan"},
    {Prim::Gt, "gt"},           {Prim::Lt, "lt"},
    {Prim::Eq, "eq"},           {Prim::And, "and"},
    {Prim::Or, "or"},           {Prim::Xor, "xor"},
    {Prim::Dupl, "dupl"},       {Prim::Select, "select"},
    {Prim::Clip, "clip"},       {Prim::GatherNd, "gathernd"},
    {Prim::Scatter, "scatter"}, {Prim::Reshape, "reshape"},
};
} // namespace detail

inline std::string_view prim_name(Prim p) {
  for (const auto& e : detail::kPrimNames)
    if (e.prim == p) return e.name;
  return "?";
}

inline std::optional<Prim> prim_from_name(std::string_view s) {
  for (const auto& e : detail::kPrimNames)
    if (e.name == s) return e.prim;
  return std::nullopt;
}

/* An op node's kind. Three families share one graph vocabulary:
 *   Forward   op:add, op:dupl:3, op:clip:0:1, ...
 *   Inverse   op:inv:add, op:inv:add:k2 (forward slot 2 was constant),
 *             op:inv:gathernd:<len>:<nidx>, op:inv:reshape:<len>, ...
 *   Contract  op:contract:<domain>, projection inserted by totalization
 */
struct OpKind {
  enum class Family { Forward, Inverse, Contract };

  Family family = Family::Forward;
  Prim prim = Prim::Add;
  int dupl_n = 0;               // Dupl fan-out
  double clip_lo = 0, clip_hi = 0;
  std::uint32_t const_mask = 0; // Inverse: bit i-1 set = forward input slot i const
  std::int64_t aux_len = 0;     // Inverse GatherNd/Reshape: forward data length
  std::int64_t aux_nidx = 0;    // Inverse GatherNd: number of gathered indices
  Domain target;                // Contract: projection target

  static OpKind forward(Prim p) {
    OpKind k;
    k.prim = p;
    return k;
  }
  static OpKind dupl(int n) {
    OpKind k;
    k.prim = Prim::Dupl;
    k.dupl_n = n;
    return k;
  }
  static OpKind clip(double lo, double hi) {
    if (!(lo < hi)) throw std::invalid_argument("clip needs lo < hi");
    OpKind k;
    k.prim = Prim::Clip;
    k.clip_lo = lo;
    k.clip_hi = hi;
    return k;
  }
  static OpKind inverse(Prim p, std::uint32_t mask = 0) {
    OpKind k;
    k.family = Family::Inverse;
    k.prim = p;
    k.const_mask = mask;
    return k;
  }
  static OpKind contract(Domain d) {
    OpKind k;
    k.family = Family::Contract;
    k.target = std::move(d);
    return k;
  }

  bool operator==(const OpKind& o) const = default;

  bool is_forward() const { return family == Family::Forward; }
  bool is_inverse() const { return family == Family::Inverse; }
  bool is_contract() const { return family == Family::Contract; }

  std::string spelling() const;
  static OpKind parse(std::string_view s);
};

/* ====================== arity tables ====================== */

inline int forward_in_arity(Prim p) {
  switch (p) {
  case Prim::Abs: case Prim::Cos: case Prim::Sin: case Prim::Tan:
    return 1;
  case Prim::Select: case Prim::Scatter:
    return 3;
  case Prim::Dupl: case Prim::Clip:
    return 1;
  default:
    return 2;
  }
}

inline int forward_out_arity(const OpKind& k) {
  return k.prim == Prim::Dupl ? k.dupl_n : 1;
}

inline bool bool_output(Prim p) {
  switch (p) {
  case Prim::Gt: case Prim::Lt: case Prim::Eq:
  case Prim::And: case Prim::Or: case Prim::Xor:
    return true;
  default:
    return false;
  }
}

// Kinds with dedicated constant-reduced inverse variants. Constants feeding
// other kinds are recovered as pinned outputs instead.
inline bool const_reducible(Prim p) {
  switch (p) {
  case Prim::Add: case Prim::Sub: case Prim::Mul:
  case Prim::Div: case Prim::Pow: case Prim::Log:
    return true;
  default:
    return false;
  }
}

inline bool array_prim(Prim p) {
  return p == Prim::GatherNd || p == Prim::Scatter || p == Prim::Reshape;
}

// θ slots of an inverse kind (array kinds computed from aux fields).
inline int theta_count(const OpKind& k) {
  if (!k.is_inverse()) return 0;
  if (k.const_mask != 0) return 0; // reduced scalar variants are θ-free
  switch (k.prim) {
  case Prim::Add: case Prim::Sub: case Prim::Div: case Prim::Abs:
  case Prim::Cos: case Prim::Sin: case Prim::Tan: case Prim::Xor:
  case Prim::Log: case Prim::Clip:
    return 1;
  case Prim::Mul: case Prim::Min: case Prim::Max:
  case Prim::Gt: case Prim::Lt: case Prim::Eq:
  case Prim::And: case Prim::Or: case Prim::Select:
    return 2;
  case Prim::Pow:
    return 3;
  case Prim::Dupl: case Prim::Scatter: case Prim::Reshape:
    return 0;
  case Prim::GatherNd:
    return static_cast<int>(k.aux_len - k.aux_nidx);
  }
  return 0;
}

// Constant forward inputs carried into the inverse as value inputs. Array
// index/shape operands are implied constants and do not appear in const_mask.
inline int inverse_const_inputs(const OpKind& k) {
  switch (k.prim) {
  case Prim::GatherNd: return 1; // ι
  case Prim::Scatter: return 2;  // ι, σ
  case Prim::Reshape: return 0;  // σ folded into aux_len
  default: return std::popcount(k.const_mask);
  }
}

inline int in_arity(const OpKind& k) {
  switch (k.family) {
  case OpKind::Family::Forward:
    return forward_in_arity(k.prim);
  case OpKind::Family::Inverse: {
    int fwd_out = k.prim == Prim::Dupl ? k.dupl_n : 1;
    return fwd_out + inverse_const_inputs(k) + theta_count(k);
  }
  case OpKind::Family::Contract:
    return 1;
  }
  return 0;
}

inline int out_arity(const OpKind& k) {
  switch (k.family) {
  case OpKind::Family::Forward:
    return forward_out_arity(k);
  case OpKind::Family::Inverse: {
    int fwd_in = forward_in_arity(k.prim);
    if (k.prim == Prim::GatherNd) return 1;      // x
    if (k.prim == Prim::Scatter) return 1;       // z
    if (k.prim == Prim::Reshape) return 1;       // x
    return fwd_in - std::popcount(k.const_mask);
  }
  case OpKind::Family::Contract:
    return 1;
  }
  return 0;
}

/* ====================== spellings ====================== */

inline std::string OpKind::spelling() const {
  switch (family) {
  case Family::Contract:
    return "op:contract:" + target.spelling();
  case Family::Forward: {
    std::string s = "op:" + std::string(prim_name(prim));
    if (prim == Prim::Dupl) s += ":" + std::to_string(dupl_n);
    if (prim == Prim::Clip)
      s += ":" + format_double(clip_lo) + ":" + format_double(clip_hi);
    return s;
  }
  case Family::Inverse: {
    std::string s = "op:inv:" + std::string(prim_name(prim));
    if (prim == Prim::Dupl) return s + ":" + std::to_string(dupl_n);
    if (prim == Prim::Clip)
      return s + ":" + format_double(clip_lo) + ":" + format_double(clip_hi);
    if (prim == Prim::GatherNd)
      return s + ":" + std::to_string(aux_len) + ":" + std::to_string(aux_nidx);
    if (prim == Prim::Reshape) return s + ":" + std::to_string(aux_len);
    if (const_mask != 0) {
      int slot = std::countr_zero(const_mask) + 1;
      s += ":k" + std::to_string(slot);
    }
    return s;
  }
  }
  return "?";
}

inline OpKind OpKind::parse(std::string_view s) {
  auto fail = [&]() -> OpKind {
    throw std::invalid_argument("unknown op kind: '" + std::string(s) + "'");
  };
  if (!s.starts_with("op:")) fail();
  std::string_view rest = s.substr(3);

  if (rest.starts_with("contract:"))
    return contract(Domain::parse(rest.substr(9)));

  bool inv = false;
  if (rest.starts_with("inv:")) {
    inv = true;
    rest = rest.substr(4);
  }

  auto head = rest;
  std::string_view args;
  if (auto colon = rest.find(':'); colon != std::string_view::npos) {
    head = rest.substr(0, colon);
    args = rest.substr(colon + 1);
  }

  auto next_arg = [&]() -> std::string_view {
    auto colon = args.find(':');
    auto tok = args.substr(0, colon);
    args = colon == std::string_view::npos ? std::string_view{}
                                           : args.substr(colon + 1);
    return tok;
  };

  auto p = prim_from_name(head);
  if (!p) fail();

  OpKind k;
  k.family = inv ? Family::Inverse : Family::Forward;
  k.prim = *p;

  switch (*p) {
  case Prim::Dupl: {
    if (args.empty()) fail();
    k.dupl_n = static_cast<int>(parse_int(next_arg()));
    if (k.dupl_n < 2 || !args.empty()) fail();
    break;
  }
  case Prim::Clip: {
    if (args.empty()) fail();
    k.clip_lo = parse_double(next_arg());
    if (args.empty()) fail();
    k.clip_hi = parse_double(next_arg());
    if (!args.empty() || !(k.clip_lo < k.clip_hi)) fail();
    break;
  }
  case Prim::GatherNd: {
    if (inv) {
      if (args.empty()) fail();
      k.aux_len = parse_int(next_arg());
      if (args.empty()) fail();
      k.aux_nidx = parse_int(next_arg());
      if (!args.empty() || k.aux_len < 1 || k.aux_nidx < 1 ||
          k.aux_nidx > k.aux_len)
        fail();
    } else if (!args.empty()) {
      fail();
    }
    break;
  }
  case Prim::Reshape: {
    if (inv) {
      if (args.empty()) fail();
      k.aux_len = parse_int(next_arg());
      if (!args.empty() || k.aux_len < 0) fail();
    } else if (!args.empty()) {
      fail();
    }
    break;
  }
  default: {
    if (!args.empty()) {
      if (!inv) fail();
      auto tok = next_arg();
      if (!args.empty() || tok.size() < 2 || tok[0] != 'k') fail();
      int slot = static_cast<int>(parse_int(tok.substr(1)));
      if (slot < 1 || slot > forward_in_arity(*p) || !const_reducible(*p))
        fail();
      k.const_mask = 1u << (slot - 1);
    }
    break;
  }
  }
  return k;
}

} // namespace parinv
