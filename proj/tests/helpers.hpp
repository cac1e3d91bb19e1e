#pragma once

#include <catch2/catch_amalgamated.hpp>

#include "parinv/parinv.hpp"

#include <cmath>
#include <vector>

namespace pt {

using namespace parinv;

inline Value rv(double x) { return Value(x); }
inline Value iv(std::int64_t x) { return Value(x); }
inline Value bv(bool x) { return Value(x); }
inline Value tv(std::vector<double> d) {
  Shape s{static_cast<std::int64_t>(d.size())};
  return Value(Tensor{s, std::move(d)});
}

inline std::vector<Value> vals(std::initializer_list<Value> xs) {
  return std::vector<Value>(xs);
}

// Draw a forward-domain input tuple for a real-valued primitive. Redraws keep
// extraction numerics away from removable singularities (Pow base near 1,
// Log argument near 1) without shrinking the domain in any meaningful way.
inline std::vector<Value> sample_forward_input(Prim p, Rng& rng) {
  auto real = [&] { return rng.normal(0.0, 2.0); };
  auto nonzero = [&] {
    double x = real();
    while (std::abs(x) < 1e-3) x = real();
    return x;
  };
  auto positive = [&] { return std::abs(nonzero()); };
  auto positive_not_one = [&] {
    double x = positive();
    while (std::abs(x - 1.0) < 1e-3) x = positive();
    return x;
  };
  switch (p) {
  case Prim::Add:
  case Prim::Sub:
  case Prim::Min:
  case Prim::Max:
  case Prim::Gt:
  case Prim::Lt:
  case Prim::Eq:
    return {rv(real()), rv(real())};
  case Prim::Mul:
    return {rv(real()), rv(nonzero())};
  case Prim::Div:
    return {rv(real()), rv(nonzero())};
  case Prim::Pow:
    return {rv(positive_not_one()), rv(real())};
  case Prim::Log:
    return {rv(positive_not_one()), rv(positive())};
  case Prim::Abs:
  case Prim::Cos:
  case Prim::Sin:
    return {rv(real())};
  case Prim::Tan: {
    // keep clear of the poles: tan is exact there mathematically but its
    // double value overwhelms any relative tolerance
    double x = real();
    while (std::abs(std::cos(x)) < 1e-4) x = real();
    return {rv(x)};
  }
  default:
    FAIL("no sampler for primitive");
    return {};
  }
}

// Draw one value from every slot of a parameter space.
inline std::vector<double> sample_theta(const std::vector<Domain>& spaces,
                                        Rng& rng) {
  std::vector<double> out;
  out.reserve(spaces.size());
  for (const auto& s : spaces) out.push_back(s.sample(rng));
  return out;
}

inline PipelineOptions pipeline(bool reduce, bool totalize) {
  PipelineOptions o;
  o.reduce = reduce;
  o.totalize = totalize;
  return o;
}

inline double rel_err(double got, double want) {
  return std::abs(got - want) / std::max(1.0, std::abs(want));
}

inline double value_gap(const Value& a, const Value& b) {
  if (a.is_undefined() || b.is_undefined())
    return (a.is_undefined() && b.is_undefined()) ? 0.0 : 1.0;
  return metric(a, b);
}

}  // namespace pt
