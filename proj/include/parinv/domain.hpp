#pragma once

#include <algorithm>
#include <cfenv>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "numfmt.hpp"
#include "value.hpp"

namespace parinv {

/* Scalar domains: effective domains of inverse primitives and the spaces of
 * their parameter slots. A Domain knows exact membership, a distance that an
 * optimizer can descend, and a contraction that projects arbitrary reals
 * back onto the domain while acting as the identity on members. */

// softening width for punctured / open boundaries
inline constexpr double kDomainEps = 1e-9;

class Domain {
public:
  enum class Kind {
    RealLine,           // ℝ
    RealNonzero,        // ℝ \ {0}
    RealPositive,       // ℝ > 0
    RealNonneg,         // ℝ ≥ 0
    RealPositiveNotOne, // ℝ > 0, ≠ 1
    Interval,           // [lo, hi]
    IntegerLine,        // ℤ (encoded as integral reals)
    FiniteSet           // explicit members, ascending
  };

  Domain() : kind_(Kind::RealLine) {}

  static Domain real() { return Domain(Kind::RealLine); }
  static Domain nonzero() { return Domain(Kind::RealNonzero); }
  static Domain positive() { return Domain(Kind::RealPositive); }
  static Domain nonneg() { return Domain(Kind::RealNonneg); }
  static Domain positive_not_one() { return Domain(Kind::RealPositiveNotOne); }
  static Domain interval(double lo, double hi) {
    Domain d(Kind::Interval);
    d.lo_ = lo;
    d.hi_ = hi;
    return d;
  }
  static Domain integers() { return Domain(Kind::IntegerLine); }
  static Domain finite(std::vector<double> members) {
    Domain d(Kind::FiniteSet);
    std::sort(members.begin(), members.end());
    d.members_ = std::move(members);
    return d;
  }
  static Domain boolean() { return finite({0.0, 1.0}); }
  static Domain sign() { return finite({-1.0, 1.0}); }

  Kind kind() const { return kind_; }
  double lo() const { return lo_; }
  double hi() const { return hi_; }
  const std::vector<double>& members() const { return members_; }

  bool operator==(const Domain& o) const = default;

  // RealLine never constrains anything; callers may skip its contractions.
  bool trivial() const { return kind_ == Kind::RealLine; }

  bool discrete() const {
    return kind_ == Kind::IntegerLine || kind_ == Kind::FiniteSet;
  }

  bool contains(double v) const {
    if (std::isnan(v)) return false;
    switch (kind_) {
    case Kind::RealLine: return true;
    case Kind::RealNonzero: return v != 0.0;
    case Kind::RealPositive: return v > 0.0;
    case Kind::RealNonneg: return v >= 0.0;
    case Kind::RealPositiveNotOne: return v > 0.0 && v != 1.0;
    case Kind::Interval: return v >= lo_ && v <= hi_;
    case Kind::IntegerLine: return v == round_even(v) && std::isfinite(v);
    case Kind::FiniteSet:
      return std::binary_search(members_.begin(), members_.end(), v);
    }
    return false;
  }

  // 0 exactly when contains(v); softened (kDomainEps) near punctured points
  // and open boundaries so the loss stays descendable.
  double distance(double v) const {
    if (std::isnan(v)) return std::numeric_limits<double>::infinity();
    switch (kind_) {
    case Kind::RealLine: return 0.0;
    case Kind::RealNonzero: return v != 0.0 ? 0.0 : kDomainEps;
    case Kind::RealPositive:
      return v > 0.0 ? 0.0 : std::max(-v, kDomainEps);
    case Kind::RealNonneg: return v >= 0.0 ? 0.0 : -v;
    case Kind::RealPositiveNotOne:
      if (v > 0.0) return v != 1.0 ? 0.0 : kDomainEps;
      return std::max(-v, kDomainEps);
    case Kind::Interval:
      return std::max({lo_ - v, v - hi_, 0.0});
    case Kind::IntegerLine:
      if (!std::isfinite(v)) return std::numeric_limits<double>::infinity();
      return std::abs(v - round_even(v));
    case Kind::FiniteSet: {
      double best = std::numeric_limits<double>::infinity();
      for (double m : members_) best = std::min(best, std::abs(v - m));
      return best;
    }
    }
    return 0.0;
  }

  // Projection onto the domain. Identity (bitwise) on members.
  double contract(double v) const {
    if (contains(v)) return v;
    if (std::isnan(v)) return fallback();
    switch (kind_) {
    case Kind::RealLine: return v;
    case Kind::RealNonzero: return kDomainEps; // v == 0
    case Kind::RealPositive: return kDomainEps;
    case Kind::RealNonneg: return 0.0;
    case Kind::RealPositiveNotOne:
      return v == 1.0 ? 1.0 + kDomainEps : kDomainEps;
    case Kind::Interval: return std::clamp(v, lo_, hi_);
    case Kind::IntegerLine:
      return std::isfinite(v) ? round_even(v) : 0.0;
    case Kind::FiniteSet: {
      // nearest member, ties resolved toward the smaller one
      double best = members_.front();
      double bestd = std::abs(v - best);
      for (double m : members_) {
        double d = std::abs(v - m);
        if (d < bestd) {
          best = m;
          bestd = d;
        }
      }
      return best;
    }
    }
    return v;
  }

  // A random member. Discrete sets draw uniformly; continuous sets project
  // a wide normal, so tails thin out but every member stays reachable.
  template <class R> double sample(R& rng) const {
    switch (kind_) {
    case Kind::FiniteSet:
      return members_[static_cast<std::size_t>(rng.uniform_int(
          0, static_cast<std::int64_t>(members_.size()) - 1))];
    case Kind::IntegerLine: return static_cast<double>(rng.uniform_int(-4, 4));
    default: return contract(rng.normal(0.0, 2.0));
    }
  }

  // Value-typed wrappers. Bools coerce to 0/1; ints to their real value.
  bool contains(const Value& v) const { return contains(coerce(v)); }
  double distance(const Value& v) const { return distance(coerce(v)); }
  Value contract_value(const Value& v) const {
    double c = coerce(v);
    if (contains(c)) return v; // identity, preserving type
    double r = contract(c);
    if (v.is_bool()) return Value(r != 0.0);
    return Value(r);
  }

  std::string spelling() const {
    switch (kind_) {
    case Kind::RealLine: return "real";
    case Kind::RealNonzero: return "nonzero";
    case Kind::RealPositive: return "pos";
    case Kind::RealNonneg: return "nonneg";
    case Kind::RealPositiveNotOne: return "posnot1";
    case Kind::Interval:
      return "interval:" + format_double(lo_) + ":" + format_double(hi_);
    case Kind::IntegerLine: return "int";
    case Kind::FiniteSet: {
      std::string s = "set:";
      for (std::size_t i = 0; i < members_.size(); ++i) {
        if (i) s += ',';
        s += format_double(members_[i]);
      }
      return s;
    }
    }
    return "real";
  }

  static Domain parse(std::string_view s) {
    if (s == "real") return real();
    if (s == "nonzero") return nonzero();
    if (s == "pos") return positive();
    if (s == "nonneg") return nonneg();
    if (s == "posnot1") return positive_not_one();
    if (s == "int") return integers();
    if (s.starts_with("interval:")) {
      auto rest = s.substr(9);
      auto colon = rest.find(':');
      if (colon == std::string_view::npos)
        throw std::invalid_argument("bad interval spelling: '" + std::string(s) + "'");
      return interval(parse_double(rest.substr(0, colon)),
                      parse_double(rest.substr(colon + 1)));
    }
    if (s.starts_with("set:")) {
      std::vector<double> ms;
      auto rest = s.substr(4);
      while (!rest.empty()) {
        auto comma = rest.find(',');
        auto tok = rest.substr(0, comma);
        ms.push_back(parse_double(tok));
        if (comma == std::string_view::npos) break;
        rest = rest.substr(comma + 1);
      }
      if (ms.empty())
        throw std::invalid_argument("empty set spelling");
      return finite(std::move(ms));
    }
    throw std::invalid_argument("unknown domain spelling: '" + std::string(s) + "'");
  }

private:
  explicit Domain(Kind k) : kind_(k) {}

  static double round_even(double v) {
    double r = std::nearbyint(v); // FE_TONEAREST: ties to even
    return r == 0.0 ? 0.0 : r;    // normalize -0
  }

  static double coerce(const Value& v) {
    if (v.is_real()) return v.real();
    if (v.is_int()) return static_cast<double>(v.integer());
    if (v.is_bool()) return v.boolean() ? 1.0 : 0.0;
    throw std::runtime_error("domain applied to non-scalar value (" +
                             v.type_name() + ")");
  }

  double fallback() const {
    switch (kind_) {
    case Kind::RealPositive:
    case Kind::RealNonzero:
    case Kind::RealPositiveNotOne: return kDomainEps;
    case Kind::RealNonneg: return 0.0;
    case Kind::Interval: return lo_;
    case Kind::FiniteSet: return members_.front();
    default: return 0.0;
    }
  }

  Kind kind_;
  double lo_ = 0.0, hi_ = 0.0;
  std::vector<double> members_;
};

} // namespace parinv
