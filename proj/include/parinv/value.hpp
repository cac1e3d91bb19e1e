#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace parinv {

/* ====================== runtime values ====================== */

using Shape = std::vector<std::int64_t>;

// Rank-1 (or rank-0 via empty shape) tensor of reals.
struct Tensor {
  Shape shape;
  std::vector<double> data;

  bool operator==(const Tensor& o) const = default;
};

inline std::int64_t shape_numel(const Shape& s) {
  std::int64_t n = 1;
  for (auto d : s) n *= d;
  return n;
}

// ⊥ (partial-function miss) is a first-class value so interpreters can
// propagate it without unwinding.
struct Undefined {
  bool operator==(const Undefined&) const = default;
};

class Value {
public:
  Value() : v_(Undefined{}) {}
  Value(double x) : v_(x) {}
  Value(std::int64_t x) : v_(x) {}
  Value(int x) : v_(static_cast<std::int64_t>(x)) {}
  Value(bool b) : v_(b) {}
  Value(Tensor t) : v_(std::move(t)) {}
  static Value undef() { return Value(); }

  bool is_undefined() const { return std::holds_alternative<Undefined>(v_); }
  bool is_real() const { return std::holds_alternative<double>(v_); }
  bool is_int() const { return std::holds_alternative<std::int64_t>(v_); }
  bool is_bool() const { return std::holds_alternative<bool>(v_); }
  bool is_tensor() const { return std::holds_alternative<Tensor>(v_); }

  double real() const { return std::get<double>(v_); }
  std::int64_t integer() const { return std::get<std::int64_t>(v_); }
  bool boolean() const { return std::get<bool>(v_); }
  const Tensor& tensor() const { return std::get<Tensor>(v_); }

  // Real or Int viewed as double (used where a numeric scalar is required).
  bool is_numeric() const { return is_real() || is_int(); }
  double as_double() const {
    if (is_real()) return real();
    if (is_int()) return static_cast<double>(integer());
    throw std::runtime_error("value is not numeric");
  }

  // exact (bitwise for reals) equality; distinct types never compare equal
  bool operator==(const Value& o) const = default;

  std::string type_name() const {
    if (is_undefined()) return "undefined";
    if (is_real()) return "real";
    if (is_int()) return "int";
    if (is_bool()) return "bool";
    return "tensor";
  }

private:
  std::variant<Undefined, double, std::int64_t, bool, Tensor> v_;
};

/* ====================== distances ====================== */

// |a - b| for scalars, Euclidean for tensors, 0/1 for bools/ints of
// differing value. Both sides must have the same type and shape.
double metric(const Value& a, const Value& b);

namespace detail {
inline double scalar_abs_diff(double a, double b) {
  if (a == b) return 0.0; // covers inf == inf
  return std::abs(a - b);
}
} // namespace detail

inline double metric(const Value& a, const Value& b) {
  if (a.is_undefined() || b.is_undefined())
    return std::numeric_limits<double>::infinity();
  if (a.is_real() && b.is_real()) return detail::scalar_abs_diff(a.real(), b.real());
  if (a.is_int() && b.is_int()) return a.integer() == b.integer() ? 0.0 : 1.0;
  if (a.is_bool() && b.is_bool()) return a.boolean() == b.boolean() ? 0.0 : 1.0;
  if (a.is_tensor() && b.is_tensor()) {
    const Tensor& ta = a.tensor();
    const Tensor& tb = b.tensor();
    if (ta.shape != tb.shape)
      throw std::runtime_error("metric: tensor shape mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < ta.data.size(); ++i) {
      double d = detail::scalar_abs_diff(ta.data[i], tb.data[i]);
      s += d * d;
    }
    return std::sqrt(s);
  }
  throw std::runtime_error("metric: type mismatch (" + a.type_name() + " vs " +
                           b.type_name() + ")");
}

// Euclidean metric over a concatenation of per-element distances.
inline double metric(const std::vector<Value>& a, const std::vector<Value>& b) {
  if (a.size() != b.size())
    throw std::runtime_error("metric: arity mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = metric(a[i], b[i]);
    s += d * d;
  }
  return std::sqrt(s);
}

// |a - b| <= tol * max(1, |a|, |b|)
inline bool near(double a, double b, double tol) {
  if (a == b) return true;
  double scale = std::max({1.0, std::abs(a), std::abs(b)});
  return std::abs(a - b) <= tol * scale;
}

} // namespace parinv
