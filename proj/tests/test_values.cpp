#include "helpers.hpp"

using namespace pt;

TEST_CASE("value type tags and accessors") {
  CHECK(Value::undef().is_undefined());
  CHECK(rv(1.5).is_real());
  CHECK(iv(3).is_int());
  CHECK(bv(true).is_bool());
  CHECK(tv({1.0, 2.0}).is_tensor());

  CHECK(rv(1.5).real() == 1.5);
  CHECK(iv(3).integer() == 3);
  CHECK(bv(true).boolean());
  CHECK(tv({1.0, 2.0}).tensor().shape == Shape{2});

  CHECK(iv(3).as_double() == 3.0);
  CHECK_THROWS(bv(true).as_double());
}

TEST_CASE("value equality is exact and type-strict") {
  CHECK(rv(2.0) == rv(2.0));
  CHECK_FALSE(rv(2.0) == iv(2));
  CHECK_FALSE(rv(2.0) == rv(2.0 + 1e-15));
  CHECK(Value::undef() == Value::undef());
  CHECK(tv({1.0, 2.0}) == tv({1.0, 2.0}));
  CHECK_FALSE(tv({1.0, 2.0}) == tv({1.0, 3.0}));
}

TEST_CASE("metric on scalars, tensors, and undefined") {
  CHECK(metric(rv(1.0), rv(4.0)) == 3.0);
  CHECK(metric(iv(3), iv(3)) == 0.0);
  CHECK(metric(iv(3), iv(4)) == 1.0);
  CHECK(metric(bv(true), bv(false)) == 1.0);
  CHECK(metric(bv(true), bv(true)) == 0.0);

  // Euclidean over entries: sqrt(3^2 + 3^2)
  CHECK(metric(tv({0.0, 3.0}), tv({3.0, 0.0})) ==
        Catch::Approx(std::sqrt(18.0)));

  CHECK(std::isinf(metric(Value::undef(), rv(1.0))));
  CHECK_THROWS(metric(rv(1.0), bv(true)));
  CHECK_THROWS(metric(tv({1.0}), tv({1.0, 2.0})));

  std::vector<Value> a{rv(0.0), rv(0.0)};
  std::vector<Value> b{rv(3.0), rv(4.0)};
  CHECK(metric(a, b) == Catch::Approx(5.0));
}

TEST_CASE("shape_numel") {
  CHECK(shape_numel({}) == 1);
  CHECK(shape_numel({5}) == 5);
  CHECK(shape_numel({0}) == 0);
}

TEST_CASE("double formatting round-trips") {
  for (double x : {0.0, -1.5, 1e-9, 3.141592653589793, -2.2250738585072014e-308,
                   1.7976931348623157e308}) {
    CHECK(parse_double(format_double(x)) == x);
  }
  // shortest form is used where it round-trips
  CHECK(format_double(0.5) == "0.5");
  CHECK(format_double(-3.0) == "-3");
  // real literals never collapse into integer spellings
  CHECK(format_real_literal(-3.0) == "-3.0");
  CHECK(format_real_literal(0.5) == "0.5");
  CHECK_THROWS_AS(parse_double("1.5x"), std::invalid_argument);
  CHECK_THROWS_AS(parse_int("7.0"), std::invalid_argument);
}
