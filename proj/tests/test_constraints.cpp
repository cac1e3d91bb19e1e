#include "helpers.hpp"

using namespace pt;

namespace {

Graph double_graph() { // y = x + x, one reuse
  GraphBuilder b;
  NodeId x = b.input("x");
  b.output(b.add(x, x), "y");
  return b.build();
}

Graph exp_sum_graph() { // y = eˣ + eˣ
  GraphBuilder b;
  NodeId x = b.input("x");
  b.output(b.add(b.exp(x), b.exp(x)), "y");
  return b.build();
}

InverseProgram strict_reduced(const Graph& g) {
  return prepare_program(g, pipeline(true, false));
}

}  // namespace

TEST_CASE("copy equality eliminates the Add slot of x + x") {
  InverseProgram ip = strict_reduced(double_graph());
  CHECK(ip.pre_reduction_slots == 1);
  CHECK(ip.layout.total() == 0);
  REQUIRE(ip.reductions.size() == 1);
  CHECK(ip.reductions[0].original_slot == 0);
  CHECK(ip.reductions[0].expr == "0.5*y");

  auto rep = run_inverse(ip, {{"y", rv(6)}}, {});
  CHECK(rep.outputs.at("x") == rv(3));
  CHECK(rep.identity_loss == 0.0);
}

TEST_CASE("constant operands need no slots to begin with") {
  GraphBuilder b;
  NodeId x = b.input("x");
  b.output(b.add(x, b.constant(rv(3))), "y");
  InverseProgram ip = strict_reduced(b.build());
  CHECK(ip.pre_reduction_slots == 0);
  CHECK(ip.reductions.empty());
  CHECK(run_inverse(ip, {{"y", rv(10)}}, {}).outputs.at("x") == rv(7));
}

TEST_CASE("peeled equality sees through constant-base exponentials") {
  InverseProgram ip = strict_reduced(exp_sum_graph());
  // Add contributes the only slot; log_e(y−θ) = log_e(θ) peels to y−θ = θ
  CHECK(ip.pre_reduction_slots == 1);
  CHECK(ip.layout.total() == 0);

  auto rep = run_inverse(ip, {{"y", rv(4)}}, {});
  CHECK(rep.outputs.at("x").real() == Catch::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("opaque branch choices survive reduction") {
  // x·x recovers x through a flag-dependent root: not affine, not eliminable
  GraphBuilder b;
  NodeId x = b.input("x");
  b.output(b.mul(x, x), "y");
  InverseProgram ip = strict_reduced(b.build());
  CHECK(ip.pre_reduction_slots == 2);
  CHECK(ip.layout.total() == 2);
  CHECK(ip.reductions.empty());
}

TEST_CASE("shared operand of (a+b)·b collapses one slot") {
  GraphBuilder b;
  NodeId a = b.input("a");
  NodeId bb = b.input("b");
  b.output(b.mul(b.add(a, bb), bb), "y");
  InverseProgram ip = strict_reduced(b.build());
  CHECK(ip.pre_reduction_slots == 3);
  CHECK(ip.layout.total() == 2);
  REQUIRE(ip.reductions.size() == 1);

  auto ex = extract_theta_program(ip, {{"a", rv(1)}, {"b", rv(2)}});
  REQUIRE(ex.theta.size() == 2);
  auto rep = run_inverse(ip, ex.y, ex.theta);
  CHECK(rep.outputs.at("a").real() == Catch::Approx(1.0).margin(1e-12));
  CHECK(rep.outputs.at("b").real() == Catch::Approx(2.0).margin(1e-12));
}

TEST_CASE("three-link arm loses two redundant angle slots") {
  InverseProgram ip = strict_reduced(ik3_graph());
  CHECK(ip.pre_reduction_slots == 12);
  CHECK(ip.layout.total() == 10);
  CHECK(ip.reductions.size() == 2);
  for (const auto& r : ip.reductions) CHECK_FALSE(r.expr.empty());
}

TEST_CASE("reduced programs match the unreduced ones pointwise") {
  auto check_graph = [](const Graph& g, std::map<std::string, Value> inputs) {
    InverseProgram full = prepare_program(
        g, pipeline(false, false));
    InverseProgram red = strict_reduced(g);

    auto exf = extract_theta_program(full, inputs);
    auto exr = extract_theta_program(red, inputs);
    auto rf = run_inverse(full, exf.y, exf.theta);
    auto rr = run_inverse(red, exr.y, exr.theta);
    REQUIRE(rf.outputs.size() == rr.outputs.size());
    for (const auto& [name, v] : rf.outputs) {
      INFO("input " << name);
      CHECK(value_gap(rr.outputs.at(name), v) < 1e-12);
    }
  };

  Rng rng(511);
  for (int i = 0; i < 100; ++i) {
    check_graph(double_graph(), {{"x", rv(rng.normal(0, 2))}});
    check_graph(exp_sum_graph(), {{"x", rv(rng.normal(0, 1))}});
    double bb = rng.normal(0, 2);
    if (std::abs(bb) < 1e-3) bb = 1.0;
    GraphBuilder b;
    NodeId a = b.input("a");
    NodeId n = b.input("b");
    b.output(b.mul(b.add(a, n), n), "y");
    check_graph(b.build(), {{"a", rv(rng.normal(0, 2))}, {"b", rv(bb)}});
  }
}

TEST_CASE("collected constraints carry their provenance notes") {
  // a reuse gives a "copy" equality
  InverseProgram dup = prepare_program(
      double_graph(), pipeline(false, false));
  ConstraintSet cs = collect_constraints(dup);
  REQUIRE_FALSE(cs.eqs.empty());
  CHECK(cs.eqs[0].note == "copy");

  // a constant forward input gives a "pin:..." equality
  GraphBuilder b;
  NodeId x = b.input("x");
  b.output(b.min(x, b.constant(rv(2))), "y");
  InverseProgram pin = prepare_program(
      b.build(), pipeline(false, false));
  REQUIRE_FALSE(pin.pins.empty());
  ConstraintSet ps = collect_constraints(pin);
  bool saw_pin = false;
  for (const auto& eq : ps.eqs)
    if (eq.note.rfind("pin:", 0) == 0) saw_pin = true;
  CHECK(saw_pin);
}
