#include "helpers.hpp"

using namespace pt;

namespace {

Graph pair_graph() { // y1 = a+b, y2 = a·b
  GraphBuilder b;
  NodeId a = b.input("a");
  NodeId n = b.input("b");
  b.output(b.add(a, n), "y1");
  b.output(b.mul(a, n), "y2");
  return b.build();
}

Graph quartic_graph() {
  GraphBuilder b;
  NodeId x = b.input("x");
  NodeId s1 = b.pow(b.abs(x), b.constant(rv(2)));
  b.output(b.pow(b.abs(s1), b.constant(rv(2))), "y");
  return b.build();
}

template <typename F>
ExecError::Code code_of(F&& f) {
  try {
    f();
  } catch (const ExecError& e) {
    return e.code();
  }
  FAIL("expected an ExecError");
  return ExecError::Code::InvalidArgument;
}

}  // namespace

TEST_CASE("forward runs bind inputs by name and report every output") {
  auto fr = run_forward(pair_graph(), {{"a", rv(2)}, {"b", rv(3)}});
  CHECK(fr.all_defined);
  CHECK(fr.outputs.at("y1") == rv(5));
  CHECK(fr.outputs.at("y2") == rv(6));
  CHECK(fr.outputs.size() == 2);
}

TEST_CASE("an internal ⊥ marks the run instead of throwing") {
  GraphBuilder b;
  NodeId x = b.input("x");
  b.output(b.div(b.constant(rv(1)), x), "y");
  auto fr = run_forward(b.build(), {{"x", rv(0)}});
  CHECK_FALSE(fr.all_defined);
  CHECK(fr.outputs.at("y").is_undefined());
}

TEST_CASE("forward input binding errors carry their codes") {
  Graph g = pair_graph();
  CHECK(code_of([&] { run_forward(g, {{"a", rv(1)}}); }) ==
        ExecError::Code::MissingInput);
  CHECK(code_of([&] {
          run_forward(g, {{"a", rv(1)}, {"b", rv(2)}, {"zz", rv(3)}});
        }) == ExecError::Code::InvalidArgument);
  CHECK(code_of([&] {
          run_forward(g, {{"a", Value::undef()}, {"b", rv(2)}});
        }) == ExecError::Code::InvalidArgument);
}

TEST_CASE("inverse runs reject θ vectors of the wrong length") {
  InverseProgram ip = prepare_program(quartic_graph(), pipeline(true, false));
  REQUIRE(ip.layout.total() == 2);
  std::map<std::string, Value> y{{"y", rv(16)}};
  CHECK(code_of([&] { run_inverse(ip, y, {}); }) ==
        ExecError::Code::ArityMismatch);
  std::vector<double> three{1, -1, 0};
  CHECK(code_of([&] { run_inverse(ip, y, three); }) ==
        ExecError::Code::ArityMismatch);
}

TEST_CASE("strict programs refuse preimage misses with NotTotalized") {
  InverseProgram ip = prepare_program(quartic_graph(), pipeline(true, false));
  std::vector<double> bad{-1, 1};
  CHECK(code_of([&] { run_inverse(ip, {{"y", rv(16)}}, bad); }) ==
        ExecError::Code::NotTotalized);
}

TEST_CASE("unbound observations are rejected") {
  InverseProgram ip = prepare_program(quartic_graph(), pipeline(true, false));
  std::vector<double> theta{1, -1};
  CHECK(code_of([&] { run_inverse(ip, {}, theta); }) ==
        ExecError::Code::MissingInput);
  // a name the inverse graph does not know is caught before binding
  CHECK(code_of([&] { run_inverse(ip, {{"z", rv(16)}}, theta); }) ==
        ExecError::Code::InvalidArgument);
}

TEST_CASE("pinned constants never appear among recovered inputs") {
  GraphBuilder b;
  NodeId x = b.input("x");
  b.output(b.min(x, b.constant(rv(2))), "y");
  InverseProgram ip = prepare_program(b.build(), pipeline(true, false));
  REQUIRE(ip.pins.size() == 1);

  auto ex = extract_theta_program(ip, {{"x", rv(5)}});
  auto rep = run_inverse(ip, ex.y, ex.theta);
  CHECK(rep.outputs.size() == 1);
  CHECK(rep.outputs.count("x") == 1);
}

TEST_CASE("identity loss can be skipped") {
  InverseProgram ip = prepare_program(quartic_graph(), pipeline(true, false));
  std::vector<double> theta{1, -1};
  auto rep = run_inverse(ip, {{"y", rv(16)}}, theta, false);
  CHECK(rep.identity_loss == 0.0);
  CHECK(rep.outputs.at("x") == rv(-2));
}

TEST_CASE("identity loss is the euclidean gap between y and f(f⁻¹(y;θ))") {
  InverseProgram ip = prepare_program(quartic_graph(), pipeline(true, false));
  std::vector<double> theta{1, 1};
  auto rep = run_inverse(ip, {{"y", rv(16)}}, theta);
  CHECK(rep.outputs.at("x") == rv(2));
  CHECK(rep.identity_loss == 0.0);
}

TEST_CASE("absolute-sum loss totals every element") {
  LossFn L = abs_sum_loss();
  CHECK(L({{"x", rv(-3)}}) == 3.0);
  CHECK(L({{"x", rv(-3)}, {"b", bv(true)}, {"t", tv({1, -2, 2})}}) == 9.0);
  CHECK(L({{"b", bv(false)}}) == 0.0);
  CHECK(L({{"x", Value::undef()}}) ==
        std::numeric_limits<double>::infinity());
}

TEST_CASE("target loss measures euclidean distance to an assignment") {
  LossFn L = target_loss({{"a", rv(3)}, {"b", rv(4)}});
  CHECK(L({{"a", rv(0)}, {"b", rv(0)}}) == 5.0);
  CHECK(L({{"a", rv(3)}, {"b", rv(4)}}) == 0.0);
  // extra recovered inputs are ignored; missing ones are an error
  CHECK(L({{"a", rv(3)}, {"b", rv(4)}, {"c", rv(9)}}) == 0.0);
  LossFn bad = target_loss({{"zz", rv(1)}});
  CHECK(code_of([&] { bad({{"a", rv(0)}}); }) ==
        ExecError::Code::MissingInput);
}
