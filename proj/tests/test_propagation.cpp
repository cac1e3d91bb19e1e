#include "helpers.hpp"

using namespace pt;

TEST_CASE("constants fold through ops") {
  GraphBuilder b;
  NodeId c2 = b.constant(rv(2));
  NodeId c3 = b.constant(rv(3));
  NodeId s = b.op(OpKind::forward(Prim::Add), {c2, c3})[0];
  b.output(s, "y");
  Graph g = b.build();

  auto ann = propagate(g);
  REQUIRE(ann[s].known.has_value());
  CHECK(*ann[s].known == rv(5));
  CHECK(ann[s].shape == Shape{});
}

TEST_CASE("inputs stay unknown but shapes flow") {
  GraphBuilder b;
  NodeId x = b.input("x");
  NodeId c3 = b.constant(rv(3));
  NodeId s = b.op(OpKind::forward(Prim::Add), {x, c3})[0];
  b.output(s, "y");
  Graph g = b.build();

  auto ann = propagate(g);
  CHECK_FALSE(ann[s].known.has_value());
  REQUIRE(ann[s].shape.has_value());
  CHECK(*ann[s].shape == Shape{});  // scalar
}

TEST_CASE("gathernd output shape is the index length") {
  GraphBuilder b;
  NodeId t = b.input("t");
  NodeId idx = b.constant(tv({0, 2}));
  NodeId y = b.op(OpKind::forward(Prim::GatherNd), {t, idx})[0];
  b.output(y, "y");
  Graph g = b.build();

  auto ann = propagate(g, {{"t", Shape{5}}});
  REQUIRE(ann[y].shape.has_value());
  CHECK(*ann[y].shape == Shape{2});
}

TEST_CASE("scatter and reshape shapes come from the constant sigma") {
  GraphBuilder b;
  NodeId z = b.input("z");
  NodeId idx = b.constant(tv({3, 1}));
  NodeId sig = b.constant(tv({5}));
  NodeId y = b.op(OpKind::forward(Prim::Scatter), {z, idx, sig})[0];
  b.output(y, "y");
  Graph g = b.build();

  auto ann = propagate(g, {{"z", Shape{2}}});
  REQUIRE(ann[y].shape.has_value());
  CHECK(*ann[y].shape == Shape{5});
}

TEST_CASE("declared shapes must be consistent") {
  GraphBuilder b;
  NodeId a = b.input("a");
  NodeId c = b.constant(tv({1, 2, 3}));
  NodeId s = b.op(OpKind::forward(Prim::Add), {a, c})[0];
  b.output(s, "y");
  Graph g = b.build();

  CHECK_THROWS_AS(propagate(g, {{"a", Shape{2}}}), ExecError);
  CHECK_NOTHROW(propagate(g, {{"a", Shape{3}}}));

  GraphBuilder b2;
  NodeId t = b2.input("t");
  NodeId u = b2.op(OpKind::forward(Prim::Cos), {t})[0];
  b2.output(u, "y");
  Graph g2 = b2.build();
  CHECK_THROWS_AS(propagate(g2, {{"t", Shape{4}}}), ExecError);
}

TEST_CASE("propagation is deterministic and agrees with interpretation") {
  GraphBuilder b;
  NodeId c2 = b.constant(rv(2));
  NodeId c8 = b.constant(rv(8));
  NodeId l = b.op(OpKind::forward(Prim::Log), {c2, c8})[0];
  NodeId m = b.op(OpKind::forward(Prim::Mul), {l, b.constant(rv(-1))})[0];
  b.output(m, "y");
  Graph g = b.build();

  auto a1 = propagate(g);
  auto a2 = propagate(g);
  REQUIRE(a1.size() == a2.size());
  for (std::size_t i = 0; i < a1.size(); ++i) {
    CHECK(a1[i].known == a2[i].known);
    CHECK(a1[i].shape == a2[i].shape);
  }

  auto run = run_forward(g, {});
  REQUIRE(a1[m].known.has_value());
  CHECK(*a1[m].known == run.outputs.at("y"));
  CHECK(run.outputs.at("y").real() == Catch::Approx(-3.0));
}

TEST_CASE("a constant-folded partial op stays known-undefined") {
  GraphBuilder b;
  NodeId c1 = b.constant(rv(1));
  NodeId c0 = b.constant(rv(0));
  NodeId q = b.op(OpKind::forward(Prim::Div), {c1, c0})[0];
  b.output(q, "y");
  Graph g = b.build();

  auto ann = propagate(g);
  REQUIRE(ann[q].known.has_value());
  CHECK(ann[q].known->is_undefined());
}
