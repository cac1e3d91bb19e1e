#include "helpers.hpp"

using namespace pt;

namespace {

Graph quartic_graph() {
  GraphBuilder b;
  NodeId x = b.input("x");
  NodeId s1 = b.pow(b.abs(x), b.constant(rv(2)));
  NodeId s2 = b.pow(b.abs(s1), b.constant(rv(2)));
  b.output(s2, "y");
  return b.build();
}

int count_contracts(const Graph& g) {
  int n = 0;
  for (NodeId o : g.ops_topo())
    if (g.kind(o).is_contract()) ++n;
  return n;
}

}  // namespace

TEST_CASE("totalization preserves defined runs exactly") {
  InverseProgram strict = prepare_program(
      quartic_graph(), pipeline(false, false));
  InverseProgram total = totalize(strict);
  CHECK(total.totalized);
  CHECK(count_contracts(total.inverse) > 0);

  // a θ the strict program accepts: identical outputs, zero domain loss
  auto s = run_inverse(strict, {{"y", rv(16)}}, std::vector<double>{1, -1});
  auto t = run_inverse(total, {{"y", rv(16)}}, std::vector<double>{1, -1});
  CHECK(s.outputs.at("x") == t.outputs.at("x"));
  CHECK(t.domain_loss == 0.0);
  CHECK(t.identity_loss == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("totalization turns preimage misses into measured losses") {
  InverseProgram total = prepare_program(quartic_graph());

  // strict would ⊥ at the inner √ of a negative number; the contraction
  // projects it to the domain edge instead and reports the distance
  auto rep = run_inverse(total, {{"y", rv(16)}}, std::vector<double>{-1, 1});
  REQUIRE_FALSE(rep.outputs.at("x").is_undefined());
  CHECK(std::abs(rep.outputs.at("x").real()) < 1e-3);
  CHECK(rep.domain_loss > 1.0);
  CHECK(rep.identity_loss == Catch::Approx(16.0).margin(1e-6));

  // the loss decomposes into named taps that sum to the total
  double sum = 0.0;
  for (const auto& tap : rep.per_tap) sum += tap.distance;
  CHECK(rep.domain_loss == Catch::Approx(sum));
  bool has_contract_tap = false;
  for (const auto& tap : rep.per_tap)
    if (tap.label.rfind("contract:", 0) == 0 && tap.distance > 0)
      has_contract_tap = true;
  CHECK(has_contract_tap);
}

TEST_CASE("totalizing twice is the identity") {
  InverseProgram once = prepare_program(quartic_graph());
  InverseProgram twice = totalize(once);
  CHECK(graph_to_json(twice.inverse) == graph_to_json(once.inverse));
}

TEST_CASE("programs whose ports are all unconstrained gain no contractions") {
  GraphBuilder b;
  NodeId x = b.input("x");
  b.output(b.add(x, b.constant(rv(3))), "y");
  InverseProgram ip = prepare_program(b.build());
  CHECK(count_contracts(ip.inverse) == 0);
  CHECK(ip.totalized);
}

TEST_CASE("reduction must happen before totalization") {
  InverseProgram total = prepare_program(quartic_graph());
  CHECK_THROWS_WITH(eliminate_equalities(total),
                    Catch::Matchers::ContainsSubstring(
                        "reduce the program before totalizing"));
}

TEST_CASE("totalized inverses never miss, for any real θ") {
  for (std::uint64_t seed : {21u, 22u, 23u, 24u}) {
    auto gp = gen_random(seed, 6);
    InverseProgram tot = prepare_program(gp.graph);
    auto y = run_forward(gp.graph, gp.sample).outputs;

    Rng rng(Rng::mix(77, seed));
    for (int trial = 0; trial < 40; ++trial) {
      std::vector<double> theta(tot.layout.total());
      for (auto& t : theta) t = rng.normal(0.0, 20.0);  // wildly off-space
      LossReport rep;
      REQUIRE_NOTHROW(rep = run_inverse(tot, y, theta));
      CHECK(std::isfinite(rep.domain_loss));
      CHECK(rep.domain_loss >= 0.0);
      for (const auto& [name, v] : rep.outputs) {
        INFO("seed " << seed << " output " << name);
        CHECK_FALSE(v.is_undefined());
      }
    }
  }
}

TEST_CASE("strict and totalized runs agree wherever strict is defined") {
  for (std::uint64_t seed : {31u, 32u, 33u}) {
    auto gp = gen_random(seed, 5);
    InverseProgram strict = prepare_program(
        gp.graph, pipeline(false, false));
    InverseProgram total = totalize(strict);

    // extracted θ is in-domain by construction, so strict is defined there
    auto ex = extract_theta_program(strict, gp.sample);
    auto rs = run_inverse(strict, ex.y, ex.theta);
    auto rt = run_inverse(total, ex.y, ex.theta);
    CHECK(rt.domain_loss == Catch::Approx(0.0).margin(1e-15));
    for (const auto& [name, v] : rs.outputs) {
      INFO("seed " << seed << " output " << name);
      CHECK(rt.outputs.at(name) == v);
    }
  }
}

TEST_CASE("vanishing domain loss implies vanishing identity loss") {
  int checked = 0;
  for (std::uint64_t seed : {41u, 42u, 43u, 44u, 45u}) {
    auto gp = gen_random(seed, 5);
    InverseProgram tot = prepare_program(gp.graph);
    auto y = run_forward(gp.graph, gp.sample).outputs;

    Rng rng(Rng::mix(99, seed));
    for (int trial = 0; trial < 60; ++trial) {
      std::vector<double> theta(tot.layout.total());
      for (std::size_t s = 0; s < theta.size(); ++s)
        theta[s] = tot.layout.slot_spaces[s].sample(rng);
      auto rep = run_inverse(tot, y, theta);
      if (rep.domain_loss < 1e-12) {
        ++checked;
        CHECK(rep.identity_loss < 1e-9);
      }
    }
  }
  CHECK(checked > 0);
}
