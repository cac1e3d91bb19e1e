#include "helpers.hpp"

using namespace pt;

namespace {

// mirror of the arm: unit links, cumulative angles
std::pair<double, double> arm_direct(const std::vector<double>& phi) {
  double s = phi[0];
  double x = std::cos(s), y = std::sin(s);
  for (std::size_t i = 1; i < phi.size(); ++i) {
    s += phi[i];
    x += std::cos(s);
    y += std::sin(s);
  }
  return {x, y};
}

// mirror of the compositor: C = Σ cᵢ·e^(−(κ₁+..+κᵢ))
double render_direct(const std::vector<double>& c, const std::vector<double>& k) {
  double cum = 0.0, acc = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    cum += k[i];
    acc += c[i] * std::pow(std::numbers::e, 0.0 - cum);
  }
  return acc;
}

}  // namespace

TEST_CASE("the three-link arm hits its textbook poses") {
  Graph g = ik3_graph();
  auto straight = run_forward(
      g, {{"phi1", rv(0)}, {"phi2", rv(0)}, {"phi3", rv(0)}});
  CHECK(straight.outputs.at("x") == rv(3));
  CHECK(straight.outputs.at("y") == rv(0));

  double h = 3.141592653589793 / 2;
  auto bent = run_forward(
      g, {{"phi1", rv(h)}, {"phi2", rv(-h)}, {"phi3", rv(0)}});
  CHECK(bent.outputs.at("x").real() == Catch::Approx(2.0).margin(1e-12));
  CHECK(bent.outputs.at("y").real() == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("arm graphs of any length match the closed form") {
  Rng rng(815);
  for (int n = 2; n <= 5; ++n) {
    Graph g = ik_chain_graph(n);
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<double> phi;
      std::map<std::string, Value> in;
      for (int i = 1; i <= n; ++i) {
        phi.push_back(rng.uniform(-3.2, 3.2));
        in["phi" + std::to_string(i)] = rv(phi.back());
      }
      auto [x, y] = arm_direct(phi);
      auto fr = run_forward(g, in);
      CHECK(fr.outputs.at("x").real() == Catch::Approx(x).margin(1e-12));
      CHECK(fr.outputs.at("y").real() == Catch::Approx(y).margin(1e-12));
    }
  }
}

TEST_CASE("benchmark constructors reject degenerate sizes") {
  CHECK_THROWS_AS(ik_chain_graph(1), std::invalid_argument);
  CHECK_THROWS_AS(render1d_graph(0), std::invalid_argument);
  CHECK_THROWS_AS(gen_random(0, 0), std::invalid_argument);
}

TEST_CASE("the ray compositor matches its closed form") {
  Graph g2 = render1d_graph(2);
  auto flat = run_forward(g2, {{"c1", rv(1)}, {"c2", rv(1)},
                               {"k1", rv(0)}, {"k2", rv(0)}});
  CHECK(flat.outputs.at("C") == rv(2));
  auto dark = run_forward(g2, {{"c1", rv(0)}, {"c2", rv(0)},
                               {"k1", rv(0.3)}, {"k2", rv(0.7)}});
  CHECK(dark.outputs.at("C") == rv(0));

  Graph g4 = render1d_graph(4);
  Rng rng(816);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> c, k;
    std::map<std::string, Value> in;
    for (int i = 1; i <= 4; ++i) {
      c.push_back(rng.uniform(0.0, 1.0));
      k.push_back(rng.uniform(0.0, 2.0));
      in["c" + std::to_string(i)] = rv(c.back());
      in["k" + std::to_string(i)] = rv(k.back());
    }
    auto fr = run_forward(g4, in);
    CHECK(fr.outputs.at("C").real() ==
          Catch::Approx(render_direct(c, k)).margin(1e-12));
  }
}

TEST_CASE("generated problems are reproducible and runnable") {
  auto a = gen_random(3, 5);
  auto b = gen_random(3, 5);
  CHECK(graph_to_json(a.graph) == graph_to_json(b.graph));
  REQUIRE(a.sample.size() == b.sample.size());
  for (const auto& [name, v] : a.sample) CHECK(b.sample.at(name) == v);

  for (std::uint64_t seed = 0; seed < 12; ++seed) {
    auto gp = gen_random(seed, 2 + static_cast<int>(seed % 7));
    auto fr = run_forward(gp.graph, gp.sample);
    INFO("seed " << seed);
    CHECK(fr.all_defined);
    CHECK(fr.outputs.count("y") == 1);
    for (const auto& [name, v] : fr.outputs) {
      CHECK_FALSE(v.is_undefined());
      if (v.is_numeric()) CHECK(std::isfinite(v.as_double()));
    }
  }
}

TEST_CASE("requested input counts are honored") {
  auto gp = gen_random(9, 6, 3);
  CHECK(gp.graph.input_nodes().size() == 3);
  CHECK(gp.sample.size() == 3);
}

TEST_CASE("the comparison harness emits a fixed row schedule") {
  SolveConfig cfg;
  cfg.restarts = 1;
  cfg.max_evals = 40;

  auto rep = compare_harness(6, 0, cfg);
  // 8 arm targets × 2 methods × (1 init + 1 final) + 2 success-rate rows
  CHECK(rep.rows.size() == 34);
  int n_init = 0, n_final = 0, n_rate = 0;
  for (const auto& r : rep.rows) {
    if (r.phase == "init") ++n_init;
    if (r.phase == "final") ++n_final;
    if (r.phase == "success_rate") ++n_rate;
  }
  CHECK(n_init == 16);
  CHECK(n_final == 16);
  CHECK(n_rate == 2);

  // adding a random problem appends one block per method
  auto rep2 = compare_harness(6, 1, cfg);
  CHECK(rep2.rows.size() == 38);

  std::string csv = rep.to_csv();
  CHECK(csv.rfind("problem,method,phase,loss\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 35);

  // deterministic: the same seed gives byte-identical reports
  CHECK(compare_harness(6, 0, cfg).to_csv() == csv);
}

TEST_CASE("an empty report is just the header") {
  CHECK(CompareReport{}.to_csv() == "problem,method,phase,loss\n");
}

TEST_CASE("rows arrive sorted by problem, method, then phase") {
  SolveConfig cfg;
  cfg.restarts = 2;
  cfg.max_evals = 30;
  auto rep = compare_harness(8, 1, cfg);
  auto rank = [](const std::string& p) {
    return p == "init" ? 0 : p == "final" ? 1 : 2;
  };
  for (std::size_t i = 1; i < rep.rows.size(); ++i) {
    const auto& a = rep.rows[i - 1];
    const auto& b = rep.rows[i];
    bool ordered = a.problem < b.problem ||
                   (a.problem == b.problem &&
                    (a.method < b.method ||
                     (a.method == b.method && rank(a.phase) <= rank(b.phase))));
    CHECK(ordered);
  }
}
