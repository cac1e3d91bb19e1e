#include "helpers.hpp"

using namespace pt;

TEST_CASE("domain membership") {
  CHECK(Domain::real().contains(-1e300));
  CHECK_FALSE(Domain::nonzero().contains(0.0));
  CHECK(Domain::nonzero().contains(-0.5));
  CHECK(Domain::positive().contains(1e-12));
  CHECK_FALSE(Domain::positive().contains(0.0));
  CHECK(Domain::nonneg().contains(0.0));
  CHECK_FALSE(Domain::nonneg().contains(-1e-12));
  CHECK_FALSE(Domain::positive_not_one().contains(1.0));
  CHECK(Domain::positive_not_one().contains(2.0));
  CHECK(Domain::interval(-1, 1).contains(-1.0));
  CHECK_FALSE(Domain::interval(-1, 1).contains(1.5));
  CHECK(Domain::integers().contains(-7.0));
  CHECK_FALSE(Domain::integers().contains(0.5));
  CHECK(Domain::sign().contains(-1.0));
  CHECK_FALSE(Domain::sign().contains(0.0));
  CHECK(Domain::boolean().contains(1.0));
  CHECK_FALSE(Domain::boolean().contains(-1.0));
}

TEST_CASE("contraction is identity on members") {
  Rng rng(7);
  std::vector<Domain> doms{Domain::real(),    Domain::nonzero(),
                           Domain::positive(), Domain::nonneg(),
                           Domain::positive_not_one(),
                           Domain::interval(-2, 3), Domain::integers(),
                           Domain::sign(),    Domain::boolean()};
  for (const auto& d : doms) {
    for (int i = 0; i < 200; ++i) {
      double x = d.sample(rng);
      REQUIRE(d.contains(x));
      CHECK(d.contract(x) == x);
    }
  }
}

TEST_CASE("contraction projects outsiders to the nearest member") {
  CHECK(Domain::nonneg().contract(-3.0) == 0.0);
  CHECK(Domain::positive().contract(-3.0) == 1e-9);
  CHECK(Domain::nonzero().contract(0.0) == 1e-9);
  CHECK(Domain::positive_not_one().contract(1.0) == 1.0 + 1e-9);
  CHECK(Domain::positive_not_one().contract(-5.0) == 1e-9);
  CHECK(Domain::interval(-1, 1).contract(4.0) == 1.0);
  CHECK(Domain::interval(-1, 1).contract(-4.0) == -1.0);

  // integers round half to even
  CHECK(Domain::integers().contract(2.5) == 2.0);
  CHECK(Domain::integers().contract(3.5) == 4.0);
  CHECK(Domain::integers().contract(-0.3) == 0.0);

  // finite sets pick the nearest member, ties toward the smaller one
  Domain pm = Domain::sign();
  CHECK(pm.contract(0.2) == 1.0);
  CHECK(pm.contract(-0.2) == -1.0);
  CHECK(pm.contract(0.0) == -1.0);
  CHECK(Domain::boolean().contract(0.5) == 0.0);
  CHECK(Domain::boolean().contract(0.51) == 1.0);
}

TEST_CASE("distance is zero exactly on members") {
  Rng rng(11);
  std::vector<Domain> doms{Domain::real(),     Domain::nonzero(),
                           Domain::positive(), Domain::nonneg(),
                           Domain::interval(-1, 1), Domain::integers(),
                           Domain::sign()};
  for (const auto& d : doms) {
    for (int i = 0; i < 100; ++i) {
      double x = rng.normal(0.0, 3.0);
      if (d.contains(x)) {
        CHECK(d.distance(x) == 0.0);
      } else {
        CHECK(d.distance(x) > 0.0);
        CHECK(d.contains(d.contract(x)));
      }
    }
  }
  CHECK(Domain::interval(-1, 1).distance(3.0) == 2.0);
  CHECK(Domain::integers().distance(0.25) == 0.25);
  CHECK(Domain::sign().distance(0.0) == 1.0);
}

TEST_CASE("trivial and discrete flags") {
  CHECK(Domain::integers().discrete());
  CHECK(Domain::sign().discrete());
  CHECK(Domain::boolean().discrete());
  CHECK_FALSE(Domain::real().discrete());
  CHECK_FALSE(Domain::interval(-1, 1).discrete());
}

TEST_CASE("spelling round-trips through parse") {
  std::vector<Domain> doms{Domain::real(),
                           Domain::nonzero(),
                           Domain::positive(),
                           Domain::nonneg(),
                           Domain::positive_not_one(),
                           Domain::interval(-1.5, 2.0),
                           Domain::integers(),
                           Domain::sign(),
                           Domain::boolean(),
                           Domain::finite({-2.0, 0.5, 3.0})};
  for (const auto& d : doms) {
    Domain back = Domain::parse(d.spelling());
    CHECK(back.spelling() == d.spelling());
  }
  CHECK(Domain::real().spelling() == "real");
  CHECK(Domain::integers().spelling() == "int");
  CHECK_THROWS(Domain::parse("no-such-domain"));
}
