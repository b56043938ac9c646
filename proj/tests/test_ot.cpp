#include <doctest.h>

#include <cmath>

#include "test_util.hpp"
#include "triwad/error.hpp"
#include "triwad/ot.hpp"

using namespace triwad;
using testutil::gaussian_cloud;
using testutil::points_1d;

TEST_CASE("cost matrix basics") {
  SUBCASE("1-D squared distance") {
    auto c = cost_matrix(points_1d({0}), points_1d({3}), 2.0);
    CHECK(c.at(0, 0) == doctest::Approx(9.0));
  }
  SUBCASE("3-4-5 triangle at p=1") {
    DataMatrix a(1, 2, {0, 0});
    DataMatrix b(1, 2, {3, 4});
    auto c = cost_matrix(uniform_measure(a), uniform_measure(b), 1.0);
    CHECK(c.at(0, 0) == doctest::Approx(5.0));
  }
  SUBCASE("identical measures give a zero diagonal") {
    Rng rng(1);
    auto mu = gaussian_cloud(rng, 5, 3);
    for (double p : {1.0, 2.0, 3.0}) {
      auto c = cost_matrix(mu, mu, p);
      for (std::size_t i = 0; i < 5; ++i) CHECK(c.at(i, i) == 0.0);
    }
  }
  SUBCASE("dimension mismatch throws") {
    CHECK_THROWS_AS(
        cost_matrix(uniform_measure(DataMatrix(1, 2)),
                    uniform_measure(DataMatrix(1, 3)), 2.0),
        Error);
  }
}

TEST_CASE("solve_ot on hand-checked instances") {
  SUBCASE("two points, monotone matching wins") {
    // Matchings of {0,1} onto {1,2}: identity order costs (1+1)/2 = 1,
    // crossed order costs (4+0)/2 = 2.
    auto mu = points_1d({0, 1});
    auto nu = points_1d({1, 2});
    auto r = solve_ot(mu, nu, 2.0);
    CHECK(r.cost == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.plan_at(0, 0) == doctest::Approx(0.5));
    CHECK(r.plan_at(1, 1) == doctest::Approx(0.5));
    CHECK(r.plan_at(0, 1) == doctest::Approx(0.0));
  }
  SUBCASE("identical measures cost zero") {
    Rng rng(3);
    auto mu = gaussian_cloud(rng, 6, 2);
    auto r = solve_ot(mu, mu, 2.0);
    CHECK(r.cost == doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("singletons and strong duality") {
    auto r = solve_ot(points_1d({0}), points_1d({4}), 2.0);
    CHECK(r.cost == doctest::Approx(16.0));
    CHECK(r.dual_row[0] + r.dual_col[0] == doctest::Approx(16.0));
  }
}

TEST_CASE("wasserstein distances") {
  CHECK(wasserstein(points_1d({0}), points_1d({4}), 2.0) ==
        doctest::Approx(4.0));
  CHECK(wasserstein(points_1d({0, 4}), points_1d({1, 5}), 2.0) ==
        doctest::Approx(1.0));
  Rng rng(5);
  auto mu = gaussian_cloud(rng, 9, 4);
  CHECK(wasserstein(mu, mu, 2.0) == doctest::Approx(0.0));
}

TEST_CASE("brute force oracle") {
  SUBCASE("single pair") {
    auto mu = points_1d({2});
    auto nu = points_1d({5});
    auto r = brute_force_ot(mu, nu, cost_matrix(mu, nu, 2.0));
    CHECK(r.cost == doctest::Approx(9.0));
  }
  SUBCASE("matches solve_ot on the 2-point instance") {
    auto mu = points_1d({0, 1});
    auto nu = points_1d({1, 2});
    auto c = cost_matrix(mu, nu, 2.0);
    CHECK(brute_force_ot(mu, nu, c).cost == doctest::Approx(1.0));
  }
  SUBCASE("size cap and weight preconditions") {
    Rng rng(11);
    auto big = gaussian_cloud(rng, 9, 2);
    CHECK_THROWS_AS(brute_force_ot(big, big, cost_matrix(big, big, 2.0)),
                    Error);
  }
}

TEST_CASE("solver equals exhaustive enumeration on random instances") {
  Rng rng(2024);
  for (int rep = 0; rep < 60; ++rep) {
    const std::size_t m = 2 + rng.index(5);  // up to 6 points
    const std::size_t d = 1 + rng.index(4);
    auto mu = gaussian_cloud(rng, m, d, rng.uniform(-2, 2));
    auto nu = gaussian_cloud(rng, m, d, rng.uniform(-2, 2));
    auto c = cost_matrix(mu, nu, 2.0);
    auto exact = solve_ot(mu, nu, c);
    auto oracle = brute_force_ot(mu, nu, c);
    CHECK(std::abs(exact.cost - oracle.cost) <= 1e-9);
  }
}

TEST_CASE("marginals and strong duality on random rectangular instances") {
  Rng rng(77);
  for (int rep = 0; rep < 250; ++rep) {
    const std::size_t m = 1 + rng.index(50);
    const std::size_t n = 1 + rng.index(50);
    const std::size_t d = 1 + rng.index(16);
    auto mu = gaussian_cloud(rng, m, d, rng.uniform(-3, 3), rng.uniform(0.5, 2));
    auto nu = gaussian_cloud(rng, n, d, rng.uniform(-3, 3), rng.uniform(0.5, 2));
    auto r = solve_ot(mu, nu, 2.0);

    for (std::size_t i = 0; i < m; ++i) {
      double row = 0.0;
      for (std::size_t j = 0; j < n; ++j) row += r.plan_at(i, j);
      CHECK(std::abs(row - mu.weight(i)) <= 1e-9);
    }
    for (std::size_t j = 0; j < n; ++j) {
      double col = 0.0;
      for (std::size_t i = 0; i < m; ++i) col += r.plan_at(i, j);
      CHECK(std::abs(col - nu.weight(j)) <= 1e-9);
    }

    double dual = 0.0;
    for (std::size_t i = 0; i < m; ++i) dual += mu.weight(i) * r.dual_row[i];
    for (std::size_t j = 0; j < n; ++j) dual += nu.weight(j) * r.dual_col[j];
    CHECK(std::abs(r.cost - dual) <= 1e-7 * std::max(1.0, r.cost));

    CHECK(r.nonzero_count() <= m + n - 1);
    CHECK(r.dual_col[0] == 0.0);
  }
}

TEST_CASE("equal-size uniform plans are scaled permutations") {
  Rng rng(99);
  for (int rep = 0; rep < 40; ++rep) {
    const std::size_t m = 2 + rng.index(20);
    auto mu = gaussian_cloud(rng, m, 3);
    auto nu = gaussian_cloud(rng, m, 3, 1.5);
    auto r = solve_ot(mu, nu, 2.0);
    const double w = 1.0 / static_cast<double>(m);
    std::size_t hits = 0;
    for (double v : r.plan) {
      if (v == 0.0) continue;
      ++hits;
      CHECK(v == doctest::Approx(w).epsilon(1e-12));
    }
    CHECK(hits == m);
  }
}

TEST_CASE("metric axioms on random triples") {
  Rng rng(1234);
  for (int rep = 0; rep < 150; ++rep) {
    const std::size_t d = 1 + rng.index(4);
    auto mu = gaussian_cloud(rng, 2 + rng.index(12), d, rng.uniform(-2, 2));
    auto nu = gaussian_cloud(rng, 2 + rng.index(12), d, rng.uniform(-2, 2));
    auto ga = gaussian_cloud(rng, 2 + rng.index(12), d, rng.uniform(-2, 2));
    const double p = rep % 2 ? 2.0 : 1.0;
    const double wmn = wasserstein(mu, nu, p);
    const double wnm = wasserstein(nu, mu, p);
    const double wmg = wasserstein(mu, ga, p);
    const double wgn = wasserstein(ga, nu, p);
    CHECK(wmn >= 0.0);
    CHECK(std::abs(wmn - wnm) <= 1e-9);
    CHECK(wmn <= wmg + wgn + 1e-9);
  }
}

TEST_CASE("scale equivariance of the euclidean ground cost") {
  Rng rng(555);
  auto mu = gaussian_cloud(rng, 13, 3);
  auto nu = gaussian_cloud(rng, 17, 3, 2.0);
  const double base = wasserstein(mu, nu, 2.0);
  for (double a : {0.25, 3.0, 10.0}) {
    auto scale = [&](const DiscreteMeasure& m) {
      DataMatrix s = m.support();
      for (auto& v : s.mutable_values()) v *= a;
      return DiscreteMeasure(std::move(s), std::vector<double>(m.weights()));
    };
    CHECK(wasserstein(scale(mu), scale(nu), 2.0) ==
          doctest::Approx(a * base).epsilon(1e-9));
  }
}

TEST_CASE("solve counter increments per exact solve") {
  auto before = ot_solve_count();
  wasserstein(points_1d({0}), points_1d({1}), 2.0);
  CHECK(ot_solve_count() == before + 1);
}
