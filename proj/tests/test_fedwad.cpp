#include <doctest.h>

#include <cmath>

#include "test_util.hpp"
#include "triwad/fedwad.hpp"

using namespace triwad;
using testutil::gaussian_cloud;
using testutil::points_1d;

TEST_CASE("one round on collinear point masses reaches equality") {
  auto mu = points_1d({0});
  auto nu = points_1d({4});
  FedState st = fedwad_init(mu, nu, points_1d({1}), 2.0);
  CHECK(st.bound == doctest::Approx(4.0));  // 1 + 3 through gamma0

  st = fedwad_round(std::move(st), mu, nu, 0.5, 2.0);
  CHECK(st.eta_mu.measure.support()(0, 0) == doctest::Approx(0.5));
  CHECK(st.eta_nu.measure.support()(0, 0) == doctest::Approx(2.5));
  CHECK(st.bound == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(st.gamma.support()(0, 0) == doctest::Approx(1.5));
}

TEST_CASE("gamma already on the geodesic gives the exact distance") {
  Rng rng(21);
  auto mu = gaussian_cloud(rng, 12, 2, -1.0);
  auto nu = gaussian_cloud(rng, 12, 2, 2.0);
  const double direct = wasserstein(mu, nu, 2.0);
  auto gamma0 = interpolate(mu, nu, 0.5).measure;
  FedState st = fedwad_init(mu, nu, gamma0, 2.0);
  CHECK(st.bound == doctest::Approx(direct).epsilon(1e-9));
  st = fedwad_round(std::move(st), mu, nu, 0.5, 2.0);
  CHECK(st.bound == doctest::Approx(direct).epsilon(1e-9));
}

TEST_CASE("identical parties drive the bound to zero") {
  Rng rng(22);
  auto mu = gaussian_cloud(rng, 8, 2);
  FedConfig cfg;
  cfg.max_rounds = 80;
  cfg.seed = 5;
  cfg.tol = 1e-9;
  auto rep = fedwad_distance(mu, mu, cfg);
  CHECK(rep.estimate < cfg.tol);
  for (std::size_t k = 1; k < rep.rounds.size(); ++k)
    CHECK(rep.rounds[k].bound <= rep.rounds[k - 1].bound + 1e-9);
}

TEST_CASE("fedwad on gaussian clouds: sandwich, monotonicity, shrinking gap") {
  Rng rng(23);
  auto mu = gaussian_cloud(rng, 50, 2, 0.0);
  auto nu = gaussian_cloud(rng, 50, 2, 3.0);
  const double direct = wasserstein(mu, nu, 2.0);

  FedConfig cfg;
  cfg.max_rounds = 20;
  cfg.seed = 99;
  cfg.tol = 0.0;  // run all rounds
  auto rep = fedwad_distance(mu, nu, cfg);

  CHECK(rep.estimate >= direct - 1e-9);
  REQUIRE(rep.rounds.size() >= 2);
  double gap_first = rep.rounds[1].bound - direct;
  double gap_last = rep.rounds.back().bound - direct;
  CHECK(gap_last >= -1e-9);
  CHECK(gap_last <= 0.5 * gap_first);
  for (std::size_t k = 1; k < rep.rounds.size(); ++k) {
    CHECK(rep.rounds[k].bound <= rep.rounds[k - 1].bound + 1e-9);
    CHECK(rep.rounds[k].bound >= direct - 1e-9);
  }
}

TEST_CASE("per-party t values may differ") {
  Rng rng(24);
  auto mu = gaussian_cloud(rng, 10, 2);
  auto nu = gaussian_cloud(rng, 10, 2, 2.0);
  FedState st = fedwad_init(mu, nu, random_gamma(10, 2, 7), 2.0);
  st = fedwad_round(std::move(st), mu, nu, 0.3, 0.7, 2.0);
  CHECK(st.eta_mu.t == doctest::Approx(0.3));
  CHECK(st.eta_nu.t == doctest::Approx(0.7));
  CHECK(st.bound >= wasserstein(mu, nu, 2.0) - 1e-9);
}

TEST_CASE("gamma keeps its initial support size on imbalanced parties") {
  Rng rng(25);
  auto mu = gaussian_cloud(rng, 30, 2);
  auto nu = gaussian_cloud(rng, 12, 2, 1.0);
  FedConfig cfg;
  cfg.max_rounds = 4;
  cfg.seed = 1;
  cfg.tol = 0.0;
  FedState st = fedwad_init(mu, nu, cfg);
  const std::size_t g = st.gamma.size();
  CHECK(g == 12);
  for (int k = 0; k < 3; ++k) {
    st = fedwad_round(std::move(st), mu, nu, 0.5, 2.0);
    CHECK(st.gamma.size() == g);
    CHECK(st.eta_mu.measure.size() == mu.size());
    CHECK(st.eta_nu.measure.size() == g);
  }
}

TEST_CASE("report is reproducible for a fixed seed") {
  Rng rng(26);
  auto mu = gaussian_cloud(rng, 15, 3);
  auto nu = gaussian_cloud(rng, 15, 3, 1.0);
  FedConfig cfg;
  cfg.max_rounds = 5;
  cfg.seed = 31337;
  auto a = fedwad_distance(mu, nu, cfg);
  auto b = fedwad_distance(mu, nu, cfg);
  CHECK(a.estimate == b.estimate);
  REQUIRE(a.rounds.size() == b.rounds.size());
  for (std::size_t k = 0; k < a.rounds.size(); ++k)
    CHECK(a.rounds[k].bound == b.rounds[k].bound);
  CHECK(a.artifacts.at("gamma") == b.artifacts.at("gamma"));
}
