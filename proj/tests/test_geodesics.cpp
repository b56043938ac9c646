#include <doctest.h>

#include <cmath>

#include "test_util.hpp"
#include "triwad/geodesics.hpp"

using namespace triwad;
using testutil::gaussian_cloud;
using testutil::points_1d;

TEST_CASE("barycentric map") {
  SUBCASE("singleton maps to the single target") {
    auto src = points_1d({0});
    auto dst = points_1d({4});
    auto img = barycentric_map(solve_ot(src, dst, 2.0), src, dst);
    CHECK(img(0, 0) == doctest::Approx(4.0));
  }
  SUBCASE("monotone permutation plan maps to matched targets") {
    auto src = points_1d({0, 4});
    auto dst = points_1d({1, 5});
    auto img = barycentric_map(solve_ot(src, dst, 2.0), src, dst);
    CHECK(img(0, 0) == doctest::Approx(1.0));
    CHECK(img(1, 0) == doctest::Approx(5.0));
  }
  SUBCASE("identity plan leaves supports unchanged") {
    Rng rng(8);
    auto mu = gaussian_cloud(rng, 7, 2);
    auto img = barycentric_map(solve_ot(mu, mu, 2.0), mu, mu);
    for (std::size_t i = 0; i < mu.size(); ++i)
      for (std::size_t k = 0; k < mu.dim(); ++k)
        CHECK(img(i, k) == doctest::Approx(mu.support()(i, k)).epsilon(1e-12));
  }
}

TEST_CASE("interpolate endpoints and midpoints") {
  SUBCASE("t=0 returns the source exactly") {
    Rng rng(9);
    auto mu = gaussian_cloud(rng, 5, 3);
    auto nu = gaussian_cloud(rng, 5, 3, 2.0);
    auto im = interpolate(mu, nu, 0.0);
    CHECK(im.measure.support() == mu.support());
    CHECK(im.measure.weights() == mu.weights());
  }
  SUBCASE("point masses meet in the middle") {
    auto im = interpolate(points_1d({0}), points_1d({2}), 0.5);
    CHECK(im.measure.support()(0, 0) == doctest::Approx(1.0));
  }
  SUBCASE("two-point monotone instance at t=0.5") {
    auto im = interpolate(points_1d({0, 4}), points_1d({1, 5}), 0.5);
    CHECK(im.measure.support()(0, 0) == doctest::Approx(0.5));
    CHECK(im.measure.support()(1, 0) == doctest::Approx(4.5));
  }
  SUBCASE("t=1 lands on the barycentric image") {
    Rng rng(10);
    auto mu = gaussian_cloud(rng, 6, 2);
    auto nu = gaussian_cloud(rng, 6, 2, 1.0);
    auto im = interpolate(mu, nu, 1.0);
    CHECK(wasserstein(im.measure, nu, 2.0) == doctest::Approx(0.0));
  }
  SUBCASE("t outside [0,1] throws") {
    CHECK_THROWS(interpolate(points_1d({0}), points_1d({1}), 1.5));
  }
}

TEST_CASE("geodesic metric split for permutation plans") {
  Rng rng(11);
  for (int rep = 0; rep < 20; ++rep) {
    auto mu = gaussian_cloud(rng, 8, 2, rng.uniform(-1, 1));
    auto nu = gaussian_cloud(rng, 8, 2, rng.uniform(1, 3));
    auto image = interpolate(mu, nu, 1.0).measure;
    const double total = wasserstein(mu, image, 2.0);
    for (double t : {0.25, 0.5, 0.75}) {
      auto gt = interpolate(mu, nu, t).measure;
      CHECK(wasserstein(mu, gt, 2.0) ==
            doctest::Approx(t * total).epsilon(1e-7));
      CHECK(wasserstein(gt, image, 2.0) ==
            doctest::Approx((1 - t) * total).epsilon(1e-7));
    }
  }
}

TEST_CASE("geodesic gap") {
  SUBCASE("interpolants close the triangle inequality") {
    Rng rng(12);
    for (int rep = 0; rep < 10; ++rep) {
      auto a = gaussian_cloud(rng, 10, 3, -1.0);
      auto b = gaussian_cloud(rng, 10, 3, 2.0);
      const double w = wasserstein(a, b, 2.0);
      for (double t : {0.1, 0.3, 0.5, 0.7, 0.9}) {
        auto g = interpolate(a, b, t).measure;
        const double gap = geodesic_gap(a, b, g, 2.0);
        CHECK(gap >= -1e-9);
        CHECK(gap <= 1e-7 * w);
      }
    }
  }
  SUBCASE("degenerate endpoint has zero gap") {
    auto a = points_1d({0});
    auto b = points_1d({4});
    CHECK(geodesic_gap(a, b, a, 2.0) == doctest::Approx(0.0));
  }
  SUBCASE("off-segment point masses add the detour") {
    CHECK(geodesic_gap(points_1d({0}), points_1d({4}), points_1d({10}), 2.0) ==
          doctest::Approx(12.0));
  }
}
