#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "test_util.hpp"
#include "triwad/valuation.hpp"

using namespace triwad;
using testutil::gaussian_cloud;
using testutil::points_1d;

TEST_CASE("augmentation of a two-point class") {
  // Class {0, 2}: population mean 1, population variance 1, root 1.
  LabeledDataset ds(DataMatrix(2, 1, {0.0, 2.0}), {0, 0});
  auto aug = augment_labeled(ds);
  CHECK(aug.feature_dim == 1);
  CHECK(aug.label_block_dim == 2);
  CHECK(aug.matrix.dim() == 3);
  CHECK(aug.matrix(0, 0) == doctest::Approx(0.0));
  CHECK(aug.matrix(0, 1) == doctest::Approx(1.0));
  CHECK(aug.matrix(0, 2) == doctest::Approx(1.0));
  CHECK(aug.matrix(1, 0) == doctest::Approx(2.0));
  CHECK(aug.matrix(1, 1) == doctest::Approx(1.0));
  CHECK(aug.matrix(1, 2) == doctest::Approx(1.0));
  CHECK_FALSE(aug.repaired);
}

TEST_CASE("degenerate class covariance is zero") {
  LabeledDataset ds(DataMatrix(3, 2, {5, 5, 5, 5, 5, 5}), {0, 0, 0});
  auto aug = augment_labeled(ds);
  for (std::size_t k = 0; k < 4; ++k)
    CHECK(aug.class_stats[0].cov_sqrt[k] == doctest::Approx(0.0));
  CHECK(aug.matrix(0, 2) == doctest::Approx(5.0));  // mean block
}

TEST_CASE("equal features across classes collapse to the feature distance") {
  // Two classes over identical feature distributions: the label blocks
  // coincide, so augmented pairwise distances reduce to ||x - x'||.
  DataMatrix f(4, 1, {0.0, 2.0, 0.0, 2.0});
  LabeledDataset ds(f, {0, 0, 1, 1});
  auto aug = augment_labeled(ds);
  CHECK(label_distance(aug.class_stats[0], aug.class_stats[1]) ==
        doctest::Approx(0.0));
  for (std::size_t k = 1; k < aug.matrix.dim(); ++k)
    CHECK(aug.matrix(0, k) == doctest::Approx(aug.matrix(2, k)));
}

TEST_CASE("augmentation requires pairs") {
  LabeledDataset ds(DataMatrix(3, 1, {0, 1, 2}), {0, 0, 1});
  CHECK_THROWS(augment_labeled(ds));
}

TEST_CASE("label distance formula") {
  ClassStats a{{0.0}, {1.0}, {1.0}};
  ClassStats b{{10.0}, {1.0}, {1.0}};
  CHECK(label_distance(a, b) == doctest::Approx(100.0));
  CHECK(label_distance(a, a) == doctest::Approx(0.0));
  ClassStats c{{0.0}, {0.0}, {0.0}};
  ClassStats d{{0.0}, {1.0}, {1.0}};
  CHECK(label_distance(c, d) == doctest::Approx(1.0));
}

TEST_CASE("class id permutation leaves pairwise label distances unchanged") {
  Rng rng(41);
  DataMatrix f(12, 2);
  for (auto& v : f.mutable_values()) v = rng.gaussian();
  std::vector<int> labels = {0, 0, 0, 0, 1, 1, 1, 1, 2, 2, 2, 2};
  auto aug = augment_labeled(LabeledDataset(f, labels));
  std::vector<int> swapped;
  for (int y : labels) swapped.push_back((y + 1) % 3);
  auto aug2 = augment_labeled(LabeledDataset(f, swapped));
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      CHECK(label_distance(aug.class_stats[a], aug.class_stats[b]) ==
            doctest::Approx(label_distance(aug2.class_stats[(a + 1) % 3],
                                           aug2.class_stats[(b + 1) % 3])));
}

TEST_CASE("calibrated gradients") {
  SUBCASE("two-point arithmetic") {
    OTResult ot;
    ot.dual_row = {0.3, 0.7};
    auto v = calibrated_gradients(ot, Side::Row);
    CHECK(v.scores[0] == doctest::Approx(-0.4));
    CHECK(v.scores[1] == doctest::Approx(0.4));
  }
  SUBCASE("equal duals give zero scores") {
    OTResult ot;
    ot.dual_row = {1.7, 1.7, 1.7, 1.7};
    for (double s : calibrated_gradients(ot, Side::Row).scores)
      CHECK(s == doctest::Approx(0.0));
  }
  SUBCASE("gauge invariance at machine roundoff") {
    Rng rng(42);
    auto mu = gaussian_cloud(rng, 10, 2);
    auto nu = gaussian_cloud(rng, 12, 2, 1.0);
    auto ot = solve_ot(mu, nu, 2.0);
    auto base = calibrated_gradients(ot, Side::Row);
    OTResult shifted = ot;
    for (auto& f : shifted.dual_row) f += 5.25;
    for (auto& g : shifted.dual_col) g -= 5.25;
    auto moved = calibrated_gradients(shifted, Side::Row);
    for (std::size_t i = 0; i < base.scores.size(); ++i)
      CHECK(std::abs(base.scores[i] - moved.scores[i]) <=
            1e-12 * std::max(1.0, std::abs(base.scores[i])));
  }
  SUBCASE("scores sum to zero") {
    Rng rng(43);
    for (int rep = 0; rep < 20; ++rep) {
      auto mu = gaussian_cloud(rng, 3 + rng.index(20), 3);
      auto nu = gaussian_cloud(rng, 3 + rng.index(20), 3, 1.0);
      auto ot = solve_ot(mu, nu, 2.0);
      for (Side side : {Side::Row, Side::Col}) {
        auto v = calibrated_gradients(ot, side);
        double sum = 0.0;
        for (double s : v.scores) sum += s;
        CHECK(std::abs(sum) <= 1e-9);
      }
    }
  }
  SUBCASE("single datum is rejected") {
    OTResult ot;
    ot.dual_row = {1.0};
    CHECK_THROWS(calibrated_gradients(ot, Side::Row));
  }
}

TEST_CASE("calibrated gradients match mass-perturbation finite differences") {
  // Needs non-degenerate optima (unique duals); generic random weights
  // give that almost surely, whereas uniform weights with commensurate
  // sizes do not.
  Rng rng(44);
  int checked = 0;
  for (int rep = 0; rep < 12; ++rep) {
    const std::size_t m = 4 + rng.index(6);
    const std::size_t n = 4 + rng.index(6);
    auto mu = testutil::weighted_cloud(rng, m, 2, rng.uniform(-1, 1));
    auto nu = testutil::weighted_cloud(rng, n, 2, rng.uniform(-1, 1));
    auto ot = solve_ot(mu, nu, 2.0);
    auto scores = calibrated_gradients(ot, Side::Row);

    const double delta = 1e-4;
    for (std::size_t l = 0; l < m; ++l) {
      auto perturbed = [&](double eps) {
        std::vector<double> w = mu.weights();
        for (std::size_t j = 0; j < m; ++j)
          w[j] += j == l ? eps : -eps / static_cast<double>(m - 1);
        DiscreteMeasure shifted(mu.support(), std::move(w));
        return solve_ot(shifted, nu, 2.0).cost;
      };
      const double slope = (perturbed(delta) - perturbed(-delta)) / (2 * delta);
      CHECK(std::abs(slope - scores.scores[l]) <= 1e-2);
      ++checked;
    }
  }
  CHECK(checked >= 50);
}

TEST_CASE("noisy detection") {
  Rng rng(45);
  const std::size_t m = 100;
  const std::size_t d = 4;
  const std::size_t corrupt = 30;

  auto clean = gaussian_cloud(rng, m, d);
  DataMatrix noisy_support = clean.support();
  std::set<std::size_t> truth;
  while (truth.size() < corrupt) truth.insert(rng.index(m));
  for (std::size_t i : truth)
    for (std::size_t k = 0; k < d; ++k)
      noisy_support(i, k) += 10.0 + rng.gaussian();
  auto noisy = uniform_measure(std::move(noisy_support));
  auto reference = gaussian_cloud(rng, m, d);

  SUBCASE("oracle setting finds every corrupted point") {
    auto flagged = detect_noisy(noisy, reference, 2.0,
                                DetectionRule::top_k(corrupt));
    REQUIRE(flagged.size() == corrupt);
    for (std::size_t idx : flagged) CHECK(truth.count(idx) == 1);
  }
  SUBCASE("zero expected count gives an empty set") {
    CHECK(detect_noisy(noisy, reference, 2.0, DetectionRule::top_k(0)).empty());
  }
  SUBCASE("threshold rule returns scores above the cut") {
    auto flagged =
        detect_noisy(noisy, reference, 2.0, DetectionRule::above(50.0));
    CHECK(flagged.size() >= corrupt * 9 / 10);
    for (std::size_t idx : flagged) CHECK(truth.count(idx) == 1);
  }
}

TEST_CASE("contribution scores") {
  Rng rng(46);
  TriangleConfig cfg;
  cfg.defense_kind = DefenseKind::Ones;

  SUBCASE("identical clients score identically") {
    auto data = gaussian_cloud(rng, 20, 3);
    auto validation = gaussian_cloud(rng, 20, 3, 1.0);
    auto scores = contribution_scores({data, data, data}, validation, cfg, 3);
    for (double s : scores) CHECK(s == doctest::Approx(1.0));
  }
  SUBCASE("matching client scores 1, noise client scores 0") {
    auto validation = gaussian_cloud(rng, 30, 3);
    auto matching = validation;
    auto noise = gaussian_cloud(rng, 30, 3, 40.0);
    auto scores = contribution_scores({matching, noise}, validation, cfg, 4);
    CHECK(scores[0] == doctest::Approx(1.0));
    CHECK(scores[1] == doctest::Approx(0.0));
  }
  SUBCASE("scores fall as feature noise grows") {
    auto validation = gaussian_cloud(rng, 60, 4);
    std::vector<DiscreteMeasure> clients;
    for (double ratio : {0.0, 0.05, 0.10, 0.15, 0.20}) {
      auto base = gaussian_cloud(rng, 60, 4);
      DataMatrix s = base.support();
      const auto n_noisy = static_cast<std::size_t>(ratio * 60);
      for (std::size_t i = 0; i < n_noisy; ++i)
        for (std::size_t k = 0; k < 4; ++k) s(i, k) += 8.0 * rng.gaussian();
      clients.push_back(uniform_measure(std::move(s)));
    }
    auto scores = contribution_scores(clients, validation, cfg, 5);
    for (std::size_t i = 1; i < scores.size(); ++i)
      CHECK(scores[i] < scores[i - 1]);
  }
}

TEST_CASE("matching rate") {
  // Vocabulary of 4 well-separated 2-D embeddings.
  DataMatrix vocab(4, 2, {0, 0, 10, 0, 0, 10, 10, 10});
  std::vector<std::string> words = {"alpha", "beta", "gamma", "delta"};

  SUBCASE("supports sitting on raw-word rows match fully") {
    DataMatrix q(2, 2, {0, 0, 10, 0});
    CHECK(matching_rate(uniform_measure(q), vocab, words,
                        {"alpha", "beta"}) == doctest::Approx(1.0));
  }
  SUBCASE("far-away noise retrieves nothing relevant") {
    DataMatrix q(3, 2, {100, 100, -100, 50, 60, -80});
    CHECK(matching_rate(uniform_measure(q), vocab, words, {"alpha"}) ==
          doctest::Approx(0.0));
  }
  SUBCASE("rate counts per support") {
    DataMatrix q(4, 2, {0, 0, 0.1, 0.2, 10, 0, 0, 10});
    // alpha, alpha, beta, gamma against raw words {alpha}.
    CHECK(matching_rate(uniform_measure(q), vocab, words, {"alpha"}) ==
          doctest::Approx(0.5));
  }
  SUBCASE("empty vocabulary throws") {
    CHECK_THROWS(matching_rate(uniform_measure(DataMatrix(1, 2)), DataMatrix(),
                               {}, {"x"}));
  }
}
