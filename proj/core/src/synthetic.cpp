#include "triwad/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "triwad/error.hpp"
#include "triwad/rng.hpp"

namespace triwad {

namespace {

// Seeded Fisher-Yates; used to pick corruption/flip index sets.
std::vector<std::size_t> shuffled_indices(std::size_t n, Rng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = n; i > 1; --i) {
    std::swap(idx[i - 1], idx[rng.index(i)]);
  }
  return idx;
}

}  // namespace

SyntheticData gen_synthetic(const SyntheticSpec& spec) {
  if (spec.size < 1 || spec.dim < 1) throw ConfigError("empty synthetic spec");
  if (spec.num_classes < 1) throw ConfigError("need at least one class");
  if (spec.label_flip_ratio < 0.0 || spec.label_flip_ratio > 1.0 ||
      spec.feature_noise_ratio < 0.0 || spec.feature_noise_ratio > 1.0)
    throw ConfigError("ratios must lie in [0,1]");

  const SeedStream seeds(spec.seed);

  // Class centers on seeded gaussian directions scaled to the requested
  // separation.
  Rng center_rng(seeds.derive("centers"));
  std::vector<std::vector<double>> centers(spec.num_classes,
                                           std::vector<double>(spec.dim, 0.0));
  if (spec.num_classes > 1) {
    for (auto& c : centers) {
      double norm = 0.0;
      for (auto& v : c) {
        v = center_rng.gaussian();
        norm += v * v;
      }
      norm = std::sqrt(std::max(norm, 1e-30));
      for (auto& v : c) v *= spec.class_separation / norm;
    }
  }

  Rng point_rng(seeds.derive("points"));
  DataMatrix features(spec.size, spec.dim);
  std::vector<int> labels(spec.size);
  for (std::size_t i = 0; i < spec.size; ++i) {
    const int y = static_cast<int>(i % spec.num_classes);
    labels[i] = y;
    for (std::size_t k = 0; k < spec.dim; ++k)
      features(i, k) =
          spec.center + centers[y][k] + spec.scale * point_rng.gaussian();
  }

  SyntheticData out;

  const auto flip_count = static_cast<std::size_t>(
      std::llround(spec.label_flip_ratio * static_cast<double>(spec.size)));
  if (flip_count > 0) {
    if (spec.num_classes < 2)
      throw ConfigError("label flips need at least two classes");
    Rng flip_rng(seeds.derive("flips"));
    auto order = shuffled_indices(spec.size, flip_rng);
    out.flipped.assign(order.begin(), order.begin() + flip_count);
    std::sort(out.flipped.begin(), out.flipped.end());
    for (std::size_t i : out.flipped) {
      const int offset =
          1 + static_cast<int>(flip_rng.index(
                  static_cast<std::size_t>(spec.num_classes - 1)));
      labels[i] = (labels[i] + offset) % spec.num_classes;
    }
  }

  const auto noise_count = static_cast<std::size_t>(std::llround(
      spec.feature_noise_ratio * static_cast<double>(spec.size)));
  if (noise_count > 0) {
    Rng noise_rng(seeds.derive("noise"));
    auto order = shuffled_indices(spec.size, noise_rng);
    out.corrupted.assign(order.begin(), order.begin() + noise_count);
    std::sort(out.corrupted.begin(), out.corrupted.end());
    for (std::size_t i : out.corrupted)
      for (std::size_t k = 0; k < spec.dim; ++k)
        features(i, k) += spec.feature_noise_sigma * noise_rng.gaussian();
  }

  out.dataset = LabeledDataset(std::move(features), std::move(labels));
  return out;
}

}  // namespace triwad
