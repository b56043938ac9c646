#pragma once

#include <cstdint>
#include <vector>

#include "triwad/measure.hpp"

namespace triwad {

/// Seeded gaussian-mixture generator with optional label flips and
/// feature corruption. ratio * size rounds to an exact corruption
/// count; the true corrupted/flipped index sets are returned so
/// detection experiments have ground truth.
struct SyntheticSpec {
  std::size_t size = 100;
  std::size_t dim = 32;
  int num_classes = 1;
  double class_separation = 3.0;
  double center = 0.0;  // added to every coordinate
  double scale = 1.0;   // within-class stddev
  double label_flip_ratio = 0.0;
  double feature_noise_ratio = 0.0;
  double feature_noise_sigma = 10.0;
  std::uint64_t seed = 0;
};

struct SyntheticData {
  LabeledDataset dataset;
  std::vector<std::size_t> corrupted;
  std::vector<std::size_t> flipped;

  DiscreteMeasure measure() const {
    return uniform_measure(dataset.features);
  }
};

SyntheticData gen_synthetic(const SyntheticSpec& spec);

}  // namespace triwad
