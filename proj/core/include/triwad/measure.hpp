#pragma once

#include <cstddef>
#include <vector>

#include "triwad/matrix.hpp"

namespace triwad {

/// Weighted point cloud: support matrix plus probability weights.
/// Weights are non-negative and sum to 1 within 1e-12. Immutable after
/// construction; safe to share across concurrent readers.
class DiscreteMeasure {
public:
  DiscreteMeasure() = default;
  DiscreteMeasure(DataMatrix support, std::vector<double> weights);

  static DiscreteMeasure uniform(DataMatrix support);

  const DataMatrix& support() const { return support_; }
  const std::vector<double>& weights() const { return weights_; }
  std::size_t size() const { return support_.rows(); }
  std::size_t dim() const { return support_.dim(); }
  bool empty() const { return support_.empty(); }

  double weight(std::size_t i) const { return weights_[i]; }
  std::span<const double> point(std::size_t i) const { return support_.row(i); }

  bool has_uniform_weights(double tol = 1e-12) const;

  bool operator==(const DiscreteMeasure& other) const = default;

private:
  DataMatrix support_;
  std::vector<double> weights_;
};

// Uniform empirical measure: every row gets weight 1/rows.
DiscreteMeasure uniform_measure(DataMatrix m);

/// Feature matrix plus integer class ids, one per row.
struct LabeledDataset {
  DataMatrix features;
  std::vector<int> labels;

  LabeledDataset() = default;
  LabeledDataset(DataMatrix f, std::vector<int> l);

  std::size_t size() const { return features.rows(); }
  int num_classes() const;

  // Throws Error unless every label is in [0, num_classes) and, when
  // `need_pairs` is set, every class has at least 2 members.
  void validate(bool need_pairs = false) const;
};

}  // namespace triwad
