#include "triwad/measure.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "triwad/error.hpp"

namespace triwad {

namespace {
constexpr double kWeightSumTol = 1e-12;
}

DiscreteMeasure::DiscreteMeasure(DataMatrix support, std::vector<double> weights)
    : support_(std::move(support)), weights_(std::move(weights)) {
  support_.validate();
  if (weights_.size() != support_.rows())
    throw Error("weight count does not match support rows");
  double sum = 0.0;
  for (double w : weights_) {
    if (!(w >= 0.0)) throw Error("negative or NaN weight");
    sum += w;
  }
  if (std::abs(sum - 1.0) > kWeightSumTol)
    throw Error("weights sum to " + std::to_string(sum) + ", expected 1");
}

DiscreteMeasure DiscreteMeasure::uniform(DataMatrix support) {
  support.validate();
  const std::size_t n = support.rows();
  std::vector<double> w(n, 1.0 / static_cast<double>(n));
  // Exact renormalization of the last weight keeps the 1e-12 invariant
  // even when 1/n is not representable.
  double partial = std::accumulate(w.begin(), w.end() - 1, 0.0);
  w.back() = 1.0 - partial;
  return DiscreteMeasure(std::move(support), std::move(w));
}

bool DiscreteMeasure::has_uniform_weights(double tol) const {
  if (weights_.empty()) return false;
  const double expect = 1.0 / static_cast<double>(weights_.size());
  return std::all_of(weights_.begin(), weights_.end(),
                     [&](double w) { return std::abs(w - expect) <= tol; });
}

DiscreteMeasure uniform_measure(DataMatrix m) {
  return DiscreteMeasure::uniform(std::move(m));
}

LabeledDataset::LabeledDataset(DataMatrix f, std::vector<int> l)
    : features(std::move(f)), labels(std::move(l)) {
  if (labels.size() != features.rows())
    throw Error("label count does not match feature rows");
}

int LabeledDataset::num_classes() const {
  int max_label = -1;
  for (int y : labels) max_label = std::max(max_label, y);
  return max_label + 1;
}

void LabeledDataset::validate(bool need_pairs) const {
  features.validate();
  const int classes = num_classes();
  if (classes <= 0) throw Error("dataset has no labels");
  std::vector<int> count(classes, 0);
  for (int y : labels) {
    if (y < 0 || y >= classes) throw Error("label out of range");
    ++count[y];
  }
  for (int c = 0; c < classes; ++c) {
    if (count[c] == 0)
      throw Error("class " + std::to_string(c) + " is empty");
    if (need_pairs && count[c] < 2)
      throw Error("class " + std::to_string(c) +
                  " has a single member; need >= 2 for covariance");
  }
}

}  // namespace triwad
