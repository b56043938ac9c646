#pragma once

#include <set>
#include <string>
#include <vector>

#include "triwad/measure.hpp"
#include "triwad/ot.hpp"
#include "triwad/trianglewad.hpp"

namespace triwad {

enum class Side { Row, Col };

/// Per-class gaussian summary: population mean, population covariance
/// and the symmetric PSD square root of the covariance.
struct ClassStats {
  std::vector<double> mean;      // d
  std::vector<double> cov;       // d*d row-major
  std::vector<double> cov_sqrt;  // d*d row-major
};

/// Labeled rows lifted to [x; m_y; vec(cov_y^{1/2})] so labeled datasets
/// compare under a plain Euclidean ground metric.
struct AugmentedDataset {
  DataMatrix matrix;
  std::size_t feature_dim = 0;
  std::size_t label_block_dim = 0;  // feature_dim + feature_dim^2
  std::vector<ClassStats> class_stats;
  bool repaired = false;  // negative eigenvalues clamped to zero
};

// Requires every class to have at least two members.
AugmentedDataset augment_labeled(const LabeledDataset& ds);

// ||m_y - m_y'||^2 + ||cov_y - cov_y'||_F^2, the squared label-to-label
// ground distance between class-conditional gaussians.
double label_distance(const ClassStats& a, const ClassStats& b);

/// Calibrated gradients: score_l = f_l - mean_{j != l} f_j. Invariant
/// under the duals' additive gauge; scores sum to zero identically.
struct ValueScores {
  std::vector<double> scores;
  Side side = Side::Row;
  std::vector<std::size_t> ranking;  // indices sorted by ascending score
};

ValueScores calibrated_gradients(const OTResult& ot, Side side);

struct DetectionRule {
  enum class Kind { TopK, Threshold };
  Kind kind = Kind::TopK;
  std::size_t k = 0;
  double threshold = 0.0;

  static DetectionRule top_k(std::size_t k) {
    return DetectionRule{Kind::TopK, k, 0.0};
  }
  static DetectionRule above(double threshold) {
    return DetectionRule{Kind::Threshold, 0, threshold};
  }
};

// Solves OT between the two given measures and flags the highest
// calibrated gradients on the first one. Works both on raw data
// (oracle setting) and on interpolating measures (private setting);
// returned indices refer to the first measure's rows.
std::vector<std::size_t> detect_noisy(const DiscreteMeasure& side_measure,
                                      const DiscreteMeasure& ref_measure,
                                      double p, const DetectionRule& rule);

// Per-client one-round distance to the validation set, min-max
// normalized on negated distances: the closest client scores 1, the
// farthest 0, everyone when the distances tie scores 1.
std::vector<double> contribution_scores(
    const std::vector<DiscreteMeasure>& clients,
    const DiscreteMeasure& validation, const TriangleConfig& cfg,
    std::uint64_t seed);

// Fraction of query supports whose nearest vocabulary embedding
// retrieves a word present in the raw text.
double matching_rate(const DiscreteMeasure& query, const DataMatrix& vocab,
                     const std::vector<std::string>& vocab_words,
                     const std::set<std::string>& raw_words);

}  // namespace triwad
