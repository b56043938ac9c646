#include "triwad/valuation.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <numeric>

#include "triwad/error.hpp"

namespace triwad {

namespace {

using RowMat =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

}  // namespace

AugmentedDataset augment_labeled(const LabeledDataset& ds) {
  ds.validate(/*need_pairs=*/true);
  const std::size_t d = ds.features.dim();
  const std::size_t rows = ds.size();
  const int classes = ds.num_classes();

  AugmentedDataset out;
  out.feature_dim = d;
  out.label_block_dim = d + d * d;
  out.class_stats.resize(classes);

  for (int c = 0; c < classes; ++c) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < rows; ++i)
      if (ds.labels[i] == c) members.push_back(i);
    const double inv = 1.0 / static_cast<double>(members.size());

    Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
    for (std::size_t i : members)
      mean += Eigen::Map<const Eigen::VectorXd>(ds.features.row(i).data(), d);
    mean *= inv;

    RowMat cov = RowMat::Zero(d, d);
    for (std::size_t i : members) {
      Eigen::VectorXd centered =
          Eigen::Map<const Eigen::VectorXd>(ds.features.row(i).data(), d) -
          mean;
      cov += centered * centered.transpose();
    }
    cov *= inv;  // population covariance

    Eigen::SelfAdjointEigenSolver<RowMat> eig(cov);
    Eigen::VectorXd vals = eig.eigenvalues();
    const double scale = std::max(1.0, vals.cwiseAbs().maxCoeff());
    for (Eigen::Index k = 0; k < vals.size(); ++k) {
      if (vals[k] < 0.0) {
        if (vals[k] < -1e-10 * scale) out.repaired = true;
        vals[k] = 0.0;
      }
    }
    RowMat root = eig.eigenvectors() * vals.cwiseSqrt().asDiagonal() *
                  eig.eigenvectors().transpose();

    ClassStats& st = out.class_stats[c];
    st.mean.assign(mean.data(), mean.data() + d);
    st.cov.assign(cov.data(), cov.data() + d * d);
    st.cov_sqrt.assign(root.data(), root.data() + d * d);
  }

  DataMatrix aug(rows, d + out.label_block_dim);
  for (std::size_t i = 0; i < rows; ++i) {
    const ClassStats& st = out.class_stats[ds.labels[i]];
    for (std::size_t k = 0; k < d; ++k) aug(i, k) = ds.features(i, k);
    for (std::size_t k = 0; k < d; ++k) aug(i, d + k) = st.mean[k];
    for (std::size_t k = 0; k < d * d; ++k) aug(i, 2 * d + k) = st.cov_sqrt[k];
  }
  out.matrix = std::move(aug);
  return out;
}

double label_distance(const ClassStats& a, const ClassStats& b) {
  if (a.mean.size() != b.mean.size())
    throw Error("class stats dimension mismatch");
  double mean_gap = 0.0;
  for (std::size_t k = 0; k < a.mean.size(); ++k) {
    const double diff = a.mean[k] - b.mean[k];
    mean_gap += diff * diff;
  }
  double cov_gap = 0.0;
  for (std::size_t k = 0; k < a.cov.size(); ++k) {
    const double diff = a.cov[k] - b.cov[k];
    cov_gap += diff * diff;
  }
  return mean_gap + cov_gap;
}

ValueScores calibrated_gradients(const OTResult& ot, Side side) {
  const std::vector<double>& duals =
      side == Side::Row ? ot.dual_row : ot.dual_col;
  const std::size_t m = duals.size();
  if (m < 2) throw Error("calibrated gradients need at least two duals");

  const double sum = std::accumulate(duals.begin(), duals.end(), 0.0);
  const double denom = static_cast<double>(m - 1);
  ValueScores out;
  out.side = side;
  out.scores.resize(m);
  for (std::size_t l = 0; l < m; ++l)
    out.scores[l] = duals[l] - (sum - duals[l]) / denom;

  out.ranking.resize(m);
  std::iota(out.ranking.begin(), out.ranking.end(), 0);
  std::stable_sort(out.ranking.begin(), out.ranking.end(),
                   [&](std::size_t a, std::size_t b) {
                     return out.scores[a] < out.scores[b];
                   });
  return out;
}

std::vector<std::size_t> detect_noisy(const DiscreteMeasure& side_measure,
                                      const DiscreteMeasure& ref_measure,
                                      double p, const DetectionRule& rule) {
  const OTResult ot = solve_ot(side_measure, ref_measure, p);
  const ValueScores scores = calibrated_gradients(ot, Side::Row);

  std::vector<std::size_t> desc(scores.ranking.rbegin(),
                                scores.ranking.rend());
  std::vector<std::size_t> flagged;
  if (rule.kind == DetectionRule::Kind::TopK) {
    const std::size_t k = std::min(rule.k, desc.size());
    flagged.assign(desc.begin(), desc.begin() + k);
  } else {
    for (std::size_t idx : desc) {
      if (scores.scores[idx] > rule.threshold) flagged.push_back(idx);
    }
  }
  return flagged;
}

std::vector<double> contribution_scores(
    const std::vector<DiscreteMeasure>& clients,
    const DiscreteMeasure& validation, const TriangleConfig& cfg,
    std::uint64_t seed) {
  if (clients.empty()) throw ConfigError("no clients to score");

  // One shared seed: equal-sized clients interpolate against the same
  // defense, so distances are comparable across clients.
  std::vector<std::future<double>> tasks;
  tasks.reserve(clients.size());
  for (const DiscreteMeasure& client : clients) {
    tasks.push_back(std::async(std::launch::async, [&client, &validation, &cfg,
                                                    seed] {
      return run_triangle_session(client, validation, cfg, seed).estimate;
    }));
  }
  std::vector<double> dist;
  dist.reserve(clients.size());
  for (auto& task : tasks) dist.push_back(task.get());

  const auto [lo, hi] = std::minmax_element(dist.begin(), dist.end());
  const double range = *hi - *lo;
  std::vector<double> scores(dist.size(), 1.0);
  if (range > 1e-12 * std::max(1.0, *hi)) {
    for (std::size_t i = 0; i < dist.size(); ++i)
      scores[i] = (*hi - dist[i]) / range;
  }
  return scores;
}

double matching_rate(const DiscreteMeasure& query, const DataMatrix& vocab,
                     const std::vector<std::string>& vocab_words,
                     const std::set<std::string>& raw_words) {
  if (vocab.rows() == 0) throw Error("empty vocabulary");
  if (vocab.rows() != vocab_words.size())
    throw Error("vocabulary rows do not match word count");
  if (vocab.dim() != query.dim())
    throw Error("embedding dimension mismatch");

  const std::size_t d = vocab.dim();
  std::size_t hits = 0;
  for (std::size_t i = 0; i < query.size(); ++i) {
    const auto x = query.point(i);
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_j = 0;
    for (std::size_t j = 0; j < vocab.rows(); ++j) {
      double sq = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        const double diff = x[k] - vocab(j, k);
        sq += diff * diff;
      }
      if (sq < best) {
        best = sq;
        best_j = j;
      }
    }
    if (raw_words.count(vocab_words[best_j])) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(query.size());
}

}  // namespace triwad
