#pragma once

#include <cstdint>
#include <vector>

#include "triwad/measure.hpp"

namespace triwad {

/// Pairwise ground costs d(x_i, x'_j)^p for a source/target pair.
struct CostMatrix {
  std::size_t m = 0;
  std::size_t n = 0;
  double p = 2.0;
  std::vector<double> entries;  // m*n row-major

  double at(std::size_t i, std::size_t j) const { return entries[i * n + j]; }
};

/// Optimal plan, dual potentials and transport cost of one exact solve.
///
/// Invariants: plan row sums match source weights and column sums match
/// target weights within 1e-9; cost equals the dual objective within
/// 1e-7 * max(1, cost). Duals are normalized so dual_col[0] == 0; they
/// are empty when the producing routine does not certify optimality
/// (the brute-force oracle).
struct OTResult {
  std::size_t m = 0;
  std::size_t n = 0;
  std::vector<double> plan;      // m*n row-major
  std::vector<double> dual_row;  // f* on the source, size m
  std::vector<double> dual_col;  // potentials on the target, size n
  double cost = 0.0;             // <C, P>
  double p = 2.0;
  std::uint64_t iterations = 0;

  double plan_at(std::size_t i, std::size_t j) const { return plan[i * n + j]; }
  std::size_t nonzero_count(double tol = 0.0) const;
};

// entries[i][j] = ||x_i - x'_j||^p, Euclidean ground metric.
CostMatrix cost_matrix(const DiscreteMeasure& src, const DiscreteMeasure& dst,
                       double p);

// Exact optimal transport via network simplex. The plan is a basic
// feasible solution (a vertex), so equal-size uniform problems always
// return a scaled permutation.
OTResult solve_ot(const DiscreteMeasure& src, const DiscreteMeasure& dst,
                  const CostMatrix& cost);

OTResult solve_ot(const DiscreteMeasure& src, const DiscreteMeasure& dst,
                  double p);

// W_p(src, dst) = (min <C,P>)^(1/p).
double wasserstein(const DiscreteMeasure& src, const DiscreteMeasure& dst,
                   double p);

// Exhaustive permutation oracle for uniform equal-size instances, m <= 8.
// Returns the minimum matching as a plan; duals are left empty.
OTResult brute_force_ot(const DiscreteMeasure& src, const DiscreteMeasure& dst,
                        const CostMatrix& cost);

// Process-wide count of exact solves, used to check protocol round
// complexity. Monotone; read before/after the section under test.
std::uint64_t ot_solve_count();

}  // namespace triwad
