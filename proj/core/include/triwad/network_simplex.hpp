#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace triwad {

/// Exact solver for the dense transportation problem
///
///   min sum_ij c[i*n+j] * x[i][j]
///   s.t. sum_j x[i][j] = supply[i], sum_i x[i][j] = demand[j], x >= 0,
///
/// as a network simplex over the full bipartite graph with an artificial
/// root, block-search pivoting, and spanning-tree updates. The scan order
/// is a pure function of the input, so degenerate optima resolve to the
/// same vertex on every run.
class NetworkSimplex {
public:
  struct Options {
    // 0 means "choose from problem size".
    std::uint64_t max_iterations = 0;
    // Entering-arc threshold, relative to machine epsilon.
    double epsilon_small_factor = 1e3;
    // Supply-balance and feasibility slack, relative to machine epsilon.
    double epsilon_large_factor = 1e6;
  };

  struct Solution {
    std::vector<double> flow;       // m*n row-major arc flows
    std::vector<double> pi_source;  // node potentials, sources
    std::vector<double> pi_target;  // node potentials, targets
    double cost = 0.0;
    std::uint64_t iterations = 0;
  };

  // Throws SolverError on imbalanced supplies or iteration-cap overrun.
  static Solution solve(std::span<const double> supplies,
                        std::span<const double> demands,
                        std::span<const double> costs,
                        const Options& options);

  static Solution solve(std::span<const double> supplies,
                        std::span<const double> demands,
                        std::span<const double> costs) {
    return solve(supplies, demands, costs, Options{});
  }
};

}  // namespace triwad
