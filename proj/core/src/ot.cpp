#include "triwad/ot.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>

#include "triwad/error.hpp"
#include "triwad/network_simplex.hpp"

namespace triwad {

namespace {
std::atomic<std::uint64_t> g_solve_count{0};
}

std::uint64_t ot_solve_count() { return g_solve_count.load(); }

std::size_t OTResult::nonzero_count(double tol) const {
  return static_cast<std::size_t>(
      std::count_if(plan.begin(), plan.end(),
                    [&](double v) { return std::abs(v) > tol; }));
}

CostMatrix cost_matrix(const DiscreteMeasure& src, const DiscreteMeasure& dst,
                       double p) {
  if (src.dim() != dst.dim())
    throw Error("dimension mismatch: " + std::to_string(src.dim()) + " vs " +
                std::to_string(dst.dim()));
  if (!(p >= 1.0)) throw Error("exponent p must be >= 1");

  CostMatrix c;
  c.m = src.size();
  c.n = dst.size();
  c.p = p;
  c.entries.resize(c.m * c.n);
  const std::size_t d = src.dim();
  const double* xs = src.support().values().data();
  const double* ys = dst.support().values().data();
  for (std::size_t i = 0; i < c.m; ++i) {
    const double* x = xs + i * d;
    for (std::size_t j = 0; j < c.n; ++j) {
      const double* y = ys + j * d;
      double sq = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        const double diff = x[k] - y[k];
        sq += diff * diff;
      }
      double dist = std::sqrt(sq);
      c.entries[i * c.n + j] = p == 2.0 ? sq : std::pow(dist, p);
    }
  }
  return c;
}

OTResult solve_ot(const DiscreteMeasure& src, const DiscreteMeasure& dst,
                  const CostMatrix& cost) {
  if (cost.m != src.size() || cost.n != dst.size())
    throw Error("cost matrix does not match measure sizes");

  g_solve_count.fetch_add(1, std::memory_order_relaxed);

  auto sol = NetworkSimplex::solve(src.weights(), dst.weights(), cost.entries);

  OTResult r;
  r.m = cost.m;
  r.n = cost.n;
  r.p = cost.p;
  r.plan = std::move(sol.flow);
  r.iterations = sol.iterations;

  // Map simplex potentials to OT duals (f_i = -pi_i, g_j = pi_j), then
  // fix the additive gauge so the first target potential is zero.
  const double gauge = sol.pi_target.empty() ? 0.0 : sol.pi_target[0];
  r.dual_row.resize(r.m);
  r.dual_col.resize(r.n);
  for (std::size_t i = 0; i < r.m; ++i) r.dual_row[i] = -sol.pi_source[i] + gauge;
  for (std::size_t j = 0; j < r.n; ++j) r.dual_col[j] = sol.pi_target[j] - gauge;

  double total = 0.0;
  for (std::size_t k = 0; k < r.plan.size(); ++k)
    total += r.plan[k] * cost.entries[k];
  r.cost = total;
  return r;
}

OTResult solve_ot(const DiscreteMeasure& src, const DiscreteMeasure& dst,
                  double p) {
  return solve_ot(src, dst, cost_matrix(src, dst, p));
}

double wasserstein(const DiscreteMeasure& src, const DiscreteMeasure& dst,
                   double p) {
  const OTResult r = solve_ot(src, dst, p);
  return std::pow(std::max(r.cost, 0.0), 1.0 / p);
}

OTResult brute_force_ot(const DiscreteMeasure& src, const DiscreteMeasure& dst,
                        const CostMatrix& cost) {
  const std::size_t m = src.size();
  if (m != dst.size())
    throw Error("brute-force oracle requires equal support sizes");
  if (m > 8) throw Error("brute-force oracle capped at 8 points");
  if (!src.has_uniform_weights() || !dst.has_uniform_weights())
    throw Error("brute-force oracle requires uniform weights");

  std::vector<std::size_t> perm(m);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<std::size_t> best = perm;
  double best_cost = std::numeric_limits<double>::infinity();
  do {
    double c = 0.0;
    for (std::size_t i = 0; i < m; ++i) c += cost.at(i, perm[i]);
    if (c < best_cost) {
      best_cost = c;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));

  OTResult r;
  r.m = m;
  r.n = m;
  r.p = cost.p;
  r.plan.assign(m * m, 0.0);
  const double w = 1.0 / static_cast<double>(m);
  for (std::size_t i = 0; i < m; ++i) r.plan[i * m + best[i]] = w;
  r.cost = best_cost * w;
  return r;
}

}  // namespace triwad
