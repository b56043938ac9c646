#include "triwad/geodesics.hpp"

#include <cmath>

#include "triwad/error.hpp"

namespace triwad {

DataMatrix barycentric_map(const OTResult& plan, const DiscreteMeasure& src,
                           const DiscreteMeasure& dst) {
  if (plan.m != src.size() || plan.n != dst.size())
    throw Error("plan does not match measures");
  const std::size_t d = dst.dim();
  DataMatrix out(src.size(), d);
  for (std::size_t i = 0; i < src.size(); ++i) {
    const double a = src.weight(i);
    if (a <= 0.0)
      throw Error("zero-weight source row " + std::to_string(i) +
                  " has no barycentric image");
    for (std::size_t j = 0; j < dst.size(); ++j) {
      const double w = plan.plan_at(i, j);
      if (w == 0.0) continue;
      const auto y = dst.point(j);
      for (std::size_t k = 0; k < d; ++k) out(i, k) += w * y[k];
    }
    for (std::size_t k = 0; k < d; ++k) out(i, k) /= a;
  }
  return out;
}

InterpolatingMeasure interpolate(const DiscreteMeasure& src,
                                 const DiscreteMeasure& dst, double t,
                                 double p) {
  if (!(t >= 0.0 && t <= 1.0)) throw Error("t must lie in [0,1]");
  const OTResult plan = solve_ot(src, dst, p);
  const DataMatrix image = barycentric_map(plan, src, dst);
  DataMatrix support(src.size(), src.dim());
  for (std::size_t i = 0; i < src.size(); ++i) {
    const auto x = src.point(i);
    for (std::size_t k = 0; k < src.dim(); ++k)
      support(i, k) = (1.0 - t) * x[k] + t * image(i, k);
  }
  InterpolatingMeasure im;
  im.measure = DiscreteMeasure(std::move(support),
                               std::vector<double>(src.weights()));
  im.t = t;
  return im;
}

double geodesic_gap(const DiscreteMeasure& a, const DiscreteMeasure& b,
                    const DiscreteMeasure& g, double p) {
  return wasserstein(a, g, p) + wasserstein(g, b, p) - wasserstein(a, b, p);
}

}  // namespace triwad
