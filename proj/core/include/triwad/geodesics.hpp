#pragma once

#include <string>

#include "triwad/measure.hpp"
#include "triwad/ot.hpp"

namespace triwad {

/// A measure lying on (an approximation of) the geodesic between two
/// endpoints, tagged with the interpolation parameter and the endpoint
/// identities it was built from.
struct InterpolatingMeasure {
  DiscreteMeasure measure;
  double t = 0.0;
  std::string src_id;
  std::string dst_id;
};

// Row i is the plan-weighted target image of source point i:
// (1/a_i) * sum_j plan[i][j] * y_j. For a permutation plan this is the
// matched target point. Throws on a zero-weight source row.
DataMatrix barycentric_map(const OTResult& plan, const DiscreteMeasure& src,
                           const DiscreteMeasure& dst);

// Displacement interpolation along the optimal plan:
// support_i = (1-t) * x_i + t * barycentric_map_i, weights inherited
// from the source. Exact on permutation plans, barycentric-projection
// approximation otherwise.
InterpolatingMeasure interpolate(const DiscreteMeasure& src,
                                 const DiscreteMeasure& dst, double t,
                                 double p = 2.0);

// W(a,g) + W(g,b) - W(a,b): non-negative, ~0 iff g sits on a geodesic
// between a and b.
double geodesic_gap(const DiscreteMeasure& a, const DiscreteMeasure& b,
                    const DiscreteMeasure& g, double p = 2.0);

}  // namespace triwad
