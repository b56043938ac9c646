#include "triwad/trianglewad.hpp"

#include <chrono>
#include <cmath>
#include <future>

#include "triwad/error.hpp"
#include "triwad/rng.hpp"

namespace triwad {

std::string to_string(DefenseKind kind) {
  return kind == DefenseKind::Ones ? "ones" : "gaussian";
}

DefenseKind parse_defense_kind(const std::string& name) {
  if (name == "ones") return DefenseKind::Ones;
  if (name == "gaussian") return DefenseKind::Gaussian;
  throw ConfigError("unknown defense kind '" + name +
                    "' (expected ones|gaussian)");
}

void TriangleConfig::validate() const {
  if (!(t > 0.0 && t <= 1.0)) throw ConfigError("t must lie in (0,1]");
  if (!(p >= 1.0)) throw ConfigError("p must be >= 1");
  if (defense_kind == DefenseKind::Gaussian && !(sigma > 0.0))
    throw ConfigError("gaussian defense needs sigma > 0");
}

DefenseData make_defense(DefenseKind kind, std::size_t support_size,
                         std::size_t dim, double sigma, std::uint64_t seed) {
  if (support_size < 1) throw ConfigError("defense support size must be >= 1");
  DataMatrix x(support_size, dim);
  if (kind == DefenseKind::Ones) {
    for (auto& v : x.mutable_values()) v = 1.0;
  } else {
    Rng rng(seed);
    for (auto& v : x.mutable_values()) v = sigma * rng.gaussian();
  }
  DefenseData d;
  d.measure = uniform_measure(std::move(x));
  d.kind = kind;
  d.sigma = sigma;
  d.seed = seed;
  return d;
}

InterpolatingMeasure local_interpolate(const DefenseData& defense,
                                       const DiscreteMeasure& private_data,
                                       double t, double p) {
  if (!(t > 0.0 && t <= 1.0)) throw Error("t must lie in (0,1]");
  if (defense.measure.dim() != private_data.dim())
    throw Error("defense dimension does not match private data");
  InterpolatingMeasure im = interpolate(defense.measure, private_data, t, p);
  im.src_id = "defense";
  return im;
}

double moment_bound(const DefenseData& defense, double p) {
  const DataMatrix& d = defense.measure.support();
  const std::size_t m = d.rows();
  const std::size_t dim = d.dim();
  std::vector<double> mean(dim, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t k = 0; k < dim; ++k) mean[k] += d(i, k);
  for (auto& v : mean) v /= static_cast<double>(m);
  double acc = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    double sq = 0.0;
    for (std::size_t k = 0; k < dim; ++k) {
      const double diff = d(i, k) - mean[k];
      sq += diff * diff;
    }
    acc += p == 2.0 ? sq : std::pow(std::sqrt(sq), p);
  }
  return acc / static_cast<double>(m);
}

TriangleReport triangle_distance(const InterpolatingMeasure& eta_mu,
                                 const InterpolatingMeasure& eta_nu, double t,
                                 double p, SolveMode mode,
                                 const FedConfig& fed) {
  if (std::abs(eta_mu.t - t) > 1e-12 || std::abs(eta_nu.t - t) > 1e-12)
    throw Error("both interpolating measures must use the same t");
  if (eta_mu.measure.dim() != eta_nu.measure.dim())
    throw Error("interpolating measures have mismatched dimensions");
  if (!(t > 0.0 && t <= 1.0)) throw Error("t must lie in (0,1]");

  TriangleReport rep;
  rep.t = t;
  rep.p = p;
  rep.mode = mode;
  if (mode == SolveMode::Direct) {
    rep.w_eta = wasserstein(eta_mu.measure, eta_nu.measure, p);
    rep.eta_mu = eta_mu;
    rep.eta_nu = eta_nu;
  } else {
    FedConfig nested = fed;
    nested.t = fed.t;
    nested.p = p;
    SessionReport fed_rep =
        fedwad_distance(eta_mu.measure, eta_nu.measure, nested);
    rep.w_eta = fed_rep.estimate;
    rep.fed_rounds = fed_rep.rounds;
  }
  // Homogeneous recovery: W(eta_mu, eta_nu) = t * W(mu, nu) on the
  // geodesic construction, so dividing by t undoes the contraction for
  // every p at once.
  rep.estimate = rep.w_eta / t;
  return rep;
}

namespace {

std::vector<std::size_t> plan_assignment(const OTResult& r) {
  std::vector<std::size_t> out(r.m, 0);
  for (std::size_t i = 0; i < r.m; ++i) {
    double best = -1.0;
    for (std::size_t j = 0; j < r.n; ++j) {
      const double v = r.plan_at(i, j);
      if (v > best) {
        best = v;
        out[i] = j;
      }
    }
  }
  return out;
}

// local_interpolate, but keeping the plan so the caller can record the
// defense-row-to-private-row matching (client-local knowledge).
InterpolatingMeasure interpolate_with_assignment(
    const DefenseData& defense, const DiscreteMeasure& private_data, double t,
    double p, std::vector<std::size_t>* assign) {
  const OTResult plan = solve_ot(defense.measure, private_data, p);
  if (assign) *assign = plan_assignment(plan);
  const DataMatrix image = barycentric_map(plan, defense.measure, private_data);
  DataMatrix support(defense.measure.size(), defense.measure.dim());
  for (std::size_t i = 0; i < support.rows(); ++i) {
    const auto x = defense.measure.point(i);
    for (std::size_t k = 0; k < support.dim(); ++k)
      support(i, k) = (1.0 - t) * x[k] + t * image(i, k);
  }
  InterpolatingMeasure im;
  im.measure = DiscreteMeasure(
      std::move(support), std::vector<double>(defense.measure.weights()));
  im.t = t;
  im.src_id = "defense";
  return im;
}

}  // namespace

TriangleReport run_triangle_session(const DiscreteMeasure& mu,
                                    const DiscreteMeasure& nu,
                                    const TriangleConfig& cfg,
                                    std::uint64_t seed,
                                    TriangleLocalState* local) {
  cfg.validate();
  if (mu.dim() != nu.dim()) throw Error("party dimensions differ");
  const auto t0 = std::chrono::steady_clock::now();
  const auto solves0 = ot_solve_count();

  const std::size_t size =
      cfg.defense_size ? cfg.defense_size : std::min(mu.size(), nu.size());
  DefenseData defense =
      make_defense(cfg.defense_kind, size, mu.dim(), cfg.sigma,
                   SeedStream(seed).derive("defense"));
  defense.shared = cfg.defense_shared;

  // The two parties interpolate against the defense independently.
  std::vector<std::size_t> assign_mu, assign_nu;
  auto eta_mu_task = std::async(std::launch::async, [&] {
    return interpolate_with_assignment(defense, mu, cfg.t, cfg.p,
                                       local ? &assign_mu : nullptr);
  });
  InterpolatingMeasure eta_nu = interpolate_with_assignment(
      defense, nu, cfg.t, cfg.p, local ? &assign_nu : nullptr);
  InterpolatingMeasure eta_mu = eta_mu_task.get();
  eta_mu.dst_id = "mu";
  eta_nu.dst_id = "nu";

  TriangleReport rep =
      triangle_distance(eta_mu, eta_nu, cfg.t, cfg.p, cfg.mode, cfg.fed);
  rep.bound = moment_bound(defense, cfg.p);
  rep.solve_count = ot_solve_count() - solves0;
  rep.wall_ms = std::chrono::duration<double, std::milli>(
                    std::chrono::steady_clock::now() - t0)
                    .count();

  if (local) {
    local->defense = std::move(defense);
    local->assign_mu = std::move(assign_mu);
    local->assign_nu = std::move(assign_nu);
  }
  return rep;
}

}  // namespace triwad
