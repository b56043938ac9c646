#pragma once

#include <cstdint>
#include <optional>

#include "triwad/fedwad.hpp"
#include "triwad/geodesics.hpp"
#include "triwad/report.hpp"

namespace triwad {

enum class DefenseKind { Ones, Gaussian };

std::string to_string(DefenseKind kind);
DefenseKind parse_defense_kind(const std::string& name);

/// The randomly initialized reference measure both parties interpolate
/// against. kind==Ones repeats the all-ones vector; kind==Gaussian draws
/// iid N(0, sigma^2) per coordinate under the seed.
struct DefenseData {
  DiscreteMeasure measure;
  DefenseKind kind = DefenseKind::Gaussian;
  double sigma = 1.0;
  std::uint64_t seed = 0;
  bool shared = true;
};

DefenseData make_defense(DefenseKind kind, std::size_t support_size,
                         std::size_t dim, double sigma, std::uint64_t seed);

// interpolate(defense, private_data, t): the defense is the source, so
// the result keeps the defense's support size and t weights the private
// side. Requires t in (0, 1].
InterpolatingMeasure local_interpolate(const DefenseData& defense,
                                       const DiscreteMeasure& private_data,
                                       double t, double p = 2.0);

// p-th central sample moment of the defense supports,
// mean_i ||d_i - dbar||^p. Zero for the ones defense; this is the
// one-round approximation-error bound.
double moment_bound(const DefenseData& defense, double p);

/// One-round session output. In federated mode the eta measures were
/// never co-located, so they are not populated here.
struct TriangleReport {
  double estimate = 0.0;  // W_p(eta_mu, eta_nu) / t
  double w_eta = 0.0;     // W_p(eta_mu, eta_nu), the only shared scalar
  std::optional<InterpolatingMeasure> eta_mu;
  std::optional<InterpolatingMeasure> eta_nu;
  double t = 0.5;
  double p = 2.0;
  SolveMode mode = SolveMode::Direct;
  double bound = 0.0;  // moment_bound of the defense
  double wall_ms = 0.0;
  std::uint64_t solve_count = 0;
  std::vector<RoundTrace> fed_rounds;  // federated mode only
};

struct TriangleConfig {
  DefenseKind defense_kind = DefenseKind::Ones;
  std::size_t defense_size = 0;  // 0 means min(|mu|, |nu|)
  double sigma = 1.0;
  bool defense_shared = true;
  double t = 0.5;
  double p = 2.0;
  SolveMode mode = SolveMode::Direct;
  FedConfig fed;  // used when mode == Federated

  void validate() const;
};

// Final join point: one exact solve in direct mode, a nested federated
// estimate otherwise. Both etas must carry the same t.
TriangleReport triangle_distance(const InterpolatingMeasure& eta_mu,
                                 const InterpolatingMeasure& eta_nu, double t,
                                 double p, SolveMode mode,
                                 const FedConfig& fed = FedConfig{});

/// Client-side knowledge that never crosses the boundary: the defense
/// itself and which private row each defense row was matched to.
struct TriangleLocalState {
  DefenseData defense;
  std::vector<std::size_t> assign_mu;
  std::vector<std::size_t> assign_nu;
};

// Full one-round run: defense creation, the two local interpolations
// (independent, run concurrently) and the final distance. Exactly three
// exact solves in direct mode.
TriangleReport run_triangle_session(const DiscreteMeasure& mu,
                                    const DiscreteMeasure& nu,
                                    const TriangleConfig& cfg,
                                    std::uint64_t seed,
                                    TriangleLocalState* local = nullptr);

}  // namespace triwad
