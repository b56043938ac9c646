#pragma once

#include <cstdint>

#include "triwad/geodesics.hpp"
#include "triwad/report.hpp"

namespace triwad {

struct FedConfig {
  int max_rounds = 20;
  double t = 0.5;       // party A's interpolation parameter
  double t_nu = -1.0;   // party B's; negative means "same as t"
  double p = 2.0;
  double tol = 1e-6;    // absolute stop tolerance on the bound
  std::uint64_t seed = 0;
  std::size_t gamma_size = 0;  // 0 means min(|mu|, |nu|)

  double effective_t_nu() const { return t_nu < 0.0 ? t : t_nu; }
};

/// State of the alternating interpolation scheme. The bound is the
/// four-term triangle sum and never increases across rounds.
struct FedState {
  int round = 0;
  DiscreteMeasure gamma;
  InterpolatingMeasure eta_mu;
  InterpolatingMeasure eta_nu;
  double bound = 0.0;
  std::vector<RoundTrace> trace;
};

// iid standard gaussian supports, seeded; the shared starting measure.
DiscreteMeasure random_gamma(std::size_t size, std::size_t dim,
                             std::uint64_t seed);

// Round 0: seeded gaussian gamma, bound through gamma (two terms).
FedState fedwad_init(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                     const FedConfig& cfg);

// Round 0 with a caller-chosen starting measure.
FedState fedwad_init(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                     DiscreteMeasure gamma0, double p);

// One alternating update:
//   eta_mu = interpolate(mu, gamma, t),  computed by party A
//   eta_nu = interpolate(gamma, nu, t'), computed by party B
//   gamma  = midpoint interpolation of the two etas
// followed by the four-term bound. The eta updates only read the
// previous gamma, so the two parties can run them concurrently.
FedState fedwad_round(FedState state, const DiscreteMeasure& mu,
                      const DiscreteMeasure& nu, double t, double p);
FedState fedwad_round(FedState state, const DiscreteMeasure& mu,
                      const DiscreteMeasure& nu, double t_mu, double t_nu,
                      double p);

// Iterates until the bound moves less than cfg.tol or max_rounds is hit.
// The report's estimate is the final bound.
SessionReport fedwad_distance(const DiscreteMeasure& mu,
                              const DiscreteMeasure& nu, const FedConfig& cfg);

}  // namespace triwad
