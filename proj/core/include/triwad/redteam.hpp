#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "triwad/fedwad.hpp"
#include "triwad/geodesics.hpp"
#include "triwad/measure.hpp"
#include "triwad/trianglewad.hpp"

namespace triwad {

struct AttackOptions {
  std::size_t steps = 500;
  double lr = 0.05;
  double lr_decay = 0.0;  // lr_k = lr / (1 + lr_decay * k)
  bool line_search = true;
  std::uint64_t seed = 0;
  double p = 2.0;
  std::size_t checkpoint_every = 10;
};

/// Learnable surrogate dataset plus its loss trajectory. The loss is
/// |W(D,nu) - target_w_nu| + |W(D,gamma) - target_w_gamma| >= 0.
struct AttackState {
  DataMatrix d_attack;
  double loss = 0.0;
  int step = 0;
  double lr = 0.0;
  std::vector<double> trace;
  bool zero_distance_flagged = false;
};

/// Everything the attacker needs: the two observed distance targets and
/// the two reference measures it holds.
struct AttackConfig {
  double target_w_nu = 0.0;     // observed W_p(mu, nu)
  double target_w_gamma = 0.0;  // derived W_p(mu, gamma)
  DiscreteMeasure nu;
  DiscreteMeasure gamma;
  AttackOptions opts;
};

// Assembles the attack from a federated run: the final bound stands in
// for W(mu,nu) and W(mu,gamma) = W(mu,nu) - W(gamma,nu) on the converged
// geodesic, with W(gamma,nu) computed locally from the shared gamma.
AttackConfig attack_config_from_fedwad(const SessionReport& report,
                                       const DiscreteMeasure& nu);

// Always throws ConfigError: the one-round protocol discloses neither
// W_p(mu, defense) nor W_p(mu, eta_mu), so the loss cannot be formed.
AttackConfig attack_config_from_triangle(const TriangleReport& report,
                                         const DiscreteMeasure& nu);

// iid N(0,1) surrogate of the requested shape.
AttackState attack_init(std::size_t rows, std::size_t dim, std::uint64_t seed,
                        const AttackConfig& cfg);

// One descent step through both distance terms with plan-based
// gradients; with line_search the loss never increases (the step is
// rejected after 20 halvings).
AttackState attack_step(AttackState st, const DiscreteMeasure& nu,
                        const DiscreteMeasure& gamma, double target_w_nu,
                        double target_w_gamma, double p, bool line_search);

struct AttackReport {
  AttackState state;
  double initial_loss = 0.0;
  double final_loss = 0.0;
  // Populated only when the harness supplies the hidden measure.
  std::vector<double> oracle_trace;  // W(D_attack, mu) at checkpoints
  double initial_oracle = 0.0;
  double final_oracle = 0.0;
};

AttackReport run_attack(const AttackConfig& cfg, std::size_t rows,
                        std::size_t dim,
                        const DiscreteMeasure* oracle_mu = nullptr);

// (eta_i - (1-t) * guess_i) / t: inverts the local interpolation when
// the guess is the true defense; otherwise yields defense-plus-data
// noise, the object of the gaussianity check.
DataMatrix residual_attack(const InterpolatingMeasure& eta, double t,
                           const DiscreteMeasure& d_guess);

// Gaussian mechanism: sigma = sensitivity * sqrt(2 ln(1.25/delta)) / epsilon.
double gaussian_mechanism_sigma(double epsilon, double delta,
                                double sensitivity);
DiscreteMeasure dp_perturb(const DiscreteMeasure& mu, double epsilon,
                           double delta, double sensitivity,
                           std::uint64_t seed);

/// One-sample KS against a fitted normal plus moment diagnostics.
/// verdict holds iff ks_pvalue > 0.01, |skewness| < 0.5 and
/// |excess_kurtosis| < 1.0.
struct GaussFitReport {
  double ks_statistic = 0.0;
  double ks_pvalue = 0.0;
  double skewness = 0.0;
  double excess_kurtosis = 0.0;
  bool verdict = false;
  std::string reason;
};

// Pools all entries of the matrix; needs at least 100 of them. The seed
// only matters above 100k entries, where a subsample is drawn.
GaussFitReport gaussianity_check(const DataMatrix& residual,
                                 std::uint64_t seed);

}  // namespace triwad
