#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "triwad/measure.hpp"

namespace triwad {

enum class SolveMode { Direct, Federated };

std::string to_string(SolveMode mode);
SolveMode parse_mode(const std::string& name);

/// One federated round: the four bound components
/// W(mu,eta_mu), W(eta_mu,gamma), W(gamma,eta_nu), W(eta_nu,nu)
/// and their sum.
struct RoundTrace {
  int round = 0;
  double term_mu_eta = 0.0;
  double term_eta_gamma = 0.0;
  double term_gamma_eta = 0.0;
  double term_eta_nu = 0.0;
  double bound = 0.0;
};

/// Protocol output shared by the in-process and wire execution paths.
/// Everything except wall_ms is a pure function of config and seed.
struct SessionReport {
  std::string protocol;  // direct | fedwad | triangle
  SolveMode mode = SolveMode::Direct;
  double estimate = 0.0;
  double p = 2.0;
  double t = 0.5;
  std::uint64_t seed = 0;
  std::string config_hash;
  std::vector<RoundTrace> rounds;
  // Named uniform measures the protocol exposed (the attacker's view).
  std::map<std::string, DiscreteMeasure> artifacts;
  // Measure artifacts that crossed the party boundary, in order.
  std::vector<std::string> audit;
  double moment_bound = 0.0;  // triangle only
  double wall_ms = 0.0;
  std::uint64_t solve_count = 0;
};

}  // namespace triwad
