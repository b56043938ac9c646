#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "triwad/trianglewad.hpp"

namespace triwad {

/// One named experiment with its full parameterization. A config plus
/// its seed determines every emitted number except wall-clock fields.
struct ExperimentConfig {
  std::string experiment;  // quantgap|speed|attack|dpgap|detect|contrib|textmatch
  std::uint64_t seed = 0;
  std::filesystem::path out_dir;  // empty: nothing written to disk

  // dataset shape
  std::vector<std::size_t> sizes = {100, 500, 1000};
  std::size_t dim = 32;
  double separation = 4.0;  // distance between the two parties' clouds

  // corruption settings (quantgap noisy rows, detect, contrib)
  double noise_sigma = 10.0;
  double corruption_ratio = 0.3;
  std::vector<double> noise_ratios = {0.0, 0.05, 0.10, 0.15, 0.20};

  // protocol parameters
  double t = 0.5;
  double p = 2.0;
  DefenseKind defense = DefenseKind::Ones;
  double sigma = 1.0;
  int fed_rounds = 20;

  // attack
  std::size_t attack_steps = 400;
  double attack_lr = 0.08;

  // dpgap
  std::vector<double> epsilons = {10.0, 1.0, 0.1};
  double dp_delta = 1e-5;
  double dp_sensitivity = 1.0;

  // textmatch
  std::size_t vocab_size = 200;
  std::size_t text_length = 40;
  double text_overlap = 0.7;
  int text_pairs = 6;

  nlohmann::json to_json() const;
  std::string hash() const;
  void validate() const;
};

struct ExperimentResult {
  nlohmann::json report;
  std::filesystem::path json_path;  // empty when out_dir was empty
  std::filesystem::path csv_path;
};

// Runs the named experiment and, when out_dir is set, writes
// <experiment>.json and <experiment>.csv. Every CSV row carries the
// config hash and seed; rerunning a config reproduces the JSON byte for
// byte apart from the *_time_s / wall_ms fields.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

}  // namespace triwad
