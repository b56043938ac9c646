#include "triwad/experiments.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>

#include "triwad/error.hpp"
#include "triwad/json_io.hpp"
#include "triwad/redteam.hpp"
#include "triwad/rng.hpp"
#include "triwad/synthetic.hpp"
#include "triwad/valuation.hpp"

namespace triwad {

namespace {

using nlohmann::json;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

class StopWatch {
public:
  StopWatch() : t0_(std::chrono::steady_clock::now()) {}
  double lap() {
    const double s = seconds_since(t0_);
    t0_ = std::chrono::steady_clock::now();
    return s;
  }

private:
  std::chrono::steady_clock::time_point t0_;
};

// Minimal CSV emitter: header + rows, trailing config-hash and seed
// columns on every row.
class CsvTable {
public:
  CsvTable(std::vector<std::string> columns, std::string hash,
           std::uint64_t seed)
      : columns_(std::move(columns)), hash_(std::move(hash)), seed_(seed) {}

  void add_row(const std::vector<std::string>& cells) {
    if (cells.size() != columns_.size())
      throw Error("csv row width mismatch");
    rows_.push_back(cells);
  }

  std::string render() const {
    std::string out;
    for (const auto& c : columns_) out += c + ",";
    out += "config_hash,seed\n";
    for (const auto& row : rows_) {
      for (const auto& cell : row) out += cell + ",";
      out += hash_ + "," + std::to_string(seed_) + "\n";
    }
    return out;
  }

private:
  std::vector<std::string> columns_;
  std::string hash_;
  std::uint64_t seed_;
  std::vector<std::vector<std::string>> rows_;
};

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

DiscreteMeasure cloud(const ExperimentConfig& cfg, std::size_t n,
                      std::uint64_t seed, double center) {
  SyntheticSpec spec;
  spec.size = n;
  spec.dim = cfg.dim;
  spec.center = center;
  spec.seed = seed;
  return gen_synthetic(spec).measure();
}

TriangleConfig triangle_cfg(const ExperimentConfig& cfg, DefenseKind kind) {
  TriangleConfig tri;
  tri.defense_kind = kind;
  tri.sigma = cfg.sigma;
  tri.t = cfg.t;
  tri.p = cfg.p;
  return tri;
}

FedConfig fed_cfg(const ExperimentConfig& cfg, std::uint64_t seed) {
  FedConfig fed;
  fed.max_rounds = cfg.fed_rounds;
  fed.t = cfg.t;
  fed.p = cfg.p;
  fed.tol = 0.0;  // run all rounds; experiments report the trace
  fed.seed = seed;
  return fed;
}

// ---- quantgap ------------------------------------------------------------

json run_quantgap(const ExperimentConfig& cfg, CsvTable& csv) {
  const SeedStream seeds(cfg.seed);
  json rows = json::array();
  for (std::size_t n : cfg.sizes) {
    const auto row_seed = seeds.sub("n" + std::to_string(n));
    auto nu = cloud(cfg, n, row_seed.derive("nu"), 0.0);

    // Three source rows: the clean pair and two noise-corrupted copies.
    struct RowSpec {
      std::string name;
      std::size_t corrupted;
    };
    const std::size_t c1 = std::min<std::size_t>(20, n / 2);
    const std::size_t c2 = std::min<std::size_t>(50, n / 2);
    for (const RowSpec& rs :
         {RowSpec{"mu", 0}, RowSpec{"noise1", c1}, RowSpec{"noise2", c2}}) {
      SyntheticSpec spec;
      spec.size = n;
      spec.dim = cfg.dim;
      spec.center = cfg.separation;
      spec.seed = row_seed.derive("mu");
      spec.feature_noise_ratio =
          static_cast<double>(rs.corrupted) / static_cast<double>(n);
      spec.feature_noise_sigma = cfg.noise_sigma;
      auto mu = gen_synthetic(spec).measure();

      StopWatch watch;
      const double direct = wasserstein(mu, nu, cfg.p);
      const double direct_s = watch.lap();

      auto fed = fedwad_distance(mu, nu, fed_cfg(cfg, row_seed.derive("gamma")));
      const double fed_s = watch.lap();

      auto tri_ones = run_triangle_session(
          mu, nu, triangle_cfg(cfg, DefenseKind::Ones), row_seed.derive("to"));
      const double ones_s = watch.lap();
      auto tri_rand =
          run_triangle_session(mu, nu, triangle_cfg(cfg, DefenseKind::Gaussian),
                               row_seed.derive("tr"));
      const double rand_s = watch.lap();

      json row = {{"n", n},
                  {"row", rs.name},
                  {"direct", direct},
                  {"fedwad", fed.estimate},
                  {"triangle_ones", tri_ones.estimate},
                  {"triangle_random", tri_rand.estimate},
                  {"gap_fedwad", std::abs(fed.estimate - direct)},
                  {"gap_triangle_ones", std::abs(tri_ones.estimate - direct)},
                  {"gap_triangle_random",
                   std::abs(tri_rand.estimate - direct)},
                  {"direct_time_s", direct_s},
                  {"fedwad_time_s", fed_s},
                  {"triangle_ones_time_s", ones_s},
                  {"triangle_random_time_s", rand_s}};
      rows.push_back(row);
      csv.add_row({std::to_string(n), rs.name, num(direct), num(fed.estimate),
                   num(tri_ones.estimate), num(tri_rand.estimate),
                   num(row["gap_fedwad"].get<double>()),
                   num(row["gap_triangle_ones"].get<double>()),
                   num(row["gap_triangle_random"].get<double>()),
                   num(direct_s), num(fed_s), num(ones_s), num(rand_s)});
    }
  }

  double gap_fed = 0.0, gap_ones = 0.0, gap_rand = 0.0;
  for (const auto& row : rows) {
    gap_fed += row["gap_fedwad"].get<double>();
    gap_ones += row["gap_triangle_ones"].get<double>();
    gap_rand += row["gap_triangle_random"].get<double>();
  }
  const double k = static_cast<double>(rows.size());
  return json{{"rows", rows},
              {"avg_gap",
               {{"fedwad", gap_fed / k},
                {"triangle_ones", gap_ones / k},
                {"triangle_random", gap_rand / k}}}};
}

// ---- speed ---------------------------------------------------------------

json run_speed(const ExperimentConfig& cfg, CsvTable& csv) {
  const SeedStream seeds(cfg.seed);
  const std::size_t n = cfg.sizes.size() == 1 ? cfg.sizes[0] : 500;
  auto mu = cloud(cfg, n, seeds.derive("mu"), cfg.separation);
  auto nu = cloud(cfg, n, seeds.derive("nu"), 0.0);

  StopWatch watch;
  auto fed = fedwad_distance(mu, nu, fed_cfg(cfg, seeds.derive("gamma")));
  const double fed_s = watch.lap();
  auto tri = run_triangle_session(mu, nu, triangle_cfg(cfg, cfg.defense),
                                  seeds.derive("triangle"));
  const double tri_s = watch.lap();
  const double ratio = fed_s / std::max(tri_s, 1e-9);

  csv.add_row({std::to_string(n), num(fed.estimate), num(fed_s),
               num(tri.estimate), num(tri_s), num(ratio)});
  return json{{"n", n},
              {"fedwad_estimate", fed.estimate},
              {"fedwad_time_s", fed_s},
              {"fedwad_rounds", cfg.fed_rounds},
              {"fedwad_solves", fed.solve_count},
              {"triangle_estimate", tri.estimate},
              {"triangle_time_s", tri_s},
              {"triangle_solves", tri.solve_count},
              {"speedup", ratio}};
}

// ---- attack ----------------------------------------------------------

json run_attack_experiment(const ExperimentConfig& cfg, CsvTable& csv) {
  const SeedStream seeds(cfg.seed);
  const std::size_t m = 50;
  SyntheticSpec ms;
  ms.size = m;
  ms.dim = 2;
  ms.center = cfg.separation;
  ms.scale = 1.0;
  ms.seed = seeds.derive("mu");
  auto mu = gen_synthetic(ms).measure();
  SyntheticSpec nspec = ms;
  nspec.center = 0.0;
  nspec.seed = seeds.derive("nu");
  auto nu = gen_synthetic(nspec).measure();

  FedConfig fed = fed_cfg(cfg, seeds.derive("gamma"));
  fed.max_rounds = 30;
  fed.tol = 1e-9;
  auto session = fedwad_distance(mu, nu, fed);

  AttackConfig attack = attack_config_from_fedwad(session, nu);
  attack.opts.steps = cfg.attack_steps;
  attack.opts.lr = cfg.attack_lr;
  attack.opts.seed = seeds.derive("attack");
  auto rep = run_attack(attack, mu.size(), mu.dim(), &mu);

  csv.add_row({num(rep.initial_loss), num(rep.final_loss),
               num(rep.final_loss / std::max(rep.initial_loss, 1e-30)),
               num(rep.initial_oracle), num(rep.final_oracle),
               num(rep.final_oracle / std::max(rep.initial_oracle, 1e-30))});
  return json{{"targets",
               {{"w_mu_nu", attack.target_w_nu},
                {"w_mu_gamma", attack.target_w_gamma}}},
              {"initial_loss", rep.initial_loss},
              {"final_loss", rep.final_loss},
              {"initial_oracle_w", rep.initial_oracle},
              {"final_oracle_w", rep.final_oracle},
              {"loss_trace", rep.state.trace},
              {"oracle_trace", rep.oracle_trace}};
}

// ---- dpgap ----------------------------------------------------------

json run_dpgap(const ExperimentConfig& cfg, CsvTable& csv) {
  const SeedStream seeds(cfg.seed);
  const std::size_t n = cfg.sizes.empty() ? 100 : cfg.sizes.front();
  auto mu = cloud(cfg, n, seeds.derive("mu"), cfg.separation);
  auto nu = cloud(cfg, n, seeds.derive("nu"), 0.0);
  const double base = wasserstein(mu, nu, cfg.p);

  json rows = json::array();
  for (double eps : cfg.epsilons) {
    auto pert = dp_perturb(mu, eps, cfg.dp_delta, cfg.dp_sensitivity,
                           seeds.derive("noise"));
    const double w = wasserstein(pert, nu, cfg.p);
    const double gap = std::abs(base - w);
    rows.push_back({{"epsilon", eps},
                    {"sigma", gaussian_mechanism_sigma(eps, cfg.dp_delta,
                                                       cfg.dp_sensitivity)},
                    {"distance", w},
                    {"gap", gap}});
    csv.add_row({num(eps), num(w), num(gap)});
  }
  return json{{"direct", base}, {"rows", rows}};
}

// ---- detect ----------------------------------------------------------

// Recall at the zero-false-positive operating point: walk the ranking
// until the first clean point, count corrupted hits.
double rate_at_fpr0(const std::vector<std::size_t>& ranked_desc,
                    const std::set<std::size_t>& truth) {
  std::size_t hits = 0;
  for (std::size_t idx : ranked_desc) {
    if (!truth.count(idx)) break;
    ++hits;
  }
  return truth.empty() ? 0.0
                       : static_cast<double>(hits) /
                             static_cast<double>(truth.size());
}

json run_detect(const ExperimentConfig& cfg, CsvTable& csv) {
  const SeedStream seeds(cfg.seed);
  const std::size_t n = cfg.sizes.empty() ? 100 : cfg.sizes.front();

  SyntheticSpec spec;
  spec.size = n;
  spec.dim = cfg.dim;
  spec.seed = seeds.derive("mu");
  spec.feature_noise_ratio = cfg.corruption_ratio;
  spec.feature_noise_sigma = cfg.noise_sigma;
  auto data = gen_synthetic(spec);
  auto mu = data.measure();
  auto nu = cloud(cfg, n, seeds.derive("nu"), 0.0);
  const std::set<std::size_t> truth(data.corrupted.begin(),
                                    data.corrupted.end());

  // Oracle setting: raw data on both sides.
  auto oracle_ranked =
      detect_noisy(mu, nu, cfg.p, DetectionRule::top_k(mu.size()));
  const double oracle_rate = rate_at_fpr0(oracle_ranked, truth);

  // Private setting: the client maps eta indices back through its own
  // matching, which never leaves its side.
  TriangleConfig tri = triangle_cfg(cfg, cfg.defense);
  TriangleLocalState local;
  auto trep =
      run_triangle_session(mu, nu, tri, seeds.derive("triangle"), &local);
  if (!trep.eta_mu || !trep.eta_nu)
    throw Error("detect experiment needs direct-mode etas");
  auto eta_ranked = detect_noisy(trep.eta_mu->measure, trep.eta_nu->measure,
                                 cfg.p, DetectionRule::top_k(local.assign_mu.size()));
  std::vector<std::size_t> private_ranked;
  private_ranked.reserve(eta_ranked.size());
  for (std::size_t eta_idx : eta_ranked)
    private_ranked.push_back(local.assign_mu[eta_idx]);
  const double private_rate = rate_at_fpr0(private_ranked, truth);

  csv.add_row({"oracle", num(oracle_rate), num(0.0),
               std::to_string(truth.size())});
  csv.add_row({"triangle_private", num(private_rate), num(0.0),
               std::to_string(truth.size())});
  return json{{"n", n},
              {"corrupted", truth.size()},
              {"oracle_rate_at_fpr0", oracle_rate},
              {"private_rate_at_fpr0", private_rate}};
}

// ---- contrib ----------------------------------------------------------

json run_contrib(const ExperimentConfig& cfg, CsvTable& csv) {
  const SeedStream seeds(cfg.seed);
  const std::size_t n = cfg.sizes.empty() ? 100 : cfg.sizes.front();
  auto validation = cloud(cfg, n, seeds.derive("validation"), 0.0);

  std::vector<DiscreteMeasure> clients;
  for (std::size_t c = 0; c < cfg.noise_ratios.size(); ++c) {
    SyntheticSpec spec;
    spec.size = n;
    spec.dim = cfg.dim;
    spec.seed = seeds.derive("client" + std::to_string(c));
    spec.feature_noise_ratio = cfg.noise_ratios[c];
    spec.feature_noise_sigma = cfg.noise_sigma;
    clients.push_back(gen_synthetic(spec).measure());
  }
  auto scores = contribution_scores(clients, validation,
                                    triangle_cfg(cfg, cfg.defense),
                                    seeds.derive("triangle"));

  json rows = json::array();
  for (std::size_t c = 0; c < scores.size(); ++c) {
    rows.push_back({{"client", c},
                    {"noise_ratio", cfg.noise_ratios[c]},
                    {"score", scores[c]}});
    csv.add_row({std::to_string(c), num(cfg.noise_ratios[c]), num(scores[c])});
  }
  return json{{"rows", rows}};
}

// ---- textmatch ----------------------------------------------------------

json run_textmatch(const ExperimentConfig& cfg, CsvTable& csv) {
  const SeedStream seeds(cfg.seed);
  const std::size_t dim = 16;

  // Synthetic vocabulary: well-separated gaussian embeddings, one word
  // per row.
  const double embed_scale = 2.0;
  Rng vocab_rng(seeds.derive("vocab"));
  DataMatrix vocab(cfg.vocab_size, dim);
  for (auto& v : vocab.mutable_values()) v = embed_scale * vocab_rng.gaussian();
  std::vector<std::string> words;
  words.reserve(cfg.vocab_size);
  for (std::size_t w = 0; w < cfg.vocab_size; ++w)
    words.push_back("w" + std::to_string(w));

  json rows = json::array();
  for (int pair = 0; pair < cfg.text_pairs; ++pair) {
    Rng pick(seeds.derive("pair" + std::to_string(pair)));
    const std::size_t len = std::min(cfg.text_length, cfg.vocab_size);
    const std::size_t overlap =
        static_cast<std::size_t>(cfg.text_overlap * static_cast<double>(len));

    // Two texts sharing `overlap` words.
    std::vector<std::size_t> order(cfg.vocab_size);
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = cfg.vocab_size; i > 1; --i)
      std::swap(order[i - 1], order[pick.index(i)]);

    std::vector<std::size_t> text_a(order.begin(), order.begin() + len);
    std::vector<std::size_t> text_b(order.begin(), order.begin() + overlap);
    for (std::size_t i = 0; text_b.size() < len; ++i)
      text_b.push_back(order[len + i]);

    auto embed = [&](const std::vector<std::size_t>& text) {
      DataMatrix m(text.size(), dim);
      for (std::size_t i = 0; i < text.size(); ++i)
        for (std::size_t k = 0; k < dim; ++k) m(i, k) = vocab(text[i], k);
      return uniform_measure(std::move(m));
    };
    auto mu = embed(text_a);
    auto nu = embed(text_b);
    std::set<std::string> raw_words;
    for (std::size_t idx : text_a) raw_words.insert(words[idx]);

    FedConfig fed = fed_cfg(cfg, seeds.derive("gamma" + std::to_string(pair)));
    fed.max_rounds = 12;
    auto fed_rep = fedwad_distance(mu, nu, fed);

    // The reference must drown the word signal in the blend, otherwise
    // nearest-neighbor retrieval still favors each eta point's source
    // word regardless of how far the blend moved it.
    TriangleConfig tri = triangle_cfg(cfg, DefenseKind::Gaussian);
    tri.sigma = 10.0 * embed_scale;
    auto trep = run_triangle_session(mu, nu, tri,
                                     seeds.derive("tri" + std::to_string(pair)));
    if (!trep.eta_mu) throw Error("textmatch needs direct-mode etas");

    const double rate_gamma =
        matching_rate(fed_rep.artifacts.at("gamma"), vocab, words, raw_words);
    const double rate_eta =
        matching_rate(trep.eta_mu->measure, vocab, words, raw_words);
    rows.push_back({{"pair", pair},
                    {"rate_fedwad_gamma", rate_gamma},
                    {"rate_triangle_eta", rate_eta}});
    csv.add_row({std::to_string(pair), num(rate_gamma), num(rate_eta)});
  }
  return json{{"rows", rows}};
}

std::vector<std::string> csv_columns(const std::string& experiment) {
  if (experiment == "quantgap")
    return {"n", "row", "direct", "fedwad", "triangle_ones", "triangle_random",
            "gap_fedwad", "gap_triangle_ones", "gap_triangle_random",
            "direct_time_s", "fedwad_time_s", "triangle_ones_time_s",
            "triangle_random_time_s"};
  if (experiment == "speed")
    return {"n", "fedwad", "fedwad_time_s", "triangle", "triangle_time_s",
            "speedup"};
  if (experiment == "attack")
    return {"initial_loss", "final_loss", "loss_ratio", "initial_oracle",
            "final_oracle", "oracle_ratio"};
  if (experiment == "dpgap") return {"epsilon", "distance", "gap"};
  if (experiment == "detect")
    return {"mode", "rate_at_fpr0", "fpr", "corrupted"};
  if (experiment == "contrib") return {"client", "noise_ratio", "score"};
  if (experiment == "textmatch")
    return {"pair", "rate_fedwad_gamma", "rate_triangle_eta"};
  throw ConfigError("unknown experiment '" + experiment + "'");
}

}  // namespace

nlohmann::json ExperimentConfig::to_json() const {
  return json{{"experiment", experiment},
              {"seed", seed},
              {"sizes", sizes},
              {"dim", dim},
              {"separation", separation},
              {"noise_sigma", noise_sigma},
              {"corruption_ratio", corruption_ratio},
              {"noise_ratios", noise_ratios},
              {"t", t},
              {"p", p},
              {"defense", to_string(defense)},
              {"sigma", sigma},
              {"fed_rounds", fed_rounds},
              {"attack_steps", attack_steps},
              {"attack_lr", attack_lr},
              {"epsilons", epsilons},
              {"dp_delta", dp_delta},
              {"dp_sensitivity", dp_sensitivity},
              {"vocab_size", vocab_size},
              {"text_length", text_length},
              {"text_overlap", text_overlap},
              {"text_pairs", text_pairs}};
}

std::string ExperimentConfig::hash() const { return config_hash(to_json()); }

void ExperimentConfig::validate() const {
  csv_columns(experiment);  // throws on unknown name
  if (sizes.empty()) throw ConfigError("need at least one size");
  if (!(t > 0.0 && t <= 1.0)) throw ConfigError("t must lie in (0,1]");
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  CsvTable csv(csv_columns(cfg.experiment), cfg.hash(), cfg.seed);

  const auto t0 = std::chrono::steady_clock::now();
  json body;
  if (cfg.experiment == "quantgap") body = run_quantgap(cfg, csv);
  else if (cfg.experiment == "speed") body = run_speed(cfg, csv);
  else if (cfg.experiment == "attack") body = run_attack_experiment(cfg, csv);
  else if (cfg.experiment == "dpgap") body = run_dpgap(cfg, csv);
  else if (cfg.experiment == "detect") body = run_detect(cfg, csv);
  else if (cfg.experiment == "contrib") body = run_contrib(cfg, csv);
  else body = run_textmatch(cfg, csv);

  ExperimentResult result;
  result.report = json{{"experiment", cfg.experiment},
                       {"config", cfg.to_json()},
                       {"config_hash", cfg.hash()},
                       {"seed", cfg.seed},
                       {"results", body},
                       {"wall_ms", 1000.0 * seconds_since(t0)}};

  if (!cfg.out_dir.empty()) {
    std::filesystem::create_directories(cfg.out_dir);
    result.json_path = cfg.out_dir / (cfg.experiment + ".json");
    result.csv_path = cfg.out_dir / (cfg.experiment + ".csv");
    std::ofstream jf(result.json_path, std::ios::trunc);
    jf << result.report.dump(2) << '\n';
    std::ofstream cf(result.csv_path, std::ios::trunc);
    cf << csv.render();
    if (!jf || !cf) throw Error("failed to write experiment outputs");
  }
  return result;
}

}  // namespace triwad
