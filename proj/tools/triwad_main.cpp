// Command-line front end: direct/fedwad/triangle distance runs, the
// red-team and valuation experiments, and the wire-protocol endpoint.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>

#include <nlohmann/json.hpp>

#include "triwad/error.hpp"
#include "triwad/experiments.hpp"
#include "triwad/json_io.hpp"
#include "triwad/ot.hpp"
#include "triwad/party_proto.hpp"
#include "triwad/rng.hpp"

namespace {

using namespace triwad;
using nlohmann::json;

struct MeasureArgs {
  std::vector<std::string> inputs;
  std::string format = "csv";

  DiscreteMeasure load(std::size_t index) const {
    if (index >= inputs.size())
      throw ConfigError("expected an --input file at position " +
                        std::to_string(index + 1));
    return uniform_measure(load_matrix(inputs[index], parse_format(format)));
  }
};

void add_measure_flags(CLI::App* cmd, MeasureArgs& args, int expected) {
  cmd->add_option("--input", args.inputs,
                  expected == 2 ? "Input matrices, mu first then nu"
                                : "Input matrix for this party")
      ->expected(expected)
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--format", args.format, "Matrix file format (csv|binary)")
      ->check(CLI::IsMember({"csv", "binary"}));
}

void emit(const json& out, const std::string& out_path) {
  const std::string text = out.dump(2);
  if (!out_path.empty()) {
    std::ofstream f(out_path, std::ios::trunc);
    f << text << '\n';
    if (!f) throw Error("cannot write " + out_path);
  }
  std::cout << text << '\n';
}

struct SessionFlags {
  double t = 0.5;
  double p = 2.0;
  std::string defense = "ones";
  std::size_t defense_size = 0;
  double sigma = 1.0;
  bool defense_private = false;
  std::string mode = "direct";
  int rounds = 20;
  double tol = 1e-6;
  std::uint64_t seed = 0;

  SessionConfig to_config(const std::string& protocol) const {
    SessionConfig cfg;
    cfg.protocol = protocol;
    cfg.seed = seed;
    cfg.triangle.defense_kind = parse_defense_kind(defense);
    cfg.triangle.defense_size = defense_size;
    cfg.triangle.sigma = sigma;
    cfg.triangle.defense_shared = !defense_private;
    cfg.triangle.t = t;
    cfg.triangle.p = p;
    cfg.triangle.mode = parse_mode(mode);
    cfg.triangle.fed.max_rounds = rounds;
    cfg.triangle.fed.tol = tol;
    cfg.triangle.fed.t = t;
    cfg.triangle.fed.p = p;
    cfg.triangle.fed.seed = SeedStream(seed).derive("fed_gamma");
    cfg.fed.max_rounds = rounds;
    cfg.fed.t = t;
    cfg.fed.p = p;
    cfg.fed.tol = tol;
    cfg.fed.seed = SeedStream(seed).derive("gamma");
    return cfg;
  }
};

void add_session_flags(CLI::App* cmd, SessionFlags& flags, bool triangle) {
  cmd->add_option("--t", flags.t, "Interpolation parameter in (0,1]");
  cmd->add_option("--p", flags.p, "Wasserstein exponent (>= 1)");
  cmd->add_option("--seed", flags.seed, "Root seed for the session");
  if (triangle) {
    cmd->add_option("--defense", flags.defense, "Defense kind (ones|gaussian)")
        ->check(CLI::IsMember({"ones", "gaussian"}));
    cmd->add_option("--defense-size", flags.defense_size,
                    "Defense support size (0: min of the party sizes)");
    cmd->add_option("--sigma", flags.sigma, "Gaussian defense scale");
    cmd->add_flag("--private-defense", flags.defense_private,
                  "Derive the defense out of band instead of sharing it");
    cmd->add_option("--mode", flags.mode,
                    "Final eta-distance computation (direct|federated)")
        ->check(CLI::IsMember({"direct", "federated"}));
  }
  cmd->add_option("--rounds", flags.rounds, "Federated round cap");
  cmd->add_option("--tol", flags.tol, "Federated stop tolerance");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Private Wasserstein distance toolkit"};
  app.require_subcommand(1);

  std::string out_path;
  app.add_option("--out", out_path, "Write the JSON report here as well");

  auto* direct = app.add_subcommand("direct", "Co-located exact distance");
  MeasureArgs direct_args;
  double direct_p = 2.0;
  add_measure_flags(direct, direct_args, 2);
  direct->add_option("--p", direct_p, "Wasserstein exponent");

  auto* fed = app.add_subcommand("fedwad", "Iterative federated distance");
  MeasureArgs fed_args;
  SessionFlags fed_flags;
  add_measure_flags(fed, fed_args, 2);
  add_session_flags(fed, fed_flags, /*triangle=*/false);

  auto* tri = app.add_subcommand("triangle", "One-round private distance");
  MeasureArgs tri_args;
  SessionFlags tri_flags;
  add_measure_flags(tri, tri_args, 2);
  add_session_flags(tri, tri_flags, /*triangle=*/true);

  auto* serve = app.add_subcommand("serve", "Run one wire-protocol session");
  MeasureArgs serve_args;
  SessionFlags serve_flags;
  std::string role = "server";
  std::string addr = "127.0.0.1";
  std::string protocol = "triangle";
  std::uint16_t port = kDefaultPort;
  int timeout_ms = 30000;
  serve->add_option("--role", role, "client|server")
      ->check(CLI::IsMember({"client", "server"}));
  serve->add_option("--addr", addr, "Bind (server) or connect (client) address");
  serve->add_option("--port", port, "TCP port");
  serve->add_option("--protocol", protocol, "fedwad|triangle")
      ->check(CLI::IsMember({"fedwad", "triangle"}));
  serve->add_option("--timeout-ms", timeout_ms, "Per-message receive timeout");
  add_measure_flags(serve, serve_args, 1);
  add_session_flags(serve, serve_flags, /*triangle=*/true);

  ExperimentConfig exp;
  std::string out_dir;
  std::string bench_name = "quantgap";
  auto add_experiment = [&](const std::string& name, const std::string& help) {
    auto* cmd = app.add_subcommand(name, help);
    cmd->add_option("--seed", exp.seed, "Experiment seed");
    cmd->add_option("--out-dir", out_dir, "Directory for JSON+CSV outputs");
    cmd->add_option("--sizes", exp.sizes, "Dataset sizes");
    cmd->add_option("--dim", exp.dim, "Feature dimension");
    cmd->add_option("--rounds", exp.fed_rounds, "Federated round cap");
    cmd->add_option("--defense", exp.defense, "Defense kind")
        ->transform(CLI::CheckedTransformer(
            std::map<std::string, DefenseKind>{
                {"ones", DefenseKind::Ones},
                {"gaussian", DefenseKind::Gaussian}},
            CLI::ignore_case));
    return cmd;
  };
  auto* attack_cmd =
      add_experiment("attack", "Reconstruction attack on the federated protocol");
  attack_cmd->add_option("--steps", exp.attack_steps, "Descent steps");
  attack_cmd->add_option("--lr", exp.attack_lr, "Learning rate");
  auto* dpgap_cmd =
      add_experiment("dpgap", "Distance gap under the gaussian mechanism");
  dpgap_cmd->add_option("--epsilons", exp.epsilons, "Privacy budgets");
  auto* detect_cmd = add_experiment("detect", "Noisy point detection rates");
  detect_cmd->add_option("--ratio", exp.corruption_ratio, "Corruption ratio");
  add_experiment("value", "Client contribution scores");
  add_experiment("textmatch", "Word retrieval rates from shared measures");
  auto* bench_cmd = add_experiment("bench", "Run a named experiment");
  bench_cmd->add_option("--experiment", bench_name,
                        "quantgap|speed|attack|dpgap|detect|contrib|textmatch");

  try {
    app.parse(argc, argv);

    if (direct->parsed()) {
      auto mu = direct_args.load(0);
      auto nu = direct_args.load(1);
      const auto t0 = std::chrono::steady_clock::now();
      const double w = wasserstein(mu, nu, direct_p);
      const double ms = std::chrono::duration<double, std::milli>(
                            std::chrono::steady_clock::now() - t0)
                            .count();
      emit(json{{"protocol", "direct"},
                {"estimate", w},
                {"p", direct_p},
                {"wall_ms", ms}},
           out_path);
      return 0;
    }
    if (fed->parsed()) {
      auto rep = run_session_inproc(fed_flags.to_config("fedwad"),
                                    fed_args.load(0), fed_args.load(1));
      emit(report_to_json(rep), out_path);
      return 0;
    }
    if (tri->parsed()) {
      auto rep = run_session_inproc(tri_flags.to_config("triangle"),
                                    tri_args.load(0), tri_args.load(1));
      emit(report_to_json(rep), out_path);
      return 0;
    }
    if (serve->parsed()) {
      auto data = serve_args.load(0);
      SessionConfig cfg = serve_flags.to_config(protocol);
      cfg.wire_timeout_ms = timeout_ms;
      SessionReport rep = role == "server"
                              ? serve_session(addr, port, data, cfg)
                              : connect_session(addr, port, data, cfg);
      emit(report_to_json(rep), out_path);
      return 0;
    }

    const std::vector<std::pair<std::string, std::string>> experiment_verbs = {
        {"attack", "attack"},   {"dpgap", "dpgap"},
        {"detect", "detect"},   {"value", "contrib"},
        {"textmatch", "textmatch"}, {"bench", bench_name}};
    for (const auto& [verb, name] : experiment_verbs) {
      if (!app.get_subcommand(verb)->parsed()) continue;
      exp.experiment = name;
      exp.out_dir = out_dir;
      auto result = run_experiment(exp);
      emit(result.report, out_path);
      return 0;
    }
    throw ConfigError("no subcommand given");
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const ProtocolError& e) {
    std::fprintf(stderr, "protocol error: %s\n", e.what());
    return 3;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
