#include <doctest.h>

#include <future>
#include <thread>

#include "test_util.hpp"
#include "triwad/error.hpp"
#include "triwad/fedwad.hpp"
#include "triwad/json_io.hpp"
#include "triwad/party_proto.hpp"
#include "triwad/trianglewad.hpp"

using namespace triwad;
using testutil::gaussian_cloud;
using testutil::points_1d;

namespace {

SessionConfig triangle_config(std::uint64_t seed,
                              SolveMode mode = SolveMode::Direct,
                              bool shared = true) {
  SessionConfig cfg;
  cfg.protocol = "triangle";
  cfg.seed = seed;
  cfg.triangle.defense_kind = DefenseKind::Ones;
  cfg.triangle.defense_shared = shared;
  cfg.triangle.mode = mode;
  cfg.triangle.fed.max_rounds = 12;
  cfg.triangle.fed.tol = 1e-9;
  cfg.triangle.fed.seed = seed + 1;
  return cfg;
}

SessionConfig fedwad_config(std::uint64_t seed, int rounds = 6) {
  SessionConfig cfg;
  cfg.protocol = "fedwad";
  cfg.seed = seed;
  cfg.fed.max_rounds = rounds;
  cfg.fed.tol = 0.0;
  cfg.fed.seed = seed + 1;
  return cfg;
}

// Runs server and client over loopback TCP on an ephemeral port.
std::pair<SessionReport, SessionReport> wire_roundtrip(
    const SessionConfig& cfg, const DiscreteMeasure& mu,
    const DiscreteMeasure& nu) {
  TcpListener listener("127.0.0.1", 0);
  const std::uint16_t port = listener.port();
  auto server = std::async(std::launch::async, [&] {
    auto ch = listener.accept_one(cfg.wire_timeout_ms);
    return run_party(PartyRole::Server, *ch, nu, cfg);
  });
  auto client_ch = TcpChannel::connect("127.0.0.1", port, cfg.wire_timeout_ms);
  SessionReport client = run_party(PartyRole::Client, *client_ch, mu, cfg);
  return {std::move(client), server.get()};
}

}  // namespace

TEST_CASE("in-process triangle session on the worked example") {
  auto mu = points_1d({0.0, 4.0});
  auto nu = points_1d({1.0, 5.0});
  SessionConfig cfg = triangle_config(7);
  SessionReport rep = run_session_inproc(cfg, mu, nu);
  CHECK(rep.estimate == doctest::Approx(1.0));
  CHECK(rep.solve_count == 3);
  // Exactly the allowed artifacts crossed.
  std::set<std::string> crossed(rep.audit.begin(), rep.audit.end());
  CHECK(crossed == std::set<std::string>{"defense", "eta_mu", "eta_nu"});
}

TEST_CASE("in-process fedwad session matches the module computation") {
  Rng rng(71);
  auto mu = gaussian_cloud(rng, 14, 2);
  auto nu = gaussian_cloud(rng, 14, 2, 2.0);
  SessionConfig cfg = fedwad_config(9, 5);
  SessionReport wire = run_session_inproc(cfg, mu, nu);

  FedConfig fed = cfg.fed;
  SessionReport module = fedwad_distance(mu, nu, fed);
  CHECK(wire.estimate == module.estimate);
  REQUIRE(wire.rounds.size() == module.rounds.size());
  for (std::size_t k = 0; k < wire.rounds.size(); ++k) {
    CHECK(wire.rounds[k].bound == module.rounds[k].bound);
    CHECK(wire.rounds[k].term_mu_eta == module.rounds[k].term_mu_eta);
  }
  CHECK(wire.solve_count == module.solve_count);
  CHECK(wire.artifacts.at("gamma") == module.artifacts.at("gamma"));

  std::set<std::string> crossed(wire.audit.begin(), wire.audit.end());
  CHECK(crossed == std::set<std::string>{"gamma", "eta_mu", "eta_nu"});
}

TEST_CASE("in-process triangle matches the module session") {
  Rng rng(72);
  auto mu = gaussian_cloud(rng, 18, 3);
  auto nu = gaussian_cloud(rng, 18, 3, 2.0);
  SessionConfig cfg = triangle_config(13);
  SessionReport proto = run_session_inproc(cfg, mu, nu);
  TriangleReport module = run_triangle_session(mu, nu, cfg.triangle, cfg.seed);
  CHECK(proto.estimate == module.estimate);
  CHECK(proto.moment_bound == module.bound);
  CHECK(proto.solve_count == module.solve_count);
}

TEST_CASE("raw-data sharing is rejected at configuration time") {
  SessionConfig cfg = triangle_config(1);
  cfg.visibility_override = {"raw_mu"};
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.visibility_override = {"nu"};
  auto mu = points_1d({0.0, 1.0});
  CHECK_THROWS_AS(run_session_inproc(cfg, mu, mu), ConfigError);
}

TEST_CASE("private defense never crosses the boundary") {
  Rng rng(73);
  auto mu = gaussian_cloud(rng, 10, 2);
  auto nu = gaussian_cloud(rng, 10, 2, 1.0);
  SessionConfig cfg = triangle_config(3, SolveMode::Direct, /*shared=*/false);
  SessionReport rep = run_session_inproc(cfg, mu, nu);
  for (const std::string& id : rep.audit) CHECK(id != "defense");
  CHECK(rep.artifacts.count("defense") == 0);
  std::set<std::string> crossed(rep.audit.begin(), rep.audit.end());
  CHECK(crossed == std::set<std::string>{"eta_mu", "eta_nu"});
}

TEST_CASE("federated triangle mode keeps the etas home") {
  Rng rng(74);
  auto mu = gaussian_cloud(rng, 12, 2);
  auto nu = gaussian_cloud(rng, 12, 2, 3.0);
  SessionConfig cfg = triangle_config(5, SolveMode::Federated);
  SessionReport rep = run_session_inproc(cfg, mu, nu);
  std::set<std::string> crossed(rep.audit.begin(), rep.audit.end());
  CHECK(crossed == std::set<std::string>{"defense", "fed_gamma", "fed_eta_mu",
                                         "fed_eta_nu"});
  // Sanity: nested federated estimate still lands near the truth.
  const double direct = wasserstein(mu, nu, 2.0);
  CHECK(rep.estimate == doctest::Approx(direct).epsilon(0.05));
}

TEST_CASE("wire runs byte-match in-process runs") {
  Rng rng(75);
  auto mu = gaussian_cloud(rng, 11, 2);
  auto nu = gaussian_cloud(rng, 13, 2, 1.5);

  std::vector<SessionConfig> matrix = {
      triangle_config(21), triangle_config(22, SolveMode::Direct, false),
      triangle_config(23, SolveMode::Federated), fedwad_config(24, 4)};
  for (const SessionConfig& cfg : matrix) {
    CAPTURE(cfg.protocol);
    SessionReport inproc = run_session_inproc(cfg, mu, nu);
    auto [client, server] = wire_roundtrip(cfg, mu, nu);
    CHECK(report_comparable_dump(client) == report_comparable_dump(inproc));
    CHECK(report_comparable_dump(server) == report_comparable_dump(inproc));
  }
}

TEST_CASE("version mismatch is refused") {
  TcpListener listener("127.0.0.1", 0);
  auto mu = points_1d({0.0, 1.0});
  SessionConfig cfg = triangle_config(2);
  auto server = std::async(std::launch::async, [&] {
    auto ch = listener.accept_one(5000);
    return run_party(PartyRole::Server, *ch, mu, cfg);
  });
  auto ch = TcpChannel::connect("127.0.0.1", listener.port(), 5000);
  WireMessage bad;
  bad.type = MsgType::Hello;
  bad.session_id = "x";
  bad.payload = {{"version", 2}, {"role", "client"}, {"session_id", "x"}};
  ch->send(bad);
  WireMessage reply = ch->recv();
  CHECK(reply.type == MsgType::Error);
  CHECK(reply.payload.at("message").get<std::string>() ==
        "unsupported version 2");
  CHECK_THROWS_AS(server.get(), ProtocolError);
}

TEST_CASE("malformed frames yield protocol errors, not crashes") {
  auto mu = points_1d({0.0, 1.0});
  SessionConfig cfg = triangle_config(4);
  cfg.wire_timeout_ms = 1500;

  const std::vector<std::string> payloads = {
      std::string("\xff\xff\xff\x7f", 4),               // absurd length prefix
      std::string("\x00\x00\x00\x00", 4),               // zero-length frame
      std::string("\x05\x00\x00\x00{1,2}", 9),          // invalid JSON
      std::string("\x20\x00\x00\x00{\"a\":1}", 11),     // truncated body
      std::string("\x07\x00\x00\x00{\"a\":1}", 11),     // JSON missing msg_type
      std::string("\x02\x00\x00\x00\x01\x02", 6),       // binary junk
  };
  for (std::size_t i = 0; i < payloads.size(); ++i) {
    CAPTURE(i);
    TcpListener listener("127.0.0.1", 0);
    auto server = std::async(std::launch::async, [&] {
      auto ch = listener.accept_one(1500);
      return run_party(PartyRole::Server, *ch, mu, cfg);
    });
    testutil::RawSocket raw("127.0.0.1", listener.port());
    raw.write_bytes(payloads[i]);
    raw.shutdown_write();
    CHECK_THROWS_AS(server.get(), ProtocolError);
  }
}

TEST_CASE("unexpected message type aborts the session") {
  auto mu = points_1d({0.0, 1.0});
  SessionConfig cfg = triangle_config(8);
  cfg.wire_timeout_ms = 1500;
  TcpListener listener("127.0.0.1", 0);
  auto server = std::async(std::launch::async, [&] {
    auto ch = listener.accept_one(1500);
    return run_party(PartyRole::Server, *ch, mu, cfg);
  });
  auto ch = TcpChannel::connect("127.0.0.1", listener.port(), 1500);
  WireMessage msg;
  msg.type = MsgType::Dist;  // session must open with HELLO
  msg.payload = {{"w_eta", 1.0}};
  ch->send(msg);
  CHECK_THROWS_AS(server.get(), ProtocolError);
}

TEST_CASE("peer disconnect mid-session raises a protocol error") {
  auto mu = points_1d({0.0, 1.0});
  SessionConfig cfg = triangle_config(6);
  cfg.wire_timeout_ms = 2000;
  TcpListener listener("127.0.0.1", 0);
  auto server = std::async(std::launch::async, [&] {
    auto ch = listener.accept_one(2000);
    return run_party(PartyRole::Server, *ch, mu, cfg);
  });
  {
    auto ch = TcpChannel::connect("127.0.0.1", listener.port(), 2000);
    WireMessage hello;
    hello.type = MsgType::Hello;
    hello.session_id = "s";
    hello.payload = {{"version", 1}, {"role", "client"}, {"session_id", "s"}};
    ch->send(hello);
    // Drop the connection before CONFIG.
  }
  CHECK_THROWS_AS(server.get(), ProtocolError);
}
