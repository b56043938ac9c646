#include "triwad/party_proto.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <future>

#include "triwad/error.hpp"
#include "triwad/json_io.hpp"
#include "triwad/rng.hpp"

namespace triwad {

std::string to_string(PartyRole role) {
  return role == PartyRole::Client ? "client" : "server";
}

PartyRole parse_role(const std::string& name) {
  if (name == "client") return PartyRole::Client;
  if (name == "server") return PartyRole::Server;
  throw ConfigError("unknown role '" + name + "' (expected client|server)");
}

void SessionConfig::validate() const {
  if (protocol != "fedwad" && protocol != "triangle")
    throw ConfigError("unknown protocol '" + protocol + "'");
  if (protocol == "triangle") triangle.validate();
  if (protocol == "fedwad" && fed.max_rounds < 1)
    throw ConfigError("fedwad needs at least one round");
  static const std::set<std::string> kRawIds = {"mu", "nu", "raw_mu", "raw_nu"};
  for (const std::string& id : visibility_override) {
    if (kRawIds.count(id))
      throw ConfigError("raw data artifact '" + id +
                        "' can never cross the party boundary");
  }
}

nlohmann::json SessionConfig::to_json() const {
  return nlohmann::json{
      {"protocol", protocol},
      {"seed", seed},
      {"triangle",
       {{"defense_kind", to_string(triangle.defense_kind)},
        {"defense_size", triangle.defense_size},
        {"sigma", triangle.sigma},
        {"defense_shared", triangle.defense_shared},
        {"t", triangle.t},
        {"p", triangle.p},
        {"mode", to_string(triangle.mode)},
        {"fed",
         {{"max_rounds", triangle.fed.max_rounds},
          {"t", triangle.fed.t},
          {"t_nu", triangle.fed.t_nu},
          {"p", triangle.fed.p},
          {"tol", triangle.fed.tol},
          {"seed", triangle.fed.seed},
          {"gamma_size", triangle.fed.gamma_size}}}}},
      {"fed",
       {{"max_rounds", fed.max_rounds},
        {"t", fed.t},
        {"t_nu", fed.t_nu},
        {"p", fed.p},
        {"tol", fed.tol},
        {"seed", fed.seed},
        {"gamma_size", fed.gamma_size}}},
      {"visibility_override", visibility_override}};
}

namespace {

FedConfig fed_from_json(const nlohmann::json& j) {
  FedConfig f;
  f.max_rounds = j.at("max_rounds").get<int>();
  f.t = j.at("t").get<double>();
  f.t_nu = j.at("t_nu").get<double>();
  f.p = j.at("p").get<double>();
  f.tol = j.at("tol").get<double>();
  f.seed = j.at("seed").get<std::uint64_t>();
  f.gamma_size = j.at("gamma_size").get<std::size_t>();
  return f;
}

}  // namespace

SessionConfig SessionConfig::from_json(const nlohmann::json& j) {
  SessionConfig cfg;
  cfg.protocol = j.at("protocol").get<std::string>();
  cfg.seed = j.at("seed").get<std::uint64_t>();
  const auto& t = j.at("triangle");
  cfg.triangle.defense_kind =
      parse_defense_kind(t.at("defense_kind").get<std::string>());
  cfg.triangle.defense_size = t.at("defense_size").get<std::size_t>();
  cfg.triangle.sigma = t.at("sigma").get<double>();
  cfg.triangle.defense_shared = t.at("defense_shared").get<bool>();
  cfg.triangle.t = t.at("t").get<double>();
  cfg.triangle.p = t.at("p").get<double>();
  cfg.triangle.mode = parse_mode(t.at("mode").get<std::string>());
  cfg.triangle.fed = fed_from_json(t.at("fed"));
  cfg.fed = fed_from_json(j.at("fed"));
  cfg.visibility_override =
      j.at("visibility_override").get<std::vector<std::string>>();
  return cfg;
}

std::string SessionConfig::hash() const { return config_hash(to_json()); }

std::string SessionConfig::session_id() const {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(
                    splitmix64(seed ^ 0x7472697761643273ull)));
  return std::string(buf);
}

std::set<std::string> allowed_artifacts(const SessionConfig& cfg) {
  std::set<std::string> out;
  if (cfg.protocol == "fedwad") {
    out = {"gamma", "eta_mu", "eta_nu"};
  } else {
    if (cfg.triangle.defense_shared) out.insert("defense");
    if (cfg.triangle.mode == SolveMode::Direct) {
      out.insert("eta_mu");
      out.insert("eta_nu");
    } else {
      out.insert("fed_gamma");
      out.insert("fed_eta_mu");
      out.insert("fed_eta_nu");
    }
  }
  for (const std::string& id : cfg.visibility_override) out.insert(id);
  return out;
}

namespace {

// One party's view of a session: a single-threaded state machine over a
// message channel. All measure crossings funnel through send_measure /
// recv_measure, where the visibility auditor lives.
class PartyEngine {
public:
  PartyEngine(PartyRole role, Channel& channel, const DiscreteMeasure& data,
              const SessionConfig& cfg)
      : role_(role),
        ch_(channel),
        data_(data),
        cfg_(cfg),
        allowed_(allowed_artifacts(cfg)) {}

  SessionReport run() {
    cfg_.validate();
    try {
      handshake();
      return cfg_.protocol == "fedwad" ? run_fedwad() : run_triangle();
    } catch (const ProtocolError&) {
      throw;
    } catch (const Error& e) {
      fail(e.what());
      throw;
    }
  }

private:
  // ---- messaging ----------------------------------------------------------

  void send_msg(MsgType type, nlohmann::json payload) {
    WireMessage msg;
    msg.type = type;
    msg.session_id = session_;
    msg.payload = std::move(payload);
    ch_.send(msg);
  }

  WireMessage recv_expect(MsgType type) {
    WireMessage msg = ch_.recv();
    if (msg.type == MsgType::Error)
      throw ProtocolError("peer reported: " +
                          msg.payload.value("message", std::string{}));
    if (msg.type != type)
      throw ProtocolError("expected " + to_string(type) + ", got " +
                          to_string(msg.type));
    return msg;
  }

  // Best-effort ERROR notification before aborting the session.
  void fail(const std::string& message) {
    try {
      send_msg(MsgType::Error, {{"message", message}});
    } catch (...) {
    }
  }

  void record_crossing(const std::string& artifact) {
    if (!allowed_.count(artifact)) {
      const std::string message =
          "visibility violation: artifact '" + artifact +
          "' is not in the protocol's allowed set";
      fail(message);
      throw ProtocolError(message);
    }
    audit_.push_back(artifact);
  }

  void send_measure(MsgType type, const std::string& artifact,
                    const DiscreteMeasure& m, nlohmann::json extra = {}) {
    record_crossing(artifact);
    nlohmann::json payload = std::move(extra);
    payload["artifact"] = artifact;
    payload["measure"] = measure_to_json(m);
    send_msg(type, std::move(payload));
  }

  DiscreteMeasure recv_measure(MsgType type, const std::string& artifact,
                               nlohmann::json* extra = nullptr) {
    WireMessage msg = recv_expect(type);
    const std::string got = msg.payload.value("artifact", std::string{});
    if (got != artifact)
      throw ProtocolError("expected artifact '" + artifact + "', got '" + got +
                          "'");
    record_crossing(artifact);
    DiscreteMeasure m = measure_from_json(msg.payload.at("measure"));
    if (extra) *extra = std::move(msg.payload);
    return m;
  }

  // ---- counted solver calls ----------------------------------------------

  double dist(const DiscreteMeasure& a, const DiscreteMeasure& b, double p) {
    ++solves_;
    return wasserstein(a, b, p);
  }

  InterpolatingMeasure interp(const DiscreteMeasure& src,
                              const DiscreteMeasure& dst, double t, double p) {
    ++solves_;
    return interpolate(src, dst, t, p);
  }

  // ---- handshake ----------------------------------------------------------

  void handshake() {
    if (role_ == PartyRole::Client) {
      session_ = cfg_.session_id();
      send_msg(MsgType::Hello, {{"version", kWireVersion},
                                {"role", "client"},
                                {"session_id", session_}});
      WireMessage hello = recv_expect(MsgType::Hello);
      check_version(hello);
      if (hello.payload.value("role", std::string{}) != "server")
        throw ProtocolError("peer did not identify as server");
      send_msg(MsgType::Config,
               {{"config", cfg_.to_json()}, {"size", data_.size()}});
      WireMessage conf = recv_expect(MsgType::Config);
      check_config(conf);
      m_ = data_.size();
      n_ = conf.payload.at("size").get<std::size_t>();
    } else {
      WireMessage hello = recv_expect(MsgType::Hello);
      check_version(hello);
      if (hello.payload.value("role", std::string{}) != "client")
        throw ProtocolError("peer did not identify as client");
      session_ = hello.payload.value("session_id", std::string{});
      send_msg(MsgType::Hello, {{"version", kWireVersion},
                                {"role", "server"},
                                {"session_id", session_}});
      WireMessage conf = recv_expect(MsgType::Config);
      check_config(conf);
      m_ = conf.payload.at("size").get<std::size_t>();
      n_ = data_.size();
      send_msg(MsgType::Config,
               {{"config", cfg_.to_json()}, {"size", data_.size()}});
    }
  }

  void check_version(const WireMessage& hello) {
    const auto version = hello.payload.value("version", 0u);
    if (version != kWireVersion) {
      const std::string message =
          "unsupported version " + std::to_string(version);
      fail(message);
      throw ProtocolError(message);
    }
  }

  void check_config(const WireMessage& conf) {
    if (!conf.payload.contains("config") || !conf.payload.contains("size"))
      throw ProtocolError("malformed CONFIG payload");
    if (conf.payload.at("config").dump() != cfg_.to_json().dump()) {
      const std::string message = "config mismatch between endpoints";
      fail(message);
      throw ProtocolError(message);
    }
  }

  // ---- fedwad exchange ------------------------------------------------

  struct FedOutcome {
    double bound = 0.0;
    std::vector<RoundTrace> rounds;
    DiscreteMeasure gamma;
    DiscreteMeasure eta_mu;
    DiscreteMeasure eta_nu;
    std::uint64_t peer_solves = 0;
  };

  // The alternating loop from this party's perspective, over arbitrary
  // local data (raw measures for the fedwad protocol, local etas for
  // the federated triangle branch). `prefix` namespaces artifact ids.
  FedOutcome fed_exchange(const DiscreteMeasure& local, const FedConfig& fed,
                          const std::string& prefix, std::size_t gamma_size) {
    FedOutcome out;
    const double p = fed.p;
    DiscreteMeasure gamma;

    if (role_ == PartyRole::Client) {
      gamma = random_gamma(gamma_size, local.dim(), fed.seed);
      send_measure(MsgType::ImShare, prefix + "gamma", gamma, {{"round", 0}});
      const double wa = dist(local, gamma, p);
      send_msg(MsgType::Dist, {{"round", 0}, {"term_mu_eta", wa}});
      WireMessage r0 = recv_expect(MsgType::Dist);
      RoundTrace tr0;
      tr0.round = 0;
      tr0.term_mu_eta = wa;
      tr0.term_eta_nu = r0.payload.at("term_eta_nu").get<double>();
      tr0.bound = r0.payload.at("bound").get<double>();
      out.rounds.push_back(tr0);

      InterpolatingMeasure eta_mu;
      for (int k = 1; k <= fed.max_rounds; ++k) {
        eta_mu = interp(local, gamma, fed.t, p);
        send_measure(MsgType::ImShare, prefix + "eta_mu", eta_mu.measure,
                     {{"round", k}});
        const double t1 = dist(local, eta_mu.measure, p);
        send_msg(MsgType::Dist,
                 {{"round", k}, {"term_mu_eta", t1}, {"solves", solves_}});
        DiscreteMeasure eta_nu =
            recv_measure(MsgType::ImShare, prefix + "eta_nu");
        gamma = recv_measure(MsgType::ImShare, prefix + "gamma");
        WireMessage dmsg = recv_expect(MsgType::Dist);
        RoundTrace tr = round_from_json(dmsg.payload.at("trace"));
        out.rounds.push_back(tr);
        out.eta_nu = std::move(eta_nu);
        if (!dmsg.payload.at("cont").get<bool>()) break;
      }
      out.eta_mu = eta_mu.measure;
    } else {
      nlohmann::json extra;
      gamma = recv_measure(MsgType::ImShare, prefix + "gamma", &extra);
      WireMessage c0 = recv_expect(MsgType::Dist);
      const double wa = c0.payload.at("term_mu_eta").get<double>();
      const double wb = dist(gamma, local, p);
      RoundTrace tr0;
      tr0.round = 0;
      tr0.term_mu_eta = wa;
      tr0.term_eta_nu = wb;
      tr0.bound = wa + wb;
      out.rounds.push_back(tr0);
      send_msg(MsgType::Dist,
               {{"round", 0}, {"term_eta_nu", wb}, {"bound", tr0.bound}});

      double prev_bound = tr0.bound;
      for (int k = 1; k <= fed.max_rounds; ++k) {
        DiscreteMeasure eta_mu =
            recv_measure(MsgType::ImShare, prefix + "eta_mu");
        WireMessage cmsg = recv_expect(MsgType::Dist);
        const double t1 = cmsg.payload.at("term_mu_eta").get<double>();
        out.peer_solves = cmsg.payload.at("solves").get<std::uint64_t>();

        InterpolatingMeasure eta_nu =
            interp(gamma, local, fed.effective_t_nu(), p);
        send_measure(MsgType::ImShare, prefix + "eta_nu", eta_nu.measure,
                     {{"round", k}});
        DiscreteMeasure gamma_next =
            interp(eta_nu.measure, eta_mu, 0.5, p).measure;
        send_measure(MsgType::ImShare, prefix + "gamma", gamma_next,
                     {{"round", k}});

        RoundTrace tr;
        tr.round = k;
        tr.term_mu_eta = t1;
        tr.term_eta_gamma = dist(eta_mu, gamma_next, p);
        tr.term_gamma_eta = dist(gamma_next, eta_nu.measure, p);
        tr.term_eta_nu = dist(eta_nu.measure, local, p);
        tr.bound = tr.term_mu_eta + tr.term_eta_gamma + tr.term_gamma_eta +
                   tr.term_eta_nu;
        out.rounds.push_back(tr);

        const bool stop =
            std::abs(tr.bound - prev_bound) < fed.tol || k == fed.max_rounds;
        prev_bound = tr.bound;
        send_msg(MsgType::Dist,
                 {{"round", k}, {"trace", round_to_json(tr)}, {"cont", !stop}});

        gamma = std::move(gamma_next);
        out.eta_mu = std::move(eta_mu);
        out.eta_nu = eta_nu.measure;
        if (stop) break;
      }
      out.bound = prev_bound;
    }

    out.gamma = std::move(gamma);
    if (role_ == PartyRole::Client && !out.rounds.empty())
      out.bound = out.rounds.back().bound;
    return out;
  }

  // ---- protocols ------------------------------------------------------

  SessionReport run_fedwad() {
    FedOutcome out =
        fed_exchange(data_, cfg_.fed, "", std::min(m_, n_));
    if (role_ == PartyRole::Server) {
      SessionReport rep;
      rep.protocol = "fedwad";
      rep.mode = SolveMode::Federated;
      rep.estimate = out.bound;
      rep.p = cfg_.fed.p;
      rep.t = cfg_.fed.t;
      rep.seed = cfg_.seed;
      rep.config_hash = cfg_.hash();
      rep.rounds = std::move(out.rounds);
      rep.artifacts.emplace("gamma", out.gamma);
      if (!out.eta_mu.empty()) rep.artifacts.emplace("eta_mu", out.eta_mu);
      if (!out.eta_nu.empty()) rep.artifacts.emplace("eta_nu", out.eta_nu);
      rep.audit = audit_;
      rep.solve_count = out.peer_solves + solves_;
      send_msg(MsgType::Report, report_to_json(rep));
      return rep;
    }
    WireMessage rmsg = recv_expect(MsgType::Report);
    return report_from_json(rmsg.payload);
  }

  SessionReport run_triangle() {
    const TriangleConfig& tri = cfg_.triangle;
    const std::size_t defense_size =
        tri.defense_size ? tri.defense_size : std::min(m_, n_);

    DefenseData defense;
    if (role_ == PartyRole::Client) {
      defense = make_defense(tri.defense_kind, defense_size, data_.dim(),
                             tri.sigma, SeedStream(cfg_.seed).derive("defense"));
      defense.shared = tri.defense_shared;
      if (tri.defense_shared)
        send_measure(MsgType::Measure, "defense", defense.measure);
    } else {
      if (tri.defense_shared) {
        defense.measure = recv_measure(MsgType::Measure, "defense");
        defense.kind = tri.defense_kind;
        defense.sigma = tri.sigma;
      } else {
        // Provisioned out of band: both sides derive the reference from
        // the session seed instead of moving it over the data channel.
        defense = make_defense(tri.defense_kind, defense_size, data_.dim(),
                               tri.sigma,
                               SeedStream(cfg_.seed).derive("defense"));
      }
      defense.shared = tri.defense_shared;
    }

    ++solves_;
    InterpolatingMeasure eta = local_interpolate(defense, data_, tri.t, tri.p);
    eta.dst_id = role_ == PartyRole::Client ? "mu" : "nu";

    SessionReport rep;
    rep.protocol = "triangle";
    rep.mode = tri.mode;
    rep.p = tri.p;
    rep.t = tri.t;
    rep.seed = cfg_.seed;
    rep.config_hash = cfg_.hash();
    rep.moment_bound = moment_bound(defense, tri.p);

    if (tri.mode == SolveMode::Direct) {
      if (role_ == PartyRole::Client) {
        DiscreteMeasure eta_nu = recv_measure(MsgType::ImShare, "eta_nu");
        send_measure(MsgType::ImShare, "eta_mu", eta.measure);
        const double w_eta = dist(eta.measure, eta_nu, tri.p);
        send_msg(MsgType::Dist, {{"w_eta", w_eta}, {"solves", solves_}});
        WireMessage rmsg = recv_expect(MsgType::Report);
        return report_from_json(rmsg.payload);
      }
      send_measure(MsgType::ImShare, "eta_nu", eta.measure);
      DiscreteMeasure eta_mu = recv_measure(MsgType::ImShare, "eta_mu");
      WireMessage dmsg = recv_expect(MsgType::Dist);
      const double w_eta = dmsg.payload.at("w_eta").get<double>();
      rep.estimate = w_eta / tri.t;
      if (defense.shared) rep.artifacts.emplace("defense", defense.measure);
      rep.artifacts.emplace("eta_mu", eta_mu);
      rep.artifacts.emplace("eta_nu", eta.measure);
      rep.audit = audit_;
      rep.solve_count =
          dmsg.payload.at("solves").get<std::uint64_t>() + solves_;
      send_msg(MsgType::Report, report_to_json(rep));
      return rep;
    }

    // Federated branch: the etas stay home and the alternating loop
    // runs between them.
    FedOutcome out =
        fed_exchange(eta.measure, tri.fed, "fed_", defense_size);
    if (role_ == PartyRole::Server) {
      rep.estimate = out.bound / tri.t;
      rep.rounds = std::move(out.rounds);
      if (defense.shared) rep.artifacts.emplace("defense", defense.measure);
      rep.artifacts.emplace("fed_gamma", out.gamma);
      if (!out.eta_mu.empty()) rep.artifacts.emplace("fed_eta_mu", out.eta_mu);
      if (!out.eta_nu.empty()) rep.artifacts.emplace("fed_eta_nu", out.eta_nu);
      rep.audit = audit_;
      rep.solve_count = out.peer_solves + solves_;
      send_msg(MsgType::Report, report_to_json(rep));
      return rep;
    }
    WireMessage rmsg = recv_expect(MsgType::Report);
    return report_from_json(rmsg.payload);
  }

  PartyRole role_;
  Channel& ch_;
  const DiscreteMeasure& data_;
  SessionConfig cfg_;
  std::set<std::string> allowed_;
  std::vector<std::string> audit_;
  std::uint64_t solves_ = 0;
  std::size_t m_ = 0, n_ = 0;
  std::string session_;
};

}  // namespace

SessionReport run_party(PartyRole role, Channel& channel,
                        const DiscreteMeasure& data,
                        const SessionConfig& cfg) {
  PartyEngine engine(role, channel, data, cfg);
  return engine.run();
}

namespace {

double ms_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now() - t0)
      .count();
}

}  // namespace

SessionReport run_session_inproc(const SessionConfig& cfg,
                                 const DiscreteMeasure& mu,
                                 const DiscreteMeasure& nu) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  auto [client_ch, server_ch] = LoopChannel::make_pair();
  auto server = std::async(std::launch::async,
                           [&, ch = std::move(server_ch)]() mutable {
                             return run_party(PartyRole::Server, *ch, nu, cfg);
                           });
  SessionReport client_report;
  {
    auto ch = std::move(client_ch);
    client_report = run_party(PartyRole::Client, *ch, mu, cfg);
  }
  SessionReport server_report = server.get();
  if (report_comparable_dump(client_report) !=
      report_comparable_dump(server_report))
    throw ProtocolError("party reports diverged");
  client_report.wall_ms = ms_since(t0);
  return client_report;
}

SessionReport serve_session(const std::string& bind_addr, std::uint16_t port,
                            const DiscreteMeasure& data,
                            const SessionConfig& cfg) {
  cfg.validate();
  TcpListener listener(bind_addr, port);
  auto channel = listener.accept_one(cfg.wire_timeout_ms);
  const auto t0 = std::chrono::steady_clock::now();
  SessionReport report = run_party(PartyRole::Server, *channel, data, cfg);
  report.wall_ms = ms_since(t0);
  return report;
}

SessionReport connect_session(const std::string& host, std::uint16_t port,
                              const DiscreteMeasure& data,
                              const SessionConfig& cfg) {
  cfg.validate();
  auto channel = TcpChannel::connect(host, port, cfg.wire_timeout_ms);
  const auto t0 = std::chrono::steady_clock::now();
  SessionReport report = run_party(PartyRole::Client, *channel, data, cfg);
  report.wall_ms = ms_since(t0);
  return report;
}

}  // namespace triwad
