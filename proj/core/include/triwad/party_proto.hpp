#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "triwad/report.hpp"
#include "triwad/trianglewad.hpp"
#include "triwad/wire.hpp"

namespace triwad {

/// The client holds mu and initiates; the server holds nu and listens.
enum class PartyRole { Client, Server };

std::string to_string(PartyRole role);
PartyRole parse_role(const std::string& name);

/// Everything a two-party session needs. Both endpoints must be
/// configured identically; the CONFIG handshake verifies it.
struct SessionConfig {
  std::string protocol = "triangle";  // fedwad | triangle
  TriangleConfig triangle;            // triangle params incl. nested fed
  FedConfig fed;                      // fedwad-protocol params
  std::uint64_t seed = 0;
  int wire_timeout_ms = 30000;  // transport-local, not part of the hash
  // Extra measure-artifact ids to admit across the boundary. Raw data
  // ids are rejected outright.
  std::vector<std::string> visibility_override;

  double p() const { return protocol == "fedwad" ? fed.p : triangle.p; }
  double t() const { return protocol == "fedwad" ? fed.t : triangle.t; }

  void validate() const;
  nlohmann::json to_json() const;
  static SessionConfig from_json(const nlohmann::json& j);
  std::string hash() const;
  std::string session_id() const;
};

// The exact measure-artifact ids the protocol is allowed to move across
// the party boundary under this config.
std::set<std::string> allowed_artifacts(const SessionConfig& cfg);

// Both parties as in-process state machines over an in-memory channel;
// the visibility auditor vets every measure crossing in both engines.
// Returns the client's report (the server's is identical).
SessionReport run_session_inproc(const SessionConfig& cfg,
                                 const DiscreteMeasure& mu,
                                 const DiscreteMeasure& nu);

// One wire session over TCP. The server binds and accepts a single
// connection; the client connects. Produces the same report as
// run_session_inproc for the same config (wall-clock aside).
SessionReport serve_session(const std::string& bind_addr, std::uint16_t port,
                            const DiscreteMeasure& data,
                            const SessionConfig& cfg);
SessionReport connect_session(const std::string& host, std::uint16_t port,
                              const DiscreteMeasure& data,
                              const SessionConfig& cfg);

// Engine entry shared by both transports; exposed for tests that drive
// custom channels.
SessionReport run_party(PartyRole role, Channel& channel,
                        const DiscreteMeasure& data, const SessionConfig& cfg);

}  // namespace triwad
