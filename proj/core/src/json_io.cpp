#include "triwad/json_io.hpp"

#include <array>
#include <cstdio>

#include <nlohmann/json.hpp>

#include "triwad/error.hpp"

namespace triwad {

namespace {
constexpr char kAlphabet[] =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
}

std::string base64_encode(std::string_view bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 3 <= bytes.size(); i += 3) {
    const unsigned v = (static_cast<unsigned char>(bytes[i]) << 16) |
                       (static_cast<unsigned char>(bytes[i + 1]) << 8) |
                       static_cast<unsigned char>(bytes[i + 2]);
    out.push_back(kAlphabet[(v >> 18) & 63]);
    out.push_back(kAlphabet[(v >> 12) & 63]);
    out.push_back(kAlphabet[(v >> 6) & 63]);
    out.push_back(kAlphabet[v & 63]);
  }
  const std::size_t rest = bytes.size() - i;
  if (rest == 1) {
    const unsigned v = static_cast<unsigned char>(bytes[i]) << 16;
    out.push_back(kAlphabet[(v >> 18) & 63]);
    out.push_back(kAlphabet[(v >> 12) & 63]);
    out.append("==");
  } else if (rest == 2) {
    const unsigned v = (static_cast<unsigned char>(bytes[i]) << 16) |
                       (static_cast<unsigned char>(bytes[i + 1]) << 8);
    out.push_back(kAlphabet[(v >> 18) & 63]);
    out.push_back(kAlphabet[(v >> 12) & 63]);
    out.push_back(kAlphabet[(v >> 6) & 63]);
    out.push_back('=');
  }
  return out;
}

std::string base64_decode(std::string_view text) {
  static const auto table = [] {
    std::array<signed char, 256> t;
    t.fill(-1);
    for (int k = 0; k < 64; ++k)
      t[static_cast<unsigned char>(kAlphabet[k])] = static_cast<signed char>(k);
    return t;
  }();
  if (text.size() % 4 != 0) throw ParseError("base64 length not a multiple of 4");
  std::string out;
  out.reserve(text.size() / 4 * 3);
  for (std::size_t i = 0; i < text.size(); i += 4) {
    int vals[4];
    int pad = 0;
    for (int k = 0; k < 4; ++k) {
      const char c = text[i + k];
      if (c == '=') {
        if (i + 4 != text.size() || k < 2) throw ParseError("bad base64 padding");
        vals[k] = 0;
        ++pad;
      } else {
        vals[k] = table[static_cast<unsigned char>(c)];
        if (vals[k] < 0) throw ParseError("bad base64 character");
        if (pad) throw ParseError("base64 data after padding");
      }
    }
    const unsigned v = (vals[0] << 18) | (vals[1] << 12) | (vals[2] << 6) | vals[3];
    out.push_back(static_cast<char>((v >> 16) & 0xff));
    if (pad < 2) out.push_back(static_cast<char>((v >> 8) & 0xff));
    if (pad < 1) out.push_back(static_cast<char>(v & 0xff));
  }
  return out;
}

nlohmann::json measure_to_json(const DiscreteMeasure& m) {
  if (!m.has_uniform_weights(1e-9))
    throw ProtocolError("only uniform measures may be serialized");
  return nlohmann::json{{"wadm", base64_encode(encode_wadm(m.support()))}};
}

DiscreteMeasure measure_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("wadm") || !j["wadm"].is_string())
    throw ParseError("measure payload missing wadm field");
  return uniform_measure(
      decode_wadm(base64_decode(j["wadm"].get<std::string>())));
}

nlohmann::json round_to_json(const RoundTrace& r) {
  return nlohmann::json{
      {"round", r.round},           {"term_mu_eta", r.term_mu_eta},
      {"term_eta_gamma", r.term_eta_gamma}, {"term_gamma_eta", r.term_gamma_eta},
      {"term_eta_nu", r.term_eta_nu},       {"bound", r.bound}};
}

RoundTrace round_from_json(const nlohmann::json& j) {
  RoundTrace r;
  r.round = j.at("round").get<int>();
  r.term_mu_eta = j.at("term_mu_eta").get<double>();
  r.term_eta_gamma = j.at("term_eta_gamma").get<double>();
  r.term_gamma_eta = j.at("term_gamma_eta").get<double>();
  r.term_eta_nu = j.at("term_eta_nu").get<double>();
  r.bound = j.at("bound").get<double>();
  return r;
}

nlohmann::json report_to_json(const SessionReport& r) {
  nlohmann::json rounds = nlohmann::json::array();
  for (const RoundTrace& tr : r.rounds) rounds.push_back(round_to_json(tr));
  nlohmann::json artifacts = nlohmann::json::object();
  for (const auto& [name, m] : r.artifacts) artifacts[name] = measure_to_json(m);
  return nlohmann::json{{"protocol", r.protocol},
                        {"mode", to_string(r.mode)},
                        {"estimate", r.estimate},
                        {"p", r.p},
                        {"t", r.t},
                        {"seed", r.seed},
                        {"config_hash", r.config_hash},
                        {"rounds", rounds},
                        {"artifacts", artifacts},
                        {"audit", r.audit},
                        {"moment_bound", r.moment_bound},
                        {"wall_ms", r.wall_ms},
                        {"solve_count", r.solve_count}};
}

SessionReport report_from_json(const nlohmann::json& j) {
  SessionReport r;
  r.protocol = j.at("protocol").get<std::string>();
  r.mode = parse_mode(j.at("mode").get<std::string>());
  r.estimate = j.at("estimate").get<double>();
  r.p = j.at("p").get<double>();
  r.t = j.at("t").get<double>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.config_hash = j.at("config_hash").get<std::string>();
  for (const auto& tr : j.at("rounds")) r.rounds.push_back(round_from_json(tr));
  for (const auto& [name, payload] : j.at("artifacts").items())
    r.artifacts.emplace(name, measure_from_json(payload));
  r.audit = j.at("audit").get<std::vector<std::string>>();
  r.moment_bound = j.at("moment_bound").get<double>();
  r.wall_ms = j.at("wall_ms").get<double>();
  r.solve_count = j.at("solve_count").get<std::uint64_t>();
  return r;
}

std::string report_comparable_dump(const SessionReport& r) {
  nlohmann::json j = report_to_json(r);
  j.erase("wall_ms");
  return j.dump();
}

std::string config_hash(const nlohmann::json& cfg) {
  const std::string dump = cfg.dump();
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (char c : dump) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

}  // namespace triwad
