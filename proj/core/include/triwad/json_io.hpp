#pragma once

#include <string>

#include <nlohmann/json_fwd.hpp>

#include "triwad/measure.hpp"
#include "triwad/report.hpp"

namespace triwad {

std::string base64_encode(std::string_view bytes);
std::string base64_decode(std::string_view text);

// Uniform measures travel as base64 WADM blobs so cross-process runs
// are bit-exact. Non-uniform weights never cross the boundary.
nlohmann::json measure_to_json(const DiscreteMeasure& m);
DiscreteMeasure measure_from_json(const nlohmann::json& j);

nlohmann::json round_to_json(const RoundTrace& r);
RoundTrace round_from_json(const nlohmann::json& j);

nlohmann::json report_to_json(const SessionReport& r);
SessionReport report_from_json(const nlohmann::json& j);

// Canonical dump (sorted keys) with the volatile wall-clock fields
// removed; equal strings mean equal runs.
std::string report_comparable_dump(const SessionReport& r);

// FNV-1a over a canonical JSON dump, as a hex string.
std::string config_hash(const nlohmann::json& cfg);

}  // namespace triwad
