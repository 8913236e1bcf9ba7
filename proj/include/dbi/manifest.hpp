#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace dbi {

inline constexpr const char* kToolVersion = "0.1.0";

// FNV-1a 64-bit digest, hex encoded.
std::string fnv1a64_hex(std::string_view bytes);

std::string now_iso8601_utc();

// Provenance record written next to every simulation's outputs.
struct RunManifest {
  std::string tool_version = kToolVersion;
  std::string config_hash;  // digest of the canonicalized resolved config
  std::uint64_t base_seed = 0;
  std::string created_utc;
  std::string completed_utc;
  std::vector<std::string> outputs;
};

void write_manifest_json(std::ostream& out, const RunManifest& manifest);

}  // namespace dbi
