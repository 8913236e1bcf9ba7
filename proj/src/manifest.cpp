#include "dbi/manifest.hpp"

#include <cstdio>
#include <ctime>
#include <ostream>

#include <json.hpp>

namespace dbi {

std::string fnv1a64_hex(std::string_view bytes) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

std::string now_iso8601_utc() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_manifest_json(std::ostream& out, const RunManifest& manifest) {
  nlohmann::json j;
  j["tool_version"] = manifest.tool_version;
  j["config_hash"] = manifest.config_hash;
  j["base_seed"] = manifest.base_seed;
  j["created_utc"] = manifest.created_utc;
  j["completed_utc"] = manifest.completed_utc;
  j["outputs"] = manifest.outputs;
  out << j.dump(2) << "\n";
}

}  // namespace dbi
