#include "webzsl/manifest.hpp"

#include <cstdio>
#include <fstream>

#include "webzsl/corpus.hpp"

#ifndef WEBZSL_VERSION
#define WEBZSL_VERSION "0.0.0"
#endif
#ifndef WEBZSL_GIT_DESCRIBE
#define WEBZSL_GIT_DESCRIBE "unknown"
#endif

namespace webzsl {

std::string provenance() {
  return std::string("webzsl ") + WEBZSL_VERSION + " (" + WEBZSL_GIT_DESCRIBE + ")";
}

std::string config_hash(const nlohmann::json& config) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : config.dump()) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::filesystem::path manifest_path(const std::filesystem::path& artifact) {
  return artifact.string() + ".manifest.json";
}

void write_manifest(const std::filesystem::path& artifact, const Manifest& manifest) {
  nlohmann::json j;
  j["command"] = manifest.command;
  j["config"] = manifest.config;
  j["config_hash"] = config_hash(manifest.config);
  j["seeds"] = manifest.seeds;
  j["inputs"] = manifest.inputs;
  j["outputs"] = manifest.outputs;
  j["provenance"] = provenance();
  const auto path = manifest_path(artifact);
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw Error("write failed: " + path.string());
}

nlohmann::json read_manifest(const std::filesystem::path& artifact) {
  const auto path = manifest_path(artifact);
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error("malformed manifest " + path.string() + ": " + e.what());
  }
}

}  // namespace webzsl
