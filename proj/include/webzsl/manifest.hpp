#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace webzsl {

struct Manifest {
  std::string command;
  nlohmann::json config = nlohmann::json::object();
  std::map<std::string, std::uint64_t> seeds;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
};

// "webzsl <version> (<git describe>)", fixed at build time.
std::string provenance();

// FNV-1a 64 of the compact JSON dump, as 16 hex digits.
std::string config_hash(const nlohmann::json& config);

std::filesystem::path manifest_path(const std::filesystem::path& artifact);

// Writes `<artifact>.manifest.json`. No timestamps, so reruns are identical.
void write_manifest(const std::filesystem::path& artifact, const Manifest& manifest);
nlohmann::json read_manifest(const std::filesystem::path& artifact);

}  // namespace webzsl
