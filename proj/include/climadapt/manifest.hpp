#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace climadapt {

inline constexpr std::string_view kCodeVersion = "climadapt 0.1.0";

// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& path);

struct ManifestArtifact {
  std::string path;  // relative to the output directory
  std::string sha256;
};

struct RunManifest {
  std::string command;
  std::string config_path;
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> scenarios;
  std::string output_dir;
  std::vector<ManifestArtifact> artifacts;
  std::string code_version = std::string(kCodeVersion);
};

// Checksums every listed file; recorded paths are relative to out_dir.
std::vector<ManifestArtifact> checksum_files(const std::filesystem::path& out_dir,
                                             const std::vector<std::filesystem::path>& files);

// Appends one JSON line to <out_dir>/manifest.jsonl; earlier lines are
// never rewritten.
void append_manifest(const std::filesystem::path& out_dir, const RunManifest& m);

}  // namespace climadapt
