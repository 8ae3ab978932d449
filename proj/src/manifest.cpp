#include "climadapt/manifest.hpp"

#include <array>
#include <fstream>
#include <memory>
#include <stdexcept>

#include <fmt/format.h>
#include <json.hpp>
#include <openssl/evp.h>

#include "climadapt/core.hpp"
#include "climadapt/text_io.hpp"

namespace climadapt {

std::string sha256_hex(std::string_view data) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), data.data(), data.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest.data(), &len) != 1) {
    throw std::runtime_error("SHA-256 computation failed");
  }
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

std::string sha256_file(const std::filesystem::path& path) { return sha256_hex(read_text_file(path)); }

std::vector<ManifestArtifact> checksum_files(const std::filesystem::path& out_dir,
                                             const std::vector<std::filesystem::path>& files) {
  std::vector<ManifestArtifact> out;
  for (const auto& f : files) {
    out.push_back({f.lexically_relative(out_dir).generic_string(), sha256_file(f)});
  }
  return out;
}

void append_manifest(const std::filesystem::path& out_dir, const RunManifest& m) {
  nlohmann::json artifacts = nlohmann::json::array();
  for (const auto& a : m.artifacts) artifacts.push_back({{"path", a.path}, {"sha256", a.sha256}});
  const nlohmann::json j{{"command", m.command},         {"config", m.config_path},
                         {"seeds", m.seeds},             {"scenarios", m.scenarios},
                         {"output_dir", m.output_dir},   {"artifacts", artifacts},
                         {"code_version", m.code_version}};
  std::filesystem::create_directories(out_dir);
  const auto path = out_dir / "manifest.jsonl";
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw std::runtime_error(fmt::format("cannot append to '{}'", path.string()));
  out << j.dump() << '\n';
  if (!out) throw std::runtime_error(fmt::format("write failed for '{}'", path.string()));
}

}  // namespace climadapt
