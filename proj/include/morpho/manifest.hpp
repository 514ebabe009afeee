#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace morpho {

inline constexpr const char* kToolVersion = "1.0.0";

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& path);

struct FileDigest {
  std::string path;
  std::string sha256;
};

// Files are digested directly; directories contribute every regular file
// below them in sorted order. `exclude` is skipped (the manifest itself).
std::vector<FileDigest> digest_paths(const std::vector<std::filesystem::path>& paths,
                                     const std::optional<std::filesystem::path>& exclude = std::nullopt);

/// Record of one command run. The timestamp comes from SOURCE_DATE_EPOCH
/// when set and is null otherwise, so reruns produce identical manifests.
struct RunManifest {
  std::string command;
  std::string config_json = "{}";  // fully resolved options
  std::optional<std::uint64_t> seed;
  std::vector<std::filesystem::path> inputs;
  std::vector<std::filesystem::path> outputs;

  std::string to_json() const;
  void write(const std::filesystem::path& path) const;

 private:
  mutable std::optional<std::filesystem::path> manifest_path_;
};

}  // namespace morpho
