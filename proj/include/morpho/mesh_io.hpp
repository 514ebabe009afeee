#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "morpho/shape.hpp"

namespace morpho {

TriMesh read_off(const std::filesystem::path& path);
void write_off(const std::filesystem::path& path, const TriMesh& mesh);

// One label per line (LV_ENDO, LV_EPI, RV, SEPTUM).
std::vector<Region> read_region_map(const std::filesystem::path& path);
void write_region_map(const std::filesystem::path& path, const std::vector<Region>& regions);

inline constexpr const char* kRegionMapName = "regions.txt";

/// A directory of OFF meshes with identical connectivity; subject id = file stem.
struct MeshCorpus {
  std::vector<std::string> ids;  // sorted
  TriMesh templ;                 // connectivity and regions; vertices of the first mesh
  ShapeMatrix shapes;            // one flattened mesh per row, in `ids` order
};

// Region map is taken from `region_map` if given, else DIR/regions.txt when
// present. Throws FormatError naming the file whose connectivity differs.
MeshCorpus load_corpus(const std::filesystem::path& dir,
                       const std::optional<std::filesystem::path>& region_map = std::nullopt);
void write_corpus(const std::filesystem::path& dir, const std::vector<std::string>& ids, const ShapeMatrix& shapes,
                  const TriMesh& templ);

// Shortest round-trip decimal form of a double.
std::string format_double(double v);

}  // namespace morpho
