#include "morpho/measure.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <utility>

#include "morpho/error.hpp"
#include "morpho/log.hpp"
#include "morpho/simd/kernels.hpp"

namespace morpho {

std::vector<Face> region_faces(const TriMesh& mesh, std::initializer_list<Region> regions) {
  return region_faces(mesh, std::vector<Region>(regions));
}

std::vector<Face> region_faces(const TriMesh& mesh, const std::vector<Region>& regions) {
  if (mesh.regions.size() != static_cast<std::size_t>(mesh.n_vertices())) {
    throw DataError("mesh has no per-vertex region map");
  }
  auto in_set = [&](std::int32_t v) {
    return std::find(regions.begin(), regions.end(), mesh.regions[static_cast<std::size_t>(v)]) != regions.end();
  };
  std::vector<Face> out;
  for (const Face& f : mesh.faces) {
    if (in_set(f[0]) && in_set(f[1]) && in_set(f[2])) out.push_back(f);
  }
  return out;
}

void require_closed_oriented(const std::vector<Face>& faces) {
  if (faces.empty()) throw DataError("region selects no faces");
  // Directed half-edge counts; a closed, consistently oriented surface uses
  // every directed edge exactly once and its reverse exactly once.
  std::map<std::pair<std::int32_t, std::int32_t>, int> half_edges;
  for (const Face& f : faces) {
    for (int k = 0; k < 3; ++k) ++half_edges[{f[k], f[(k + 1) % 3]}];
  }
  std::size_t boundary = 0;
  for (const auto& [edge, count] : half_edges) {
    if (count > 1) {
      throw DataError("surface is non-manifold or inconsistently oriented at edge (" + std::to_string(edge.first) +
                      "," + std::to_string(edge.second) + ")");
    }
    if (!half_edges.contains({edge.second, edge.first})) ++boundary;
  }
  if (boundary > 0) throw DataError("open surface: " + std::to_string(boundary) + " boundary edges");
}

double signed_volume_mm3(const TriMesh& mesh, const std::vector<Face>& faces) {
  // Translate the used vertices to their centroid first; the sum is
  // translation invariant for closed surfaces and this limits cancellation.
  std::vector<std::int32_t> used;
  used.reserve(faces.size() * 3);
  for (const Face& f : faces) used.insert(used.end(), f.begin(), f.end());
  std::sort(used.begin(), used.end());
  used.erase(std::unique(used.begin(), used.end()), used.end());

  Eigen::Vector3d c = Eigen::Vector3d::Zero();
  for (auto v : used) c += mesh.vertices.row(v).transpose();
  c /= static_cast<double>(std::max<std::size_t>(used.size(), 1));

  std::vector<double> xyz(static_cast<std::size_t>(mesh.vertices.size()));
  for (Eigen::Index v = 0; v < mesh.n_vertices(); ++v) {
    for (int d = 0; d < 3; ++d) xyz[static_cast<std::size_t>(3 * v + d)] = mesh.vertices(v, d) - c(d);
  }
  std::vector<std::int32_t> idx;
  idx.reserve(faces.size() * 3);
  for (const Face& f : faces) idx.insert(idx.end(), f.begin(), f.end());
  return simd::kernels().triple_product_sum(xyz.data(), idx.data(), faces.size()) / 6.0;
}

double closed_volume(const TriMesh& mesh, const std::vector<Region>& regions) {
  const std::vector<Face> faces = region_faces(mesh, regions);
  require_closed_oriented(faces);
  const double v = signed_volume_mm3(mesh, faces);
  if (v < 0.0) {
    std::string names;
    for (Region r : regions) names += std::string(names.empty() ? "" : "+") + std::string(region_name(r));
    warn("region " + names + " is inward-oriented; flipping face orientation");
  }
  return std::abs(v) / 1000.0;
}

MeasurementSet measure(const TriMesh& mesh) {
  MeasurementSet m;
  m.lv_edv = closed_volume(mesh, {Region::LvEndo});
  const double epi = closed_volume(mesh, {Region::LvEpi});
  m.rv_edv = closed_volume(mesh, {Region::Rv, Region::Septum});
  m.lv_mass = (epi - m.lv_edv) * kMyocardialDensity;
  return m;
}

}  // namespace morpho
