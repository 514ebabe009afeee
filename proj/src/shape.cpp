#include "morpho/shape.hpp"

#include <cmath>

#include "morpho/error.hpp"
#include "morpho/simd/kernels.hpp"

namespace morpho {

ShapeVector::ShapeVector(Eigen::VectorXd coords) : coords_(std::move(coords)) {
  if (coords_.size() % 3 != 0) {
    throw DimensionError("shape vector length " + std::to_string(coords_.size()) + " is not a multiple of 3");
  }
  if (!coords_.allFinite()) throw DataError("shape vector contains non-finite coordinates");
}

std::string_view region_name(Region r) {
  switch (r) {
    case Region::LvEndo: return "LV_ENDO";
    case Region::LvEpi: return "LV_EPI";
    case Region::Rv: return "RV";
    case Region::Septum: return "SEPTUM";
  }
  return "?";
}

Region parse_region(std::string_view name) {
  if (name == "LV_ENDO") return Region::LvEndo;
  if (name == "LV_EPI") return Region::LvEpi;
  if (name == "RV") return Region::Rv;
  if (name == "SEPTUM") return Region::Septum;
  throw FormatError("unknown region label '" + std::string(name) + "'");
}

void TriMesh::validate() const {
  const auto n = static_cast<std::int64_t>(vertices.rows());
  for (std::size_t f = 0; f < faces.size(); ++f) {
    const Face& face = faces[f];
    for (auto idx : face) {
      if (idx < 0 || idx >= n) {
        throw FormatError("face " + std::to_string(f) + " references vertex " + std::to_string(idx) +
                          " outside [0," + std::to_string(n) + ")");
      }
    }
    if (face[0] == face[1] || face[1] == face[2] || face[0] == face[2]) {
      throw FormatError("face " + std::to_string(f) + " is degenerate (repeated vertex index)");
    }
  }
  if (!regions.empty() && static_cast<std::int64_t>(regions.size()) != n) {
    throw DimensionError("region map has " + std::to_string(regions.size()) + " labels for " + std::to_string(n) +
                         " vertices");
  }
}

bool TriMesh::same_connectivity(const TriMesh& other) const {
  return vertices.rows() == other.vertices.rows() && faces == other.faces;
}

ShapeVector flatten(const TriMesh& mesh) {
  Eigen::VectorXd v(mesh.vertices.size());
  // Row-major storage is already (x,y,z) per vertex.
  std::copy(mesh.vertices.data(), mesh.vertices.data() + mesh.vertices.size(), v.data());
  return ShapeVector(std::move(v));
}

TriMesh unflatten(const ShapeVector& v, const TriMesh& templ) {
  if (v.size() != 3 * templ.n_vertices()) {
    throw DimensionError("shape vector of length " + std::to_string(v.size()) + " does not match template with " +
                         std::to_string(templ.n_vertices()) + " vertices");
  }
  TriMesh out;
  out.vertices.resize(templ.n_vertices(), 3);
  std::copy(v.coords().data(), v.coords().data() + v.size(), out.vertices.data());
  out.faces = templ.faces;
  out.regions = templ.regions;
  return out;
}

ShapeVector RigidTransform::apply(const ShapeVector& shape) const {
  simd::Mat3 r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r[3 * i + j] = rotation(i, j);
  const simd::Vec3 t{translation.x(), translation.y(), translation.z()};
  Eigen::VectorXd out(shape.size());
  simd::kernels().transform_points(r, t, shape.coords().data(), out.data(),
                                   static_cast<std::size_t>(shape.n_landmarks()));
  return ShapeVector(std::move(out));
}

RigidTransform RigidTransform::inverse() const {
  RigidTransform inv;
  inv.rotation = rotation.transpose();
  inv.translation = -(inv.rotation * translation);
  return inv;
}

RigidTransform RigidTransform::then(const RigidTransform& next) const {
  RigidTransform c;
  c.rotation = next.rotation * rotation;
  c.translation = next.rotation * translation + next.translation;
  return c;
}

bool RigidTransform::is_proper(double tol) const {
  const double ortho = (rotation.transpose() * rotation - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  return ortho <= tol && std::abs(rotation.determinant() - 1.0) <= tol;
}

ShapeVector row_shape(const ShapeMatrix& m, Eigen::Index i) { return ShapeVector(m.row(i).transpose()); }

ShapeMatrix stack(const std::vector<ShapeVector>& shapes) {
  if (shapes.empty()) return {};
  ShapeMatrix m(static_cast<Eigen::Index>(shapes.size()), shapes.front().size());
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    if (shapes[i].size() != m.cols()) throw DimensionError("shapes of unequal length cannot be stacked");
    m.row(static_cast<Eigen::Index>(i)) = shapes[i].coords().transpose();
  }
  return m;
}

double rms_landmark_distance(const ShapeVector& a, const ShapeVector& b) {
  if (a.size() != b.size()) throw DimensionError("rms distance between shapes of unequal length");
  if (a.size() == 0) return 0.0;
  return std::sqrt(simd::squared_distance(a.span(), b.span()) / static_cast<double>(a.n_landmarks()));
}

}  // namespace morpho
