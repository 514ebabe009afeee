#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace morpho {

// Rows are subjects, columns are flattened coordinates (x0,y0,z0,x1,...).
using ShapeMatrix = Eigen::MatrixXd;

/// Flattened landmark coordinates in millimetres, ordered (x0,y0,z0,...,xN,yN,zN).
/// Length is a multiple of 3 and every entry is finite.
class ShapeVector {
 public:
  ShapeVector() = default;
  explicit ShapeVector(Eigen::VectorXd coords);

  const Eigen::VectorXd& coords() const { return coords_; }
  Eigen::Index size() const { return coords_.size(); }
  Eigen::Index n_landmarks() const { return coords_.size() / 3; }
  std::span<const double> span() const { return {coords_.data(), static_cast<std::size_t>(coords_.size())}; }

  Eigen::Vector3d landmark(Eigen::Index i) const { return coords_.segment<3>(3 * i); }

  bool operator==(const ShapeVector& other) const { return coords_ == other.coords_; }

 private:
  Eigen::VectorXd coords_;
};

enum class Region : std::uint8_t { LvEndo, LvEpi, Rv, Septum };

std::string_view region_name(Region r);
Region parse_region(std::string_view name);  // throws FormatError

using Face = std::array<std::int32_t, 3>;

/// Triangle mesh with per-vertex region labels. Connectivity is shared by
/// every mesh of a corpus.
struct TriMesh {
  Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor> vertices;
  std::vector<Face> faces;
  std::vector<Region> regions;  // empty, or one per vertex

  Eigen::Index n_vertices() const { return vertices.rows(); }

  // Indices in range, no repeated index within a face, region count matches.
  void validate() const;
  bool same_connectivity(const TriMesh& other) const;
};

ShapeVector flatten(const TriMesh& mesh);
// Copies the template's faces and regions; throws DimensionError on length mismatch.
TriMesh unflatten(const ShapeVector& v, const TriMesh& templ);

/// x -> R x + t, with R a proper rotation.
struct RigidTransform {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  ShapeVector apply(const ShapeVector& shape) const;
  RigidTransform inverse() const;
  RigidTransform then(const RigidTransform& next) const;  // next ∘ this
  bool is_proper(double tol = 1e-10) const;
};

// Rows of a shape matrix as shape vectors and back.
ShapeVector row_shape(const ShapeMatrix& m, Eigen::Index i);
ShapeMatrix stack(const std::vector<ShapeVector>& shapes);

// Root-mean-square landmark distance (mm) between two shapes of equal length.
double rms_landmark_distance(const ShapeVector& a, const ShapeVector& b);

}  // namespace morpho
