#pragma once

#include <initializer_list>
#include <vector>

#include "morpho/shape.hpp"

namespace morpho {

inline constexpr double kMyocardialDensity = 1.05;  // g/mL

struct MeasurementSet {
  double lv_edv = 0.0;   // mL
  double rv_edv = 0.0;   // mL
  double lv_mass = 0.0;  // g
};

/// Faces whose three vertices all carry a label from `regions`.
std::vector<Face> region_faces(const TriMesh& mesh, std::initializer_list<Region> regions);
std::vector<Face> region_faces(const TriMesh& mesh, const std::vector<Region>& regions);

// Throws DataError on boundary edges, non-manifold edges or inconsistent
// face orientation.
void require_closed_oriented(const std::vector<Face>& faces);

/// Signed enclosed volume in mm^3 (positive for outward-oriented faces).
double signed_volume_mm3(const TriMesh& mesh, const std::vector<Face>& faces);

/// Enclosed volume of a closed region submesh, in mL. An inward-oriented
/// surface is repaired by flipping (with a warning); the result is never negative.
double closed_volume(const TriMesh& mesh, const std::vector<Region>& regions);

/// LV end-diastolic volume (endocardium), RV volume (RV free wall plus septal
/// interface) and LV myocardial mass (epi - endo volume at 1.05 g/mL).
MeasurementSet measure(const TriMesh& mesh);

}  // namespace morpho
