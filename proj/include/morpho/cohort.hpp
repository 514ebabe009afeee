#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "morpho/shape.hpp"

namespace morpho {

/// Column standardisation to zero mean and unit (population) SD.
struct Standardizer {
  std::vector<std::string> names;
  Eigen::VectorXd means;
  Eigen::VectorXd sds;

  // Throws DataError naming the column when its SD is zero.
  static Standardizer fit(const std::vector<std::string>& names, const Eigen::MatrixXd& raw);
  Eigen::MatrixXd apply(const Eigen::MatrixXd& raw) const;
  bool empty() const { return names.empty(); }
};

/// Subjects of an analysis: shapes, numeric demographics and binary class
/// labels (0 = control, 1 = case).
struct Cohort {
  std::vector<std::string> ids;
  ShapeMatrix shapes;
  std::vector<int> labels;
  std::vector<std::string> column_names;
  Eigen::MatrixXd columns;  // n x columns; NaN marks a missing value
  TriMesh templ;            // connectivity and regions (vertices unused)
  bool deflated = false;    // shapes are confounder residuals

  Eigen::Index size() const { return static_cast<Eigen::Index>(ids.size()); }
  Eigen::Index dim() const { return shapes.cols(); }

  bool has_column(const std::string& name) const;
  // Throws DataError if the column is absent or has a missing value.
  Eigen::VectorXd column(const std::string& name) const;
  Eigen::MatrixXd column_matrix(const std::vector<std::string>& names) const;
  Eigen::VectorXd label_vector() const;

  std::vector<Eigen::Index> class_indices(int label) const;
  Eigen::Index count(int label) const;
  std::optional<Eigen::Index> index_of(const std::string& id) const;

  Cohort subset(const std::vector<Eigen::Index>& rows) const;
  Cohort with_shapes(ShapeMatrix shapes, bool deflated) const;

  // Checks sizes agree and labels are binary.
  void validate() const;
};

struct CohortFiles {
  std::filesystem::path meshes;
  std::filesystem::path demographics;
  std::string class_column = "class";  // empty: no labels (all 0)
  std::string case_label = "1";  // value of class_column marking a case
  std::string id_column = "subject_id";
  std::optional<std::filesystem::path> region_map;
};

/// Joins a mesh corpus with a demographics CSV by subject id. Every mesh must
/// have a demographics row (DataError otherwise); extra rows are ignored.
/// Non-numeric cells load as missing.
Cohort load_cohort(const CohortFiles& files);

}  // namespace morpho
